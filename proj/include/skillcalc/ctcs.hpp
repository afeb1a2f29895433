#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "skillcalc/bsm.hpp"
#include "skillcalc/dataset.hpp"
#include "skillcalc/errors.hpp"
#include "skillcalc/generate.hpp"
#include "skillcalc/ism.hpp"
#include "skillcalc/ppo.hpp"
#include "skillcalc/skill.hpp"
#include "skillcalc/taskspec.hpp"

namespace skillcalc {

struct TeacherKnobs {
    double tau = 10.0;
    double beta = 0.5;
    double gamma = 0.01;
    int n_c = 64;
    long mastery_bsm = 500;
    long mastery_ism = 200;
};

// p_j = exp(d_j/tau) / sum_k exp(d_k/tau), max-subtracted for stability.
inline VectorXd sample_probabilities(const std::vector<long>& d, double tau) {
    VectorXd z(static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) z(static_cast<Eigen::Index>(i)) =
        static_cast<double>(d[i]) / tau;
    return detail::stable_softmax(z);
}

inline double entropy_coefficient(const std::vector<long>& d, double beta = 0.5,
                                  double gamma = 0.01) {
    long dmax = 0;
    for (long v : d) dmax = std::max(dmax, v);
    return std::min(beta, gamma * static_cast<double>(dmax));
}

inline long draw_one(const std::vector<long>& d, double tau, Rng& rng) {
    return static_cast<long>(rng.categorical(sample_probabilities(d, tau)));
}

inline std::vector<long> draw_batch(const std::vector<long>& d, double tau, int n_c, Rng& rng) {
    std::vector<long> out;
    out.reserve(n_c);
    for (int i = 0; i < n_c; ++i) out.push_back(draw_one(d, tau, rng));
    return out;
}

class DifficultyState {
public:
    explicit DifficultyState(std::size_t pool_size) : d_(pool_size, 0) {}
    const std::vector<long>& counts() const { return d_; }
    long consecutive() const { return consecutive_; }
    std::size_t size() const { return d_.size(); }
    void record(long j, bool correct) {
        if (j < 0 || j >= static_cast<long>(d_.size()))
            throw IndexOutOfRange("sample " + std::to_string(j) + " of " +
                                  std::to_string(d_.size()));
        if (correct) {
            ++consecutive_;
        } else {
            ++d_[static_cast<std::size_t>(j)];
            consecutive_ = 0;
        }
    }

private:
    std::vector<long> d_;
    long consecutive_ = 0;
};

inline bool mastery_check(const DifficultyState& state, long k) {
    return state.consecutive() >= k;
}

enum class ModuleKind { Bsm, Ism };

struct CurriculumEntry {
    std::string task;
    ModuleKind kind = ModuleKind::Bsm;
    int pool = 500;         // M: difficulty-sampled pool size (ISM)
    long budget = 200000;   // sampled-episode budget (ISM)
    int epochs = 500;       // supervised epoch cap (BSM)
    long mastery = 0;       // 0 = kind default
    int min_digits = 0;     // 0 = keep the builtin task's range
    int max_digits = 0;
};

struct Curriculum {
    std::vector<CurriculumEntry> entries;
};

inline Curriculum default_curriculum() {
    Curriculum c;
    auto bsm = [&](const char* id) { c.entries.push_back({id, ModuleKind::Bsm}); };
    auto ism = [&](const char* id) {
        CurriculumEntry e{id, ModuleKind::Ism};
        c.entries.push_back(e);
    };
    bsm("S+S");
    bsm("S*S");
    bsm("S-S");
    ism("M+M");
    ism("M-M");
    ism("M*S");
    ism("M*M");
    ism("M/S");
    ism("M/M");
    ism("EXPR+-");
    ism("EXPR+-*");
    ism("EXPR");
    return c;
}

inline Curriculum read_curriculum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Curriculum cur;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string task, kind, kv;
        if (!(ss >> task) || task[0] == '#') continue;
        if (!(ss >> kind) || (kind != "bsm" && kind != "ism")) throw FormatError(lineno);
        CurriculumEntry e;
        e.task = task;
        e.kind = kind == "bsm" ? ModuleKind::Bsm : ModuleKind::Ism;
        while (ss >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw FormatError(lineno);
            const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
            try {
                if (key == "pool") {
                    e.pool = std::stoi(val);
                } else if (key == "budget") {
                    e.budget = std::stol(val);
                } else if (key == "epochs") {
                    e.epochs = std::stoi(val);
                } else if (key == "mastery") {
                    e.mastery = std::stol(val);
                } else if (key == "digits") {
                    auto dash = val.find('-');
                    e.min_digits = std::stoi(val.substr(0, dash));
                    e.max_digits = dash == std::string::npos
                                       ? e.min_digits
                                       : std::stoi(val.substr(dash + 1));
                } else {
                    throw FormatError(lineno);
                }
            } catch (const FormatError&) {
                throw;
            } catch (const std::exception&) {
                throw FormatError(lineno);
            }
        }
        cur.entries.push_back(e);
    }
    return cur;
}

inline void write_curriculum(const std::string& path, const Curriculum& cur) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path);
    for (const CurriculumEntry& e : cur.entries) {
        out << e.task << '\t' << (e.kind == ModuleKind::Bsm ? "bsm" : "ism");
        if (e.kind == ModuleKind::Ism) out << "\tpool=" << e.pool << "\tbudget=" << e.budget;
        if (e.kind == ModuleKind::Bsm) out << "\tepochs=" << e.epochs;
        if (e.mastery > 0) out << "\tmastery=" << e.mastery;
        if (e.min_digits > 0) out << "\tdigits=" << e.min_digits << '-' << e.max_digits;
        out << '\n';
    }
    if (!out) throw IoError("cannot write " + path);
}

inline std::string task_filename(const std::string& task) {
    std::string out;
    for (char ch : task) {
        switch (ch) {
            case '+': out += 'p'; break;
            case '-': out += 'm'; break;
            case '*': out += 't'; break;
            case '/': out += 'd'; break;
            case '(': out += 'o'; break;
            case ')': out += 'c'; break;
            default: out += ch;
        }
    }
    return out;
}

struct TaskLog {
    std::string task;
    ModuleKind kind = ModuleKind::Bsm;
    bool mastered = false;
    long episodes = 0;   // sampled episodes (ISM) or epochs (BSM)
    double final_acc = 0.0;
    std::string checkpoint;
    std::vector<TrainRow> curve;
};

struct CurriculumOptions {
    SubstrateConfig sub;
    IsmConfig ism;  // t_max / l_max template; .sub is overridden per task
    RlConfig rl;
    TeacherKnobs knobs;
    bool no_difficulty_sampling = false;  // ablation: uniform pool draws
    bool no_param_adjust = false;         // ablation: fixed alpha
    double fixed_alpha = 0.01;
    std::string output_dir;  // empty: keep everything in memory
};

struct CurriculumResult {
    SkillRegistry registry;
    std::vector<TaskLog> logs;
    bool completed = true;
    std::string failed_task;
};

namespace detail {

inline TaskSpec entry_spec(const CurriculumEntry& e) {
    TaskSpec spec = builtin_task(e.task);
    if (e.min_digits > 0) {
        spec.min_digits = e.min_digits;
        spec.max_digits = e.max_digits;
    }
    return spec;
}

inline void save_store(const ParamStore& ps, const std::string& dir, const std::string& task,
                       std::string& out_path) {
    if (dir.empty()) return;
    out_path = dir + "/" + task_filename(task) + ".ckpt";
    ps.save(out_path);
}

inline void save_curve(const std::vector<TrainRow>& curve, const std::string& dir,
                       const std::string& task) {
    if (dir.empty()) return;
    std::ofstream out(dir + "/" + task_filename(task) + ".curve.tsv", std::ios::binary);
    out << "batch\tepisodes\tgreedy_acc\tmean_reward\tentropy\talpha\tloss\n";
    for (const TrainRow& r : curve) out << format_row(r) << "\n";
}

}  // namespace detail

// Train tasks in order, freezing each mastered module into the registry.
// On failure the partial registry and logs are returned (completed=false).
inline CurriculumResult run_curriculum(const Curriculum& cur, const CurriculumOptions& opt,
                                       Rng& rng, std::ostream* log = nullptr) {
    CurriculumResult result;
    std::vector<std::string> manifest;
    for (std::size_t ti = 0; ti < cur.entries.size(); ++ti) {
        const CurriculumEntry& entry = cur.entries[ti];
        TaskSpec spec = detail::entry_spec(entry);
        TaskLog tl;
        tl.task = spec.id;
        tl.kind = entry.kind;
        if (log) *log << "== task " << spec.id
                      << (entry.kind == ModuleKind::Bsm ? " (bsm)" : " (ism)") << "\n";

        if (entry.kind == ModuleKind::Bsm) {
            auto data = enumerate_task(spec);
            SubstrateConfig sub = opt.sub;
            sub.seed = derive_seed(opt.sub.seed, 0xB0 + ti);
            BasicSkillModule bsm(spec.id, bsm_window(spec), sub);
            Rng trng(derive_seed(sub.seed, 0x7247));
            BsmMetrics m = bsm.train_supervised(data, entry.epochs, 16, trng);
            tl.mastered = m.mastered;
            tl.episodes = m.epochs_run;
            tl.final_acc = m.epoch_acc.empty() ? 0.0 : m.epoch_acc.back();
            if (log) *log << "   epochs=" << m.epochs_run << " acc=" << tl.final_acc << "\n";
            if (m.mastered) {
                detail::save_store(bsm.store(), opt.output_dir, spec.id, tl.checkpoint);
                result.registry.add(bsm.as_skill());
                manifest.push_back("bsm\t" + spec.id);
            }
        } else {
            IsmConfig icfg = opt.ism;
            icfg.sub = opt.sub;
            icfg.sub.seed = derive_seed(opt.sub.seed, 0x150 + ti);
            InteractiveSkillModule ism(spec.id, result.registry.size(), icfg);
            auto pool = generate_dataset(spec, entry.pool, rng);
            DifficultyState st(pool.size());
            const long k = entry.mastery > 0 ? entry.mastery : opt.knobs.mastery_ism;
            TeacherHooks teacher;
            teacher.draw = [&](Rng& r) -> std::pair<Sample, long> {
                const long j = opt.no_difficulty_sampling
                                   ? static_cast<long>(r.below(pool.size()))
                                   : draw_one(st.counts(), opt.knobs.tau, r);
                return {pool[static_cast<std::size_t>(j)], j};
            };
            teacher.fresh = [&](Rng& r) { return generate_sample(spec, r); };
            teacher.alpha = [&]() {
                return opt.no_param_adjust
                           ? opt.fixed_alpha
                           : entropy_coefficient(st.counts(), opt.knobs.beta, opt.knobs.gamma);
            };
            teacher.record = [&](long j, bool ok) { st.record(j, ok); };
            teacher.mastered = [&]() { return mastery_check(st, k); };
            RlConfig rl = opt.rl;
            rl.budget = entry.budget;
            rl.n_c = opt.knobs.n_c;
            TrainResult tr = train_ism(ism, result.registry, teacher, default_judge(), rl, rng,
                                       log);
            tl.mastered = tr.mastered;
            tl.episodes = tr.episodes;
            tl.final_acc = tr.curve.empty() ? 0.0 : tr.curve.back().greedy_acc;
            tl.curve = std::move(tr.curve);
            detail::save_curve(tl.curve, opt.output_dir, spec.id);
            if (tr.mastered) {
                detail::save_store(ism.store(), opt.output_dir, spec.id, tl.checkpoint);
                result.registry.add(ism.as_skill(result.registry));
                manifest.push_back("ism\t" + spec.id);
            }
        }
        const bool ok = tl.mastered;
        result.logs.push_back(std::move(tl));
        if (!ok) {
            result.completed = false;
            result.failed_task = spec.id;
            break;
        }
    }
    if (!opt.output_dir.empty()) {
        std::ofstream out(opt.output_dir + "/registry.txt", std::ios::binary);
        for (const std::string& line : manifest) out << line << "\n";
    }
    return result;
}

// Rebuild a frozen registry from a training output directory.
inline SkillRegistry load_registry(const std::string& dir) {
    std::ifstream in(dir + "/registry.txt");
    if (!in) throw IoError("cannot open " + dir + "/registry.txt");
    SkillRegistry reg;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError(0);
        const std::string kind = line.substr(0, tab), task = line.substr(tab + 1);
        const std::string path = dir + "/" + task_filename(task) + ".ckpt";
        if (kind == "bsm") {
            reg.add(BasicSkillModule::load(path).as_skill());
        } else {
            reg.add(InteractiveSkillModule::load(path).as_skill(reg));
        }
    }
    return reg;
}

}  // namespace skillcalc
