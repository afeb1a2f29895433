#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skillcalc/ctcs.hpp"
#include "skillcalc/dataset.hpp"
#include "skillcalc/errors.hpp"
#include "skillcalc/evalreport.hpp"
#include "skillcalc/expr.hpp"
#include "skillcalc/generate.hpp"
#include "skillcalc/ppo.hpp"
#include "skillcalc/runconfig.hpp"
#include "skillcalc/scripted.hpp"
#include "skillcalc/substrate/gradcheck.hpp"

namespace {

using namespace skillcalc;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    for (const std::string& item : split_csv(s)) out.push_back(std::stoi(item));
    return out;
}

void apply_digits(TaskSpec& spec, const std::string& digits) {
    if (digits.empty()) return;
    auto dash = digits.find('-');
    spec.min_digits = std::stoi(digits.substr(0, dash));
    spec.max_digits =
        dash == std::string::npos ? spec.min_digits : std::stoi(digits.substr(dash + 1));
}

int cmd_generate(const std::string& task, int count, std::uint64_t seed,
                 const std::string& out, const std::string& digits, int min_len, int max_len) {
    TaskSpec spec = builtin_task(task);
    apply_digits(spec, digits);
    if (min_len > 0) spec.min_len = min_len;
    if (max_len > 0) spec.max_len = max_len;
    Rng rng(derive_seed(seed, 0xDA7A));
    write_dataset(generate_dataset(spec, count, rng), out);
    std::cout << "wrote " << count << " samples to " << out << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& curriculum_flag,
              std::uint64_t seed_flag, const std::string& outdir_flag, bool no_curriculum,
              bool no_difficulty, bool no_param_adjust) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : read_run_config(config_path);
    if (!curriculum_flag.empty()) cfg.curriculum = curriculum_flag;
    if (seed_flag) {
        cfg.seed = seed_flag;
        cfg.sub.seed = seed_flag;
    }
    if (!outdir_flag.empty()) cfg.output_dir = outdir_flag;
    cfg.no_curriculum = cfg.no_curriculum || no_curriculum;
    cfg.no_difficulty_sampling = cfg.no_difficulty_sampling || no_difficulty;
    cfg.no_param_adjust = cfg.no_param_adjust || no_param_adjust;

    CurriculumOptions opt = to_options(cfg);
    std::filesystem::create_directories(opt.output_dir);
    Curriculum cur = load_curriculum(cfg);
    Rng rng(derive_seed(cfg.seed, 0x7EAC));
    CurriculumResult res = run_curriculum(cur, opt, rng, &std::cout);
    for (const TaskLog& tl : res.logs)
        std::cout << tl.task << (tl.mastered ? " mastered" : " FAILED") << " acc="
                  << tl.final_acc << "\n";
    if (!res.completed) {
        std::cerr << "task failed: " << res.failed_task << " (partial registry kept)\n";
        return 2;
    }
    std::cout << "registry size " << res.registry.size() << ", artifacts in "
              << opt.output_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& dir, bool scripted, const std::string& tasks_csv,
             const std::string& lengths_csv, int n, std::uint64_t seed, double gate,
             const std::string& out_file) {
    const std::vector<std::string> tasks = split_csv(tasks_csv);
    const std::vector<int> lengths = split_ints(lengths_csv);
    EvalReport report;
    if (scripted) {
        auto solver = [](const std::string& task) -> AnswerFn {
            ScriptedPolicy policy(task);
            SkillRegistry reg = policy.registry();
            return [policy, reg](const TokenSeq& input) {
                return run_scripted(policy, reg, input).output;
            };
        };
        report = evaluate_grid(solver, tasks, lengths, n, seed);
    } else {
        SkillRegistry reg = load_registry(dir);
        report = eval_registry(reg, tasks, lengths, n, seed);
    }
    std::cout << render_report(report);
    if (!out_file.empty()) write_report(report, out_file);
    for (const EvalCell& c : report.cells)
        if (c.available && c.accuracy < gate) return 1;
    return 0;
}

int cmd_trace(const std::string& expr, const std::string& scripted_task,
              const std::string& dir, const std::string& task) {
    const TokenSeq input = tokenize(expr);
    const TokenSeq oracle = render_tokens(evaluate(*parse(input)));
    Episode ep;
    if (!scripted_task.empty()) {
        ScriptedPolicy policy(scripted_task);
        SkillRegistry reg = policy.registry();
        ep = run_scripted(policy, reg, input);
    } else {
        // Rebuild the registry prefix this module was trained against.
        std::ifstream in(dir + "/registry.txt");
        if (!in) throw IoError("cannot open " + dir + "/registry.txt");
        SkillRegistry reg;
        std::string line;
        bool found = false;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            const std::string kind = line.substr(0, tab), name = line.substr(tab + 1);
            if (name == task) {
                found = true;
                break;
            }
            const std::string path = dir + "/" + task_filename(name) + ".ckpt";
            if (kind == "bsm")
                reg.add(BasicSkillModule::load(path).as_skill());
            else
                reg.add(InteractiveSkillModule::load(path).as_skill(reg));
        }
        if (!found) throw MissingModule(task);
        InteractiveSkillModule ism =
            InteractiveSkillModule::load(dir + "/" + task_filename(task) + ".ckpt");
        Rng rng(1);
        ep = ism.run_episode(reg, input, true, rng);
    }
    for (const std::string& line : trace_lines(ep)) std::cout << line << "\n";
    const bool match = !ep.failed && ep.output == oracle;
    std::cout << "final: " << pretty(ep.output) << "\n";
    std::cout << "oracle: " << pretty(oracle) << "\n";
    std::cout << "match: " << (match ? "true" : "false") << "\n";
    if (!match)
        std::cout << "reward: " << compute_reward(ep.output, oracle) << "\n";
    return match ? 0 : 1;
}

int cmd_gradcheck(std::uint64_t seed) {
    bool ok = true;
    for (const auto& [op, err] : run_gradcheck_battery(seed)) {
        const bool pass = err < 1e-4;
        ok = ok && pass;
        std::printf("%-18s max_rel_err=%.3e %s\n", op.c_str(), err, pass ? "ok" : "FAIL");
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical skill calculator"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "write a random dataset file");
    std::string g_task = "S+S", g_out = "data.tsv", g_digits;
    int g_count = 100, g_min_len = 0, g_max_len = 0;
    std::uint64_t g_seed = 1;
    gen->add_option("--task", g_task, "builtin task id");
    gen->add_option("--count", g_count);
    gen->add_option("--seed", g_seed);
    gen->add_option("--out", g_out);
    gen->add_option("--digits", g_digits, "operand digits, e.g. 2 or 1-3");
    gen->add_option("--min-len", g_min_len);
    gen->add_option("--max-len", g_max_len);

    auto* train = app.add_subcommand("train", "run the curriculum");
    std::string t_config, t_curriculum, t_outdir;
    std::uint64_t t_seed = 0;
    bool t_nocur = false, t_nodiff = false, t_noadj = false;
    train->add_option("--config", t_config, "run config JSON");
    train->add_option("--curriculum", t_curriculum, "curriculum file or 'default'");
    train->add_option("--seed", t_seed);
    train->add_option("--output-dir", t_outdir);
    train->add_flag("--no-curriculum", t_nocur, "train only the final task from scratch");
    train->add_flag("--no-difficulty-sampling", t_nodiff, "uniform pool draws");
    train->add_flag("--no-param-adjust", t_noadj, "fixed entropy coefficient");

    auto* ev = app.add_subcommand("eval", "accuracy grid on fresh data");
    std::string e_dir = "out", e_tasks = "M+M", e_lengths = "5,10,20", e_out;
    bool e_scripted = false;
    int e_n = 1000;
    std::uint64_t e_seed = 9;
    double e_gate = -1.0;
    ev->add_option("--dir", e_dir, "training output directory");
    ev->add_flag("--scripted", e_scripted, "evaluate scripted policies instead");
    ev->add_option("--tasks", e_tasks, "comma-separated task ids");
    ev->add_option("--lengths", e_lengths, "comma-separated input lengths");
    ev->add_option("--n", e_n, "samples per cell");
    ev->add_option("--seed", e_seed);
    ev->add_option("--gate", e_gate, "exit 1 if any cell is below this accuracy");
    ev->add_option("--out", e_out, "also write the grid to this file");

    auto* tr = app.add_subcommand("trace", "step-by-step episode trace");
    std::string r_expr, r_scripted, r_dir = "out", r_task = "EXPR";
    tr->add_option("--expr", r_expr)->required();
    tr->add_option("--scripted", r_scripted, "scripted task id (M+M, M*S, EXPR)");
    tr->add_option("--dir", r_dir, "training output directory");
    tr->add_option("--task", r_task, "trained module to trace");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of substrate ops");
    std::uint64_t c_seed = 7;
    gc->add_option("--seed", c_seed);

    CLI11_PARSE(app, argc, argv);
    try {
        if (gen->parsed())
            return cmd_generate(g_task, g_count, g_seed, g_out, g_digits, g_min_len, g_max_len);
        if (train->parsed())
            return cmd_train(t_config, t_curriculum, t_seed, t_outdir, t_nocur, t_nodiff,
                             t_noadj);
        if (ev->parsed())
            return cmd_eval(e_dir, e_scripted, e_tasks, e_lengths, e_n, e_seed, e_gate, e_out);
        if (tr->parsed()) return cmd_trace(r_expr, r_scripted, r_dir, r_task);
        if (gc->parsed()) return cmd_gradcheck(c_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
