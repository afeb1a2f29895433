#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/generate.hpp"
#include "skillcalc/skill.hpp"
#include "skillcalc/taskspec.hpp"

namespace skillcalc {

struct EvalCell {
    std::string task;
    int length = 0;
    double accuracy = 0.0;
    int n = 0;
    bool available = true;  // false: no sample of this length exists
};

struct EvalReport {
    std::vector<EvalCell> cells;
    std::vector<std::string> tasks;
    std::vector<int> lengths;
    int n = 0;
    uint64_t seed = 0;
};

using AnswerFn = std::function<TokenSeq(const TokenSeq&)>;

// Greedy exact-match accuracy over freshly generated inputs pinned to each
// (task, input length) cell; answer exceptions count as wrong answers.
inline EvalReport evaluate_grid(const std::function<AnswerFn(const std::string&)>& solver,
                                const std::vector<std::string>& tasks,
                                const std::vector<int>& lengths, int n, uint64_t seed) {
    EvalReport report;
    report.tasks = tasks;
    report.lengths = lengths;
    report.n = n;
    report.seed = seed;
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        AnswerFn answer = solver(tasks[ti]);
        for (std::size_t li = 0; li < lengths.size(); ++li) {
            TaskSpec spec = builtin_task(tasks[ti]);
            spec.min_len = spec.max_len = lengths[li];
            EvalCell cell;
            cell.task = tasks[ti];
            cell.length = lengths[li];
            cell.n = n;
            // Disjoint seed domain from training draws.
            Rng rng(derive_seed(seed, 0xE7A1u + 131 * ti + li));
            int ok = 0, made = 0;
            try {
                for (int i = 0; i < n; ++i) {
                    Sample s = generate_sample(spec, rng);
                    ++made;
                    try {
                        ok += answer(s.input) == s.truth ? 1 : 0;
                    } catch (const std::exception&) {
                    }
                }
            } catch (const GenerationExhausted&) {
                cell.available = made > 0;
                cell.n = made;
            }
            cell.accuracy = cell.n > 0 ? static_cast<double>(ok) / cell.n : 0.0;
            if (cell.n == 0) cell.available = false;
            report.cells.push_back(cell);
        }
    }
    return report;
}

// Each task is answered by its same-named frozen module.
inline EvalReport eval_registry(const SkillRegistry& reg, const std::vector<std::string>& tasks,
                                const std::vector<int>& lengths, int n, uint64_t seed) {
    auto solver = [&reg](const std::string& task) -> AnswerFn {
        const int idx = reg.index_of(task);
        if (idx < 0) throw MissingModule(task);
        return [&reg, idx](const TokenSeq& input) { return reg.at(idx).invoke(input); };
    };
    return evaluate_grid(solver, tasks, lengths, n, seed);
}

inline const EvalCell* find_cell(const EvalReport& r, const std::string& task, int length) {
    for (const EvalCell& c : r.cells)
        if (c.task == task && c.length == length) return &c;
    return nullptr;
}

// Tab-separated grid with a header row; audited against external targets
// via the trailing reference lines.
inline std::string render_report(const EvalReport& r) {
    std::string out = "task";
    for (int l : r.lengths) out += "\tlen" + std::to_string(l);
    out += "\n";
    for (const std::string& task : r.tasks) {
        out += task;
        for (int l : r.lengths) {
            const EvalCell* c = find_cell(r, task, l);
            if (!c || !c->available) {
                out += "\tn/a";
            } else {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "\t%.3f", c->accuracy);
                out += buf;
            }
        }
        out += "\n";
    }
    out += "# n=" + std::to_string(r.n) + " seed=" + std::to_string(r.seed) + "\n";
    out += "# reference targets (full-scale): EXPR len10 1.000, len20 0.780\n";
    return out;
}

inline void write_report(const EvalReport& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path);
    out << render_report(r);
    if (!out) throw IoError("cannot write " + path);
}

}  // namespace skillcalc
