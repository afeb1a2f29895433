#pragma once

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "skillcalc/ctcs.hpp"
#include "skillcalc/errors.hpp"

namespace skillcalc {

inline constexpr const char* kOutputDirEnv = "SKILLCALC_OUTPUT_DIR";

struct RunConfig {
    uint64_t seed = 1;
    std::string curriculum = "default";  // curriculum file path, or "default"
    std::string output_dir = "out";
    SubstrateConfig sub;
    IsmConfig ism;
    RlConfig rl;
    TeacherKnobs knobs;
    bool no_difficulty_sampling = false;
    bool no_param_adjust = false;
    bool no_curriculum = false;  // keep only the final curriculum task
    double fixed_alpha = 0.01;
};

inline RunConfig parse_run_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        RunConfig c;
        c.seed = j.value("seed", c.seed);
        c.curriculum = j.value("curriculum", c.curriculum);
        c.output_dir = j.value("output_dir", c.output_dir);
        if (j.contains("substrate")) {
            const auto& s = j["substrate"];
            c.sub.hidden = s.value("hidden", c.sub.hidden);
            c.sub.embed = s.value("embed", c.sub.embed);
            c.sub.lr = s.value("lr", c.sub.lr);
        }
        c.sub.seed = c.seed;
        if (j.contains("ism")) {
            const auto& s = j["ism"];
            c.ism.t_max = s.value("t_max", c.ism.t_max);
            c.ism.l_max = s.value("l_max", c.ism.l_max);
        }
        if (j.contains("rl")) {
            const auto& s = j["rl"];
            c.rl.discount = s.value("discount", c.rl.discount);
            c.rl.clip_eps = s.value("clip_eps", c.rl.clip_eps);
            c.rl.epochs = s.value("epochs", c.rl.epochs);
            c.rl.minibatch = s.value("minibatch", c.rl.minibatch);
            c.rl.value_weight = s.value("value_weight", c.rl.value_weight);
            c.rl.grad_clip = s.value("grad_clip", c.rl.grad_clip);
            c.rl.fresh_eval = s.value("fresh_eval", c.rl.fresh_eval);
        }
        if (j.contains("teacher")) {
            const auto& s = j["teacher"];
            c.knobs.tau = s.value("tau", c.knobs.tau);
            c.knobs.beta = s.value("beta", c.knobs.beta);
            c.knobs.gamma = s.value("gamma", c.knobs.gamma);
            c.knobs.n_c = s.value("n_c", c.knobs.n_c);
            c.knobs.mastery_bsm = s.value("mastery_bsm", c.knobs.mastery_bsm);
            c.knobs.mastery_ism = s.value("mastery_ism", c.knobs.mastery_ism);
        }
        if (j.contains("ablations")) {
            const auto& s = j["ablations"];
            c.no_difficulty_sampling =
                s.value("no_difficulty_sampling", c.no_difficulty_sampling);
            c.no_param_adjust = s.value("no_param_adjust", c.no_param_adjust);
            c.no_curriculum = s.value("no_curriculum", c.no_curriculum);
            c.fixed_alpha = s.value("fixed_alpha", c.fixed_alpha);
        }
        return c;
    } catch (const nlohmann::json::exception&) {
        throw FormatError(0);
    }
}

inline RunConfig read_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

inline std::string effective_output_dir(const RunConfig& c) {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return c.output_dir;
}

inline Curriculum load_curriculum(const RunConfig& c) {
    Curriculum cur =
        c.curriculum == "default" ? default_curriculum() : read_curriculum(c.curriculum);
    if (c.no_curriculum && !cur.entries.empty())
        cur.entries.erase(cur.entries.begin(), cur.entries.end() - 1);
    return cur;
}

inline CurriculumOptions to_options(const RunConfig& c) {
    CurriculumOptions opt;
    opt.sub = c.sub;
    opt.ism = c.ism;
    opt.rl = c.rl;
    opt.knobs = c.knobs;
    opt.no_difficulty_sampling = c.no_difficulty_sampling;
    opt.no_param_adjust = c.no_param_adjust;
    opt.fixed_alpha = c.fixed_alpha;
    opt.output_dir = effective_output_dir(c);
    return opt;
}

}  // namespace skillcalc
