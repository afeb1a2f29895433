#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/ism.hpp"
#include "skillcalc/rng.hpp"
#include "skillcalc/taskspec.hpp"

namespace skillcalc {

inline std::size_t levenshtein(const TokenSeq& a, const TokenSeq& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// +1 on exact match, otherwise negative normalized edit distance.
inline double compute_reward(const TokenSeq& output, const TokenSeq& truth) {
    if (output == truth) return 1.0;
    const double d = static_cast<double>(levenshtein(output, truth));
    return -std::min(1.0, d / std::max<double>(truth.size(), 1.0));
}

// G_t = discount^{T-t} * terminal reward; A_t = G_t - V(s_t), then
// normalized over the whole batch (sigma guarded at 1e-8).
inline void compute_returns_advantages(std::vector<Episode>& batch, double discount) {
    double mean = 0.0;
    std::size_t count = 0;
    for (Episode& ep : batch) {
        const std::size_t T = ep.steps.size();
        ep.returns.resize(T);
        ep.advantages.resize(T);
        for (std::size_t i = 0; i < T; ++i) {
            ep.returns[i] = std::pow(discount, static_cast<double>(T - 1 - i)) * ep.reward;
            ep.advantages[i] = ep.returns[i] - ep.steps[i].value;
            mean += ep.advantages[i];
            ++count;
        }
    }
    if (count == 0) return;
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (const Episode& ep : batch)
        for (double a : ep.advantages) var += (a - mean) * (a - mean);
    const double sigma = std::max(std::sqrt(var / static_cast<double>(count)), 1e-8);
    for (Episode& ep : batch)
        for (double& a : ep.advantages) a = (a - mean) / sigma;
}

struct RlConfig {
    double discount = 0.99;
    double clip_eps = 0.2;
    int epochs = 3;
    int minibatch = 16;       // episodes per Adam step
    double value_weight = 0.5;
    double grad_clip = 5.0;   // 0 disables clipping
    int n_c = 64;             // sampled episodes per batch
    int fresh_eval = 32;      // fresh greedy samples per curve point
    long budget = 200000;     // max sampled episodes
};

struct StepNodes {
    Tape::Vec logp;     // joint log-prob of the recorded raw action
    Tape::Vec entropy;  // sum of the seven head entropies
    Tape::Vec value;
};

// Re-run the policy over an episode's memory snapshots on the tape,
// threading the controller state so gradients flow across steps.
inline std::vector<StepNodes> replay_episode(Tape& b, const ParamStore& ps, const Episode& ep,
                                             int n_modules) {
    std::vector<StepNodes> out;
    out.reserve(ep.steps.size());
    Tape::Vec h = b.input(VectorXd::Zero(ps.config.hidden));
    for (const StepRecord& step : ep.steps) {
        auto enc = encode_state(b, ps, step.memory, h);
        h = enc.h;
        auto pol = policy_logits(b, ps, enc.s, enc.keys, n_modules);
        std::array<Tape::Vec, 7> logits = {pol.module_logits,     pol.pointer_logits[0],
                                           pol.pointer_logits[1], pol.pointer_logits[2],
                                           pol.pointer_logits[3], pol.pointer_logits[4],
                                           pol.pointer_logits[5]};
        StepNodes n;
        bool first = true;
        for (int i = 0; i < 7; ++i) {
            auto lsm = b.log_softmax(logits[i]);
            auto lp = b.pick(lsm, step.raw[i]);
            auto ent = b.affine(b.dot(b.exp(lsm), lsm), -1.0, 0.0);
            n.logp = first ? lp : b.add(n.logp, lp);
            n.entropy = first ? ent : b.add(n.entropy, ent);
            first = false;
        }
        n.value = b.pick(pol.value, 0);
        out.push_back(n);
    }
    return out;
}

// Per-episode PPO loss: -min(rho*A, clip(rho)*A) - alpha*H + w*(V-G)^2,
// summed over steps (caller scales by the minibatch step count).
inline Tape::Vec ppo_episode_loss(Tape& b, const ParamStore& ps, const Episode& ep,
                                  const RlConfig& cfg, double alpha, int n_modules) {
    auto nodes = replay_episode(b, ps, ep, n_modules);
    Tape::Vec total;
    bool first = true;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double adv = ep.advantages[i];
        auto ratio = b.exp(b.affine(nodes[i].logp, 1.0, -ep.steps[i].logp));
        auto surr = b.vmin(b.affine(ratio, adv, 0.0),
                           b.affine(b.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps),
                                    adv, 0.0));
        auto verr = b.affine(nodes[i].value, 1.0, -ep.returns[i]);
        auto loss = b.add(b.affine(surr, -1.0, 0.0),
                          b.affine(nodes[i].entropy, -alpha, 0.0));
        loss = b.add(loss, b.affine(b.mul(verr, verr), cfg.value_weight, 0.0));
        total = first ? loss : b.add(total, loss);
        first = false;
    }
    return total;
}

struct PpoMetrics {
    double loss = 0.0;
    double entropy = 0.0;   // mean per-step policy entropy at replay time
    double steps = 0.0;
};

// Several epochs of minibatch Adam over per-episode tape graphs.
inline PpoMetrics ppo_update(InteractiveSkillModule& ism, std::vector<Episode>& batch,
                             const RlConfig& cfg, double alpha, Rng& rng) {
    if (batch.empty()) throw DatasetEmpty("ppo batch");
    ParamStore& ps = ism.store();
    const int n_modules = ism.n_modules();
    PpoMetrics metrics;
    double loss_sum = 0.0, loss_steps = 0.0;
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t at = 0; at < order.size(); at += cfg.minibatch) {
            const std::size_t take = std::min<std::size_t>(cfg.minibatch, order.size() - at);
            ps.zero_grads();
            double mb_steps = 0.0;
            for (std::size_t k = 0; k < take; ++k)
                mb_steps += static_cast<double>(batch[order[at + k]].steps.size());
            for (std::size_t k = 0; k < take; ++k) {
                Episode& ep = batch[order[at + k]];
                Tape tape(ps);
                auto loss = ppo_episode_loss(tape, ps, ep, cfg, alpha, n_modules);
                const double lv = tape.value(loss)(0);
                if (!std::isfinite(lv))
                    throw NonFiniteLoss(ism.task_id() + " batch loss " + std::to_string(lv));
                loss_sum += lv;
                loss_steps += static_cast<double>(ep.steps.size());
                tape.backward(tape.affine(loss, 1.0 / mb_steps, 0.0));
            }
            if (cfg.grad_clip > 0.0) ps.clip_grad_norm(cfg.grad_clip);
            ps.adam_step();
        }
    }
    metrics.loss = loss_steps > 0 ? loss_sum / loss_steps : 0.0;
    double ent = 0.0, ent_n = 0.0;
    for (const Episode& ep : batch)
        for (const StepRecord& s : ep.steps) {
            ent += s.entropy;
            ent_n += 1.0;
        }
    metrics.entropy = ent_n > 0 ? ent / ent_n : 0.0;
    metrics.steps = loss_steps;
    return metrics;
}

struct TeacherHooks {
    std::function<std::pair<Sample, long>(Rng&)> draw;  // pool sample + its index
    std::function<Sample(Rng&)> fresh;                  // held-out sample stream
    std::function<double()> alpha;                      // entropy coefficient
    std::function<void(long, bool)> record;             // greedy outcome per draw
    std::function<bool()> mastered;
};

struct EpisodeJudge {
    std::function<double(const Episode&, const Sample&)> reward;
    std::function<bool(const Episode&, const Sample&)> correct;
};

inline EpisodeJudge default_judge() {
    EpisodeJudge j;
    j.reward = [](const Episode& ep, const Sample& s) {
        return ep.failed ? -1.0 : compute_reward(ep.output, s.truth);
    };
    j.correct = [](const Episode& ep, const Sample& s) {
        return !ep.failed && ep.output == s.truth;
    };
    return j;
}

struct TrainRow {
    int batch = 0;
    long episodes = 0;
    double greedy_acc = 0.0;
    double mean_reward = 0.0;
    double entropy = 0.0;
    double alpha = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<TrainRow> curve;
    bool mastered = false;
    long episodes = 0;
    double best_acc = 0.0;
};

inline std::string format_row(const TrainRow& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d\t%ld\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f", r.batch,
                  r.episodes, r.greedy_acc, r.mean_reward, r.entropy, r.alpha, r.loss);
    return buf;
}

// Collect N_c teacher-sampled episodes, judge the matching greedy answers,
// PPO-update, and repeat until the teacher signals mastery or the budget
// runs out (best parameters are kept in the latter case).
inline TrainResult train_ism(InteractiveSkillModule& ism, const SkillRegistry& registry,
                             const TeacherHooks& teacher, const EpisodeJudge& judge,
                             const RlConfig& cfg, Rng& rng, std::ostream* log = nullptr) {
    TrainResult result;
    ParamStore best = ism.store();
    for (int batch_i = 1; result.episodes < cfg.budget; ++batch_i) {
        const double alpha = teacher.alpha ? teacher.alpha() : 0.0;
        std::vector<Episode> batch;
        batch.reserve(cfg.n_c);
        double reward_sum = 0.0;
        for (int k = 0; k < cfg.n_c; ++k) {
            auto [sample, pool_idx] = teacher.draw(rng);
            Episode ep = ism.run_episode(registry, sample.input, false, rng);
            ep.reward = judge.reward(ep, sample);
            reward_sum += ep.reward;
            Episode greedy = ism.run_episode(registry, sample.input, true, rng);
            if (teacher.record) teacher.record(pool_idx, judge.correct(greedy, sample));
            batch.push_back(std::move(ep));
            ++result.episodes;
        }
        compute_returns_advantages(batch, cfg.discount);
        PpoMetrics m = ppo_update(ism, batch, cfg, alpha, rng);

        TrainRow row;
        row.batch = batch_i;
        row.episodes = result.episodes;
        row.mean_reward = reward_sum / cfg.n_c;
        row.entropy = m.entropy;
        row.alpha = alpha;
        row.loss = m.loss;
        int correct = 0;
        for (int k = 0; k < cfg.fresh_eval; ++k) {
            Sample s = teacher.fresh(rng);
            Episode g = ism.run_episode(registry, s.input, true, rng);
            correct += judge.correct(g, s) ? 1 : 0;
        }
        row.greedy_acc = cfg.fresh_eval > 0
                             ? static_cast<double>(correct) / cfg.fresh_eval
                             : 0.0;
        result.curve.push_back(row);
        if (log) *log << format_row(row) << "\n";
        if (row.greedy_acc >= result.best_acc) {
            result.best_acc = row.greedy_acc;
            best = ism.store();
        }
        if (teacher.mastered && teacher.mastered()) {
            result.mastered = true;
            return result;
        }
    }
    ism.store() = best;  // budget exhausted: keep the best checkpoint
    return result;
}

}  // namespace skillcalc
