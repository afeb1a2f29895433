#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/skill.hpp"
#include "skillcalc/substrate/layers.hpp"
#include "skillcalc/substrate/param_store.hpp"
#include "skillcalc/substrate/tape.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

struct IsmConfig {
    SubstrateConfig sub;
    int t_max = 40;
    int l_max = 64;
};

// Half-open spans into current memory; module 0 is HALT.
struct CompositeAction {
    int module = 0;
    int r1s = 0, r1e = 0, r2s = 0, r2e = 0, ws = 0, we = 0;
};

// Head indices exactly as sampled, before end >= start clamping.
using RawAction = std::array<int, 7>;

struct InvocationRecord {
    int module = 0;
    std::string module_name;
    TokenSeq read;   // concatenated sub-expression fed to the module
    TokenSeq wrote;  // module answer spliced into memory
    bool rejected = false;
    bool halted = false;
};

struct StepRecord {
    TokenSeq memory;  // before the action
    double value = 0.0;
    RawAction raw{};
    CompositeAction action;
    double logp = 0.0;     // joint log-prob at sampling time
    double entropy = 0.0;  // sum over the seven heads
    InvocationRecord inv;
};

struct Episode {
    std::vector<StepRecord> steps;
    TokenSeq output;
    bool halted = false;
    bool failed = false;  // capacity overflow or emptied memory
    double reward = 0.0;
    std::vector<double> returns;
    std::vector<double> advantages;
};

inline TokenSeq init_memory(const TokenSeq& input, int l_max) {
    if (input.empty()) throw EmptyMemory();
    if (static_cast<int>(input.size()) > l_max)
        throw CapacityExceeded("input length " + std::to_string(input.size()) + " > " +
                               std::to_string(l_max));
    return input;
}

inline TokenSeq splice(const TokenSeq& memory, int ws, int we, const TokenSeq& piece) {
    TokenSeq out(memory.begin(), memory.begin() + ws);
    out.insert(out.end(), piece.begin(), piece.end());
    out.insert(out.end(), memory.begin() + we, memory.end());
    return out;
}

// Read both spans, invoke the module, splice the answer over the write span.
inline std::pair<TokenSeq, InvocationRecord> apply_action(const TokenSeq& memory,
                                                          const CompositeAction& a,
                                                          const SkillRegistry& registry,
                                                          int l_max) {
    const int l = static_cast<int>(memory.size());
    auto check_span = [&](int s, int e) {
        if (s < 0 || s > e || e > l) throw IndexOutOfRange("span [" + std::to_string(s) + "," +
                                                           std::to_string(e) + ") in length " +
                                                           std::to_string(l));
    };
    check_span(a.r1s, a.r1e);
    check_span(a.r2s, a.r2e);
    check_span(a.ws, a.we);
    if (a.module < 0 || a.module >= registry.size())
        throw IndexOutOfRange("module " + std::to_string(a.module));

    InvocationRecord rec;
    rec.module = a.module;
    rec.module_name = registry.name_of(a.module);
    if (registry.is_halt(a.module)) {
        rec.halted = true;
        return {memory, rec};
    }
    rec.read.assign(memory.begin() + a.r1s, memory.begin() + a.r1e);
    rec.read.insert(rec.read.end(), memory.begin() + a.r2s, memory.begin() + a.r2e);
    try {
        rec.wrote = registry.at(a.module).invoke(rec.read);
    } catch (const SubmoduleError&) {
        rec.rejected = true;
        rec.wrote = {kBlank};
    } catch (const LengthMismatch&) {
        rec.rejected = true;
        rec.wrote = {kBlank};
    }
    TokenSeq next = splice(memory, a.ws, a.we, rec.wrote);
    if (static_cast<int>(next.size()) > l_max)
        throw CapacityExceeded("memory length " + std::to_string(next.size()));
    if (next.empty()) throw EmptyMemory();
    return {std::move(next), rec};
}

template <class B>
struct EncodeOut {
    typename B::Vec s, h;
    std::vector<typename B::Vec> keys;  // o_1..o_l
};

// o_k from the memory Bi-RNN; h^t = GRU(o_1 (+) o_l, h^{t-1}); s^t = FNN(h^t).
template <class B>
EncodeOut<B> encode_state(B& b, const ParamStore& ps, const TokenSeq& memory,
                          const typename B::Vec& h_prev) {
    if (memory.empty()) throw EmptyMemory();
    auto vs = embed(b, ps, "emb", memory, true);
    EncodeOut<B> out;
    out.keys = birnn_encode(b, ps, "enc", vs);
    auto ctrl_in = b.concat(out.keys.front(), out.keys.back());
    out.h = gru_step(b, ps, "ctrl", ctrl_in, h_prev);
    out.s = ffn(b, ps, "state", out.h);
    return out;
}

inline constexpr std::array<const char*, 6> kPointerHeads = {"r1s", "r1e", "r2s",
                                                             "r2e", "ws",  "we"};

template <class B>
struct PolicyOut {
    typename B::Vec module_logits;                 // over |registry|
    std::array<typename B::Vec, 6> pointer_logits;  // each over l+1 (end sentinel)
    typename B::Vec value;                          // scalar V(s_t)
};

template <class B>
PolicyOut<B> policy_logits(B& b, const ParamStore& ps, const typename B::Vec& s,
                           const std::vector<typename B::Vec>& keys, int n_modules) {
    PolicyOut<B> out;
    out.module_logits = logits_head(b, ps, "mod", s, n_modules);
    auto keys_plus = keys;
    keys_plus.push_back(b.param("sentinel"));
    for (std::size_t i = 0; i < kPointerHeads.size(); ++i)
        out.pointer_logits[i] = pointer_logits(b, ps, std::string("ptr.") + kPointerHeads[i], s,
                                               keys_plus);
    out.value = linear(b, ps, "val", s);
    return out;
}

// Softmaxed distributions: one categorical over modules, six over positions
// 0..l (position l lets a span end point one past the last slot).
template <class B>
PolicyOut<B> policy_heads(B& b, const ParamStore& ps, const typename B::Vec& s,
                          const std::vector<typename B::Vec>& keys, int n_modules) {
    PolicyOut<B> out = policy_logits(b, ps, s, keys, n_modules);
    out.module_logits = b.softmax(out.module_logits);
    for (auto& p : out.pointer_logits) p = b.softmax(p);
    return out;
}

namespace detail {

inline int argmax_first(const VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

inline int sample_logits(const VectorXd& logits, double temperature, Rng& rng) {
    VectorXd p = stable_softmax(logits / std::max(temperature, 1e-12));
    return static_cast<int>(rng.categorical(p));
}

inline double entropy_of(const VectorXd& logits) {
    VectorXd lp = stable_log_softmax(logits);
    return -(lp.array().exp() * lp.array()).sum();
}

}  // namespace detail

class InteractiveSkillModule {
public:
    InteractiveSkillModule(std::string task_id, int n_modules, const IsmConfig& cfg) {
        store_.config = cfg.sub;
        store_.tag = std::move(task_id);
        store_.meta["n_modules"] = n_modules;
        store_.meta["t_max"] = cfg.t_max;
        store_.meta["l_max"] = cfg.l_max;
        const int h = cfg.sub.hidden;
        Rng rng(derive_seed(cfg.sub.seed, 0x15A));
        ensure_embedding(store_, "emb", cfg.sub.embed, kNumTokens, rng);
        ensure_birnn(store_, "enc", cfg.sub.embed, h, rng);
        ensure_gru(store_, "ctrl", 4 * h, h, rng);
        ensure_linear(store_, "state", h, h, rng);
        ensure_linear(store_, "mod", h, n_modules, rng);
        store_.add("sentinel", 2 * h, 1, rng);
        for (const char* head : kPointerHeads)
            ensure_attention(store_, std::string("ptr.") + head, 2 * h, h, h, rng);
        ensure_linear(store_, "val", h, 1, rng);
        store_.rng_state = rng.serialize();
    }

    explicit InteractiveSkillModule(ParamStore store) : store_(std::move(store)) {}

    static InteractiveSkillModule load(const std::string& path) {
        return InteractiveSkillModule(ParamStore::load(path));
    }

    const std::string& task_id() const { return store_.tag; }
    int n_modules() const { return static_cast<int>(store_.meta.at("n_modules")); }
    int t_max() const { return static_cast<int>(store_.meta.at("t_max")); }
    int l_max() const { return static_cast<int>(store_.meta.at("l_max")); }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }

    // Roll one episode with the eval backend. Sampling uses the untempered
    // policy for recorded log-probs; temperature only skews the draw.
    Episode run_episode(const SkillRegistry& registry, const TokenSeq& input, bool greedy,
                        Rng& rng, double temperature = 1.0) const {
        if (registry.size() != n_modules())
            throw ShapeMismatch("registry size " + std::to_string(registry.size()) +
                                " != module head " + std::to_string(n_modules()));
        Episode ep;
        TokenSeq memory = init_memory(input, l_max());
        EvalBackend b(store_);
        VectorXd h = VectorXd::Zero(store_.config.hidden);
        for (int t = 0; t < t_max(); ++t) {
            auto enc = encode_state(b, store_, memory, h);
            h = enc.h;
            auto pol = policy_logits(b, store_, enc.s, enc.keys, n_modules());

            StepRecord step;
            step.memory = memory;
            step.value = pol.value(0);
            std::array<VectorXd, 7> logits;
            logits[0] = pol.module_logits;
            for (int i = 0; i < 6; ++i) logits[i + 1] = pol.pointer_logits[i];
            for (int i = 0; i < 7; ++i) {
                step.raw[i] = greedy ? detail::argmax_first(logits[i])
                                     : detail::sample_logits(logits[i], temperature, rng);
                step.logp += detail::stable_log_softmax(logits[i])(step.raw[i]);
                step.entropy += detail::entropy_of(logits[i]);
            }
            step.action = assemble(step.raw);
            try {
                auto [next, rec] = apply_action(memory, step.action, registry, l_max());
                step.inv = rec;
                ep.steps.push_back(std::move(step));
                if (rec.halted) {
                    ep.halted = true;
                    ep.output = memory;
                    return ep;
                }
                memory = std::move(next);
            } catch (const CapacityExceeded&) {
                ep.steps.push_back(std::move(step));
                ep.failed = true;
                ep.output = memory;
                return ep;
            } catch (const EmptyMemory&) {
                ep.steps.push_back(std::move(step));
                ep.failed = true;
                ep.output = memory;
                return ep;
            }
        }
        ep.output = memory;
        return ep;
    }

    TokenSeq greedy_answer(const SkillRegistry& registry, const TokenSeq& input) const {
        Rng dummy(1);
        return run_episode(registry, input, true, dummy).output;
    }

    SkillPtr as_skill(const SkillRegistry& registry) const;

    static CompositeAction assemble(const RawAction& raw) {
        CompositeAction a;
        a.module = raw[0];
        a.r1s = raw[1];
        a.r1e = std::max(raw[2], raw[1]);
        a.r2s = raw[3];
        a.r2e = std::max(raw[4], raw[3]);
        a.ws = raw[5];
        a.we = std::max(raw[6], raw[5]);
        return a;
    }

private:
    ParamStore store_;
};

namespace detail {

class IsmSkill : public SkillModule {
public:
    IsmSkill(std::shared_ptr<const InteractiveSkillModule> ism, SkillRegistry registry)
        : ism_(std::move(ism)), registry_(std::move(registry)) {}
    const std::string& name() const override { return ism_->task_id(); }
    TokenSeq invoke(const TokenSeq& input) const override {
        if (input.empty() || static_cast<int>(input.size()) > ism_->l_max())
            throw SubmoduleError(ism_->task_id());
        return ism_->greedy_answer(registry_, input);
    }

private:
    std::shared_ptr<const InteractiveSkillModule> ism_;
    SkillRegistry registry_;
};

}  // namespace detail

// Freeze against the registry the module was trained with.
inline SkillPtr InteractiveSkillModule::as_skill(const SkillRegistry& registry) const {
    return std::make_shared<detail::IsmSkill>(
        std::make_shared<InteractiveSkillModule>(*this), registry);
}

// `t | memory | module | read spans | write span | sub-output` per step.
inline std::vector<std::string> trace_lines(const Episode& ep) {
    std::vector<std::string> lines;
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        const StepRecord& s = ep.steps[t];
        const CompositeAction& a = s.action;
        std::string line = std::to_string(t + 1) + " | " + pretty(s.memory) + " | " +
                           s.inv.module_name + " | [" + std::to_string(a.r1s) + "," +
                           std::to_string(a.r1e) + ")+[" + std::to_string(a.r2s) + "," +
                           std::to_string(a.r2e) + ") | [" + std::to_string(a.ws) + "," +
                           std::to_string(a.we) + ") | " +
                           (s.inv.halted ? "-" : pretty(s.inv.wrote)) +
                           (s.inv.rejected ? " (rejected)" : "");
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace skillcalc
