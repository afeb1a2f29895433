#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/skill.hpp"
#include "skillcalc/substrate/layers.hpp"
#include "skillcalc/substrate/param_store.hpp"
#include "skillcalc/substrate/tape.hpp"
#include "skillcalc/taskspec.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

struct BsmMetrics {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_acc;
    int epochs_run = 0;
    bool mastered = false;  // 100% exact match on the training set
};

// Supervised Bi-RNN sequence labeler over a fixed window l_io: inputs are
// right-aligned and left-padded with blanks; targets likewise; decoding takes
// per-position argmax and strips blanks.
class BasicSkillModule {
public:
    BasicSkillModule(std::string task_id, int l_io, const SubstrateConfig& cfg)
        : l_io_(l_io) {
        store_.config = cfg;
        store_.tag = std::move(task_id);
        store_.meta["l_io"] = l_io;
        Rng rng(derive_seed(cfg.seed, 0xB5));
        ensure_embedding(store_, "emb", cfg.embed, kNumTokens, rng);
        ensure_birnn(store_, "enc", cfg.embed, cfg.hidden, rng);
        ensure_linear(store_, "head", 2 * cfg.hidden, kNumTokens, rng);
        store_.rng_state = rng.serialize();
    }

    explicit BasicSkillModule(ParamStore store)
        : store_(std::move(store)), l_io_(static_cast<int>(store_.meta.at("l_io"))) {}

    static BasicSkillModule load(const std::string& path) {
        return BasicSkillModule(ParamStore::load(path));
    }

    const std::string& task_id() const { return store_.tag; }
    int l_io() const { return l_io_; }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }

    TokenSeq pad(const TokenSeq& in) const {
        if (static_cast<int>(in.size()) > l_io_)
            throw LengthMismatch(store_.tag + ": input " + std::to_string(in.size()) +
                                 " exceeds window " + std::to_string(l_io_));
        TokenSeq out(static_cast<std::size_t>(l_io_), kBlank);
        std::copy(in.begin(), in.end(), out.end() - static_cast<std::ptrdiff_t>(in.size()));
        return out;
    }

    // One distribution over the alphabet per window position.
    std::vector<VectorXd> forward(const TokenSeq& input) const {
        const TokenSeq padded = pad(input);
        EvalBackend b(store_);
        auto vs = embed(b, store_, "emb", padded, true);
        auto os = birnn_encode(b, store_, "enc", vs);
        std::vector<VectorXd> dists;
        dists.reserve(os.size());
        for (const auto& o : os) dists.push_back(softmax_head(b, store_, "head", o, kNumTokens));
        return dists;
    }

    static TokenSeq decode(const std::vector<VectorXd>& dists) {
        TokenSeq out;
        for (const VectorXd& d : dists) {
            int best = 0;
            for (int i = 1; i < d.size(); ++i)
                if (d(i) > d(best)) best = i;
            if (best != kBlank) out.push_back(static_cast<Token>(best));
        }
        return out;
    }

    TokenSeq apply(const TokenSeq& input) const { return decode(forward(input)); }

    bool exact_on(const std::vector<Sample>& data) const {
        for (const Sample& s : data)
            if (apply(s.input) != s.truth) return false;
        return true;
    }

    double accuracy_on(const std::vector<Sample>& data) const {
        if (data.empty()) throw DatasetEmpty();
        std::size_t ok = 0;
        for (const Sample& s : data) ok += apply(s.input) == s.truth;
        return static_cast<double>(ok) / static_cast<double>(data.size());
    }

    // Per-position cross-entropy against right-aligned blank-padded targets;
    // stops at the first epoch with 100% exact match on the training set.
    BsmMetrics train_supervised(const std::vector<Sample>& data, int epochs, int batch, Rng& rng) {
        if (data.empty()) throw DatasetEmpty();
        BsmMetrics m;
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        for (int epoch = 0; epoch < epochs; ++epoch) {
            rng.shuffle(order);
            double loss_sum = 0.0;
            std::size_t at = 0;
            while (at < order.size()) {
                const std::size_t take = std::min<std::size_t>(batch, order.size() - at);
                store_.zero_grads();
                for (std::size_t k = 0; k < take; ++k) {
                    const Sample& s = data[order[at + k]];
                    loss_sum += step_sample(s);
                }
                store_.scale_grads(1.0 / static_cast<double>(take));
                store_.adam_step();
                at += take;
            }
            const double loss = loss_sum / static_cast<double>(data.size());
            if (!std::isfinite(loss)) throw NonFiniteLoss(store_.tag);
            const double acc = accuracy_on(data);
            m.epoch_loss.push_back(loss);
            m.epoch_acc.push_back(acc);
            m.epochs_run = epoch + 1;
            if (acc == 1.0) {
                m.mastered = true;
                break;
            }
        }
        store_.rng_state = rng.serialize();
        return m;
    }

    SkillPtr as_skill() const;

private:
    ParamStore store_;
    int l_io_;

    double step_sample(const Sample& s) {
        const TokenSeq in = pad(s.input);
        const TokenSeq target = pad(s.truth);
        Tape t(store_);
        auto vs = embed(t, store_, "emb", in, true);
        auto os = birnn_encode(t, store_, "enc", vs);
        Tape::Vec loss{};
        bool first = true;
        for (std::size_t k = 0; k < os.size(); ++k) {
            auto lp = t.log_softmax(logits_head(t, store_, "head", os[k], kNumTokens));
            auto nll = t.affine(t.pick(lp, static_cast<int>(target[k])), -1.0, 0.0);
            loss = first ? nll : t.add(loss, nll);
            first = false;
        }
        loss = t.affine(loss, 1.0 / static_cast<double>(l_io_), 0.0);
        t.backward(loss);
        return t.value(loss)(0);
    }
};

namespace detail {

class BsmSkill : public SkillModule {
public:
    BsmSkill(std::shared_ptr<const BasicSkillModule> bsm) : bsm_(std::move(bsm)) {}
    const std::string& name() const override { return bsm_->task_id(); }
    TokenSeq invoke(const TokenSeq& input) const override { return bsm_->apply(input); }

private:
    std::shared_ptr<const BasicSkillModule> bsm_;
};

}  // namespace detail

inline SkillPtr BasicSkillModule::as_skill() const {
    return std::make_shared<detail::BsmSkill>(std::make_shared<BasicSkillModule>(*this));
}

// The finite sample set a single-digit task is trained and judged on.
inline std::vector<Sample> enumerate_task(const TaskSpec& spec) {
    std::vector<Sample> out;
    if (spec.juxtaposed) {
        for (int x = 0; x <= 9; ++x)
            for (int y = 0; y <= 9; ++y)
                out.push_back({{static_cast<Token>(x), static_cast<Token>(y)},
                               render_tokens(BigInt(x + y))});
        for (int x = 0; x <= 9; ++x)
            out.push_back({{static_cast<Token>(x)}, render_tokens(BigInt(x))});
        return out;
    }
    if (spec.shape != OperandShape::Single || spec.ops.size() != 1 || spec.max_ops != 1)
        throw UnsupportedTask(spec.id + ": not enumerable");
    const char op = spec.ops[0];
    const Token op_tok = op == '+' ? kPlus : op == '-' ? kMinus : op == '*' ? kTimes : kDivide;
    for (int a = 0; a <= 9; ++a) {
        for (int b = 0; b <= 9; ++b) {
            const BigInt truth = op == '+' ? BigInt(a + b) : op == '-' ? BigInt(a - b) : BigInt(a * b);
            if (op == '/') {
                if (b == 0 || a % b != 0) continue;
                out.push_back({{static_cast<Token>(a), op_tok, static_cast<Token>(b)},
                               render_tokens(BigInt(a / b))});
                continue;
            }
            out.push_back(
                {{static_cast<Token>(a), op_tok, static_cast<Token>(b)}, render_tokens(truth)});
        }
    }
    return out;
}

// Window just large enough for the task's inputs and answers.
inline int bsm_window(const TaskSpec& spec) {
    int w = 0;
    for (const Sample& s : enumerate_task(spec))
        w = std::max({w, static_cast<int>(s.input.size()), static_cast<int>(s.truth.size())});
    return w;
}

}  // namespace skillcalc
