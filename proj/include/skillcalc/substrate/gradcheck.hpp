#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "skillcalc/substrate/layers.hpp"
#include "skillcalc/substrate/param_store.hpp"
#include "skillcalc/substrate/tape.hpp"

namespace skillcalc {

struct GradcheckResult {
    double max_rel_err = 0.0;
    std::string worst;  // "param[i,j]"
};

// Central finite differences vs tape gradients over every parameter element.
// loss_fn must be callable with either backend and return a scalar Vec.
template <class LossFn>
GradcheckResult gradcheck(ParamStore& ps, LossFn&& loss_fn, double fd_eps = 1e-5) {
    ps.zero_grads();
    Tape tape(ps);
    tape.backward(loss_fn(tape));
    std::map<std::string, MatrixXd> analytic;
    for (const auto& [name, p] : ps.params()) analytic.emplace(name, ps.grad(name));

    GradcheckResult res;
    for (const auto& [name, p] : ps.params()) {
        MatrixXd& w = ps.mutable_at(name);
        for (int r = 0; r < w.rows(); ++r) {
            for (int c = 0; c < w.cols(); ++c) {
                const double keep = w(r, c);
                EvalBackend ev(ps);
                w(r, c) = keep + fd_eps;
                const double fp = loss_fn(ev)(0);
                w(r, c) = keep - fd_eps;
                const double fm = loss_fn(ev)(0);
                w(r, c) = keep;
                const double fd = (fp - fm) / (2.0 * fd_eps);
                const double an = analytic.at(name)(r, c);
                const double rel =
                    std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
                if (rel > res.max_rel_err) {
                    res.max_rel_err = rel;
                    res.worst = name + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
                }
            }
        }
    }
    return res;
}

// Small-shape gradient checks covering every differentiable layer op.
inline std::vector<std::pair<std::string, double>> run_gradcheck_battery(std::uint64_t seed = 7) {
    std::vector<std::pair<std::string, double>> report;
    const int hidden = 6, edim = 5;

    auto check = [&](const std::string& name, ParamStore& ps, auto&& fn) {
        report.emplace_back(name, gradcheck(ps, fn).max_rel_err);
    };

    {
        ParamStore ps;
        Rng rng(seed);
        ensure_embedding(ps, "emb", edim, kNumTokens, rng);
        TokenSeq ids{1, 2, kPlus, 3};
        check("embed", ps, [&](auto& b) {
            auto vs = embed(b, ps, "emb", ids, true);
            auto acc = b.sum(b.mul(vs[0], vs[0]));
            for (std::size_t i = 1; i < vs.size(); ++i)
                acc = b.add(acc, b.sum(b.mul(vs[i], vs[i])));
            return acc;
        });
    }
    {
        ParamStore ps;
        Rng rng(seed + 1);
        ensure_gru(ps, "g", edim, hidden, rng);
        VectorXd x = VectorXd::LinSpaced(edim, -0.8, 0.9), h = VectorXd::LinSpaced(hidden, -0.5, 0.5);
        check("gru_step", ps, [&](auto& b) {
            auto h1 = gru_step(b, ps, "g", b.input(x), b.input(h));
            auto h2 = gru_step(b, ps, "g", b.input(x), h1);
            return b.sum(b.mul(h2, h2));
        });
    }
    {
        ParamStore ps;
        Rng rng(seed + 2);
        ensure_birnn(ps, "enc", edim, hidden, rng);
        std::vector<VectorXd> xs;
        for (int k = 0; k < 3; ++k) xs.push_back(VectorXd::LinSpaced(edim, -1.0 + k, 1.0 - 0.3 * k));
        check("birnn_encode", ps, [&](auto& b) {
            std::vector<typename std::decay_t<decltype(b)>::Vec> in;
            for (const auto& x : xs) in.push_back(b.input(x));
            auto os = birnn_encode(b, ps, "enc", in);
            auto acc = b.sum(b.mul(os[0], os[0]));
            for (std::size_t i = 1; i < os.size(); ++i) acc = b.add(acc, b.sum(b.mul(os[i], os[i])));
            return acc;
        });
    }
    {
        ParamStore ps;
        Rng rng(seed + 3);
        ensure_linear(ps, "f", hidden, 4, rng);
        VectorXd x = VectorXd::LinSpaced(hidden, -1.2, 1.1);
        check("ffn", ps, [&](auto& b) {
            auto y = ffn(b, ps, "f", b.input(x));
            return b.sum(b.mul(y, y));
        });
    }
    {
        ParamStore ps;
        Rng rng(seed + 4);
        ensure_linear(ps, "head", hidden, 5, rng);
        VectorXd x = VectorXd::LinSpaced(hidden, -0.9, 1.3);
        check("softmax_head", ps, [&](auto& b) {
            auto p = softmax_head(b, ps, "head", b.input(x), 5);
            auto lp = b.log_softmax(logits_head(b, ps, "head", b.input(x), 5));
            return b.add(b.pick(p, 2), b.pick(lp, 1));
        });
    }
    {
        ParamStore ps;
        Rng rng(seed + 5);
        ensure_attention(ps, "ptr", 2 * hidden, hidden, hidden, rng);
        std::vector<VectorXd> keys;
        for (int k = 0; k < 4; ++k)
            keys.push_back(VectorXd::LinSpaced(2 * hidden, -1.0 + 0.4 * k, 0.8 - 0.2 * k));
        VectorXd q = VectorXd::LinSpaced(hidden, -0.6, 0.7);
        check("pointer_attention", ps, [&](auto& b) {
            std::vector<typename std::decay_t<decltype(b)>::Vec> ks;
            for (const auto& k : keys) ks.push_back(b.input(k));
            auto dist = pointer_attention(b, ps, "ptr", b.input(q), ks);
            return b.pick(dist, 1);
        });
    }
    {
        // Clipped-surrogate shape: exp, clamp, vmin, log_softmax, entropy terms.
        ParamStore ps;
        Rng rng(seed + 6);
        ensure_linear(ps, "pol", hidden, 4, rng);
        VectorXd x = VectorXd::LinSpaced(hidden, -1.0, 1.0);
        check("ppo_surrogate", ps, [&](auto& b) {
            auto lp = b.log_softmax(logits_head(b, ps, "pol", b.input(x), 4));
            auto ratio = b.exp(b.affine(b.pick(lp, 2), 1.0, 0.05));
            auto adv = b.affine(ratio, 0.0, 1.3);  // constant advantage
            auto surr = b.vmin(b.mul(ratio, adv), b.mul(b.clamp(ratio, 0.8, 1.2), adv));
            auto p = b.softmax(logits_head(b, ps, "pol", b.input(x), 4));
            auto ent = b.affine(b.sum(b.mul(p, b.log_softmax(logits_head(b, ps, "pol", b.input(x), 4)))), -1.0, 0.0);
            return b.add(b.affine(surr, -1.0, 0.0), b.affine(ent, -0.01, 0.0));
        });
    }
    return report;
}

}  // namespace skillcalc
