#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/rng.hpp"
#include "skillcalc/substrate/param_store.hpp"
#include "skillcalc/substrate/tape.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

inline VectorXd positional_encoding(int pos, int dim) {
    VectorXd pe(dim);
    for (int i = 0; i < dim; i += 2) {
        const double angle = pos / std::pow(10000.0, static_cast<double>(i) / dim);
        pe(i) = std::sin(angle);
        if (i + 1 < dim) pe(i + 1) = std::cos(angle);
    }
    return pe;
}

inline void ensure_embedding(ParamStore& ps, const std::string& name, int dim, int vocab,
                             Rng& rng) {
    if (!ps.has(name)) ps.add(name, dim, vocab, rng);
}

inline void ensure_linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng) {
    if (!ps.has(prefix + ".W")) {
        ps.add(prefix + ".W", out, in, rng);
        ps.add_zeros(prefix + ".b", out, 1);
    }
}

inline void ensure_gru(ParamStore& ps, const std::string& prefix, int in, int hidden, Rng& rng) {
    if (ps.has(prefix + ".W_ir")) return;
    for (const char* gate : {"r", "z", "n"}) {
        ps.add(prefix + ".W_i" + std::string(gate), hidden, in, rng);
        ps.add(prefix + ".W_h" + std::string(gate), hidden, hidden, rng);
        ps.add_zeros(prefix + ".b_i" + std::string(gate), hidden, 1);
        ps.add_zeros(prefix + ".b_h" + std::string(gate), hidden, 1);
    }
}

inline void ensure_birnn(ParamStore& ps, const std::string& prefix, int in, int hidden, Rng& rng) {
    ensure_gru(ps, prefix + ".fwd", in, hidden, rng);
    ensure_gru(ps, prefix + ".bwd", in, hidden, rng);
}

inline void ensure_attention(ParamStore& ps, const std::string& prefix, int key_dim, int query_dim,
                             int attn_dim, Rng& rng) {
    if (ps.has(prefix + ".W1")) return;
    ps.add(prefix + ".W1", attn_dim, key_dim, rng);
    ps.add(prefix + ".W2", attn_dim, query_dim, rng);
    ps.add(prefix + ".v", attn_dim, 1, rng);
}

template <class B>
std::vector<typename B::Vec> embed(B& b, const ParamStore& ps, const std::string& name,
                                   const TokenSeq& ids, bool with_position) {
    const int dim = static_cast<int>(ps.at(name).rows());
    std::vector<typename B::Vec> out;
    out.reserve(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
        auto e = b.embed_col(name, static_cast<int>(ids[k]));
        if (with_position) e = b.add_const(e, positional_encoding(static_cast<int>(k), dim));
        out.push_back(std::move(e));
    }
    return out;
}

template <class B>
typename B::Vec gru_step(B& b, const ParamStore& ps, const std::string& prefix,
                         const typename B::Vec& x, const typename B::Vec& h) {
    auto gate = [&](const char* g, const typename B::Vec& in, const typename B::Vec& hh) {
        return b.add(b.add(b.matvec(prefix + ".W_i" + g, in), b.param(prefix + ".b_i" + g)),
                     b.add(b.matvec(prefix + ".W_h" + g, hh), b.param(prefix + ".b_h" + g)));
    };
    auto r = b.sigmoid(gate("r", x, h));
    auto z = b.sigmoid(gate("z", x, h));
    auto n = b.tanh(b.add(b.add(b.matvec(prefix + ".W_in", x), b.param(prefix + ".b_in")),
                          b.mul(r, b.add(b.matvec(prefix + ".W_hn", h), b.param(prefix + ".b_hn")))));
    // h' = (1-z).n + z.h
    return b.add(b.sub(n, b.mul(z, n)), b.mul(z, h));
}

// o_k = fwd state after position k (+) bwd state after position k.
template <class B>
std::vector<typename B::Vec> birnn_encode(B& b, const ParamStore& ps, const std::string& prefix,
                                          const std::vector<typename B::Vec>& inputs) {
    if (inputs.empty()) throw EmptySequence("birnn_encode");
    const int hidden = static_cast<int>(ps.at(prefix + ".fwd.W_hr").rows());
    const std::size_t l = inputs.size();
    std::vector<typename B::Vec> fwd(l), bwd(l);
    auto h = b.input(VectorXd::Zero(hidden));
    for (std::size_t k = 0; k < l; ++k) {
        h = gru_step(b, ps, prefix + ".fwd", inputs[k], h);
        fwd[k] = h;
    }
    h = b.input(VectorXd::Zero(hidden));
    for (std::size_t k = l; k-- > 0;) {
        h = gru_step(b, ps, prefix + ".bwd", inputs[k], h);
        bwd[k] = h;
    }
    std::vector<typename B::Vec> out;
    out.reserve(l);
    for (std::size_t k = 0; k < l; ++k) out.push_back(b.concat(fwd[k], bwd[k]));
    return out;
}

template <class B>
typename B::Vec linear(B& b, const ParamStore& ps, const std::string& prefix,
                       const typename B::Vec& x) {
    return b.add(b.matvec(prefix + ".W", x), b.param(prefix + ".b"));
}

template <class B>
typename B::Vec ffn(B& b, const ParamStore& ps, const std::string& prefix,
                    const typename B::Vec& x) {
    return b.tanh(linear(b, ps, prefix, x));
}

template <class B>
typename B::Vec softmax_head(B& b, const ParamStore& ps, const std::string& prefix,
                             const typename B::Vec& x, int n_classes) {
    if (ps.at(prefix + ".W").rows() != n_classes) throw ShapeMismatch("softmax_head " + prefix);
    return b.softmax(linear(b, ps, prefix, x));
}

template <class B>
typename B::Vec logits_head(B& b, const ParamStore& ps, const std::string& prefix,
                            const typename B::Vec& x, int n_classes) {
    if (ps.at(prefix + ".W").rows() != n_classes) throw ShapeMismatch("logits_head " + prefix);
    return linear(b, ps, prefix, x);
}

// Additive attention: score_k = v . tanh(W1 key_k + W2 query), softmaxed over k.
template <class B>
typename B::Vec pointer_attention(B& b, const ParamStore& ps, const std::string& prefix,
                                  const typename B::Vec& query,
                                  const std::vector<typename B::Vec>& keys) {
    if (keys.empty()) throw EmptySequence("pointer_attention");
    auto v = b.param(prefix + ".v");
    auto wq = b.matvec(prefix + ".W2", query);
    std::vector<typename B::Vec> scores;
    scores.reserve(keys.size());
    for (const auto& key : keys)
        scores.push_back(b.dot(v, b.tanh(b.add(b.matvec(prefix + ".W1", key), wq))));
    return b.softmax(b.concat_list(scores));
}

template <class B>
typename B::Vec pointer_logits(B& b, const ParamStore& ps, const std::string& prefix,
                               const typename B::Vec& query,
                               const std::vector<typename B::Vec>& keys) {
    if (keys.empty()) throw EmptySequence("pointer_attention");
    auto v = b.param(prefix + ".v");
    auto wq = b.matvec(prefix + ".W2", query);
    std::vector<typename B::Vec> scores;
    scores.reserve(keys.size());
    for (const auto& key : keys)
        scores.push_back(b.dot(v, b.tanh(b.add(b.matvec(prefix + ".W1", key), wq))));
    return b.concat_list(scores);
}

}  // namespace skillcalc
