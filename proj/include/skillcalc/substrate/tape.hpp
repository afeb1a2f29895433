#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/substrate/param_store.hpp"

namespace skillcalc {

namespace detail {

inline VectorXd stable_softmax(const VectorXd& x) {
    VectorXd e = (x.array() - x.maxCoeff()).exp();
    return e / e.sum();
}

inline VectorXd stable_log_softmax(const VectorXd& x) {
    const double m = x.maxCoeff();
    const double lse = m + std::log((x.array() - m).exp().sum());
    return x.array() - lse;
}

}  // namespace detail

// Reverse-mode autodiff over vector values. Matrix parameters participate
// through named ops (matvec, embed_col, param) whose backward writes straight
// into the ParamStore gradient buffers.
class Tape {
public:
    struct Vec {
        int idx = -1;
    };

    explicit Tape(ParamStore& store) : store_(store) {}

    std::size_t size() const { return nodes_.size(); }
    const VectorXd& value(Vec v) const { return nodes_[check(v)].val; }

    Vec input(VectorXd v) { return push(std::move(v), {}); }

    Vec param(const std::string& name) {
        const MatrixXd& p = store_.at(name);
        if (p.cols() != 1) throw ShapeMismatch("param op needs a column vector: " + name);
        MatrixXd* g = &store_.grad(name);
        Vec y = push(p.col(0), {});
        node(y).back = [g](Tape& t, int yi) { g->col(0) += t.nodes_[yi].grad; };
        return y;
    }

    Vec embed_col(const std::string& name, int col) {
        const MatrixXd& e = store_.at(name);
        if (col < 0 || col >= e.cols()) throw IdOutOfRange(col);
        MatrixXd* g = &store_.grad(name);
        Vec y = push(e.col(col), {});
        node(y).back = [g, col](Tape& t, int yi) { g->col(col) += t.nodes_[yi].grad; };
        return y;
    }

    Vec matvec(const std::string& name, Vec x) {
        const MatrixXd& w = store_.at(name);
        if (w.cols() != value(x).size())
            throw ShapeMismatch("matvec " + name + ": " + std::to_string(w.cols()) + " vs " +
                                std::to_string(value(x).size()));
        const MatrixXd* wp = &w;
        MatrixXd* g = &store_.grad(name);
        Vec y = push(w * value(x), {x});
        node(y).back = [wp, g](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad.noalias() += wp->transpose() * n.grad;
            g->noalias() += n.grad * t.nodes_[n.a].val.transpose();
        };
        return y;
    }

    Vec add(Vec a, Vec b) {
        same_size(a, b, "add");
        Vec y = push(value(a) + value(b), {a, b});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad += n.grad;
            t.nodes_[n.b].grad += n.grad;
        };
        return y;
    }

    Vec sub(Vec a, Vec b) {
        same_size(a, b, "sub");
        Vec y = push(value(a) - value(b), {a, b});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad += n.grad;
            t.nodes_[n.b].grad -= n.grad;
        };
        return y;
    }

    Vec mul(Vec a, Vec b) {
        same_size(a, b, "mul");
        Vec y = push(value(a).cwiseProduct(value(b)), {a, b});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad.array() += n.grad.array() * t.nodes_[n.b].val.array();
            t.nodes_[n.b].grad.array() += n.grad.array() * t.nodes_[n.a].val.array();
        };
        return y;
    }

    // k*a + c
    Vec affine(Vec a, double k, double c) {
        Vec y = push(k * value(a).array() + c, {a});
        node(y).back = [k](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad += k * n.grad;
        };
        return y;
    }

    Vec add_const(Vec a, const VectorXd& c) {
        if (value(a).size() != c.size()) throw ShapeMismatch("add_const size");
        Vec y = push(value(a) + c, {a});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad += n.grad;
        };
        return y;
    }

    Vec tanh(Vec a) {
        Vec y = push(value(a).array().tanh(), {a});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad.array() += n.grad.array() * (1.0 - n.val.array().square());
        };
        return y;
    }

    Vec sigmoid(Vec a) {
        Vec y = push(1.0 / (1.0 + (-value(a).array()).exp()), {a});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad.array() += n.grad.array() * n.val.array() * (1.0 - n.val.array());
        };
        return y;
    }

    Vec exp(Vec a) {
        Vec y = push(value(a).array().exp(), {a});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad.array() += n.grad.array() * n.val.array();
        };
        return y;
    }

    Vec concat(Vec a, Vec b) {
        VectorXd v(value(a).size() + value(b).size());
        v << value(a), value(b);
        Vec y = push(std::move(v), {a, b});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            auto& ga = t.nodes_[n.a].grad;
            auto& gb = t.nodes_[n.b].grad;
            ga += n.grad.head(ga.size());
            gb += n.grad.tail(gb.size());
        };
        return y;
    }

    Vec concat_list(const std::vector<Vec>& parts) {
        if (parts.empty()) throw EmptySequence("concat_list");
        Vec y = parts[0];
        for (std::size_t i = 1; i < parts.size(); ++i) y = concat(y, parts[i]);
        return y;
    }

    Vec softmax(Vec a) {
        Vec y = push(detail::stable_softmax(value(a)), {a});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            const double dot = n.grad.dot(n.val);
            t.nodes_[n.a].grad.array() += n.val.array() * (n.grad.array() - dot);
        };
        return y;
    }

    Vec log_softmax(Vec a) {
        Vec y = push(detail::stable_log_softmax(value(a)), {a});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            const double sum = n.grad.sum();
            t.nodes_[n.a].grad.array() += n.grad.array() - sum * n.val.array().exp();
        };
        return y;
    }

    Vec pick(Vec a, int i) {
        if (i < 0 || i >= value(a).size()) throw IndexOutOfRange("pick " + std::to_string(i));
        Vec y = push(value(a).segment(i, 1), {a});
        node(y).aux = i;
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad(n.aux) += n.grad(0);
        };
        return y;
    }

    Vec sum(Vec a) {
        VectorXd v(1);
        v(0) = value(a).sum();
        Vec y = push(std::move(v), {a});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad.array() += n.grad(0);
        };
        return y;
    }

    Vec dot(Vec a, Vec b) {
        same_size(a, b, "dot");
        VectorXd v(1);
        v(0) = value(a).dot(value(b));
        Vec y = push(std::move(v), {a, b});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            t.nodes_[n.a].grad += n.grad(0) * t.nodes_[n.b].val;
            t.nodes_[n.b].grad += n.grad(0) * t.nodes_[n.a].val;
        };
        return y;
    }

    Vec vmin(Vec a, Vec b) {
        same_size(a, b, "vmin");
        Vec y = push(value(a).cwiseMin(value(b)), {a, b});
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            const auto& av = t.nodes_[n.a].val;
            const auto& bv = t.nodes_[n.b].val;
            for (int i = 0; i < n.grad.size(); ++i) {
                if (av(i) <= bv(i))
                    t.nodes_[n.a].grad(i) += n.grad(i);
                else
                    t.nodes_[n.b].grad(i) += n.grad(i);
            }
        };
        return y;
    }

    Vec clamp(Vec a, double lo, double hi) {
        Vec y = push(value(a).array().max(lo).min(hi), {a});
        node(y).lo = lo;
        node(y).hi = hi;
        node(y).back = [](Tape& t, int yi) {
            const auto& n = t.nodes_[yi];
            const auto& av = t.nodes_[n.a].val;
            for (int i = 0; i < n.grad.size(); ++i)
                if (av(i) > n.lo && av(i) < n.hi) t.nodes_[n.a].grad(i) += n.grad(i);
        };
        return y;
    }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse; parameter
    // gradients accumulate into the store (caller zeroes them beforehand).
    void backward(Vec loss) {
        Node& ln = node(loss);
        if (ln.val.size() != 1) throw ShapeMismatch("backward needs a scalar loss");
        ln.grad(0) = 1.0;
        for (int i = loss.idx; i >= 0; --i)
            if (nodes_[i].back) nodes_[i].back(*this, i);
    }

private:
    struct Node {
        VectorXd val;
        VectorXd grad;
        int a = -1, b = -1;
        int aux = 0;
        double lo = 0, hi = 0;
        std::function<void(Tape&, int)> back;
    };

    ParamStore& store_;
    std::vector<Node> nodes_;

    int check(Vec v) const {
        if (v.idx < 0 || v.idx >= static_cast<int>(nodes_.size()))
            throw IndexOutOfRange("tape handle");
        return v.idx;
    }

    void same_size(Vec a, Vec b, const char* op) const {
        if (value(a).size() != value(b).size())
            throw ShapeMismatch(std::string(op) + ": " + std::to_string(value(a).size()) + " vs " +
                                std::to_string(value(b).size()));
    }

    Node& node(Vec v) { return nodes_[check(v)]; }

    Vec push(VectorXd val, std::initializer_list<Vec> parents) {
        Node n;
        n.grad = VectorXd::Zero(val.size());
        n.val = std::move(val);
        auto it = parents.begin();
        if (it != parents.end()) n.a = check(*it++);
        if (it != parents.end()) n.b = check(*it);
        nodes_.push_back(std::move(n));
        return Vec{static_cast<int>(nodes_.size()) - 1};
    }
};

// Eager forward-only twin of Tape with the same op surface; used for rollouts
// and greedy evaluation where no gradient is needed.
class EvalBackend {
public:
    using Vec = VectorXd;

    explicit EvalBackend(const ParamStore& store) : store_(store) {}

    const VectorXd& value(const Vec& v) const { return v; }

    Vec input(VectorXd v) const { return v; }

    Vec param(const std::string& name) const {
        const MatrixXd& p = store_.at(name);
        if (p.cols() != 1) throw ShapeMismatch("param op needs a column vector: " + name);
        return p.col(0);
    }

    Vec embed_col(const std::string& name, int col) const {
        const MatrixXd& e = store_.at(name);
        if (col < 0 || col >= e.cols()) throw IdOutOfRange(col);
        return e.col(col);
    }

    Vec matvec(const std::string& name, const Vec& x) const {
        const MatrixXd& w = store_.at(name);
        if (w.cols() != x.size()) throw ShapeMismatch("matvec " + name);
        return w * x;
    }

    Vec add(const Vec& a, const Vec& b) const { return a + b; }
    Vec sub(const Vec& a, const Vec& b) const { return a - b; }
    Vec mul(const Vec& a, const Vec& b) const { return a.cwiseProduct(b); }
    Vec affine(const Vec& a, double k, double c) const { return k * a.array() + c; }
    Vec add_const(const Vec& a, const VectorXd& c) const { return a + c; }
    Vec tanh(const Vec& a) const { return a.array().tanh(); }
    Vec sigmoid(const Vec& a) const { return 1.0 / (1.0 + (-a.array()).exp()); }
    Vec exp(const Vec& a) const { return a.array().exp(); }

    Vec concat(const Vec& a, const Vec& b) const {
        VectorXd v(a.size() + b.size());
        v << a, b;
        return v;
    }

    Vec concat_list(const std::vector<Vec>& parts) const {
        if (parts.empty()) throw EmptySequence("concat_list");
        Eigen::Index n = 0;
        for (const Vec& p : parts) n += p.size();
        VectorXd v(n);
        Eigen::Index at = 0;
        for (const Vec& p : parts) {
            v.segment(at, p.size()) = p;
            at += p.size();
        }
        return v;
    }

    Vec softmax(const Vec& a) const { return detail::stable_softmax(a); }
    Vec log_softmax(const Vec& a) const { return detail::stable_log_softmax(a); }

    Vec pick(const Vec& a, int i) const {
        if (i < 0 || i >= a.size()) throw IndexOutOfRange("pick " + std::to_string(i));
        return a.segment(i, 1);
    }

    Vec sum(const Vec& a) const {
        VectorXd v(1);
        v(0) = a.sum();
        return v;
    }

    Vec dot(const Vec& a, const Vec& b) const {
        VectorXd v(1);
        v(0) = a.dot(b);
        return v;
    }

    Vec vmin(const Vec& a, const Vec& b) const { return a.cwiseMin(b); }
    Vec clamp(const Vec& a, double lo, double hi) const { return a.array().max(lo).min(hi); }

private:
    const ParamStore& store_;
};

}  // namespace skillcalc
