#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/rng.hpp"

namespace skillcalc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SubstrateConfig {
    int hidden = 100;
    int embed = 32;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
};

inline constexpr double kInitRange = 0.08;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'S', 'K', 'C', 'A', 'L', 'C', 'K', '\0'};

// Named dense parameter arrays with per-array Adam moments. Vectors are
// stored as n x 1 matrices.
class ParamStore {
public:
    SubstrateConfig config;
    std::string tag;                    // owning module id
    std::string rng_state;              // serialized Rng of the owning training loop
    std::map<std::string, double> meta;  // small scalar settings (window sizes etc.)

    bool has(const std::string& name) const { return params_.count(name) != 0; }

    MatrixXd& add(const std::string& name, int rows, int cols, Rng& rng) {
        MatrixXd m(rows, cols);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-kInitRange, kInitRange);
        return insert(name, std::move(m));
    }

    MatrixXd& add_zeros(const std::string& name, int rows, int cols) {
        return insert(name, MatrixXd::Zero(rows, cols));
    }

    const MatrixXd& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw ShapeMismatch("unknown parameter: " + name);
        return it->second;
    }

    MatrixXd& mutable_at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ShapeMismatch("unknown parameter: " + name);
        return it->second;
    }

    MatrixXd& grad(const std::string& name) {
        auto it = grads_.find(name);
        if (it == grads_.end()) throw ShapeMismatch("unknown parameter: " + name);
        return it->second;
    }

    void zero_grads() {
        for (auto& [name, g] : grads_) g.setZero();
    }

    void scale_grads(double k) {
        for (auto& [name, g] : grads_) g *= k;
    }

    double grad_norm() const {
        double s = 0;
        for (const auto& [name, g] : grads_) s += g.squaredNorm();
        return std::sqrt(s);
    }

    void clip_grad_norm(double max_norm) {
        const double n = grad_norm();
        if (n > max_norm && n > 0) scale_grads(max_norm / n);
    }

    std::uint64_t step_count() const { return step_; }

    void adam_step() { adam_step(config.lr); }

    void adam_step(double lr) {
        if (m_.empty()) {
            for (const auto& [name, p] : params_) {
                m_.emplace(name, MatrixXd::Zero(p.rows(), p.cols()));
                v_.emplace(name, MatrixXd::Zero(p.rows(), p.cols()));
            }
        }
        ++step_;
        const double b1 = config.beta1, b2 = config.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
        for (auto& [name, p] : params_) {
            const MatrixXd& g = grads_.at(name);
            MatrixXd& m = m_.at(name);
            MatrixXd& v = v_.at(name);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
            p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
        }
        assert_finite();
    }

    void assert_finite() const {
        for (const auto& [name, p] : params_)
            if (!p.allFinite()) throw NonFiniteLoss("non-finite parameter: " + name);
    }

    const std::map<std::string, MatrixXd>& params() const { return params_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        put_u32(out, kCheckpointVersion);
        put_i32(out, config.hidden);
        put_i32(out, config.embed);
        put_f64(out, config.lr);
        put_f64(out, config.beta1);
        put_f64(out, config.beta2);
        put_f64(out, config.eps);
        put_u64(out, config.seed);
        put_str(out, tag);
        put_str(out, rng_state);
        put_u32(out, static_cast<std::uint32_t>(meta.size()));
        for (const auto& [key, val] : meta) {
            put_str(out, key);
            put_f64(out, val);
        }
        put_u64(out, step_);
        put_u32(out, static_cast<std::uint32_t>(params_.size()));
        for (const auto& [name, p] : params_) {
            put_str(out, name);
            put_array(out, p);
        }
        out.put(m_.empty() ? 0 : 1);
        if (!m_.empty()) {
            for (const auto& [name, p] : params_) {
                put_array(out, m_.at(name));
                put_array(out, v_.at(name));
            }
        }
        if (!out) throw IoError("write failed: " + path);
    }

    static ParamStore load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open for reading: " + path);
        char magic[sizeof(kCheckpointMagic)];
        in.read(magic, sizeof(magic));
        if (!in || std::string(magic, sizeof(magic)) != std::string(kCheckpointMagic, sizeof(magic)))
            throw CheckpointVersionMismatch("bad checkpoint magic: " + path);
        const std::uint32_t version = get_u32(in);
        if (version != kCheckpointVersion)
            throw CheckpointVersionMismatch("unsupported checkpoint version " +
                                            std::to_string(version));
        ParamStore ps;
        ps.config.hidden = get_i32(in);
        ps.config.embed = get_i32(in);
        ps.config.lr = get_f64(in);
        ps.config.beta1 = get_f64(in);
        ps.config.beta2 = get_f64(in);
        ps.config.eps = get_f64(in);
        ps.config.seed = get_u64(in);
        ps.tag = get_str(in);
        ps.rng_state = get_str(in);
        const std::uint32_t n_meta = get_u32(in);
        for (std::uint32_t i = 0; i < n_meta; ++i) {
            std::string key = get_str(in);
            ps.meta[key] = get_f64(in);
        }
        ps.step_ = get_u64(in);
        const std::uint32_t n = get_u32(in);
        std::vector<std::string> order;
        for (std::uint32_t i = 0; i < n; ++i) {
            std::string name = get_str(in);
            ps.insert(name, get_array(in));
            order.push_back(std::move(name));
        }
        if (in.get() == 1) {
            for (const std::string& name : order) {
                ps.m_.emplace(name, get_array(in));
                ps.v_.emplace(name, get_array(in));
            }
        }
        if (!in) throw IoError("truncated checkpoint: " + path);
        return ps;
    }

private:
    std::map<std::string, MatrixXd> params_;
    std::map<std::string, MatrixXd> grads_;
    std::map<std::string, MatrixXd> m_, v_;
    std::uint64_t step_ = 0;

    MatrixXd& insert(const std::string& name, MatrixXd m) {
        if (has(name)) throw ShapeMismatch("duplicate parameter: " + name);
        grads_.emplace(name, MatrixXd::Zero(m.rows(), m.cols()));
        return params_.emplace(name, std::move(m)).first->second;
    }

    static void put_u32(std::ostream& out, std::uint32_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static void put_i32(std::ostream& out, std::int32_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static void put_u64(std::ostream& out, std::uint64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static void put_f64(std::ostream& out, double v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static void put_str(std::ostream& out, const std::string& s) {
        put_u32(out, static_cast<std::uint32_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    static void put_array(std::ostream& out, const MatrixXd& m) {
        put_u32(out, static_cast<std::uint32_t>(m.rows()));
        put_u32(out, static_cast<std::uint32_t>(m.cols()));
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
    }
    static std::uint32_t get_u32(std::istream& in) {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    }
    static std::int32_t get_i32(std::istream& in) {
        std::int32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    }
    static std::uint64_t get_u64(std::istream& in) {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    }
    static double get_f64(std::istream& in) {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    }
    static std::string get_str(std::istream& in) {
        const std::uint32_t n = get_u32(in);
        std::string s(n, '\0');
        in.read(s.data(), n);
        return s;
    }
    static MatrixXd get_array(std::istream& in) {
        const std::uint32_t rows = get_u32(in), cols = get_u32(in);
        MatrixXd m(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = get_f64(in);
        return m;
    }
};

}  // namespace skillcalc
