#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace skillcalc {

// splitmix64, used to derive independent seed streams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xa076'1d64'78bd'642fULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

// Deterministic generator with portable helpers. std::uniform_int_distribution
// is implementation-defined, so bounded draws are done by hand: tests freeze
// values produced by this exact code.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bULL) {
        // warm up so nearby seeds decorrelate
        for (int i = 0; i < 4; ++i) next();
    }

    std::uint64_t next() { return splitmix64(state_); }

    // uniform in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next(); } while (x >= limit);
        return x % n;
    }

    // uniform integer in [lo, hi] inclusive
    long long range(long long lo, long long hi) {
        return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // uniform double in [0, 1)
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // uniform double in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool chance(double p) { return uniform() < p; }

    // Sample an index from an (unnormalized is fine) probability vector.
    template <class Vec>
    std::size_t categorical(const Vec& probs) {
        double total = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(probs.size()); ++i)
            total += probs[i];
        double u = uniform() * total;
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(probs.size()); ++i) {
            acc += probs[i];
            last = i;
            if (u < acc) return i;
        }
        return last;
    }

    template <class Seq>
    void shuffle(Seq& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    Rng split(std::uint64_t stream) const { return Rng(derive_seed(state_, stream)); }

    std::string serialize() const {
        std::ostringstream os;
        os << state_;
        return os.str();
    }
    static Rng deserialize(const std::string& s) {
        Rng r(1);
        std::istringstream is(s);
        is >> r.state_;
        return r;
    }

private:
    std::uint64_t state_;
};

}  // namespace skillcalc
