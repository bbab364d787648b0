#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "sforge/numeric.hpp"

namespace sforge {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for (seed, stream). Used per scenario step, per Monte
// Carlo chunk and per restart so results do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// mt19937_64 with portable bounded sampling (the standard distributions are
// implementation-defined, so they are avoided).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;
        while (true) {
            std::uint64_t x = eng_();
            if (x >= threshold) return x % bound;
        }
    }

    // Exact Bernoulli(p) for p = a/b with b < 2^64.
    bool bernoulli(const Rational& p) {
        if (p <= 0) return false;
        if (p >= 1) return true;
        const std::uint64_t den = mpz_get_ui(p.get_den_mpz_t());
        const std::uint64_t num = mpz_get_ui(p.get_num_mpz_t());
        return below(den) < num;
    }

    template <class It>
    void shuffle(It first, It last) {
        auto n = last - first;
        for (decltype(n) i = n - 1; i > 0; --i) {
            auto j = static_cast<decltype(n)>(below(static_cast<std::uint64_t>(i + 1)));
            std::iter_swap(first + i, first + j);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace sforge
