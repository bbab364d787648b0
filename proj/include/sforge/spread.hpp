#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sforge/family.hpp"
#include "sforge/numeric.hpp"

namespace sforge {

struct SpreadVerdict {
    Rational r;
    bool ok = true;
    std::optional<Mask> violation;  // X with |F(X)| > R^{-|X|} |F|
    std::uint64_t restricted_size = 0, size = 0;
};

// |F(X)| <= R^{-|X|} |F| for every X; the canonically first violation otherwise.
SpreadVerdict check_spread(const SetFamily& f, const Rational& r);

// Largest X with |F(X)| >= R^{-|X|} |F| (smallest mask on ties); F(X) is
// then R-spread, which is asserted.
Mask max_spread_restriction(const SetFamily& f, const Rational& r);

struct SpreadLemmaEstimate {
    Rational r, delta;
    int m = 0;
    std::uint64_t seed = 0, trials = 0, hits = 0;
    double wilson_lo = 0, wilson_hi = 0;
    // 1 - (5 / log2(R delta))^m |mu| with |mu| = 1 and with |mu| = k.
    Real bound_unit, bound_k;
    int k = 0;
    bool vacuous = false;    // bound_unit <= 0 (or log2(R delta) <= 0)
    bool violation = false;  // whole interval below a nonvacuous bound
};

// W contains each ground element independently with probability m*delta.
SpreadLemmaEstimate spread_lemma_mc(const SetFamily& f, const Rational& r, int m, const Rational& delta,
                                    std::uint64_t trials, std::uint64_t seed);

// Exact P[some member ⊆ W] for a W that keeps each element with probability p,
// by enumerating W over the support (at most 24 elements).
Rational hit_probability_exact(const SetFamily& f, const Rational& p);

// 99% Wilson score interval.
std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t trials);
inline constexpr double kWilsonZ99 = 2.5758293035489004;

struct RepsResult {
    std::optional<std::vector<Mask>> reps;  // reps[i] ∈ G_i, pairwise disjoint, disjoint from forbidden
    int restarts = 0;                       // colourings tried
    bool by_sampling = false;
    std::uint64_t nodes = 0;                // exhaustive search nodes
};

// Random colourings first (element -> class i with probability 1/(8s) each),
// then exhaustive search, so absence is certified.
RepsResult find_disjoint_representatives(const std::vector<SetFamily>& g, Mask forbidden, std::uint64_t seed,
                                         int max_restarts = 64);

// Maximal spread restriction X, then s disjoint members of F(X): the sets
// X ∪ F_i form a sunflower with core X.
std::optional<SunflowerWitness> sunflower_via_spread(const SetFamily& f, int s, const Rational& r,
                                                     std::uint64_t seed);

json to_json(const SpreadVerdict& v);
json to_json(const SpreadLemmaEstimate& e);
json to_json(const RepsResult& r);

}  // namespace sforge
