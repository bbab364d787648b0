#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sforge/domain.hpp"
#include "sforge/family.hpp"
#include "sforge/numeric.hpp"
#include "sforge/sunflower.hpp"

namespace sforge {

enum class PeelMode { Homogeneous, Spread };

struct DecompositionPart {
    Mask s = 0;
    SetFamily link;  // F_S ⊆ A(S), members disjoint from S
};

// F = R ⊔ ⊔_S F_S ∨ {S}.
struct Decomposition {
    PeelMode mode = PeelMode::Homogeneous;
    Rational param;  // τ, or R in spread mode
    int q = 0;       // largest admissible |S|
    std::optional<Rational> floor;
    std::vector<DecompositionPart> parts;
    SetFamily remainder;
    std::optional<Mask> stop_set;  // the maximal set that ended the loop
    BigInt remainder_bound;        // ⌊bound⌋ on |R| (homogeneous mode)
    Rational remainder_bound_exact;
};

// Members of F, counted with multiplicity, reassembled from the parts.
bool partition_exact(const Decomposition& d, const SetFamily& f);

// Peels the maximal S with μ(F_i(S)) ≥ τ^{|S|} μ(F_i) (measures relative to
// A(S) and A) until |S| > q. With a floor, also stops once μ(F_i(S)) < floor.
// Every part is certified τ-homogeneous in A(S); |R| ≤ max(τ^{-(q+1)}, floor)|A|
// is asserted.
Decomposition spread_approximation(const SetFamily& f, const Domain& a, const Rational& tau, int q,
                                   const std::optional<Rational>& measure_floor = std::nullopt);

// Peels the maximal S with |F_i(S)| ≥ R^{-|S|} |F_i| until |S| > w. Parts are
// certified R-spread.
Decomposition spread_peeling(const SetFamily& f, const Rational& r, int w);

struct Extraction {
    int layer = 0;
    Mask t = 0;
    SetFamily link;  // the α-spread family W_i(T) taken out with T
};

struct LayerBound {
    int layer = 0;
    std::size_t size = 0;  // |W_i|
    Real rhs;
    std::optional<bool> holds;
};

struct SimplifyOptions {
    std::optional<int> q;              // default: the largest member size
    std::optional<Rational> alpha;     // replaces max{sq, 2¹⁴ s log₂ t}
    bool check_input = true;           // precondition error on a small-core sunflower
};

struct SimplifyResult {
    int q = 0, s = 0, t = 0;
    Rational eps;
    Real alpha;
    bool alpha_overridden = false;
    bool consistency_applies = false;     // α ≥ sq
    std::vector<SetFamily> stages;        // T_0 .. T_{q-t}
    std::vector<SetFamily> layers;        // residual W_0 .. W_{q-t-1}
    std::vector<Extraction> extractions;  // in extraction order
    SetFamily result;                     // T = T_{q-t}
    std::optional<SunflowerWitness> input_violation;
    std::vector<LayerBound> layer_bounds;
    BigInt uncovered;  // |A[S \ S[T]]|
    Real lemma_rhs;    // (2¹⁴ s log₂ t)^t ε/(1-ε) A_t
    std::optional<bool> lemma_holds;
    bool hypotheses_met = false;  // εr > 2¹⁷ sq, t ≥ 2, A (r,t)-spread at nominal r
};

// Layer-by-layer simplification of S ⊆ ∂_{≤q} A into a t-uniform family.
// Layer i takes W_i = T_i^{(q-i)} and repeatedly removes the star of the
// maximal T (largest, then smallest mask) with |W_i(T)| α^{|T|} > |W_i| while
// |T| ≤ q-i-1. T_{i+1} collects the removed T and T_i^{(≤q-i-1)}.
SimplifyResult simplify(const SetFamily& s_family, const Domain& a, int s, int t, const Rational& eps,
                        const SimplifyOptions& opt = {});

struct CoverResult {
    int s = 0, t = 0;
    int w = 0;  // ⌊(t+1) log₂ r⌋ unless given
    Rational r, big_r;
    bool peeled = false;  // k > w
    std::optional<Decomposition> peeling;
    SetFamily skeleton;   // the family handed to simplify
    std::optional<SunflowerWitness> skeleton_violation;
    SimplifyResult simplification;
    SetFamily result;
    SetFamily covered, residue;  // F[T] and F \ F[T]
    bool result_sunflower_free = false;
    Real rhs;
    std::optional<bool> bound_holds;
    bool hypotheses_met = false;
};

// Cover of F by t-sets. With k ≤ w the family is simplified directly with
// q = k; otherwise it is first peeled into (r/2)-spread links over sets of
// size ≤ w and the collected sets are simplified.
CoverResult down_closed_cover(const SetFamily& f, const Domain& a, int s, int t, std::optional<int> w = std::nullopt,
                              std::optional<Rational> alpha = std::nullopt);

struct SystemPart {
    Mask s = 0;
    SetFamily b;  // B_S ⊆ A(S)
};

struct SystemSST {
    int s = 0, t = 0;
    std::vector<SystemPart> parts;
};

// The first s-tuple of parts breaking either clause, with a description.
std::optional<json> system_violation(const SystemSST& u);

struct PartReduction {
    Mask s = 0;
    std::size_t before = 0, after = 0;
    Rational size_bound;  // (1 - 2αk)|F_S|
    std::vector<std::pair<int, bool>> shadow_checks;
};

struct ReduceResult {
    SystemSST system;
    Rational alpha, tau;
    std::vector<PartReduction> parts;
    std::optional<json> clause_violation;
    bool shadow_ok = true;
    bool hypotheses_met = false;  // r > max{2¹⁵⌈log₂k⌉, 2q} s α^{1-t} τ^t
};

ReduceResult reduce_intersections(const Decomposition& d, const Domain& a, int s, int t, const Rational& alpha);

struct PhiValue {
    Real value;
    bool exact = false;
    std::string source;
};
// φ(s,t) from the exhaustive search when it is cheap, else (2¹⁴ s log₂ t)^t.
PhiValue phi_value(int s, int t);

struct ClusterStep {
    Mask h = 0;
    std::vector<Mask> members;  // S^i_H
    SimplifyResult simplification;
};

struct ClusterResult {
    Rational lambda;
    std::vector<ClusterStep> steps;
    std::vector<Mask> leftover;  // S^m
    SetFamily final_cover;       // smallest t-uniform cover of S^m
    SetFamily t_hat;
    PhiValue phi;
    BigInt shadow_size;  // |∂_{≤q} A|
    Real count_rhs;
    std::optional<bool> count_holds;
    BigInt remainder;  // Σ |U_S| over S outside S[T̂]
    Real remainder_rhs;
    std::optional<bool> remainder_holds;
    bool hypotheses_met = false;
};

ClusterResult cluster_system(const SystemSST& u, const Domain& a, const Rational& lambda);

struct PeelResult {
    int k = 0, s = 0, t = 0;
    Rational alpha;                       // sk
    std::vector<SetFamily> stages;        // T_0 .. T_{k-2t-1}
    std::vector<SetFamily> u_layers;      // U_1 .. U_{k-2t-1}
    std::vector<SetFamily> w_layers;      // residual W_0 .. W_{k-2t-2}
    std::vector<Extraction> extractions;
    SetFamily result;
};

// High-uniformity peeling: layer i removes, while possible, the star of the
// maximal T with |T| ≤ k-i-1 and W_i(T) nonempty and sk-spread. T goes to
// T_{i+1} when |T| > 2t-1 and to U_{i+1} otherwise; T_i^{(≤k-i-1)} carries
// over. The union of all T_i and U_i is checked for s-sunflowers with core
// t-1.
PeelResult peel_high_uniformity(const SetFamily& f, int s, int t);

struct DeltaFilter {
    int p = 0, t = 0;
    SetFamily kept, removed;
    int rounds = 0;
    std::vector<std::pair<Mask, Mask>> kernel;  // (F, T(F)) for F in kept
    BigInt reference;                           // C(n, k-t-1)
};

// Greatest subfamily where every F has a t-set T ⊆ F with each E, T ⊆ E ⊊ F,
// the core of a p-petal sunflower. T(F) is the lexicographically least such
// T (on sorted element lists).
DeltaFilter delta_filter(const SetFamily& f, int p, int t);

// A sunflower with s petals (any core) among the kernels {T(F) : F \ T(F) = D}
// of one group D.
std::optional<SunflowerWitness> delta_group_sunflower(const DeltaFilter& d, int s);

json to_json(const Decomposition& d);
json to_json(const SimplifyResult& r);
json to_json(const CoverResult& r);
json to_json(const SystemSST& u);
json to_json(const ReduceResult& r);
json to_json(const ClusterResult& r);
json to_json(const PeelResult& r);
json to_json(const DeltaFilter& d);

}  // namespace sforge
