#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sforge/approximation.hpp"
#include "sforge/domain.hpp"
#include "sforge/family.hpp"
#include "sforge/numeric.hpp"
#include "sforge/sunflower.hpp"

namespace sforge {

// {F ∈ C([n],k) : F ∩ supp T ∈ T}. T must be t-uniform and free of
// s-sunflowers; the result is checked free of s-sunflowers with core t-1 and
// its size against Σ_T C(n - |supp T|, k - t).
SetFamily example_23(int n, int k, int s, int t, const SetFamily& tfam);

struct FStar {
    SetFamily family;
    BigInt covered;           // |A[T*]|
    BigInt gap;               // |A[T*]| - |F*|
    BigInt gap_sum;           // Σ_T Σ_{x ∈ supp \ T} |A(T ∪ {x})|
    Rational gap_spread;      // |T*| |supp T*| A_t / r
    Real gap_phi;             // t φ(s,t)² A_t / r
    std::optional<bool> gap_phi_holds;
    bool spread_applies = false;  // A is (r,t)-spread at its nominal r
    PhiValue phi;
};

// ⋃_{T ∈ T*} A(T, supp T*) ∨ {T}. Asserts no s-sunflower with core ≤ t-1 and
// the gap chain (the spread step only when A is (r,t)-spread).
FStar fstar_family(const Domain& a, const SetFamily& t_star, int s);

struct BoundValue {
    std::string name;
    json params;
    std::optional<Real> value;  // nullopt: involves an unspecified constant
    std::string expression;
    // true/false when decidable; nullopt when a hypothesis involves an
    // unspecified constant or the statement is only conjectured there.
    std::optional<bool> hypotheses_met;
    std::string hypotheses;
    std::optional<PhiValue> phi;
};

// Names: erdos_rado, phi_coloring, ekr, erdos_matching, down_closed_core,
// down_closed_general, main_large_k, main_large_k_derived, main_small_k,
// delta_system, bradac, example23_lower, fstar_gap. Throws
// PreconditionError on an unknown name or a missing parameter.
BoundValue bound_rhs(const std::string& name, const json& params);
const std::vector<std::string>& bound_names();

struct BoundCheck {
    BoundValue bound;
    std::optional<bool> respected;  // optimum ≤ value; nullopt if either is unknown
};

struct InstanceReport {
    std::string domain;
    int s = 0, t = 0;
    CorePredicate pred;
    std::optional<std::size_t> optimum;  // nullopt when the search ran out of budget
    SearchResult search;
    SetFamily t_star;
    std::size_t construction = 0;
    bool construction_valid = false;  // free of pred-sunflowers
    std::vector<BoundCheck> bounds;
    std::vector<std::string> red_flags;
};

// Exhaustive optimum, the F* construction from a largest s-sunflower-free
// T* ⊆ ∂_t A, and every bound that applies to the domain and predicate.
InstanceReport verify_instance(const Domain& a, int s, int t, const CorePredicate& pred, std::uint64_t budget);

json to_json(const BoundValue& b);
json to_json(const FStar& f);
json to_json(const InstanceReport& r);
// One row per bound: domain, s, t, pred, construction, optimum, bound, value,
// hypotheses_met, respected.
std::string to_csv(const InstanceReport& r);

}  // namespace sforge
