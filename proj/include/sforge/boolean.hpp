#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "sforge/family.hpp"
#include "sforge/numeric.hpp"

namespace sforge {

// μ_p(F) = Σ p^{|F|} (1-p)^{n-|F|}, summed by member size.
Rational biased_measure(const SetFamily& f, const Rational& p);

// μ_p^{-B}(F(A,B)): the restriction measured on the cube over [n] \ B.
Rational restricted_measure(const SetFamily& f, const Rational& p, Mask a, Mask b);

struct GlobalRestriction {
    Mask a = 0, b = 0;
    Rational value;  // τ^{-|B|} μ_p^{-B}(F(A,B))
};

struct GlobalnessVerdict {
    Rational p, tau;
    Rational measure;  // μ_p(F)
    bool ok = true;
    // (A, B) with μ_p^{-B}(F(A,B)) > τ^{|B|} μ_p(F); the maximizer below.
    std::optional<std::pair<Mask, Mask>> violation;
    GlobalRestriction best;
    bool collapse_applies = false;  // 1/(1-p) < τ, so best has A = B
};

// Exhaustive over all 3^n pairs A ⊆ B ⊆ [n] (n ≤ 16). Ties in the maximizer
// go to smaller |B|, then smaller B, then larger A, then smaller A.
GlobalnessVerdict check_global(const SetFamily& f, const Rational& p, const Rational& tau);
GlobalRestriction max_global_restriction(const SetFamily& f, const Rational& p, const Rational& tau);
// Same, over links A = B only.
GlobalRestriction max_link_restriction(const SetFamily& f, const Rational& p, const Rational& tau);

// (T_ρ 1_F)(x) for every x ⊆ [n], indexed by mask (n ≤ 16). Per coordinate:
// keep with probability ρ + (1-ρ)·μ_p(value), else flip.
std::vector<Rational> noise_operator(const SetFamily& f, const Rational& p, const Rational& rho);

// Stab_ρ(1_F) = E_{x~μ_p} 1_F(x) (T_ρ 1_F)(x).
Rational stability(const SetFamily& f, const Rational& p, const Rational& rho);

struct SharpThresholdReport {
    Rational p, p_tilde, rho;
    Rational mu_p, mu_tilde, stab, rhs;  // rhs = μ_p² / Stab_ρ
    bool holds = false;
    std::optional<Rational> tau;
    bool lemma_applies = false;  // τ-global, p̃ = 2⁶τp, p < 2⁻⁷/τ
    bool lemma_holds = false;    // μ_p̃ ≥ μ_p^{3/4}, checked as μ_p̃⁴ ≥ μ_p³
};

// Throws InvariantViolation if an applicable inequality fails.
SharpThresholdReport verify_sharp_threshold(const SetFamily& f, const Rational& p, const Rational& p_tilde,
                                            const std::optional<Rational>& tau = std::nullopt);

struct UpgradeRound {
    Mask r = 0;
    Rational p;                       // p_i
    Rational measure_before;          // μ_{p_i}(F_i)
    Rational measure_restricted;      // μ_{p_i}(F_i(R_i))
    Rational measure_after;           // μ_{p_{i+1}}(F_i(R_i))
    bool one_step_holds = false;      // measure_after ≥ measure_restricted^{3/4}
};

struct MeasureUpgrade {
    Mask r = 0;
    Rational p_final;
    Rational initial, final_measure;
    std::vector<UpgradeRound> rounds;
    bool size_bound = false;      // |R| ≤ 4z
    bool measure_bound = false;   // final ≥ initial^{(3/4)^m}
    bool final_global = false;    // F(R) τ-global w.r.t. μ_{p̃}, reported only
};

// Iterated restriction: pick R_i maximizing τ^{-|S|} μ_{p_i}(F_i(S)), pass to
// F_i(R_i) and multiply p by 2⁶τ, m times. Throws InvariantViolation when a
// size or measure bound fails.
MeasureUpgrade measure_upgrade(const SetFamily& f, const Rational& p, const Rational& tau, int z, int m);

struct HypercontractivityVerdict {
    Rational p, tau, rho, q;
    Real lhs;  // ‖T_ρ f‖_q^q
    Real rhs;  // ‖f‖_2^q
    std::optional<bool> holds;             // nullopt when the enclosures overlap
    std::optional<bool> rho_within_bound;  // ρ ≤ ln q / (16 τ q)
};

HypercontractivityVerdict hypercontractivity_check(const SetFamily& f, const Rational& p, const Rational& tau,
                                                   const Rational& rho, const Rational& q);

json to_json(const GlobalnessVerdict& v);
json to_json(const GlobalRestriction& r);
json to_json(const SharpThresholdReport& r);
json to_json(const MeasureUpgrade& u);
json to_json(const HypercontractivityVerdict& v);

}  // namespace sforge
