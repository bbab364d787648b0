#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sforge/family.hpp"
#include "sforge/numeric.hpp"

namespace sforge {

enum class DomainKind { Binomial, Sequences, KPartiteProduct, Permutations, ComplexLayer };

// Ambient k-uniform family. Members are materialized on demand; link counts
// use closed forms where they exist.
class Domain {
public:
    static Domain binomial(int n, int k);
    // [n]^k, coordinate i occupies bits i*n .. i*n+n-1.
    static Domain sequences(int n, int k);
    // Product of C([n], k_b) over w disjoint blocks of size n.
    static Domain kpartite(int n, std::vector<int> part_sizes);
    // Permutation sigma encoded as {(i, sigma(i))} on [n]^2, bit i*n + sigma(i).
    static Domain permutations(int n);
    // k-th layer of the complex generated by the given maximal faces.
    static Domain complex_layer(const SetFamily& maximal_faces, int k);
    // Arbitrary k-uniform family used as an ambient domain (no symmetry).
    static Domain explicit_family(const SetFamily& members);

    static Domain from_json(const json& j);
    json to_json() const;
    std::string describe() const;

    DomainKind kind() const { return kind_; }
    int k() const { return k_; }
    int ground_n() const { return ground_n_; }
    BigInt size() const;

    // Materialized member list (capacity error beyond 2e6 members).
    const SetFamily& family() const;
    // |A(X)| for every X below a member.
    const SubsetCounts& counts() const;

    // |A(T)|; throws if T is not in the shadow.
    BigInt link_count(Mask t) const;
    // |A(T)| without the shadow check (0 when T is not below a member).
    BigInt link_count_or_zero(Mask t) const;

    // A_t and a maximizing T (smallest canonical mask among maximizers).
    std::pair<Mask, BigInt> max_link(int t) const;

    // Blocks of interchangeable elements for symmetry breaking; members are
    // exactly the sets with a fixed number of elements in each block. Empty
    // when no symmetry is declared.
    const std::vector<Mask>& symmetry_blocks() const { return blocks_; }

    // Nominal spreadness parameter for the kind (n/k, n, min n/k_b, n/4, rank/k).
    Rational nominal_r() const;

    // The ambient family restricted to its link at S, as an explicit domain.
    Domain link_domain(Mask s) const;

    const std::vector<int>& params() const { return params_; }

private:
    DomainKind kind_ = DomainKind::Binomial;
    int k_ = 0;
    int ground_n_ = 1;
    std::vector<int> params_;
    std::vector<Mask> blocks_;
    std::optional<SetFamily> faces_;
    bool explicit_ = false;
    struct Cache;
    std::shared_ptr<Cache> cache_;

    void build_members() const;
};

struct SpreadnessReport {
    Rational r;
    int t = 0;
    bool ok = true;
    std::optional<std::pair<Mask, Mask>> violation;  // (T, S)
    BigInt link_size, restricted_size;                // |A(T)|, |A(T)(S)| at the violation
};

SpreadnessReport check_rt_spread(const Domain& a, const Rational& r, int t);

struct AssumptionVerdict {
    bool ok = true;
    std::string detail;
    json witness;
};

struct AssumptionsReport {
    int q = 0, t = 1;
    Rational eta, mu, r;
    AssumptionVerdict a1, a2, a3, a4;
    bool all_ok() const { return a1.ok && a2.ok && a3.ok && a4.ok; }
};

// t is the sunflower parameter used by the a2-a4 checks (link size, regularity, shadows).
AssumptionsReport check_assumptions(const Domain& a, int q, const Rational& eta, const Rational& mu,
                                    const Rational& r, int t, int random_subfamilies = 100,
                                    std::uint64_t seed = 0);

// Regularity identity μ(F) = E_H μ(F(H)), H uniform in ∂_h A(S), for F ⊆ A(S).
bool regularity_identity_holds(const Domain& a, Mask s, const SetFamily& f, int h);

struct HomogeneityVerdict {
    Rational tau;
    bool ok = true;
    Mask worst = 0;        // X maximizing (|F(X)|/|A(X)|) / (tau^|X| |F|/|A|)
    Rational worst_ratio;  // that ratio (≤ 1 iff homogeneous)
};

// F ⊆ A(S) checked against the ambient link A(S); S = 0 for the domain itself.
HomogeneityVerdict check_tau_homogeneous(const SetFamily& f, const Domain& a, const Rational& tau,
                                         Mask s = 0);

// Largest S with mu(F(S)) >= tau^|S| mu(F) (smallest mask on ties).
Mask max_homogeneous_restriction(const SetFamily& f, const Domain& a, const Rational& tau, Mask s = 0);

struct HomogeneousSubfamily {
    SetFamily g;
    SetFamily sparse;  // the family P of sparse restrictions
    Rational size_bound;
};
HomogeneousSubfamily homogeneous_subfamily(const SetFamily& f, const Domain& a, const Rational& tau,
                                           const Rational& alpha, int t, Mask s = 0);

// mu(F) = |F| / |A(S)| relative to the link at S.
Rational relative_measure(const SetFamily& f, const Domain& a, Mask s = 0);

json to_json(const SpreadnessReport& r);
json to_json(const AssumptionsReport& r);
json to_json(const HomogeneityVerdict& v);

}  // namespace sforge
