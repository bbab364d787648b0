#include "doctest.h"
#include "oracles.hpp"
#include "sforge/boolean.hpp"
#include "sforge/domain.hpp"
#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"

using namespace sforge;

namespace {

SetFamily cube(int n) {
    std::vector<Mask> all;
    for (Mask x = 0; x < (Mask{1} << n); ++x) all.push_back(x);
    return SetFamily(n, all);
}

SetFamily dictator(int n) { return upper_closure(SetFamily::of(n, {{1}})); }

// x with at least `k` of the first `m` coordinates set.
SetFamily threshold_fn(int n, int m, int k) {
    std::vector<Mask> out;
    for (Mask x = 0; x < (Mask{1} << n); ++x)
        if (popcount(x & full_mask(m)) >= k) out.push_back(x);
    return SetFamily(n, out);
}

Rational point_mass(Mask x, int n, const Rational& p) {
    return pow(p, popcount(x)) * pow(Rational(1) - p, n - popcount(x));
}

// Independent reference: μ^{-B}(F(A,B)) by summing masses of cube points.
Rational brute_restricted(const SetFamily& f, const Rational& p, Mask a, Mask b) {
    const int n = f.n();
    Rational out = 0;
    const Mask free = full_mask(n) & ~b;
    for_each_subset(free, [&](Mask y) {
        if (f.contains(y | a)) out += point_mass(y, n - popcount(b), p);
    });
    return out;
}

Rational brute_global_max(const SetFamily& f, const Rational& p, const Rational& tau) {
    Rational best = -1;
    for_each_subset(full_mask(f.n()), [&](Mask b) {
        for_each_subset(b, [&](Mask a) {
            best = std::max(best, Rational(pow(tau, -popcount(b)) * brute_restricted(f, p, a, b)));
        });
    });
    return best;
}

// Direct double sum E_x 1_F(x) Σ_y P(x→y) 1_F(y).
Rational brute_stability(const SetFamily& f, const Rational& p, const Rational& rho) {
    const int n = f.n();
    auto trans = [&](int xi, int yi) -> Rational {
        const Rational resample = yi ? p : Rational(1) - p;
        return (xi == yi ? rho : Rational(0)) + (Rational(1) - rho) * resample;
    };
    Rational total = 0;
    for (Mask x : f) {
        Rational inner = 0;
        for (Mask y : f) {
            Rational pr = 1;
            for (int i = 0; i < n; ++i) pr *= trans(static_cast<int>((x >> i) & 1U), static_cast<int>((y >> i) & 1U));
            inner += pr;
        }
        total += point_mass(x, n, p) * inner;
    }
    return total;
}

}  // namespace

TEST_CASE("biased_measure examples") {
    CHECK(biased_measure(SetFamily::of(2, {{}}), Rational(1, 3)) == Rational(4, 9));
    for (int n = 1; n <= 6; ++n) CHECK(biased_measure(dictator(n), Rational(2, 7)) == Rational(2, 7));
    const auto d42 = Domain::binomial(4, 2);
    CHECK(biased_measure(d42.family(), Rational(1, 2)) == Rational(3, 8));
    CHECK(biased_measure(cube(5), Rational(3, 10)) == 1);
    CHECK_THROWS_AS(biased_measure(cube(2), 0), PreconditionError);
}

TEST_CASE("check_global examples and the collapse to links") {
    CHECK(check_global(cube(4), Rational(1, 3), 1).ok);
    auto point = check_global(SetFamily::of(4, {{1}}), Rational(1, 3), Rational(11, 10));
    CHECK_FALSE(point.ok);
    REQUIRE(point.violation.has_value());
    CHECK(point.violation->second == full_mask(4));
    CHECK(point.violation->first == 0b1);
    CHECK(brute_restricted(SetFamily::of(4, {{1}}), Rational(1, 3), 0b1, 0b1111) == 1);

    auto f = upper_closure(SetFamily::of(5, {{1}, {2}}));
    auto v = check_global(f, Rational(1, 4), 3);
    CHECK(v.best.value == brute_global_max(f, Rational(1, 4), 3));
    CHECK(v.ok == (brute_global_max(f, Rational(1, 4), 3) <= biased_measure(f, Rational(1, 4))));
    CHECK(v.collapse_applies);
    CHECK(v.best.a == v.best.b);

    CHECK(check_global(SetFamily(3), Rational(1, 2), 2).ok);
}

TEST_CASE("property: globalness scan agrees with direct enumeration") {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(4));
        auto f = oracle::random_family(rng, n, 1 + static_cast<int>(rng.below(8)), 0, n);
        if (rng.below(2)) f = upper_closure(f);
        const Rational p = ratio(1 + static_cast<long>(rng.below(5)), 7);
        const Rational tau = ratio(1 + static_cast<long>(rng.below(12)), 3);
        const auto v = check_global(f, p, tau);
        const Rational brute = brute_global_max(f, p, tau);
        CHECK(v.best.value == brute);
        CHECK(pow(tau, -popcount(v.best.b)) * brute_restricted(f, p, v.best.a, v.best.b) == brute);
        CHECK(restricted_measure(f, p, v.best.a, v.best.b) == brute_restricted(f, p, v.best.a, v.best.b));
        CHECK(v.ok == (brute <= biased_measure(f, p)));
        if (v.violation)
            CHECK(brute_restricted(f, p, v.violation->first, v.violation->second) >
                  pow(tau, popcount(v.violation->second)) * v.measure);
        // the maximizing restriction is itself τ-global
        const SetFamily g = restrict(f, v.best.a, v.best.b);
        if (!g.empty() && v.best.b != full_mask(n)) {
            std::vector<Mask> squeezed;
            const auto keep = elements(full_mask(n) & ~v.best.b);
            for (Mask m : g) {
                Mask s = 0;
                for (std::size_t j = 0; j < keep.size(); ++j)
                    if (m & bit(keep[j])) s |= bit(static_cast<int>(j));
                squeezed.push_back(s);
            }
            CHECK(check_global(SetFamily(static_cast<int>(keep.size()), squeezed), p, tau).ok);
        }
        const auto links = max_link_restriction(f, p, tau);
        CHECK(links.a == links.b);
        CHECK(links.value <= v.best.value);
    }
}

TEST_CASE("globalness scan is independent of the thread count") {
    auto f = upper_closure(SetFamily::of(10, {{1, 2}, {3, 4, 5}, {6}, {7, 8, 9, 10}}));
    set_thread_count(1);
    auto a = check_global(f, Rational(1, 5), 3);
    set_thread_count(6);
    auto b = check_global(f, Rational(1, 5), 3);
    set_thread_count(0);
    CHECK(to_json(a) == to_json(b));
}

TEST_CASE("noise operator") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(5));
        auto f = oracle::random_family(rng, n, 1 + static_cast<int>(rng.below(6)), 0, n);
        const Rational p = ratio(1 + static_cast<long>(rng.below(4)), 5);
        const Rational mu = biased_measure(f, p);
        auto t1 = noise_operator(f, p, 1);
        auto t0 = noise_operator(f, p, 0);
        const Rational rho = ratio(static_cast<long>(rng.below(6)), 5);
        auto t = noise_operator(f, p, rho);
        for (Mask x = 0; x < (Mask{1} << n); ++x) {
            CHECK(t1[x] == (f.contains(x) ? 1 : 0));
            CHECK(t0[x] == mu);
            CHECK(t[x] >= 0);
            CHECK(t[x] <= 1);
        }
        CHECK(stability(f, p, rho) == brute_stability(f, p, rho));
        CHECK(stability(f, p, 0) == mu * mu);
    }
    // dictator: Stab_ρ = p (ρ + (1-ρ) p)
    for (const Rational& p : {Rational(1, 8), Rational(1, 3), Rational(3, 4)})
        for (const Rational& rho : {Rational(0), Rational(1, 5), Rational(2, 3), Rational(1)})
            CHECK(stability(dictator(4), p, rho) == p * (rho + (Rational(1) - rho) * p));
    CHECK(stability(cube(3), Rational(1, 3), Rational(1, 2)) == 1);
}

TEST_CASE("stability is nondecreasing in rho") {
    Rng rng(12);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(4));
        auto f = oracle::random_family(rng, n, 1 + static_cast<int>(rng.below(8)), 0, n);
        const Rational p = ratio(1 + static_cast<long>(rng.below(5)), 6);
        Rational prev = -1;
        for (int k = 0; k <= 8; ++k) {
            const Rational s = stability(f, p, ratio(k, 8));
            CHECK(s >= prev);
            prev = s;
        }
    }
}

TEST_CASE("sharp threshold inequality") {
    auto d = verify_sharp_threshold(dictator(5), Rational(1, 8), Rational(1, 4));
    CHECK(d.holds);
    // dictator closed forms: μ_p̃ = p̃, rhs = p² / (p(ρ + (1-ρ)p))
    CHECK(d.mu_tilde == Rational(1, 4));
    CHECK(d.rhs == Rational(1, 8) / (d.rho + (Rational(1) - d.rho) * Rational(1, 8)));

    auto one = verify_sharp_threshold(cube(3), Rational(1, 8), Rational(1, 4));
    CHECK(one.mu_tilde == 1);
    CHECK(one.rhs == 1);

    auto maj = verify_sharp_threshold(threshold_fn(3, 3, 2), Rational(1, 4), Rational(1, 2));
    CHECK(maj.mu_tilde == Rational(1, 2));
    CHECK(maj.mu_p == Rational(5, 32));
    CHECK(maj.holds);

    CHECK_THROWS_AS(verify_sharp_threshold(SetFamily::of(2, {{1}}), Rational(1, 8), Rational(1, 4)),
                    PreconditionError);
    CHECK_THROWS_AS(verify_sharp_threshold(dictator(2), Rational(1, 2), Rational(1, 4)), PreconditionError);

    for (int m = 1; m <= 4; ++m)
        for (int k = 1; k <= m; ++k)
            for (int a = 1; a <= 4; ++a) {
                const Rational p = ratio(a, 12), pt = ratio(a + 3, 12);
                CHECK(verify_sharp_threshold(threshold_fn(5, m, k), p, pt).holds);
            }
}

TEST_CASE("p-biased measure of an upper closure versus uniform density") {
    Rng rng(55);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(6));
        const int k = 1 + static_cast<int>(rng.below(3));
        const auto dom = Domain::binomial(n, k);
        const auto& all = dom.family();
        std::vector<Mask> pick;
        for (Mask m : all)
            if (rng.below(3) == 0) pick.push_back(m);
        if (pick.empty()) pick.push_back(all[0]);
        SetFamily f(n, pick);
        const Rational p = ratio(k, n);
        CHECK(biased_measure(upper_closure(f), p) >= Rational(static_cast<long>(f.size())) / (4 * Rational(binomial(n, k))));
    }
}

TEST_CASE("removing intersections under the biased measure") {
    Rng rng(77);
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 40; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(4));
        auto f = upper_closure(oracle::random_family(rng, n, 1 + static_cast<int>(rng.below(4)), 1, 2));
        const Rational p = ratio(1, 2 + static_cast<long>(rng.below(6)));
        const Rational tau = ratio(2 + static_cast<long>(rng.below(8)), 1);
        if (!check_global(f, p, tau).ok) continue;
        const Mask x = rng.below(Mask{1} << n);
        const Rational loss = popcount(x) * p * tau;
        if (loss >= 1) continue;
        ++checked;
        // F(∅,X) viewed on the full cube [n]
        std::vector<Mask> g;
        for (Mask m : f)
            if (!(m & x)) g.push_back(m);
        const SetFamily gf(n, g);
        CHECK(biased_measure(gf, p) >= (Rational(1) - loss) * biased_measure(f, p));
        if (!gf.empty()) CHECK(check_global(gf, p, tau / (Rational(1) - loss)).ok);
    }
    CHECK(checked >= 10);
}

TEST_CASE("measure upgrade") {
    // full cube: nothing to restrict, measure stays 1
    auto full = measure_upgrade(cube(4), Rational(1, 1024), 2, 0, 1);
    CHECK(full.r == 0);
    CHECK(full.final_measure == 1);

    // union of singletons on [16] at p = 1/512, z = 6
    auto f = upper_closure(Domain::binomial(16, 1).family());
    auto u = measure_upgrade(f, Rational(1, 512), 2, 6, 1);
    CHECK(u.size_bound);
    CHECK(u.measure_bound);
    CHECK(u.p_final == Rational(1, 4));
    for (const auto& r : u.rounds) CHECK(r.one_step_holds);

    auto two = measure_upgrade(upper_closure(Domain::binomial(8, 1).family()), Rational(1, 1 << 16), 2, 14, 2);
    CHECK(two.size_bound);
    CHECK(two.measure_bound);
    CHECK(two.rounds.size() == 2);

    // the dictator at p = 1/512 has measure 1/512 < 2^{-1}
    CHECK_THROWS_AS(measure_upgrade(dictator(4), Rational(1, 512), 2, 1, 1), PreconditionError);
    CHECK_THROWS_AS(measure_upgrade(cube(3), Rational(1, 100), 2, 0, 1), PreconditionError);
    CHECK_THROWS_AS(measure_upgrade(SetFamily::of(3, {{1}}), Rational(1, 1024), 2, 20, 1), PreconditionError);
    CHECK_THROWS_AS(measure_upgrade(cube(3), Rational(1, 1024), 1, 0, 1), PreconditionError);
}

TEST_CASE("global hypercontractivity") {
    auto one = hypercontractivity_check(cube(3), Rational(1, 3), 1, Rational(1, 100), 4);
    CHECK(*one.holds);
    CHECK(one.lhs.compare(Rational(1)) == 0);
    auto zero = hypercontractivity_check(SetFamily(3), Rational(1, 3), 1, Rational(1, 100), 4);
    CHECK(*zero.holds);
    CHECK(zero.lhs.compare(Rational(0)) == 0);

    // dictator at p = 1/4 is 4-global; ln 4 / 256 ≈ 0.005415
    auto d = hypercontractivity_check(dictator(4), Rational(1, 4), 4, Rational(1, 200), 4);
    CHECK(*d.rho_within_bound);
    CHECK(*d.holds);
    auto frac = hypercontractivity_check(dictator(4), Rational(1, 4), 4, Rational(1, 200), Rational(7, 2));
    REQUIRE(frac.holds.has_value());
    CHECK(*frac.holds);
    auto too_far = hypercontractivity_check(dictator(4), Rational(1, 4), 4, Rational(1, 100), 4);
    CHECK_FALSE(*too_far.rho_within_bound);

    CHECK_THROWS_AS(hypercontractivity_check(dictator(4), Rational(1, 4), 2, Rational(1, 200), 4), PreconditionError);
    CHECK_THROWS_AS(hypercontractivity_check(dictator(4), Rational(1, 4), 4, Rational(1, 200), 2), PreconditionError);
}
