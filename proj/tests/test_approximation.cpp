#include <map>

#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "sforge/approximation.hpp"
#include "sforge/errors.hpp"
#include "sforge/spread.hpp"

using namespace sforge;

namespace {

Mask m_of(std::initializer_list<int> elems) {
    Mask m = 0;
    for (int e : elems) m |= bit(e - 1);
    return m;
}

// {T0 ∪ {x}} for every x outside T0 in [n].
SetFamily star(int n, Mask t0) {
    std::vector<Mask> out;
    for (int x = 0; x < n; ++x)
        if (!(t0 & bit(x))) out.push_back(t0 | bit(x));
    return SetFamily(n, out);
}

// Every k-subset of [n] containing `core`.
SetFamily full_star(int n, int k, Mask core) {
    std::vector<Mask> out;
    for_each_ksubset(full_mask(n) & ~core, k - popcount(core), [&](Mask x) { out.push_back(core | x); });
    return SetFamily(n, out);
}

// μ(F(X)) ≥ τ^{|X|} μ(F) for the ambient Binomial(n, k), by plain counting.
bool heavy(const SetFamily& f, int n, int k, Mask x, const Rational& tau) {
    std::size_t fx = 0;
    for (Mask m : f)
        if (is_subset(x, m)) ++fx;
    const int sz = popcount(x);
    const Rational lhs = ratio(BigInt(static_cast<unsigned long>(fx)), binomial(n - sz, k - sz));
    const Rational rhs = pow(tau, sz) * ratio(BigInt(static_cast<unsigned long>(f.size())), binomial(n, k));
    return lhs >= rhs;
}

}  // namespace

TEST_CASE("spread_approximation on stars") {
    const Domain a = Domain::binomial(8, 3);
    const SetFamily f = star(8, m_of({1, 2}));
    auto d = spread_approximation(f, a, Rational(3), 2);
    REQUIRE(d.parts.size() == 1);
    CHECK(d.parts[0].s == m_of({1, 2}));
    CHECK(d.parts[0].link.size() == 6);
    CHECK(d.remainder.empty());
    CHECK(partition_exact(d, f));

    // Two overlapping stars: one part at τ = 4, two parts in (2.105, 2.160].
    std::vector<Mask> two(f.begin(), f.end());
    for (Mask m : star(8, m_of({3, 4}))) two.push_back(m);
    const SetFamily g(8, two);
    REQUIRE(g.size() == 12);
    auto one = spread_approximation(g, a, Rational(4), 2);
    REQUIRE(one.parts.size() == 1);
    CHECK(one.parts[0].s == 0);
    CHECK(one.parts[0].link == g);
    auto split = spread_approximation(g, a, Rational(43, 20), 2);
    REQUIRE(split.parts.size() == 2);
    CHECK(popcount(split.parts[0].s) == 2);
    CHECK(popcount(split.parts[1].s) <= 2);
    CHECK(partition_exact(split, g));
}

TEST_CASE("spread_approximation of the whole domain is a single part") {
    const Domain a = Domain::binomial(6, 2);
    const SetFamily& all = a.family();
    auto d = spread_approximation(all, a, Rational(2), 1);
    REQUIRE(d.parts.size() == 1);
    CHECK(d.parts[0].s == 0);
    CHECK(d.remainder.empty());
}

TEST_CASE("spread_approximation: a measure floor stops early") {
    const Domain a = Domain::binomial(8, 3);
    const SetFamily f = star(8, m_of({1, 2}));
    auto d = spread_approximation(f, a, Rational(3), 2, Rational(2));
    CHECK(d.parts.empty());
    CHECK(d.remainder == f);
    REQUIRE(d.stop_set.has_value());
    CHECK(*d.stop_set == m_of({1, 2}));
    CHECK(d.remainder_bound_exact == Rational(2) * Rational(56));
}

TEST_CASE("spread_approximation properties on random families") {
    Rng rng(11);
    const std::vector<Rational> taus{Rational(3, 2), Rational(2), Rational(3), Rational(5)};
    for (int iter = 0; iter < 60; ++iter) {
        const int n = 5 + static_cast<int>(rng.below(3));
        const int k = 2 + static_cast<int>(rng.below(2));
        const Domain a = Domain::binomial(n, k);
        const SetFamily f = gen::random_uniform_family(rng, n, k);
        const Rational tau = taus[rng.below(taus.size())];
        const int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        auto d = spread_approximation(f, a, tau, q);
        CHECK(partition_exact(d, f));
        for (const auto& part : d.parts) {
            CHECK(popcount(part.s) <= q);
            CHECK(check_tau_homogeneous(part.link, a, tau, part.s).ok);
        }
        const Rational bound = pow(tau, -(q + 1)) * Rational(binomial(n, k));
        CHECK(Rational(static_cast<unsigned long>(d.remainder.size())) <= bound);
        if (!d.remainder.empty()) {
            // Some set of size > q is heavy for the remainder.
            bool found = false;
            for (int sz = q + 1; sz <= k && !found; ++sz)
                for_each_ksubset(full_mask(n), sz, [&](Mask x) {
                    if (!found && heavy(d.remainder, n, k, x, tau)) found = true;
                });
            CHECK(found);
        }
    }
}

TEST_CASE("spread_peeling parts are spread") {
    Rng rng(12);
    for (int iter = 0; iter < 40; ++iter) {
        const int n = 6, k = 3;
        const SetFamily f = gen::random_uniform_family(rng, n, k);
        const Rational r(2);
        auto d = spread_peeling(f, r, 1);
        CHECK(partition_exact(d, f));
        for (const auto& part : d.parts) {
            CHECK(popcount(part.s) <= 1);
            CHECK(check_spread(part.link, r).ok);
        }
        if (!d.remainder.empty()) CHECK(popcount(*d.stop_set) > 1);
    }
}

TEST_CASE("simplify passes a t-uniform family through") {
    const Domain a = Domain::binomial(6, 3);
    const SetFamily s = SetFamily::of(6, {{1, 2}, {1, 3}});
    auto r = simplify(s, a, 3, 2, Rational(1, 2));
    CHECK(r.q == 2);
    CHECK(r.result == s);
    CHECK(r.layers.empty());
    CHECK(r.uncovered == 0);
}

TEST_CASE("simplify collapses a dense star with a small alpha") {
    const Domain a = Domain::binomial(8, 3);
    const SetFamily f = star(8, m_of({1, 2}));
    SimplifyOptions opt;
    opt.alpha = Rational(3, 2);
    auto r = simplify(f, a, 3, 2, Rational(1, 2), opt);
    REQUIRE(r.extractions.size() == 1);
    CHECK(r.extractions[0].t == m_of({1, 2}));
    CHECK(r.result == SetFamily::of(8, {{1, 2}}));
    CHECK(r.layers.size() == 1);
    CHECK(r.layers[0].empty());
    CHECK_FALSE(r.consistency_applies);
    CHECK(r.uncovered == 0);

    // With the default α every 3-set is light relative to α³, nothing is taken.
    auto plain = simplify(f, a, 3, 2, Rational(1, 2));
    CHECK(plain.extractions.empty());
    CHECK(plain.result.empty());
    CHECK(plain.layers[0] == f);
    CHECK(plain.consistency_applies);
}

TEST_CASE("simplify rejects a small-core sunflower") {
    const Domain a = Domain::binomial(8, 3);
    const SetFamily bad = SetFamily::of(8, {{1, 2}, {3, 4}, {5, 6}});
    CHECK_THROWS_AS(simplify(bad, a, 3, 2, Rational(1, 2)), PreconditionError);
    SimplifyOptions opt;
    opt.check_input = false;
    auto r = simplify(bad, a, 3, 2, Rational(1, 2), opt);
    CHECK(r.input_violation.has_value());
}

TEST_CASE("simplify properties with alpha = sq") {
    Rng rng(21);
    const int s = 3, t = 2, n = 7;
    const Domain a = Domain::binomial(n, 4);
    int nontrivial = 0;
    for (int iter = 0; iter < 40; ++iter) {
        // Greedy sample of 3- and 4-sets avoiding 3-sunflowers with core ≤ 1.
        std::vector<Mask> ms;
        for (int tries = 0; tries < 30; ++tries) {
            Mask m = gen::random_ksubset(rng, full_mask(n), 3 + static_cast<int>(rng.below(2)));
            ms.push_back(m);
            if (find_sunflower(SetFamily(n, ms), CorePredicate::at_most(s, t - 1, true))) ms.pop_back();
        }
        const SetFamily f(n, ms);
        SimplifyOptions opt;
        opt.alpha = Rational(s * 4);
        opt.q = 4;
        auto r = simplify(f, a, s, t, Rational(1, 2), opt);
        CHECK(r.consistency_applies);
        if (!r.result.empty()) CHECK(r.result.uniformity() == t);
        CHECK(is_sunflower_free(r.result, CorePredicate::any(s)));
        for (const auto& b : r.layer_bounds) CHECK(b.holds == true);
        // At desk scale α = sq leaves nothing to extract; α = 2 does extract.
        // Either way each input set contains a result set or a layer leftover.
        opt.alpha = Rational(2);
        auto small = simplify(f, a, s, t, Rational(1, 2), opt);
        if (!small.extractions.empty()) ++nontrivial;
        for (const auto* run : {&r, &small})
            for (Mask m : f) {
                bool ok = false;
                for (Mask x : run->result) ok = ok || is_subset(x, m);
                for (const auto& w : run->layers)
                    for (Mask x : w) ok = ok || is_subset(x, m);
                CHECK(ok);
            }
    }
    CHECK(nontrivial > 5);
}

TEST_CASE("down_closed_cover recovers a planted cover") {
    // F = {F : F ∩ {1,2} is exactly {1} or {2}} in Binomial(16, 2).
    const int n = 16;
    const Domain a = Domain::binomial(n, 2);
    std::vector<Mask> ms;
    for (int x = 3; x <= n; ++x) {
        ms.push_back(m_of({1, x}));
        ms.push_back(m_of({2, x}));
    }
    const SetFamily f(n, ms);
    auto c = down_closed_cover(f, a, 3, 1, std::nullopt, Rational(3));
    CHECK(c.w == 6);
    CHECK_FALSE(c.peeled);
    CHECK(c.result == SetFamily::of(n, {{1}, {2}}));
    CHECK(c.residue.empty());
    CHECK(c.covered == f);
    CHECK(c.result_sunflower_free);
    CHECK_FALSE(c.hypotheses_met);
}

TEST_CASE("down_closed_cover edge cases") {
    const Domain a = Domain::binomial(8, 3);
    auto empty = down_closed_cover(SetFamily(8), a, 3, 2);
    CHECK(empty.result.empty());
    CHECK(empty.residue.empty());

    // A star over {1,2}: peeled at w = 2 into the single part ({1,2}, link).
    const SetFamily f = star(8, m_of({1, 2}));
    auto c = down_closed_cover(f, a, 3, 2, 2, Rational(3, 2));
    CHECK(c.peeled);
    REQUIRE(c.peeling.has_value());
    CHECK(c.skeleton == SetFamily::of(8, {{1, 2}}));
    CHECK(c.result == c.skeleton);
    CHECK(c.residue.empty());

    const SetFamily bad = SetFamily::of(8, {{1, 2, 3}, {4, 5, 6}, {1, 7, 8}});
    CHECK_THROWS_AS(down_closed_cover(bad, a, 2, 1), PreconditionError);
}

TEST_CASE("system_violation detects both clauses") {
    SystemSST u;
    u.s = 2;
    u.t = 2;
    u.parts = {{m_of({1, 2, 3}), SetFamily::of(9, {{6, 7}})}, {m_of({1, 4, 5}), SetFamily::of(9, {{8, 9}})}};
    auto v = system_violation(u);
    REQUIRE(v.has_value());
    CHECK((*v)["clause"] == 1);

    u.parts = {{m_of({1, 2}), SetFamily::of(9, {{5, 6}})}, {m_of({3, 4}), SetFamily::of(9, {{5, 7}})}};
    v = system_violation(u);
    REQUIRE(v.has_value());
    CHECK((*v)["clause"] == 2);

    u.parts[1].b = SetFamily::of(9, {{7, 8}});
    CHECK_FALSE(system_violation(u).has_value());
}

TEST_CASE("system_violation agrees with a direct check") {
    Rng rng(31);
    for (int iter = 0; iter < 60; ++iter) {
        const int n = 8, s = 2 + static_cast<int>(rng.below(2)), t = 2;
        SystemSST u;
        u.s = s;
        u.t = t;
        const int parts = 2 + static_cast<int>(rng.below(3));
        std::map<Mask, bool> seen;
        for (int i = 0; i < parts; ++i) {
            Mask sm = gen::random_ksubset(rng, full_mask(n), 2);
            if (seen[sm]) continue;
            seen[sm] = true;
            std::vector<Mask> b;
            for (int j = 0; j < 2; ++j) b.push_back(gen::random_ksubset(rng, full_mask(n) & ~sm, 2));
            u.parts.push_back({sm, SetFamily(n, b)});
        }
        bool bad = false;
        const int m = static_cast<int>(u.parts.size());
        std::vector<int> idx(s);
        if (m >= s) {
            for (int i = 0; i < s; ++i) idx[i] = i;
            while (!bad) {
                std::vector<oracle::ESet> sets;
                for (int i : idx) sets.push_back(oracle::to_eset(u.parts[i].s));
                oracle::ESet core;
                if (oracle::is_sunflower(sets, &core)) {
                    const int c = static_cast<int>(core.size());
                    if (c == t - 1) bad = true;
                    if (c <= t - 2) {
                        // every choice of members, brute force over the product
                        std::vector<std::size_t> pick(s, 0);
                        while (!bad) {
                            oracle::ESet inter = oracle::to_eset(u.parts[idx[0]].b[pick[0]]);
                            for (int i = 1; i < s; ++i) inter = oracle::inter(inter, oracle::to_eset(u.parts[idx[i]].b[pick[i]]));
                            if (static_cast<int>(inter.size()) > t - c - 2) bad = true;
                            int j = 0;
                            while (j < s && ++pick[j] == u.parts[idx[j]].b.size()) pick[j++] = 0;
                            if (j == s) break;
                        }
                    }
                }
                int i = s - 1;
                while (i >= 0 && idx[i] == m - s + i) --i;
                if (i < 0) break;
                ++idx[i];
                for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
        CHECK(system_violation(u).has_value() == bad);
    }
}

TEST_CASE("reduce_intersections on a single star part") {
    const Domain a = Domain::binomial(8, 3);
    const SetFamily f = star(8, m_of({1, 2}));
    auto d = spread_approximation(f, a, Rational(3), 2);
    auto r = reduce_intersections(d, a, 3, 2, Rational(1, 12));
    REQUIRE(r.parts.size() == 1);
    CHECK(r.parts[0].s == m_of({1, 2}));
    CHECK(r.parts[0].before == 6);
    CHECK(Rational(static_cast<unsigned long>(r.parts[0].after)) >= Rational(1, 2) * 6);
    CHECK(r.parts[0].shadow_checks.empty());
    CHECK_FALSE(r.clause_violation.has_value());
    CHECK(r.system.parts.size() == 1);

    CHECK_THROWS_AS(reduce_intersections(d, a, 3, 2, Rational(1, 11)), PreconditionError);
}

TEST_CASE("reduce_intersections on random decompositions") {
    Rng rng(41);
    const Domain a = Domain::binomial(7, 3);
    int checked = 0;
    for (int iter = 0; iter < 60; ++iter) {
        const SetFamily f = gen::random_uniform_family(rng, 7, 3);
        if (find_sunflower(f, CorePredicate::exact(3, 1))) continue;
        auto d = spread_approximation(f, a, Rational(2), 1);
        auto r = reduce_intersections(d, a, 3, 2, Rational(1, 12));
        REQUIRE(r.parts.size() == d.parts.size());
        for (std::size_t i = 0; i < r.parts.size(); ++i) {
            CHECK(r.system.parts[i].s == d.parts[i].s);
            CHECK(is_subfamily(r.system.parts[i].b, d.parts[i].link));
            CHECK(Rational(static_cast<unsigned long>(r.parts[i].after)) >= r.parts[i].size_bound);
        }
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("cluster_system with one part covers it by its first t-subset") {
    const Domain a = Domain::binomial(8, 4);
    SystemSST u;
    u.s = 2;
    u.t = 1;
    u.parts = {{m_of({1, 2}), SetFamily::of(8, {{3, 4}})}};
    auto c = cluster_system(u, a, Rational(1));
    CHECK(c.steps.empty());
    CHECK(c.leftover == std::vector<Mask>{m_of({1, 2})});
    CHECK(c.final_cover == SetFamily::of(8, {{1}}));
    CHECK(c.t_hat == c.final_cover);
    CHECK(c.phi.exact);
    CHECK(c.count_holds == true);
    CHECK(c.remainder == 0);
}

TEST_CASE("cluster_system groups parts sharing a shadow element") {
    const Domain a = Domain::binomial(10, 5);
    std::vector<Mask> pairs;
    for_each_ksubset(m_of({6, 7, 8, 9, 10}), 2, [&](Mask x) { pairs.push_back(x); });
    const SetFamily b(10, pairs);
    SystemSST u;
    u.s = 3;
    u.t = 2;
    u.parts = {{m_of({1, 2, 3}), b}, {m_of({1, 2, 4}), b}, {m_of({1, 2, 5}), b}};
    auto c = cluster_system(u, a, Rational(1, 2));
    REQUIRE(c.steps.size() == 1);
    CHECK(c.steps[0].h == m_of({6}));
    CHECK(c.steps[0].members.size() == 3);
    CHECK(c.leftover.empty());
    CHECK(c.t_hat.empty());
    CHECK(c.remainder == 30);

    CHECK_THROWS_AS(cluster_system(u, a, Rational(1)), PreconditionError);
}

TEST_CASE("peel_high_uniformity") {
    // k = 2t+1: nothing to do.
    const SetFamily f3 = full_star(6, 3, m_of({1}));
    auto p = peel_high_uniformity(f3, 2, 1);
    CHECK(p.stages.size() == 1);
    CHECK(p.result == f3);

    // A sunflower over {1,2,3} with 8 petals is 8-spread: T = {1,2,3} is taken.
    std::vector<Mask> ms;
    for (int x = 4; x <= 11; ++x) ms.push_back(m_of({1, 2, 3, x}));
    const SetFamily f(11, ms);
    auto q = peel_high_uniformity(f, 2, 1);
    REQUIRE(q.extractions.size() == 1);
    CHECK(q.extractions[0].t == m_of({1, 2, 3}));
    CHECK(q.result == SetFamily::of(11, {{1, 2, 3}}));
    CHECK(q.w_layers[0].empty());

    // One petal fewer: the link is no longer 8-spread and everything stays behind.
    ms.pop_back();
    auto r = peel_high_uniformity(SetFamily(11, ms), 2, 1);
    CHECK(r.extractions.empty());
    CHECK(r.result.empty());

    CHECK_THROWS_AS(peel_high_uniformity(SetFamily::of(8, {{1, 2, 3}, {4, 5, 6}}), 2, 1), PreconditionError);
    CHECK_THROWS_AS(peel_high_uniformity(SetFamily::of(8, {{1, 2}}), 2, 1), PreconditionError);
}

TEST_CASE("delta_filter examples") {
    auto e = delta_filter(SetFamily(6), 2, 1);
    CHECK(e.kept.empty());

    auto one = delta_filter(SetFamily::of(6, {{1, 2, 3}}), 2, 1);
    CHECK(one.kept.empty());
    CHECK(one.removed.size() == 1);

    // All 2-sets of [6]: every {x} is the core of a 2-petal sunflower.
    const SetFamily pairs = full_star(6, 2, 0);
    auto d = delta_filter(pairs, 2, 1);
    CHECK(d.kept == pairs);
    CHECK(d.rounds == 0);
    for (const auto& [m, x] : d.kernel) CHECK(x == bit(lowest_element(m)));

    // Full star over {1} in Binomial(13,3) with p = sk = 6: kept whole.
    const SetFamily fs = full_star(13, 3, m_of({1}));
    auto g = delta_filter(fs, 6, 1);
    CHECK(g.kept == fs);
    for (const auto& [m, x] : g.kernel) CHECK(x == m_of({1}));
    CHECK_FALSE(delta_group_sunflower(g, 2).has_value());
    CHECK(g.reference == binomial(13, 1));
}

TEST_CASE("delta_filter is an idempotent fixed point") {
    Rng rng(51);
    for (int iter = 0; iter < 40; ++iter) {
        const int n = 7, k = 2 + static_cast<int>(rng.below(2));
        const SetFamily f = gen::random_uniform_family(rng, n, k);
        const int p = 2, t = 1;
        auto d = delta_filter(f, p, t);
        CHECK(family_union(d.kept, d.removed) == f);
        auto again = delta_filter(d.kept, p, t);
        CHECK(again.kept == d.kept);
        CHECK(again.rounds == 0);
        // Independent check of the defining property on the kept family.
        const auto kept = oracle::to_efam(d.kept);
        for (const auto& [m, x] : d.kernel) {
            const oracle::ESet fm = oracle::to_eset(m), tx = oracle::to_eset(x);
            CHECK(tx.size() == static_cast<std::size_t>(t));
            CHECK(oracle::subset(tx, fm));
            for_each_subset(m & ~x, [&](Mask dd) {
                if (dd == (m & ~x)) return;
                const oracle::ESet core = oracle::to_eset(x | dd);
                std::vector<oracle::ESet> petals;
                for (const auto& g : kept)
                    if (oracle::subset(core, g)) petals.push_back(oracle::minus(g, core));
                bool two = false;
                for (std::size_t i = 0; i < petals.size() && !two; ++i)
                    for (std::size_t j = i + 1; j < petals.size() && !two; ++j)
                        two = oracle::inter(petals[i], petals[j]).empty();
                CHECK(two);
            });
        }
    }
}
