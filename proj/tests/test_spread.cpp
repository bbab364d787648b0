#include <cmath>
#include <functional>

#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "sforge/domain.hpp"
#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"
#include "sforge/spread.hpp"
#include "sforge/sunflower.hpp"

using namespace sforge;

namespace {

SetFamily all_ksets(int n, int k) { return Domain::binomial(n, k).family(); }

// Brute maximal spread restriction over every X ⊆ [n].
Mask brute_max_spread(const SetFamily& f, const Rational& r) {
    Mask best = 0;
    for (Mask x = 0; x < (Mask{1} << f.n()); ++x) {
        long c = 0;
        for (Mask m : f)
            if (is_subset(x, m)) ++c;
        if (c == 0) continue;
        if (Rational(c) < pow(r, -popcount(x)) * Rational(static_cast<long>(f.size()))) continue;
        if (popcount(x) > popcount(best) || (popcount(x) == popcount(best) && x < best)) best = x;
    }
    return best;
}

}  // namespace

TEST_CASE("check_spread examples") {
    CHECK(check_spread(all_ksets(6, 2), 3).ok);
    auto v = check_spread(SetFamily::of(2, {{1, 2}}), 2);
    CHECK_FALSE(v.ok);
    CHECK(*v.violation == 0b1);  // canonically first violator; {1,2} also violates
    CHECK(check_spread(all_ksets(4, 2), 2).ok);
    auto w = check_spread(all_ksets(4, 2), Rational(2) + Rational(1, 1000));
    CHECK_FALSE(w.ok);
    CHECK(popcount(*w.violation) == 1);
    CHECK_THROWS_AS(check_spread(SetFamily(3), 2), PreconditionError);
}

TEST_CASE("max_spread_restriction examples and oracle") {
    // strictly spread: nothing qualifies but the empty set
    CHECK(max_spread_restriction(all_ksets(6, 2), Rational(5, 2)) == 0);
    CHECK(max_spread_restriction(SetFamily::of(3, {{1, 2, 3}}), 2) == 0b111);
    // star of 1 in C([6],2) plus {5,6}: |F({1,2})| = 1 >= 6/16, so a pair is the maximum
    auto f = family_union(trace_cover(all_ksets(6, 2), 0b1), SetFamily::of(6, {{5, 6}}));
    CHECK(max_spread_restriction(f, 4) == 0b11);
    CHECK(max_spread_restriction(f, 4) == brute_max_spread(f, 4));
    // C([6],2) is 3-spread with equality |F({1})| = 15/3, so {1} qualifies
    CHECK(check_spread(all_ksets(6, 2), 3).ok);
    CHECK(max_spread_restriction(all_ksets(6, 2), 3) == 0b1);

    Rng rng(21);
    for (int i = 0; i < 150; ++i) {
        const int n = 4 + static_cast<int>(rng.below(5));
        auto g = gen::random_uniform_family(rng, n, 1 + static_cast<int>(rng.below(3)));
        const Rational r = gen::spread_grid()[rng.below(gen::spread_grid().size())];
        const Mask x = max_spread_restriction(g, r);
        CHECK(x == brute_max_spread(g, r));
        CHECK(check_spread(link(g, x), r).ok);
    }
}

TEST_CASE("removing elements from a spread family") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        auto [f, r] = gen::random_spread_family(rng, 10);
        const Mask x = rng.below(Mask{1} << f.n());
        if (Rational(popcount(x)) >= r) continue;
        const Rational keep = Rational(1) - Rational(popcount(x)) / r;
        const SetFamily rest = restrict(f, 0, x);
        CHECK(Rational(static_cast<long>(rest.size())) >= keep * Rational(static_cast<long>(f.size())));
        // what the estimate actually gives: R - |X| spreadness
        if (!rest.empty()) CHECK(check_spread(rest, r * keep).ok);
        if (!f.contains(0)) CHECK(Rational(transversal_number(f).size) >= r);
    }
    // the parameter R / (1 - |X|/R) is too strong: n singletons are n-spread,
    // dropping one leaves a family that is only (n-1)-spread
    auto singles = all_ksets(6, 1);
    CHECK(check_spread(singles, 6).ok);
    auto rest = restrict(singles, 0, 0b1);
    CHECK_FALSE(check_spread(rest, Rational(6) / (Rational(1) - Rational(1, 6))).ok);
    CHECK(check_spread(rest, 5).ok);
}

TEST_CASE("exact hit probability matches a closed form") {
    // W hits an edge of K_12 unless |W| <= 1
    const Rational p(1, 2);
    const Rational closed = Rational(1) - pow(Rational(1, 2), 12) - 12 * pow(Rational(1, 2), 12);
    CHECK(hit_probability_exact(all_ksets(12, 2), p) == closed);
    CHECK(hit_probability_exact(SetFamily::of(3, {{}}), Rational(1, 5)) == 1);
    CHECK(hit_probability_exact(SetFamily::of(3, {{1}}), Rational(1, 5)) == Rational(1, 5));
}

TEST_CASE("spread lemma Monte Carlo") {
    auto e0 = spread_lemma_mc(SetFamily::of(3, {{}}), 2, 1, Rational(1, 2), 1000, 1);
    CHECK(e0.hits == 1000);

    auto k12 = all_ksets(12, 2);
    auto e = spread_lemma_mc(k12, 6, 2, Rational(1, 4), 100000, 7);
    CHECK(e.vacuous);
    const double exact = hit_probability_exact(k12, Rational(1, 2)).get_d();
    CHECK(e.wilson_lo <= exact);
    CHECK(exact <= e.wilson_hi);

    // R delta <= 2 is vacuous
    auto small = spread_lemma_mc(all_ksets(6, 2), 2, 1, Rational(1, 2), 100, 3);
    CHECK(small.vacuous);
    CHECK_FALSE(small.violation);

    // nonvacuous: 40 singletons are 40-spread, R delta = 40 > 32
    auto single = spread_lemma_mc(all_ksets(40, 1), 40, 1, 1, 2000, 4);
    CHECK_FALSE(single.vacuous);
    CHECK(single.bound_unit.lower() > 0);
    CHECK(single.wilson_lo > single.bound_unit.upper());

    CHECK_THROWS_AS(spread_lemma_mc(SetFamily::of(2, {{1, 2}}), 2, 1, Rational(1, 2), 10, 1), PreconditionError);
    CHECK_THROWS_AS(spread_lemma_mc(k12, 6, 3, Rational(1, 2), 10, 1), PreconditionError);

    // independent of the thread count
    set_thread_count(1);
    auto a = spread_lemma_mc(k12, 6, 1, Rational(1, 3), 20000, 99);
    set_thread_count(8);
    auto b = spread_lemma_mc(k12, 6, 1, Rational(1, 3), 20000, 99);
    set_thread_count(0);
    CHECK(a.hits == b.hits);
}

TEST_CASE("find_disjoint_representatives") {
    auto r = find_disjoint_representatives({SetFamily::of(2, {{1}}), SetFamily::of(2, {{2}})}, 0, 1);
    REQUIRE(r.reps.has_value());
    CHECK(*r.reps == std::vector<Mask>{0b1, 0b10});

    auto none = find_disjoint_representatives({SetFamily::of(2, {{1, 2}}), SetFamily::of(2, {{1, 2}})}, 0, 1);
    CHECK_FALSE(none.reps.has_value());

    auto blocked = find_disjoint_representatives({SetFamily::of(3, {{1}, {2}})}, 0b1, 1);
    REQUIRE(blocked.reps.has_value());
    CHECK(*blocked.reps == std::vector<Mask>{0b10});

    // stars over disjoint parts of [9]
    std::vector<SetFamily> g;
    for (int i = 0; i < 3; ++i) {
        std::vector<Mask> ms;
        for (int j = 0; j < 9; ++j)
            if (j % 3 != i) ms.push_back(bit(j));
        g.push_back(SetFamily(9, ms));
    }
    auto found = find_disjoint_representatives(g, 0, 5);
    REQUIRE(found.reps.has_value());
    for (int i = 0; i < 3; ++i) CHECK(g[i].contains((*found.reps)[i]));
    CHECK(((*found.reps)[0] & (*found.reps)[1]) == 0);

    // agreement with exhaustive packing on random instances
    Rng rng(17);
    for (int t = 0; t < 200; ++t) {
        const int n = 5 + static_cast<int>(rng.below(4));
        const int s = 2 + static_cast<int>(rng.below(2));
        std::vector<SetFamily> gs;
        for (int i = 0; i < s; ++i) gs.push_back(oracle::random_family(rng, n, 1 + static_cast<int>(rng.below(4)), 1, 3));
        const Mask forbidden = rng.below(4) == 0 ? bit(0) : 0;
        auto res = find_disjoint_representatives(gs, forbidden, t);
        bool brute = false;
        std::function<void(int, Mask)> rec = [&](int i, Mask used) {
            if (brute) return;
            if (i == s) {
                brute = true;
                return;
            }
            for (Mask m : gs[i])
                if (!(m & used)) rec(i + 1, used | m);
        };
        rec(0, forbidden);
        CHECK(res.reps.has_value() == brute);
        if (res.reps) {
            Mask used = forbidden;
            for (int i = 0; i < s; ++i) {
                CHECK(gs[i].contains((*res.reps)[i]));
                CHECK(((*res.reps)[i] & used) == 0);
                used |= (*res.reps)[i];
            }
        }
    }
}

TEST_CASE("sunflower from a spread restriction") {
    // a large star over {1}: the restriction to {1} is spread and its petals pack
    auto d = Domain::binomial(12, 3);
    auto star = trace_cover(d.family(), 0b1);
    auto w = sunflower_via_spread(star, 3, 3, 1);
    REQUIRE(w.has_value());
    auto core = is_sunflower(w->petals);
    REQUIRE(core.has_value());
    CHECK(*core == w->core);
    for (Mask m : w->petals) CHECK(star.contains(m));
}
