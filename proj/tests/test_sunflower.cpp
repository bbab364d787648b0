#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"
#include "sforge/sunflower.hpp"

using namespace sforge;

namespace {

int oracle_mode(const CorePredicate& p) { return p.mode == CoreMode::Exact ? 0 : p.mode == CoreMode::AtMost ? 1 : 2; }

std::vector<oracle::ESet> esets(const SetFamily& f) {
    std::vector<oracle::ESet> out;
    for (Mask m : f) out.push_back(oracle::to_eset(m));
    return out;
}

SetFamily relabel(const SetFamily& f, const std::vector<int>& perm) {
    std::vector<Mask> out;
    for (Mask m : f) {
        Mask r = 0;
        for (int e : elements(m)) r |= bit(perm[e]);
        out.push_back(r);
    }
    return f.with(out);
}

}  // namespace

TEST_CASE("is_sunflower examples") {
    CHECK(is_sunflower({0b11, 0b101, 0b1001}) == Mask{1});
    CHECK(is_sunflower({0b11, 0b1100, 0b110000}) == Mask{0});
    CHECK_FALSE(is_sunflower({0b11, 0b110, 0b101}).has_value());
    CHECK_THROWS_AS(is_sunflower({0b11, 0b11}), PreconditionError);
    CHECK_THROWS_AS(is_sunflower({0b11}), PreconditionError);
}

TEST_CASE("core predicate parsing") {
    CHECK(CorePredicate::parse("exact:1", 3).mode == CoreMode::Exact);
    CHECK(CorePredicate::parse("exact:1", 3).c == 1);
    CHECK(CorePredicate::parse("atmost:2:degenerate", 3).degenerate);
    CHECK(CorePredicate::parse("any", 4).s == 4);
    CHECK_THROWS_AS(CorePredicate::parse("exact", 3), ParseError);
    CHECK_THROWS_AS(CorePredicate::parse("most:1", 3), ParseError);
    CHECK_THROWS_AS(CorePredicate::parse("exact:x", 3), ParseError);
    CHECK_THROWS_AS(CorePredicate::parse("any", 1), PreconditionError);
    CHECK(CorePredicate::parse("atmost:2:degenerate", 3).to_string() == "atmost:2:degenerate");
}

TEST_CASE("find_sunflower examples") {
    auto star = trace_cover(Domain::binomial(6, 3).family(), 0b1);
    CHECK_FALSE(find_sunflower(star, CorePredicate::exact(3, 0)).has_value());

    auto pairs = Domain::binomial(6, 2).family();
    auto w = find_sunflower(pairs, CorePredicate::any(3));
    REQUIRE(w.has_value());
    CHECK(is_sunflower(w->petals) == w->core);
    CHECK(w->core == 0);
    CHECK(w->petals == std::vector<Mask>{0b11, 0b1100, 0b110000});

    auto f = SetFamily::of(4, {{1, 2}, {1, 3}, {1, 4}, {2, 3}});
    auto w2 = find_sunflower(f, CorePredicate::exact(3, 1));
    REQUIRE(w2.has_value());
    CHECK(w2->core == 0b1);
    CHECK(f.with(w2->petals) == SetFamily::of(4, {{1, 2}, {1, 3}, {1, 4}}));

    auto deg = find_sunflower(SetFamily::of(4, {{1}, {2, 3, 4}}), CorePredicate::at_most(3, 1, true));
    REQUIRE(deg.has_value());
    CHECK(deg->degenerate);
    CHECK(deg->core == 0b1);
}

TEST_CASE("property: find_sunflower agrees with brute force over all s-subsets") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(4));
        auto f = oracle::random_family(rng, n, 3 + static_cast<int>(rng.below(12)), 1, 3);
        const int s = 2 + static_cast<int>(rng.below(3));
        const int mode = static_cast<int>(rng.below(3));
        const int c = static_cast<int>(rng.below(2));
        CorePredicate p = mode == 0 ? CorePredicate::exact(s, c) : mode == 1 ? CorePredicate::at_most(s, c)
                                                                             : CorePredicate::any(s);
        auto w = find_sunflower(f, p);
        CHECK(w.has_value() == oracle::has_sunflower(esets(f), s, oracle_mode(p), c));
        if (w) {
            auto core = is_sunflower(w->petals);
            REQUIRE(core.has_value());
            CHECK(p.accepts(popcount(*core)));
            for (Mask m : w->petals) CHECK(f.contains(m));
        }
    }
}

TEST_CASE("max_sunflower_free small cases against exhaustive subfamily search") {
    // intersecting pairs on [5]: largest is a star (or triangle) of size 4
    auto r = max_sunflower_free(Domain::binomial(5, 2), CorePredicate::exact(2, 0));
    CHECK(r.certified);
    CHECK(r.optimum == 4);
    CHECK(r.optimum ==
          static_cast<std::size_t>(oracle::max_sunflower_free(esets(Domain::binomial(5, 2).family()), 2, 0, 0)));

    for (const auto& d : {Domain::binomial(4, 2), Domain::sequences(3, 2), Domain::permutations(3)}) {
        auto r2 = max_sunflower_free(d, CorePredicate::any(2));
        CHECK(r2.optimum == 1);
    }

    auto d6 = Domain::binomial(6, 2);
    auto r3 = max_sunflower_free(d6, CorePredicate::any(3));
    CHECK(r3.certified);
    CHECK(r3.optimum == static_cast<std::size_t>(oracle::max_sunflower_free(esets(d6.family()), 3, 2, 0)));
    CHECK(is_sunflower_free(r3.witness, CorePredicate::any(3)));

    struct Case {
        Domain d;
        CorePredicate p;
    };
    std::vector<Case> cases = {
        {Domain::binomial(5, 2), CorePredicate::any(3)},
        {Domain::binomial(6, 2), CorePredicate::exact(3, 1)},
        {Domain::binomial(6, 2), CorePredicate::exact(3, 0)},
        {Domain::binomial(5, 3), CorePredicate::at_most(3, 1)},
        {Domain::sequences(3, 2), CorePredicate::any(3)},
        {Domain::sequences(4, 2), CorePredicate::exact(3, 0)},
        {Domain::kpartite(3, {1, 2}), CorePredicate::any(3)},
        {Domain::permutations(3), CorePredicate::any(3)},
        {Domain::complex_layer(SetFamily::of(6, {{1, 2, 3, 4}, {3, 4, 5, 6}}), 2), CorePredicate::any(3)},
    };
    for (const auto& c : cases) {
        auto res = max_sunflower_free(c.d, c.p);
        CHECK(res.certified);
        const int mode = oracle_mode(c.p);
        CHECK(res.optimum == static_cast<std::size_t>(oracle::max_sunflower_free(esets(c.d.family()), c.p.s, mode, c.p.c)));
        CHECK(is_sunflower_free(res.witness, c.p));
    }
}

TEST_CASE("max_sunflower_free is deterministic across thread counts and invariant under relabeling") {
    auto d = Domain::binomial(7, 2);
    set_thread_count(1);
    auto a = max_sunflower_free(d, CorePredicate::any(3));
    set_thread_count(4);
    auto b = max_sunflower_free(d, CorePredicate::any(3));
    set_thread_count(0);
    CHECK(a.optimum == b.optimum);
    CHECK(a.witness == b.witness);
    CHECK(a.nodes == b.nodes);

    auto rel = Domain::explicit_family(relabel(d.family(), {3, 6, 0, 1, 5, 2, 4}));
    CHECK(max_sunflower_free(rel, CorePredicate::any(3)).optimum == a.optimum);
}

TEST_CASE("max_sunflower_free monotone in n and s") {
    std::size_t prev = 0;
    for (int n = 4; n <= 9; ++n) {
        auto r = max_sunflower_free(Domain::binomial(n, 2), CorePredicate::exact(3, 0));
        CHECK(r.optimum >= prev);
        prev = r.optimum;
    }
    auto d = Domain::binomial(6, 2);
    CHECK(max_sunflower_free(d, CorePredicate::any(2)).optimum <= max_sunflower_free(d, CorePredicate::any(3)).optimum);
    CHECK(max_sunflower_free(d, CorePredicate::any(3)).optimum <= max_sunflower_free(d, CorePredicate::any(4)).optimum);
}

TEST_CASE("budget exhaustion returns an uncertified incumbent") {
    SearchOptions opt;
    opt.budget = 5;
    auto r = max_sunflower_free(Domain::binomial(8, 2), CorePredicate::any(3), opt);
    CHECK_FALSE(r.certified);
    CHECK(r.optimum >= 1);
    CHECK(is_sunflower_free(r.witness, CorePredicate::any(3)));
}

TEST_CASE("phi trivia and the product construction") {
    for (int s = 2; s <= 6; ++s) {
        auto r = phi_exact(s, 1);
        CHECK(r.value == static_cast<std::size_t>(s - 1));
        CHECK(r.unconditional);
    }
    for (int t = 1; t <= 4; ++t) {
        auto r = phi_exact(2, t);
        CHECK(r.value == 1);
        CHECK(r.unconditional);
    }
    auto restricted = phi_exact(3, 2, 5);
    CHECK_FALSE(restricted.unconditional);

    for (int s = 2; s <= 4; ++s)
        for (int t = 1; t <= 3; ++t) {
            auto p = product_construction(s, t);
            CHECK(p.size() == static_cast<std::size_t>(std::pow(s - 1, t)));
            CHECK(p.uniformity() == t);
            CHECK(is_sunflower_free(p, CorePredicate::any(s)));
        }
    CHECK(erdos_rado_bound(3, 2) == 8);
}
