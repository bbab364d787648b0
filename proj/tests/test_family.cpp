#include "doctest.h"
#include "oracles.hpp"
#include "sforge/errors.hpp"
#include "sforge/family.hpp"

using namespace sforge;

namespace {

SetFamily all_ksets(int n, int k) {
    std::vector<Mask> ms;
    for (const auto& s : oracle::ksubsets(n, k)) ms.push_back(oracle::to_mask(s));
    return SetFamily(n, ms);
}

}  // namespace

TEST_CASE("restrict examples") {
    auto f = SetFamily::of(3, {{1, 2}, {1, 3}, {2, 3}});
    CHECK(restrict(f, 0b1, 0b1) == SetFamily::of(3, {{2}, {3}}));
    auto g = SetFamily::of(3, {{1, 2}, {2, 3}});
    CHECK(restrict(g, 0, 0b1) == SetFamily::of(3, {{2, 3}}));
    auto r = restrict(all_ksets(4, 2), 0b1, 0b1);
    CHECK(r == SetFamily::of(4, {{2}, {3}, {4}}));
    CHECK_THROWS_AS(restrict(f, 0b10, 0b1), PreconditionError);
}

TEST_CASE("trace, shadow, join, upper closure examples") {
    auto f = SetFamily::of(4, {{1, 2}, {3, 4}});
    CHECK(trace_cover(f, SetFamily::of(4, {{1}})) == SetFamily::of(4, {{1, 2}}));
    CHECK(trace_cover(f, SetFamily::of(4, {{}})) == f);
    CHECK(trace_cover(all_ksets(4, 2), SetFamily::of(4, {{1}, {2}})).size() == 5);

    CHECK(shadow(SetFamily::of(3, {{1, 2, 3}}), 2) == SetFamily::of(3, {{1, 2}, {1, 3}, {2, 3}}));
    CHECK(shadow(SetFamily::of(3, {{1, 2}, {2, 3}}), 1) == SetFamily::of(3, {{1}, {2}, {3}}));
    CHECK(shadow(all_ksets(5, 3), 2) == all_ksets(5, 2));

    CHECK(join(SetFamily::of(3, {{1}}), SetFamily::of(3, {{2}, {3}})) == SetFamily::of(3, {{1, 2}, {1, 3}}));
    auto b = SetFamily::of(4, {{1, 3}, {2, 4}, {4}});
    CHECK(join(SetFamily::of(4, {{}}), b) == b);
    CHECK(join(SetFamily::of(2, {{1}, {2}}), SetFamily::of(2, {{1}, {2}})) == SetFamily::of(2, {{1}, {2}, {1, 2}}));

    CHECK(upper_closure(SetFamily::of(2, {{1}})) == SetFamily::of(2, {{1}, {1, 2}}));
    CHECK(upper_closure(SetFamily::of(3, {{}})).size() == 8);
    CHECK(upper_closure(SetFamily::of(3, {{1, 2}, {3}})) ==
          SetFamily::of(3, {{1, 2}, {1, 2, 3}, {3}, {1, 3}, {2, 3}}));
    CHECK_THROWS_AS(upper_closure(SetFamily(25, {Mask{1}})), CapacityError);
    CHECK(is_upward_closed(upper_closure(SetFamily::of(5, {{1, 2}, {4}}))));
}

TEST_CASE("transversal number examples") {
    CHECK(transversal_number(SetFamily::of(4, {{1, 2}, {3, 4}})).size == 2);
    CHECK(transversal_number(all_ksets(4, 2)).size == 3);
    CHECK(transversal_number(SetFamily::of(3, {{1}, {2}, {3}})).size == 3);
    CHECK_THROWS_AS(transversal_number(SetFamily::of(3, {{}, {1}})), PreconditionError);
}

TEST_CASE("ground set and member validation") {
    CHECK_THROWS_AS(SetFamily(65), PreconditionError);
    CHECK_THROWS_AS(SetFamily(3, {Mask{0b1000}}), PreconditionError);
    auto f = SetFamily(4, {Mask{0b11}, Mask{0b1}, Mask{0b11}, Mask{0}});
    CHECK(f.size() == 3);
    CHECK(f[0] == 0);
    CHECK(f[1] == 1);
    CHECK(!f.uniformity());
    CHECK(all_ksets(5, 2).uniformity() == 2);
}

TEST_CASE("property: operations agree with the set-based oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(6));
        auto f = oracle::random_family(rng, n, 1 + static_cast<int>(rng.below(10)), 0, n);
        auto ef = oracle::to_efam(f);
        Mask b = rng.below(Mask{1} << n);
        Mask a = b & rng.below(Mask{1} << n);
        CHECK(oracle::to_efam(restrict(f, a, b)) == oracle::restrict(ef, oracle::to_eset(a), oracle::to_eset(b)));

        // Partition by containment of a single element.
        const Mask x = bit(static_cast<int>(rng.below(n)));
        CHECK(f.size() == restrict(f, x, x).size() + restrict(f, 0, x).size());

        // Composition of restrictions over disjoint B, B'.
        Mask b2 = rng.below(Mask{1} << n) & ~b;
        Mask a2 = b2 & rng.below(Mask{1} << n);
        CHECK(restrict(restrict(f, a, b), a2, b2) == restrict(f, a | a2, b | b2));

        // Trace distributes over unions.
        auto b1 = oracle::random_family(rng, n, 2, 0, 2);
        auto b3 = oracle::random_family(rng, n, 2, 0, 2);
        CHECK(trace_cover(f, family_union(b1, b3)) == family_union(trace_cover(f, b1), trace_cover(f, b3)));

        // Shadow monotone under inclusion.
        const int h = static_cast<int>(rng.below(3));
        std::vector<Mask> half;
        for (std::size_t i = 0; i < f.size(); i += 2) half.push_back(f[i]);
        CHECK(is_subfamily(shadow(f.with(half), h), shadow(f, h)));

        if (!f.contains(0)) {
            auto tr = transversal_number(f);
            CHECK(tr.size == oracle::transversal(ef, n));
            for (Mask m : f) CHECK((m & tr.witness) != 0);
        }
    }
}

TEST_CASE("subset counts") {
    auto f = all_ksets(5, 3);
    SubsetCounts c(f);
    CHECK(c.count(0) == 10);
    CHECK(c.count(0b1) == 6);
    CHECK(c.count(0b11) == 3);
    CHECK(c.count(0b111) == 1);
    CHECK(c.count(0b1111) == 0);
}

TEST_CASE("serialization round trips") {
    auto f = SetFamily::of(6, {{1, 2}, {3}, {4, 5, 6}, {}});
    CHECK(family_from_json(to_json(f)) == f);
    CHECK(family_from_hex_text(to_hex_text(f)) == f);
    CHECK(family_from_hex_text("# comment\nn=4\n0x3\nc\n") == SetFamily::of(4, {{1, 2}, {3, 4}}));
    CHECK_THROWS_AS(family_from_hex_text("0x3\n"), ParseError);
    CHECK_THROWS_AS(family_from_json(json::parse(R"({"n":3,"sets":[[4]]})")), ParseError);
}
