#include "sforge/spread.hpp"

#include <algorithm>
#include <cmath>

#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"
#include "sforge/random.hpp"

namespace sforge {

namespace {

// cnt * R^j compared with total, exactly: sign of cnt*num^j - total*den^j.
int cmp_scaled(std::uint64_t cnt, const Rational& r, int j, std::uint64_t total) {
    BigInt lhs = BigInt(cnt) * pow(BigInt(r.get_num()), static_cast<unsigned long>(j));
    BigInt rhs = BigInt(total) * pow(BigInt(r.get_den()), static_cast<unsigned long>(j));
    return cmp(lhs, rhs);
}

}  // namespace

SpreadVerdict check_spread(const SetFamily& f, const Rational& r) {
    if (f.empty()) throw PreconditionError("check_spread needs a nonempty family");
    if (r <= 0) throw PreconditionError("spreadness parameter must be positive");
    SpreadVerdict v;
    v.r = r;
    v.size = f.size();
    const SubsetCounts counts(f);
    for (const auto& [x, c] : counts.table()) {
        if (x == 0 || cmp_scaled(c, r, popcount(x), f.size()) <= 0) continue;
        if (!v.violation || canonical_less(x, *v.violation)) {
            v.violation = x;
            v.restricted_size = c;
        }
    }
    v.ok = !v.violation;
    return v;
}

Mask max_spread_restriction(const SetFamily& f, const Rational& r) {
    if (f.empty()) throw PreconditionError("max_spread_restriction needs a nonempty family");
    if (r <= 0) throw PreconditionError("spreadness parameter must be positive");
    const SubsetCounts counts(f);
    Mask best = 0;
    for (const auto& [x, c] : counts.table()) {
        if (cmp_scaled(c, r, popcount(x), f.size()) < 0) continue;
        if (popcount(x) > popcount(best) || (popcount(x) == popcount(best) && x < best)) best = x;
    }
    auto check = check_spread(link(f, best), r);
    if (!check.ok)
        throw InvariantViolation("maximal restriction is not R-spread",
                                 json{{"X", set_to_json(best)}, {"Y", set_to_json(*check.violation)}}.dump());
    return best;
}

std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t trials) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(hits) / n;
    const double z2 = kWilsonZ99 * kWilsonZ99;
    const double denom = 1.0 + z2 / n;
    const double center = (ph + z2 / (2.0 * n)) / denom;
    const double half = kWilsonZ99 * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

SpreadLemmaEstimate spread_lemma_mc(const SetFamily& f, const Rational& r, int m, const Rational& delta,
                                    std::uint64_t trials, std::uint64_t seed) {
    if (m < 1) throw PreconditionError("m must be at least 1");
    if (delta <= 0) throw PreconditionError("delta must be positive");
    const Rational p = delta * m;
    if (p > 1) throw PreconditionError("m * delta must be at most 1");
    auto sv = check_spread(f, r);
    if (!sv.ok)
        throw PreconditionError("family is not R-spread",
                                json{{"X", set_to_json(*sv.violation)}, {"size", sv.restricted_size}}.dump());
    SpreadLemmaEstimate e;
    e.r = r;
    e.delta = delta;
    e.m = m;
    e.seed = seed;
    e.trials = trials;
    e.k = f.max_size();

    const auto& members = f.members();
    const int n = f.n();
    constexpr std::uint64_t kChunk = 4096;
    const std::size_t chunks = static_cast<std::size_t>((trials + kChunk - 1) / kChunk);
    std::vector<std::uint64_t> hits(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
        Rng rng(derive_seed(seed, c));
        const std::uint64_t begin = c * kChunk, end = std::min(trials, begin + kChunk);
        std::uint64_t h = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            Mask w = 0;
            for (int x = 0; x < n; ++x)
                if (rng.bernoulli(p)) w |= bit(x);
            for (Mask fm : members)
                if (is_subset(fm, w)) {
                    ++h;
                    break;
                }
        }
        hits[c] = h;
    });
    for (auto h : hits) e.hits += h;
    std::tie(e.wilson_lo, e.wilson_hi) = wilson_interval(e.hits, e.trials);

    const Rational rd = r * delta;
    if (rd <= 1) {
        // log2(R delta) <= 0: the failure term is undefined or negative, no guarantee.
        e.vacuous = true;
        e.bound_unit = Real(-1);
        e.bound_k = Real(-1);
    } else {
        const Real term = (Real(5) / Real::log2(rd)).pow(m);
        e.bound_unit = Real(1) - term;
        e.bound_k = Real(1) - term * Real(std::max(e.k, 1));
        auto sign = e.bound_unit.compare(Rational(0));
        e.vacuous = !sign || *sign <= 0;
    }
    if (!e.vacuous) e.violation = e.wilson_hi < e.bound_unit.lower();
    return e;
}

Rational hit_probability_exact(const SetFamily& f, const Rational& p) {
    const Mask support = f.support();
    if (popcount(support) > 24) throw CapacityError("exact hit probability needs a support of at most 24 elements");
    const std::vector<int> elems = elements(support);
    const int n = static_cast<int>(elems.size());
    std::vector<Rational> weight(n + 1);
    for (int j = 0; j <= n; ++j) weight[j] = pow(p, j) * pow(Rational(1) - p, n - j);
    std::vector<std::uint64_t> by_size(n + 1, 0);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        Mask w = 0;
        for (int j = 0; j < n; ++j)
            if ((idx >> j) & 1U) w |= bit(elems[j]);
        for (Mask fm : f)
            if (is_subset(fm, w)) {
                ++by_size[popcount(w)];
                break;
            }
    }
    Rational out = 0;
    for (int j = 0; j <= n; ++j) out += weight[j] * Rational(BigInt(by_size[j]));
    return out;
}

namespace {

struct RepsSearch {
    const std::vector<SetFamily>& g;
    std::vector<Mask> pick;
    std::uint64_t nodes = 0;

    bool dfs(std::size_t i, Mask used) {
        ++nodes;
        if (i == g.size()) return true;
        // Forward check: every later family still has an available member.
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            bool any = false;
            for (Mask m : g[j])
                if (!(m & used)) {
                    any = true;
                    break;
                }
            if (!any) return false;
        }
        for (Mask m : g[i]) {
            if (m & used) continue;
            pick[i] = m;
            if (dfs(i + 1, used | m)) return true;
        }
        return false;
    }
};

}  // namespace

RepsResult find_disjoint_representatives(const std::vector<SetFamily>& g, Mask forbidden, std::uint64_t seed,
                                         int max_restarts) {
    RepsResult res;
    if (g.empty()) {
        res.reps = std::vector<Mask>{};
        return res;
    }
    for (const auto& gi : g)
        if (gi.empty()) throw PreconditionError("every family needs at least one member");
    const int s = static_cast<int>(g.size());
    int n = 0;
    for (const auto& gi : g) n = std::max(n, gi.n());
    // Each element joins class i with probability 1/(8s), classes disjoint.
    const std::uint64_t slots = 8 * static_cast<std::uint64_t>(s);
    for (int r = 0; r < max_restarts; ++r) {
        ++res.restarts;
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        std::vector<Mask> cls(s, 0);
        for (int x = 0; x < n; ++x) {
            const std::uint64_t v = rng.below(slots);
            if (v < static_cast<std::uint64_t>(s) && !(forbidden & bit(x))) cls[v] |= bit(x);
        }
        std::vector<Mask> reps(s);
        bool ok = true;
        for (int i = 0; i < s && ok; ++i) {
            ok = false;
            for (Mask m : g[i])
                if (is_subset(m, cls[i])) {
                    reps[i] = m;
                    ok = true;
                    break;
                }
        }
        if (ok) {
            res.reps = reps;
            res.by_sampling = true;
            return res;
        }
    }
    RepsSearch search{g, std::vector<Mask>(s, 0)};
    if (search.dfs(0, forbidden)) res.reps = search.pick;
    res.nodes = search.nodes;
    return res;
}

std::optional<SunflowerWitness> sunflower_via_spread(const SetFamily& f, int s, const Rational& r,
                                                     std::uint64_t seed) {
    if (s < 2) throw PreconditionError("a sunflower needs s >= 2 petals");
    const Mask x = max_spread_restriction(f, r);
    const SetFamily gx = link(f, x);
    auto reps = find_disjoint_representatives(std::vector<SetFamily>(s, gx), 0, seed);
    if (!reps.reps) return std::nullopt;
    SunflowerWitness w;
    w.s = s;
    w.core = x;
    for (Mask m : *reps.reps) w.petals.push_back(m | x);
    std::sort(w.petals.begin(), w.petals.end());
    if (std::adjacent_find(w.petals.begin(), w.petals.end()) != w.petals.end()) return std::nullopt;
    std::sort(w.petals.begin(), w.petals.end(), CanonicalLess{});
    return w;
}

json to_json(const SpreadVerdict& v) {
    json j{{"R", to_string(v.r)}, {"ok", v.ok}, {"size", v.size}};
    if (v.violation) {
        j["violation"] = set_to_json(*v.violation);
        j["restricted_size"] = v.restricted_size;
    }
    return j;
}

json to_json(const SpreadLemmaEstimate& e) {
    return {{"R", to_string(e.r)},
            {"delta", to_string(e.delta)},
            {"m", e.m},
            {"k", e.k},
            {"seed", e.seed},
            {"trials", e.trials},
            {"hits", e.hits},
            {"hit_rate", to_string(ratio(BigInt(e.hits), BigInt(std::max<std::uint64_t>(e.trials, 1))))},
            {"wilson99", {e.wilson_lo, e.wilson_hi}},
            {"bound_mu_1", e.bound_unit.to_string()},
            {"bound_mu_k", e.bound_k.to_string()},
            {"vacuous", e.vacuous},
            {"violation", e.violation}};
}

json to_json(const RepsResult& r) {
    json j{{"found", r.reps.has_value()}, {"restarts", r.restarts}, {"by_sampling", r.by_sampling}, {"nodes", r.nodes}};
    if (r.reps) {
        json a = json::array();
        for (Mask m : *r.reps) a.push_back(set_to_json(m));
        j["reps"] = a;
    }
    return j;
}

}  // namespace sforge
