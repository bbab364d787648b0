#include "sforge/boolean.hpp"

#include <algorithm>

#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"

namespace sforge {

namespace {

constexpr int kMaxCubeDim = 16;

void require_probability(const Rational& p, const char* name) {
    if (p <= 0 || p >= 1) throw PreconditionError(std::string(name) + " must lie in (0,1)");
}

// Indicator of F on the cube over the listed coordinates; bit j of a local
// index is coordinate coords[j].
struct Cube {
    std::vector<int> coords;
    std::vector<std::uint8_t> v;
    int dim() const { return static_cast<int>(coords.size()); }

    Mask expand(std::uint64_t local) const {
        Mask m = 0;
        for (int j = 0; j < dim(); ++j)
            if ((local >> j) & 1U) m |= bit(coords[j]);
        return m;
    }
};

Cube make_cube(const SetFamily& f, Mask ground, int limit) {
    Cube c;
    c.coords = elements(ground);
    if (c.dim() > limit)
        throw CapacityError("cube operations are exhaustive and limited to n <= " + std::to_string(limit));
    c.v.assign(std::size_t{1} << c.dim(), 0);
    for (Mask m : f) {
        if (!is_subset(m, ground)) throw PreconditionError("member outside the ground set", set_to_json(m).dump());
        std::uint64_t idx = 0;
        for (int j = 0; j < c.dim(); ++j)
            if (m & bit(c.coords[j])) idx |= std::uint64_t{1} << j;
        c.v[idx] = 1;
    }
    return c;
}

// Σ p^{|G|} (1-p)^{d-|G|} over members G of a family living on d coordinates.
Rational measure_on(const SetFamily& f, const Rational& p, int d) {
    std::vector<std::uint64_t> by_size(static_cast<std::size_t>(d) + 1, 0);
    for (Mask m : f) {
        if (popcount(m) > d) throw PreconditionError("member larger than the ambient cube");
        ++by_size[popcount(m)];
    }
    Rational out = 0;
    for (int j = 0; j <= d; ++j)
        if (by_size[j]) out += Rational(BigInt(by_size[j])) * pow(p, j) * pow(Rational(1) - p, d - j);
    return out;
}

// ---------------------------------------------------------------------------
// Exhaustive restriction scan.
//
// Coordinates are fixed one at a time to 0, 1 or left free. A free
// coordinate marginalizes: W = (den-num)·W₀ + num·W₁ with p = num/den, so a
// leaf holds W = den^{free} μ^{-B}(F(A,B)) as an integer. Its key
// W·(e·den)^{|B|}·c^{d-|B|} (τ = c/e) is τ^{-|B|}μ^{-B}(F(A,B)) scaled by
// the common factor (den·c)^d.

struct ScanBest {
    BigInt key = -1;
    Mask a = 0, b = 0;  // local masks
};

bool better(const BigInt& key, Mask a, Mask b, const ScanBest& cur) {
    const int c = cmp(key, cur.key);
    if (c != 0) return c > 0;
    if (popcount(b) != popcount(cur.b)) return popcount(b) < popcount(cur.b);
    if (b != cur.b) return b < cur.b;
    if (popcount(a) != popcount(cur.a)) return popcount(a) > popcount(cur.a);
    return a < cur.a;
}

class Scanner {
public:
    Scanner(const Cube& cube, const Rational& p, const Rational& tau, bool links_only)
        : d_(cube.dim()), links_only_(links_only), num_(p.get_num()), comp_(p.get_den() - p.get_num()) {
        const BigInt eden = BigInt(tau.get_den()) * p.get_den();
        const BigInt c = tau.get_num();
        k_.resize(d_ + 1);
        for (int j = 0; j <= d_; ++j) k_[j] = pow(eden, j) * pow(c, static_cast<unsigned long>(d_ - j));
        bufs_.resize(d_ + 1);
        for (int i = 0; i <= d_; ++i) bufs_[i].assign(std::size_t{1} << (d_ - i), BigInt(0));
        for (std::size_t x = 0; x < cube.v.size(); ++x) bufs_[0][x] = cube.v[x];
    }

    // (∅, ∅) seeds the incumbent, so all-zero subtrees never win.
    void seed_empty() {
        BigInt w = 0;
        for (std::size_t x = 0; x < bufs_[0].size(); ++x)
            if (sgn(bufs_[0][x]))
                w += pow(num_, static_cast<unsigned long>(popcount(x))) *
                     pow(comp_, static_cast<unsigned long>(d_ - popcount(x)));
        best_.key = w * k_[0];
        best_.a = best_.b = 0;
    }

    // Applies the first `depth` choices of a task code (base 3, or base 2 for
    // links), then scans the rest.
    void run_task(int depth, std::uint64_t code) {
        Mask a = 0, b = 0;
        const std::uint64_t base = links_only_ ? 2 : 3;
        for (int i = 0; i < depth; ++i) {
            std::uint64_t choice = code % base;
            code /= base;
            if (links_only_) choice += 1;  // 1 = fixed to 1, 2 = free
            step(i, static_cast<int>(choice));
            if (choice == 0) b |= bit(i);
            if (choice == 1) a |= bit(i), b |= bit(i);
        }
        dfs(depth, a, b);
    }

    const ScanBest& best() const { return best_; }

private:
    int d_;
    bool links_only_;
    BigInt num_, comp_;
    std::vector<BigInt> k_;
    std::vector<std::vector<BigInt>> bufs_;
    ScanBest best_;
    BigInt tmp_;

    void step(int i, int choice) {
        const auto& cur = bufs_[i];
        auto& nxt = bufs_[i + 1];
        const std::size_t half = cur.size() / 2;
        for (std::size_t j = 0; j < half; ++j) {
            if (choice == 0)
                nxt[j] = cur[2 * j];
            else if (choice == 1)
                nxt[j] = cur[2 * j + 1];
            else
                nxt[j] = comp_ * cur[2 * j] + num_ * cur[2 * j + 1];
        }
    }

    void dfs(int i, Mask a, Mask b) {
        const auto& cur = bufs_[i];
        if (i == d_) {
            tmp_ = cur[0] * k_[popcount(b)];
            if (better(tmp_, a, b, best_)) {
                best_.key = tmp_;
                best_.a = a;
                best_.b = b;
            }
            return;
        }
        if (std::all_of(cur.begin(), cur.end(), [](const BigInt& x) { return sgn(x) == 0; })) return;
        if (!links_only_) {
            step(i, 0);
            dfs(i + 1, a, b | bit(i));
        }
        step(i, 1);
        dfs(i + 1, a | bit(i), b | bit(i));
        step(i, 2);
        dfs(i + 1, a, b);
    }
};

GlobalRestriction scan(const Cube& cube, const Rational& p, const Rational& tau, bool links_only) {
    const int d = cube.dim();
    const int depth = std::min(d, 3);
    const std::uint64_t base = links_only ? 2 : 3;
    std::uint64_t tasks = 1;
    for (int i = 0; i < depth; ++i) tasks *= base;
    std::vector<ScanBest> results(tasks);
    parallel_for(tasks, [&](std::size_t t) {
        Scanner s(cube, p, tau, links_only);
        s.seed_empty();
        s.run_task(depth, t);
        results[t] = s.best();
    });
    ScanBest best = results[0];
    for (std::size_t t = 1; t < tasks; ++t)
        if (better(results[t].key, results[t].a, results[t].b, best)) best = results[t];
    GlobalRestriction out;
    out.a = cube.expand(best.a);
    out.b = cube.expand(best.b);
    const BigInt scale = pow(BigInt(p.get_den()) * tau.get_num(), static_cast<unsigned long>(d));
    out.value = ratio(best.key, scale);
    return out;
}

void check_tau(const Rational& tau) {
    if (tau <= 0) throw PreconditionError("tau must be positive");
}

// T_ρ 1_F scaled by (e·den)^d, where ρ = c/e and p = num/den.
std::vector<BigInt> noise_scaled(const Cube& cube, const Rational& p, const Rational& rho) {
    const BigInt num = p.get_num(), den = p.get_den(), c = rho.get_num(), e = rho.get_den();
    const BigInt s11 = c * den + (e - c) * num;
    const BigInt s10 = (e - c) * (den - num);
    const BigInt s01 = (e - c) * num;
    const BigInt s00 = c * den + (e - c) * (den - num);
    std::vector<BigInt> v(cube.v.size());
    for (std::size_t x = 0; x < v.size(); ++x) v[x] = cube.v[x];
    const std::size_t size = v.size();
    BigInt f0, f1;
    for (int i = 0; i < cube.dim(); ++i) {
        const std::size_t step = std::size_t{1} << i;
        for (std::size_t x = 0; x < size; ++x) {
            if (x & step) continue;
            f0 = v[x];
            f1 = v[x | step];
            v[x] = s00 * f0 + s01 * f1;
            v[x | step] = s10 * f0 + s11 * f1;
        }
    }
    return v;
}

void check_rho(const Rational& rho) {
    if (rho < 0 || rho > 1) throw PreconditionError("rho must lie in [0,1]");
}

// E_{x~μ_p} 1_F(x) g(x) for g given scaled by `scale`.
Rational weighted_inner(const Cube& cube, const Rational& p, const std::vector<BigInt>& g, const BigInt& scale) {
    const int d = cube.dim();
    const BigInt num = p.get_num(), comp = p.get_den() - p.get_num();
    std::vector<BigInt> w(d + 1);
    for (int j = 0; j <= d; ++j) w[j] = pow(num, j) * pow(comp, static_cast<unsigned long>(d - j));
    BigInt total = 0;
    for (std::size_t x = 0; x < cube.v.size(); ++x)
        if (cube.v[x]) total += w[popcount(x)] * g[x];
    return ratio(total, pow(BigInt(p.get_den()), d) * scale);
}

}  // namespace

Rational biased_measure(const SetFamily& f, const Rational& p) {
    require_probability(p, "p");
    return measure_on(f, p, f.n());
}

Rational restricted_measure(const SetFamily& f, const Rational& p, Mask a, Mask b) {
    require_probability(p, "p");
    return measure_on(restrict(f, a, b), p, f.n() - popcount(b));
}

GlobalRestriction max_global_restriction(const SetFamily& f, const Rational& p, const Rational& tau) {
    require_probability(p, "p");
    check_tau(tau);
    return scan(make_cube(f, full_mask(f.n()), kMaxCubeDim), p, tau, false);
}

GlobalRestriction max_link_restriction(const SetFamily& f, const Rational& p, const Rational& tau) {
    require_probability(p, "p");
    check_tau(tau);
    return scan(make_cube(f, full_mask(f.n()), kMaxCubeDim), p, tau, true);
}

GlobalnessVerdict check_global(const SetFamily& f, const Rational& p, const Rational& tau) {
    GlobalnessVerdict v;
    v.p = p;
    v.tau = tau;
    v.best = max_global_restriction(f, p, tau);
    v.measure = biased_measure(f, p);
    v.ok = v.best.value <= v.measure;
    if (!v.ok) v.violation = std::make_pair(v.best.a, v.best.b);
    v.collapse_applies = Rational(1) / (Rational(1) - p) < tau;
    if (v.collapse_applies && v.best.value > 0 && v.best.a != v.best.b)
        throw InvariantViolation("maximizing restriction has A != B although 1/(1-p) < tau",
                                 json{{"A", set_to_json(v.best.a)}, {"B", set_to_json(v.best.b)}}.dump());
    return v;
}

std::vector<Rational> noise_operator(const SetFamily& f, const Rational& p, const Rational& rho) {
    require_probability(p, "p");
    check_rho(rho);
    const Cube cube = make_cube(f, full_mask(f.n()), kMaxCubeDim);
    const auto v = noise_scaled(cube, p, rho);
    const BigInt scale = pow(BigInt(rho.get_den()) * p.get_den(), static_cast<unsigned long>(cube.dim()));
    std::vector<Rational> out(v.size());
    for (std::size_t x = 0; x < v.size(); ++x) out[x] = ratio(v[x], scale);
    return out;
}

Rational stability(const SetFamily& f, const Rational& p, const Rational& rho) {
    require_probability(p, "p");
    check_rho(rho);
    const Cube cube = make_cube(f, full_mask(f.n()), kMaxCubeDim);
    const auto v = noise_scaled(cube, p, rho);
    return weighted_inner(cube, p, v,
                          pow(BigInt(rho.get_den()) * p.get_den(), static_cast<unsigned long>(cube.dim())));
}

SharpThresholdReport verify_sharp_threshold(const SetFamily& f, const Rational& p, const Rational& p_tilde,
                                            const std::optional<Rational>& tau) {
    require_probability(p, "p");
    require_probability(p_tilde, "p_tilde");
    if (!(p < p_tilde)) throw PreconditionError("need p < p_tilde");
    if (f.n() > kMaxCubeDim) throw CapacityError("sharp threshold check is limited to n <= 16");
    if (!is_upward_closed(f)) throw PreconditionError("family is not upward closed");
    SharpThresholdReport r;
    r.p = p;
    r.p_tilde = p_tilde;
    r.rho = p * (Rational(1) - p_tilde) / (p_tilde * (Rational(1) - p));
    r.mu_p = biased_measure(f, p);
    r.mu_tilde = biased_measure(f, p_tilde);
    r.stab = stability(f, p, r.rho);
    r.rhs = r.stab == 0 ? Rational(0) : r.mu_p * r.mu_p / r.stab;
    r.holds = r.mu_tilde >= r.rhs;
    if (!r.holds)
        throw InvariantViolation("mu_{p~}(f) < mu_p(f)^2 / Stab_rho(f)",
                                 json{{"mu_tilde", to_string(r.mu_tilde)}, {"rhs", to_string(r.rhs)}}.dump());
    r.tau = tau;
    if (tau) {
        r.lemma_applies = p_tilde == 64 * *tau * p && p < Rational(1, 128) / *tau && check_global(f, p, *tau).ok;
        if (r.lemma_applies) {
            r.lemma_holds = pow(r.mu_tilde, 4) >= pow(r.mu_p, 3);
            if (!r.lemma_holds)
                throw InvariantViolation("mu_{p~}(F) < mu_p(F)^{3/4} for a tau-global family",
                                         json{{"mu_tilde", to_string(r.mu_tilde)}, {"mu_p", to_string(r.mu_p)}}.dump());
        }
    }
    return r;
}

MeasureUpgrade measure_upgrade(const SetFamily& f, const Rational& p, const Rational& tau, int z, int m) {
    require_probability(p, "p");
    if (tau < 2) throw PreconditionError("tau must be at least 2");
    if (z < 0 || m < 1) throw PreconditionError("need z >= 0 and m >= 1");
    if (f.n() > kMaxCubeDim) throw CapacityError("measure upgrade is limited to n <= 16");
    if (!is_upward_closed(f)) throw PreconditionError("family is not upward closed");
    const Rational step = 64 * tau;
    if (!(p < pow(step, -m) / 2)) throw PreconditionError("need p < (2^6 tau)^{-m} / 2");
    MeasureUpgrade u;
    u.initial = biased_measure(f, p);
    if (u.initial < pow(tau, -z))
        throw PreconditionError("need mu_p(F) >= tau^{-z}", json{{"mu_p", to_string(u.initial)}}.dump());

    SetFamily cur = f;
    Mask removed = 0;
    Rational pi = p;
    for (int i = 0; i < m; ++i) {
        const Mask ground = full_mask(f.n()) & ~removed;
        const Cube cube = make_cube(cur, ground, kMaxCubeDim);
        const int d = cube.dim();
        UpgradeRound round;
        round.p = pi;
        round.measure_before = measure_on(cur, pi, d);
        const GlobalRestriction g = scan(cube, pi, tau, true);
        round.r = g.b;
        cur = link(cur, g.b);
        removed |= g.b;
        const int d_next = d - popcount(g.b);
        round.measure_restricted = measure_on(cur, pi, d_next);
        pi *= step;
        round.measure_after = measure_on(cur, pi, d_next);
        round.one_step_holds = pow(round.measure_after, 4) >= pow(round.measure_restricted, 3);
        u.rounds.push_back(round);
    }
    u.r = removed;
    u.p_final = pi;
    u.final_measure = measure_on(cur, pi, f.n() - popcount(removed));
    u.size_bound = popcount(removed) <= 4 * z;
    // final ≥ initial^{(3/4)^m}  ⇔  final^{4^m} ≥ initial^{3^m}
    unsigned long four = 1, three = 1;
    for (int i = 0; i < m; ++i) four *= 4, three *= 3;
    u.measure_bound = pow(u.final_measure, static_cast<long>(four)) >= pow(u.initial, static_cast<long>(three));
    const Cube last = make_cube(cur, full_mask(f.n()) & ~removed, kMaxCubeDim);
    u.final_global = scan(last, pi, tau, false).value <= u.final_measure;
    if (!u.size_bound)
        throw InvariantViolation("|R| > 4z in measure upgrade", set_to_json(removed).dump());
    if (!u.measure_bound)
        throw InvariantViolation("upgraded measure below mu_p(F)^{(3/4)^m}",
                                 json{{"final", to_string(u.final_measure)}, {"initial", to_string(u.initial)}}.dump());
    return u;
}

HypercontractivityVerdict hypercontractivity_check(const SetFamily& f, const Rational& p, const Rational& tau,
                                                   const Rational& rho, const Rational& q) {
    require_probability(p, "p");
    check_rho(rho);
    if (q <= 2) throw PreconditionError("q must exceed 2");
    if (f.n() > 12) throw CapacityError("hypercontractivity check is limited to n <= 12");
    const auto gv = check_global(f, p, tau);
    if (!gv.ok)
        throw PreconditionError("family is not tau-global",
                                json{{"A", set_to_json(gv.violation->first)}, {"B", set_to_json(gv.violation->second)}}.dump());
    HypercontractivityVerdict v;
    v.p = p;
    v.tau = tau;
    v.rho = rho;
    v.q = q;
    const auto t = noise_operator(f, p, rho);
    const Rational mu = gv.measure;
    const int n = f.n();
    auto point_mass = [&](std::size_t x) -> Rational {
        return pow(p, popcount(x)) * pow(Rational(1) - p, n - popcount(x));
    };
    if (q.get_den() == 1) {
        const long qi = q.get_num().get_si();
        Rational lhs = 0;
        for (std::size_t x = 0; x < t.size(); ++x)
            if (t[x] != 0) lhs += point_mass(x) * pow(t[x], qi);
        v.lhs = Real(lhs);
        v.rhs = mu == 0 ? Real(0) : Real::rpow(mu, q / 2);
        v.holds = pow(lhs, 2) <= pow(mu, qi);
    } else {
        Real lhs(0);
        for (std::size_t x = 0; x < t.size(); ++x)
            if (t[x] != 0) lhs = lhs + Real(point_mass(x)) * Real::rpow(t[x], q);
        v.lhs = lhs;
        v.rhs = mu == 0 ? Real(0) : Real::rpow(mu, q / 2);
        auto c = v.lhs.compare(v.rhs);
        if (c) v.holds = *c <= 0;
    }
    const Real bound = Real::ln(q) / (Real(16) * Real(tau) * Real(q));
    auto c = bound.compare(rho);
    if (c) v.rho_within_bound = *c >= 0;
    return v;
}

json to_json(const GlobalRestriction& r) {
    return {{"A", set_to_json(r.a)}, {"B", set_to_json(r.b)}, {"value", to_string(r.value)}};
}

json to_json(const GlobalnessVerdict& v) {
    json j{{"p", to_string(v.p)},         {"tau", to_string(v.tau)},
           {"measure", to_string(v.measure)}, {"ok", v.ok},
           {"maximizer", to_json(v.best)},   {"collapse_applies", v.collapse_applies}};
    if (v.violation) j["violation"] = {{"A", set_to_json(v.violation->first)}, {"B", set_to_json(v.violation->second)}};
    return j;
}

json to_json(const SharpThresholdReport& r) {
    json j{{"p", to_string(r.p)},           {"p_tilde", to_string(r.p_tilde)}, {"rho", to_string(r.rho)},
           {"mu_p", to_string(r.mu_p)},     {"mu_p_tilde", to_string(r.mu_tilde)},
           {"stab", to_string(r.stab)},     {"rhs", to_string(r.rhs)},         {"holds", r.holds},
           {"lemma_applies", r.lemma_applies}};
    if (r.tau) j["tau"] = to_string(*r.tau);
    if (r.lemma_applies) j["lemma_holds"] = r.lemma_holds;
    return j;
}

json to_json(const MeasureUpgrade& u) {
    json rounds = json::array();
    for (const auto& r : u.rounds)
        rounds.push_back({{"R", set_to_json(r.r)},
                          {"p", to_string(r.p)},
                          {"measure_before", to_string(r.measure_before)},
                          {"measure_restricted", to_string(r.measure_restricted)},
                          {"measure_after", to_string(r.measure_after)},
                          {"one_step_holds", r.one_step_holds}});
    return {{"R", set_to_json(u.r)},
            {"p_final", to_string(u.p_final)},
            {"initial", to_string(u.initial)},
            {"final_measure", to_string(u.final_measure)},
            {"size_bound", u.size_bound},
            {"measure_bound", u.measure_bound},
            {"final_global", u.final_global},
            {"rounds", rounds}};
}

json to_json(const HypercontractivityVerdict& v) {
    json j{{"p", to_string(v.p)},     {"tau", to_string(v.tau)}, {"rho", to_string(v.rho)},
           {"q", to_string(v.q)},     {"lhs", v.lhs.to_string()}, {"rhs", v.rhs.to_string()}};
    j["holds"] = v.holds ? json(*v.holds) : json("undecided");
    j["rho_within_bound"] = v.rho_within_bound ? json(*v.rho_within_bound) : json("undecided");
    return j;
}

}  // namespace sforge
