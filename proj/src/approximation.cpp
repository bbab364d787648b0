#include "sforge/approximation.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <unordered_map>

#include "sforge/errors.hpp"
#include "sforge/spread.hpp"

namespace sforge {

namespace {

Rational count_q(std::size_t c) { return Rational(static_cast<unsigned long>(c)); }

json real_json(const Real& r) { return r.to_string(); }

json opt_json(const std::optional<bool>& b) { return b ? json(*b) : json("undecided"); }

// +1 / 0 / -1; undecided only happens at an exact tie of an irrational bound.
int decide(const Real& lhs, const Rational& rhs, const char* what) {
    auto c = lhs.compare(rhs);
    if (!c) throw InvariantViolation(std::string("undecided comparison: ") + what);
    return *c;
}

// rhs ≥ value, three-valued.
std::optional<bool> at_least(const Real& rhs, const Rational& value) {
    auto c = rhs.compare(value);
    if (!c) return std::nullopt;
    return *c >= 0;
}

void require_in_domain(const SetFamily& f, const Domain& a) {
    for (Mask m : f)
        if (popcount(m) != a.k() || a.link_count_or_zero(m) == 0)
            throw PreconditionError("family is not a subfamily of the domain", set_to_json(m).dump());
}

Real log_constant(int s, const Rational& x) {  // 2¹⁴ s log₂ x
    return Real(Rational(16384L * s)) * Real::log2(x);
}

SetFamily without_star(const SetFamily& f, Mask t) { return family_difference(f, trace_cover(f, t)); }

// Sorted element lists compared lexicographically.
bool lex_less(Mask a, Mask b) {
    const auto ea = elements(a), eb = elements(b);
    return std::lexicographical_compare(ea.begin(), ea.end(), eb.begin(), eb.end());
}

// p pairwise disjoint sets among `sets`.
bool has_matching(std::vector<Mask> sets, int p) {
    if (p <= 0) return true;
    if (static_cast<int>(sets.size()) < p) return false;
    std::sort(sets.begin(), sets.end(), [](Mask a, Mask b) { return canonical_less(a, b); });
    const int min_size = popcount(sets.front());
    std::function<bool(std::size_t, int, Mask)> rec = [&](std::size_t from, int need, Mask used) {
        if (need == 0) return true;
        if (sets.size() - from < static_cast<std::size_t>(need)) return false;
        Mask avail = 0;
        for (std::size_t i = from; i < sets.size(); ++i)
            if (!(sets[i] & used)) avail |= sets[i];
        if (popcount(avail) < need * min_size) return false;
        for (std::size_t i = from; i < sets.size(); ++i) {
            if (sets[i] & used) continue;
            if (rec(i + 1, need - 1, used | sets[i])) return true;
        }
        return false;
    };
    return rec(0, p, 0);
}

}  // namespace

bool partition_exact(const Decomposition& d, const SetFamily& f) {
    std::vector<Mask> all;
    for (const auto& part : d.parts)
        for (Mask m : part.link) {
            if (m & part.s) return false;
            all.push_back(m | part.s);
        }
    for (Mask m : d.remainder) all.push_back(m);
    std::vector<Mask> want(f.begin(), f.end());
    std::sort(all.begin(), all.end());
    std::sort(want.begin(), want.end());
    return all == want;
}

Decomposition spread_approximation(const SetFamily& f, const Domain& a, const Rational& tau, int q,
                                   const std::optional<Rational>& measure_floor) {
    if (tau <= 1) throw PreconditionError("spread_approximation needs tau > 1");
    if (q < 0) throw PreconditionError("spread_approximation needs q >= 0");
    if (measure_floor && *measure_floor < 0) throw PreconditionError("measure floor must be nonnegative");
    require_in_domain(f, a);
    Decomposition d;
    d.mode = PeelMode::Homogeneous;
    d.param = tau;
    d.q = q;
    d.floor = measure_floor;
    SetFamily cur = f;
    while (!cur.empty()) {
        const Mask s = max_homogeneous_restriction(cur, a, tau);
        if (popcount(s) > q) {
            d.stop_set = s;
            break;
        }
        SetFamily lk = link(cur, s);
        if (measure_floor && relative_measure(lk, a, s) < *measure_floor) {
            d.stop_set = s;
            break;
        }
        cur = without_star(cur, s);
        d.parts.push_back({s, std::move(lk)});
    }
    d.remainder = cur;
    Rational unit = pow(tau, -(q + 1));
    if (measure_floor && *measure_floor > unit) unit = *measure_floor;
    d.remainder_bound_exact = unit * Rational(a.size());
    mpz_fdiv_q(d.remainder_bound.get_mpz_t(), d.remainder_bound_exact.get_num_mpz_t(),
               d.remainder_bound_exact.get_den_mpz_t());
    if (count_q(d.remainder.size()) > d.remainder_bound_exact)
        throw InvariantViolation("spread approximation remainder exceeds its bound",
                                 json{{"remainder", d.remainder.size()}, {"bound", to_string(d.remainder_bound_exact)}}
                                     .dump());
    if (!partition_exact(d, f)) throw InvariantViolation("spread approximation lost or duplicated members");
    return d;
}

Decomposition spread_peeling(const SetFamily& f, const Rational& r, int w) {
    if (r <= 0) throw PreconditionError("spread_peeling needs R > 0");
    Decomposition d;
    d.mode = PeelMode::Spread;
    d.param = r;
    d.q = w;
    SetFamily cur = f;
    while (!cur.empty()) {
        const Mask s = max_spread_restriction(cur, r);
        if (popcount(s) > w) {
            d.stop_set = s;
            break;
        }
        SetFamily lk = link(cur, s);
        cur = without_star(cur, s);
        d.parts.push_back({s, std::move(lk)});
    }
    d.remainder = cur;
    if (!partition_exact(d, f)) throw InvariantViolation("spread peeling lost or duplicated members");
    return d;
}

SimplifyResult simplify(const SetFamily& sf, const Domain& a, int s, int t, const Rational& eps,
                        const SimplifyOptions& opt) {
    if (s < 2) throw PreconditionError("simplify needs s >= 2");
    if (t < 1) throw PreconditionError("simplify needs t >= 1");
    if (eps <= 0 || eps >= 1) throw PreconditionError("simplify needs 0 < eps < 1");
    if (opt.alpha && *opt.alpha <= 0) throw PreconditionError("alpha must be positive");
    for (Mask m : sf)
        if (a.link_count_or_zero(m) == 0) throw PreconditionError("member outside the shadow of the domain", set_to_json(m).dump());
    const int top = sf.empty() ? t : sf.max_size();
    const int q = std::max({opt.q.value_or(top), top, t});
    if (q > a.k()) throw PreconditionError("simplify needs q <= k");

    SimplifyResult res;
    res.q = q;
    res.s = s;
    res.t = t;
    res.eps = eps;
    const CorePredicate small_core = CorePredicate::at_most(s, t - 1, true);
    res.input_violation = find_sunflower(sf, small_core);
    if (res.input_violation && opt.check_input)
        throw PreconditionError("input contains an s-sunflower with core at most t-1",
                                to_json(*res.input_violation).dump());
    if (opt.alpha) {
        res.alpha = Real(*opt.alpha);
        res.alpha_overridden = true;
    } else {
        res.alpha = Real::max(Real(Rational(s * q)), log_constant(s, Rational(t)));
    }
    res.consistency_applies = decide(res.alpha, Rational(s * q), "alpha against sq") >= 0;

    std::vector<Real> apow{Real(1L)};
    for (int j = 1; j <= q; ++j) apow.push_back(apow.back() * res.alpha);

    res.stages.push_back(sf);
    for (int i = 0; i + t < q; ++i) {
        const SetFamily& cur = res.stages.back();
        SetFamily w = layer(cur, q - i);
        std::vector<Mask> born;
        while (!w.empty()) {
            // maximal T with |W(T)| α^{|T|} > |W|
            const SubsetCounts counts(w);
            const Rational total = count_q(w.size());
            std::optional<Mask> best;
            for (const auto& [x, c] : counts.table()) {
                if (best && (popcount(x) < popcount(*best) || (popcount(x) == popcount(*best) && x > *best)))
                    continue;
                if (decide(apow[popcount(x)] * Real(count_q(c)), total, "extraction threshold") > 0) best = x;
            }
            if (!best || popcount(*best) > q - i - 1) break;
            res.extractions.push_back({i, *best, link(w, *best)});
            w = without_star(w, *best);
            born.push_back(*best);
        }
        for (Mask m : layers_upto(cur, q - i - 1)) born.push_back(m);
        res.layers.push_back(std::move(w));
        res.stages.push_back(sf.with(std::move(born)));
    }
    res.result = res.stages.back();

    const bool guaranteed = res.consistency_applies && !res.input_violation;
    if (guaranteed) {
        for (std::size_t i = 0; i < res.stages.size(); ++i)
            if (auto w = find_sunflower(res.stages[i], small_core))
                throw InvariantViolation("simplification stage " + std::to_string(i) +
                                             " has an s-sunflower with core at most t-1",
                                         to_json(*w).dump());
        if (!res.result.empty() && res.result.uniformity() != t)
            throw InvariantViolation("simplification output is not t-uniform");
    }
    for (std::size_t i = 0; i < res.layers.size(); ++i) {
        const int qi = q - static_cast<int>(i);
        LayerBound b;
        b.layer = static_cast<int>(i);
        b.size = res.layers[i].size();
        b.rhs = log_constant(s, Rational(qi)).pow(t) * res.alpha.pow(qi - t);
        b.holds = at_least(b.rhs, count_q(b.size));
        if (guaranteed && b.holds == false)
            throw InvariantViolation("residual layer " + std::to_string(i) + " exceeds its size bound");
        res.layer_bounds.push_back(std::move(b));
    }

    const SetFamily& amb = a.family();
    const SetFamily missed = family_difference(sf, trace_cover(sf, res.result));
    res.uncovered = BigInt(static_cast<unsigned long>(trace_cover(amb, missed).size()));
    res.lemma_rhs = log_constant(s, Rational(t)).pow(t) * Real(eps / (Rational(1) - eps)) * Real(Rational(a.max_link(t).second));
    res.lemma_holds = at_least(res.lemma_rhs, Rational(res.uncovered));
    const Rational r = a.nominal_r();
    res.hypotheses_met = t >= 2 && eps * r > Rational(131072L * s * q) && check_rt_spread(a, r, t).ok;
    if (res.hypotheses_met && !res.input_violation && res.lemma_holds == false)
        throw InvariantViolation("simplification leaves more than the lemma allows");
    return res;
}

CoverResult down_closed_cover(const SetFamily& f, const Domain& a, int s, int t, std::optional<int> w,
                              std::optional<Rational> alpha) {
    if (s < 2) throw PreconditionError("down_closed_cover needs s >= 2");
    if (t < 1 || t > a.k()) throw PreconditionError("down_closed_cover needs 1 <= t <= k");
    require_in_domain(f, a);
    const CorePredicate small_core = CorePredicate::at_most(s, t - 1, true);
    if (auto wit = find_sunflower(f, small_core))
        throw PreconditionError("family contains an s-sunflower with core at most t-1", to_json(*wit).dump());

    CoverResult res;
    res.s = s;
    res.t = t;
    res.r = a.nominal_r();
    res.big_r = res.r / 2;
    if (w) {
        res.w = *w;
    } else {
        auto fl = (Real::log2(res.r) * Real(static_cast<long>(t + 1))).floor();
        if (!fl) throw InvariantViolation("undecided floor of (t+1) log2 r");
        res.w = static_cast<int>(fl->get_si());
    }
    const int k = a.k();
    const Real log2r = Real::log2(res.r);
    res.hypotheses_met = decide(log2r * Real(Rational(262144L * s * (t + 1))), res.r, "r against 2^18 s (t+1) log2 r") <= 0 &&
                         decide(Real::log2(Rational(k)) * Real(Rational(32768L * s)), res.r, "r against 2^15 s log2 k") <= 0 &&
                         check_rt_spread(a, res.r, t).ok;

    SimplifyOptions opt;
    opt.alpha = alpha;
    opt.check_input = false;
    if (k <= res.w) {
        res.skeleton = f;
        opt.q = k;
    } else {
        res.peeled = true;
        res.peeling = spread_peeling(f, res.big_r, res.w);
        std::vector<Mask> sk;
        for (const auto& part : res.peeling->parts) sk.push_back(part.s);
        res.skeleton = f.with(std::move(sk));
        res.skeleton_violation = find_sunflower(res.skeleton, small_core);
        if (res.skeleton_violation && res.hypotheses_met)
            throw InvariantViolation("peeled sets contain an s-sunflower with core at most t-1",
                                     to_json(*res.skeleton_violation).dump());
    }
    res.simplification = simplify(res.skeleton, a, s, t, Rational(1, 2), opt);
    res.result = res.simplification.result;
    res.covered = trace_cover(f, res.result);
    res.residue = family_difference(f, res.covered);
    res.result_sunflower_free = is_sunflower_free(res.result, CorePredicate::any(s));
    res.rhs = log_constant(s, Rational(t)).pow(t) * Real(Rational(524288L * s * (t + 1))) * log2r /
              Real(res.r) * Real(Rational(a.max_link(t).second));
    res.bound_holds = at_least(res.rhs, count_q(res.residue.size()));
    if (res.hypotheses_met && (!res.result_sunflower_free || res.bound_holds == false))
        throw InvariantViolation("down-closed cover misses its guarantee");
    return res;
}

std::optional<json> system_violation(const SystemSST& u) {
    const int s = u.s, t = u.t;
    const auto& parts = u.parts;
    const int m = static_cast<int>(parts.size());
    if (m < s) return std::nullopt;
    std::vector<int> idx(s);
    for (int i = 0; i < s; ++i) idx[i] = i;
    while (true) {
        std::vector<Mask> sets;
        for (int i : idx) sets.push_back(parts[i].s);
        if (auto core = is_sunflower(sets)) {
            const int c = popcount(*core);
            json tuple = json::array();
            for (Mask x : sets) tuple.push_back(set_to_json(x));
            if (c == t - 1) return json{{"clause", 1}, {"sets", tuple}, {"core", set_to_json(*core)}};
            if (c <= t - 2) {
                const int bound = t - c - 2;
                std::vector<Mask> pick;
                std::function<bool(int, Mask)> rec = [&](int i, Mask inter) {
                    if (popcount(inter) <= bound) return false;
                    if (i == s) return true;
                    for (Mask b : parts[idx[i]].b) {
                        pick.push_back(b);
                        if (rec(i + 1, inter & b)) return true;
                        pick.pop_back();
                    }
                    return false;
                };
                if (rec(0, ~Mask{0})) {
                    json members = json::array();
                    for (Mask b : pick) members.push_back(set_to_json(b));
                    return json{{"clause", 2}, {"sets", tuple}, {"core", set_to_json(*core)}, {"members", members}};
                }
            }
        }
        int i = s - 1;
        while (i >= 0 && idx[i] == m - s + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
    return std::nullopt;
}

ReduceResult reduce_intersections(const Decomposition& d, const Domain& a, int s, int t, const Rational& alpha) {
    if (d.mode != PeelMode::Homogeneous) throw PreconditionError("reduce_intersections needs a homogeneous decomposition");
    if (s < 2 || t < 1) throw PreconditionError("reduce_intersections needs s >= 2 and t >= 1");
    const int k = a.k();
    if (alpha <= 0 || alpha * 4 * k > 1) throw PreconditionError("reduce_intersections needs 0 < alpha <= 1/(4k)");
    std::vector<Mask> whole;
    for (const auto& part : d.parts)
        for (Mask m : part.link) whole.push_back(m | part.s);
    const SetFamily fam(a.ground_n(), whole);
    if (auto wit = find_sunflower(fam, CorePredicate::exact(s, t - 1)))
        throw PreconditionError("approximated family contains an s-sunflower with core t-1", to_json(*wit).dump());

    ReduceResult res;
    res.alpha = alpha;
    res.tau = d.param;
    res.system.s = s;
    res.system.t = t;
    const Rational shrink = Rational(1) - 2 * alpha * k;
    const SetFamily& amb = a.family();
    for (const auto& part : d.parts) {
        auto hs = homogeneous_subfamily(part.link, a, d.param, alpha, t, part.s);
        PartReduction pr;
        pr.s = part.s;
        pr.before = part.link.size();
        pr.after = hs.g.size();
        pr.size_bound = shrink * count_q(pr.before);
        if (count_q(pr.after) < pr.size_bound) throw InvariantViolation("reduced part below (1 - 2 alpha k)|F_S|");
        // τ' is the least τ making F_S homogeneous; compare through ρ_X = μ(F(X))/μ(F).
        const SetFamily amb_link = link(amb, part.s);
        const SubsetCounts fc(part.link);
        const BigInt base = a.link_count(part.s);
        std::vector<std::pair<int, Rational>> rho;
        for (const auto& [x, c] : fc.table()) {
            if (x == 0) continue;
            rho.emplace_back(popcount(x), ratio(BigInt(static_cast<unsigned long>(c)) * base,
                                                a.link_count(part.s | x) * BigInt(static_cast<unsigned long>(pr.before))));
        }
        for (int h = 1; h < k - popcount(part.s); ++h) {
            const std::size_t su = shadow(hs.g, h).size(), sa = shadow(amb_link, h).size();
            bool ok = false;
            if (su > 0) {
                const Rational need = pow(shrink, h) * count_q(sa) / count_q(su);
                for (const auto& [sz, r] : rho)
                    if (pow(r, h) >= pow(need, sz)) {
                        ok = true;
                        break;
                    }
            }
            pr.shadow_checks.emplace_back(h, ok);
            if (!ok) res.shadow_ok = false;
        }
        res.parts.push_back(std::move(pr));
        res.system.parts.push_back({part.s, hs.g});
    }
    res.clause_violation = system_violation(res.system);

    int log2k = 0;
    while ((1 << log2k) < k) ++log2k;
    const Rational lead = std::max(Rational(32768L * log2k), Rational(2L * d.q));
    res.hypotheses_met = a.nominal_r() > lead * s * pow(alpha, 1 - t) * pow(d.param, t);
    if (res.hypotheses_met && res.clause_violation)
        throw InvariantViolation("reduced family is not an (S,s,t)-system", res.clause_violation->dump());
    if (res.hypotheses_met && !res.shadow_ok) throw InvariantViolation("reduced part has too small a shadow");
    return res;
}

PhiValue phi_value(int s, int t) {
    if (s < 2 || t < 1) throw PreconditionError("phi needs s >= 2 and t >= 1");
    if (t == 1 || s == 2 || (s == 3 && t == 2)) {
        auto r = phi_exact(s, t);
        return {Real(Rational(static_cast<unsigned long>(r.value))), true, "phi_exact"};
    }
    return {log_constant(s, Rational(t)).pow(t), false, "(2^14 s log2 t)^t"};
}

namespace {

// Fewest t-sets such that each of `sets` contains one of them.
std::vector<Mask> smallest_cover(const std::vector<Mask>& sets, int t) {
    std::vector<Mask> best;
    for (Mask m : sets) {
        Mask first = 0;
        for_each_ksubset(m, t, [&](Mask x) {
            if (!first) first = x;
        });
        best.push_back(first);
    }
    std::sort(best.begin(), best.end());
    best.erase(std::unique(best.begin(), best.end()), best.end());
    std::vector<Mask> cur;
    std::function<void()> rec = [&]() {
        if (cur.size() >= best.size()) return;
        const Mask* open = nullptr;
        for (const Mask& m : sets) {
            bool hit = false;
            for (Mask c : cur)
                if (is_subset(c, m)) hit = true;
            if (!hit) {
                open = &m;
                break;
            }
        }
        if (!open) {
            best = cur;
            return;
        }
        std::vector<Mask> opts;
        for_each_ksubset(*open, t, [&](Mask x) { opts.push_back(x); });
        std::sort(opts.begin(), opts.end(), [](Mask x, Mask y) { return canonical_less(x, y); });
        for (Mask x : opts) {
            cur.push_back(x);
            rec();
            cur.pop_back();
        }
    };
    rec();
    std::sort(best.begin(), best.end(), [](Mask x, Mask y) { return canonical_less(x, y); });
    return best;
}

}  // namespace

ClusterResult cluster_system(const SystemSST& u, const Domain& a, const Rational& lambda) {
    if (lambda <= 0 || lambda > 1) throw PreconditionError("cluster_system needs 0 < lambda <= 1");
    const int s = u.s, t = u.t;
    if (s < 2 || t < 1) throw PreconditionError("cluster_system needs s >= 2 and t >= 1");
    const SetFamily& amb = a.family();
    const std::size_t base = shadow(amb, t - 1).size();
    int q = t;
    std::map<Mask, const SetFamily*> b_of;
    for (const auto& part : u.parts) {
        if (popcount(part.s) < t)
            throw PreconditionError("system part smaller than t", set_to_json(part.s).dump());
        if (count_q(shadow(part.b, t - 1).size()) < lambda * count_q(base))
            throw PreconditionError("part has |shadow_{t-1} U_S| < lambda |shadow_{t-1} A|", set_to_json(part.s).dump());
        q = std::max(q, popcount(part.s));
        b_of[part.s] = &part.b;
    }
    if (auto v = system_violation(u)) throw PreconditionError("input is not an (S,s,t)-system", v->dump());

    ClusterResult res;
    res.lambda = lambda;
    std::vector<Mask> remaining;
    for (const auto& part : u.parts) remaining.push_back(part.s);
    std::sort(remaining.begin(), remaining.end(), [](Mask x, Mask y) { return canonical_less(x, y); });
    std::vector<Mask> hat;
    const int n = a.ground_n();
    while (lambda * count_q(remaining.size()) > 1) {
        std::map<Mask, std::size_t> hits;
        std::map<Mask, std::vector<Mask>> shadows;
        for (Mask sm : remaining) shadows[sm] = shadow(*b_of[sm], t - 1).members();
        for (Mask sm : remaining)
            for (Mask h : shadows[sm]) ++hits[h];
        Mask h_best = 0;
        std::size_t c_best = 0;
        for (const auto& [h, c] : hits)
            if (c > c_best || (c == c_best && canonical_less(h, h_best))) {
                h_best = h;
                c_best = c;
            }
        if (count_q(c_best) < lambda * count_q(remaining.size()))
            throw InvariantViolation("clustering stalled: no (t-1)-set hits a lambda fraction of the parts");
        ClusterStep step;
        step.h = h_best;
        std::vector<Mask> rest;
        for (Mask sm : remaining) {
            const auto& sh = shadows[sm];
            if (std::binary_search(sh.begin(), sh.end(), h_best, [](Mask x, Mask y) { return canonical_less(x, y); }))
                step.members.push_back(sm);
            else
                rest.push_back(sm);
        }
        step.simplification = simplify(SetFamily(n, step.members), a, s, t, Rational(1, 2));
        for (Mask x : step.simplification.result) hat.push_back(x);
        res.steps.push_back(std::move(step));
        remaining = std::move(rest);
    }
    res.leftover = remaining;
    res.final_cover = SetFamily(n, smallest_cover(remaining, t));
    for (Mask x : res.final_cover) hat.push_back(x);
    res.t_hat = SetFamily(n, hat);

    res.phi = phi_value(s, t);
    res.shadow_size = BigInt(static_cast<unsigned long>(shadow_upto(amb, q).size()));
    const Rational scaled = lambda * Rational(res.shadow_size);
    const Real log_term = Real::ln(scaled);
    res.count_rhs = Real(1 / lambda) * (Real(1L) + Real(2L) * res.phi.value * log_term);
    res.count_holds = at_least(res.count_rhs, count_q(res.t_hat.size()));
    bool steps_sound = true;
    for (const auto& st : res.steps) steps_sound = steps_sound && st.simplification.consistency_applies;
    if (steps_sound && scaled >= 1 && res.count_holds == false)
        throw InvariantViolation("clustering produced more t-sets than the count bound");

    res.remainder = 0;
    for (const auto& part : u.parts) {
        bool covered = false;
        for (Mask x : res.t_hat)
            if (is_subset(x, part.s)) covered = true;
        if (!covered) res.remainder += static_cast<unsigned long>(part.b.size());
    }
    const Rational r = a.nominal_r();
    res.remainder_rhs = log_constant(s, Rational(t)).pow(t) / Real(lambda * r) * Real(4L) * log_term *
                        Real(Rational(a.max_link(t).second));
    res.remainder_holds = at_least(res.remainder_rhs, Rational(res.remainder));
    res.hypotheses_met = t >= 2 && r > Rational(262144L * s * q);
    return res;
}

PeelResult peel_high_uniformity(const SetFamily& f, int s, int t) {
    if (s < 2 || t < 1) throw PreconditionError("peel_high_uniformity needs s >= 2 and t >= 1");
    auto k_opt = f.uniformity();
    if (!f.empty() && !k_opt) throw PreconditionError("peel_high_uniformity needs a uniform family");
    const int k = k_opt.value_or(2 * t + 1);
    if (k < 2 * t + 1) throw PreconditionError("peel_high_uniformity needs k >= 2t+1");
    const CorePredicate core_pred = CorePredicate::exact(s, t - 1);
    if (auto wit = find_sunflower(f, core_pred))
        throw PreconditionError("family contains an s-sunflower with core t-1", to_json(*wit).dump());

    PeelResult res;
    res.k = k;
    res.s = s;
    res.t = t;
    res.alpha = Rational(s * k);
    res.stages.push_back(f);
    for (int i = 0; i + 2 * t + 1 < k; ++i) {
        const SetFamily& cur = res.stages.back();
        SetFamily w = layer(cur, k - i);
        std::vector<Mask> born, small;
        while (!w.empty()) {
            std::optional<Mask> pick;
            for (int j = k - i - 1; j >= 0 && !pick; --j) {
                for (Mask x : shadow(w, j)) {
                    SetFamily lk = link(w, x);
                    if (count_q(lk.size()) < res.alpha) continue;  // singletons already violate
                    if (check_spread(lk, res.alpha).ok) {
                        pick = x;
                        break;
                    }
                }
            }
            if (!pick) break;
            res.extractions.push_back({i, *pick, link(w, *pick)});
            w = without_star(w, *pick);
            (popcount(*pick) > 2 * t - 1 ? born : small).push_back(*pick);
        }
        for (Mask m : layers_upto(cur, k - i - 1)) born.push_back(m);
        res.w_layers.push_back(std::move(w));
        res.u_layers.push_back(f.with(std::move(small)));
        res.stages.push_back(f.with(std::move(born)));
    }
    res.result = res.stages.back();
    for (Mask m : res.result)
        if (popcount(m) != 2 * t && popcount(m) != 2 * t + 1)
            throw InvariantViolation("peeled family has a member of size other than 2t, 2t+1", set_to_json(m).dump());
    std::vector<Mask> all;
    for (const auto& st : res.stages) all.insert(all.end(), st.begin(), st.end());
    for (const auto& ul : res.u_layers) all.insert(all.end(), ul.begin(), ul.end());
    if (auto wit = find_sunflower(f.with(std::move(all)), core_pred))
        throw InvariantViolation("peeling byproducts contain an s-sunflower with core t-1", to_json(*wit).dump());
    return res;
}

DeltaFilter delta_filter(const SetFamily& f, int p, int t) {
    if (p < 1) throw PreconditionError("delta_filter needs p >= 1");
    if (t < 0) throw PreconditionError("delta_filter needs t >= 0");
    auto k_opt = f.uniformity();
    if (!f.empty() && !k_opt) throw PreconditionError("delta_filter needs a uniform family");
    const int k = k_opt.value_or(t);
    if (t > k) throw PreconditionError("delta_filter needs t <= k");

    DeltaFilter res;
    res.p = p;
    res.t = t;
    res.reference = k - t - 1 >= 0 ? binomial(f.n(), k - t - 1) : BigInt(0);
    std::vector<Mask> g(f.begin(), f.end());
    while (true) {
        std::unordered_map<Mask, bool> is_core;
        auto core_ok = [&](Mask e) {
            auto it = is_core.find(e);
            if (it != is_core.end()) return it->second;
            std::vector<Mask> petals;
            for (Mask m : g)
                if (is_subset(e, m)) petals.push_back(m & ~e);
            const bool ok = has_matching(std::move(petals), p);
            is_core.emplace(e, ok);
            return ok;
        };
        std::vector<Mask> keep;
        std::vector<std::pair<Mask, Mask>> kernel;
        for (Mask m : g) {
            std::vector<Mask> ts;
            for_each_ksubset(m, t, [&](Mask x) { ts.push_back(x); });
            std::sort(ts.begin(), ts.end(), lex_less);
            std::optional<Mask> found;
            for (Mask x : ts) {
                const Mask free = m & ~x;
                bool all = true;
                for_each_subset(free, [&](Mask d) {
                    if (all && d != free && !core_ok(x | d)) all = false;
                });
                if (all) {
                    found = x;
                    break;
                }
            }
            if (found) {
                keep.push_back(m);
                kernel.emplace_back(m, *found);
            }
        }
        if (keep.size() == g.size()) {
            res.kernel = std::move(kernel);
            break;
        }
        g = std::move(keep);
        ++res.rounds;
    }
    res.kept = f.with(g);
    res.removed = family_difference(f, res.kept);
    return res;
}

std::optional<SunflowerWitness> delta_group_sunflower(const DeltaFilter& d, int s) {
    std::map<Mask, std::vector<Mask>> groups;
    for (const auto& [m, x] : d.kernel) groups[m & ~x].push_back(x);
    for (const auto& [dset, kernels] : groups) {
        if (static_cast<int>(kernels.size()) < s) continue;
        if (auto w = find_sunflower(d.kept.with(kernels), CorePredicate::any(s))) return w;
    }
    return std::nullopt;
}

json to_json(const Decomposition& d) {
    json parts = json::array();
    for (const auto& part : d.parts) parts.push_back({{"S", set_to_json(part.s)}, {"F_S", to_json(part.link)}});
    json j{{"mode", d.mode == PeelMode::Homogeneous ? "homogeneous" : "spread"},
           {d.mode == PeelMode::Homogeneous ? "tau" : "R", to_string(d.param)},
           {"q", d.q},
           {"parts", parts},
           {"remainder", to_json(d.remainder)}};
    if (d.floor) j["measure_floor"] = to_string(*d.floor);
    if (d.stop_set) j["stop_set"] = set_to_json(*d.stop_set);
    if (d.mode == PeelMode::Homogeneous)
        j["remainder_bound"] = {{"lhs", d.remainder.size()}, {"rhs", to_string(d.remainder_bound_exact)}};
    return j;
}

json to_json(const SimplifyResult& r) {
    json ex = json::array();
    for (const auto& e : r.extractions)
        ex.push_back({{"layer", e.layer}, {"T", set_to_json(e.t)}, {"link_size", e.link.size()}});
    json layers = json::array();
    for (const auto& b : r.layer_bounds)
        layers.push_back({{"layer", b.layer}, {"size", b.size}, {"rhs", real_json(b.rhs)}, {"holds", opt_json(b.holds)}});
    json stages = json::array();
    for (const auto& st : r.stages) stages.push_back(to_json(st));
    json j{{"q", r.q},
           {"s", r.s},
           {"t", r.t},
           {"eps", to_string(r.eps)},
           {"alpha", real_json(r.alpha)},
           {"alpha_overridden", r.alpha_overridden},
           {"consistency_applies", r.consistency_applies},
           {"extractions", ex},
           {"layers", layers},
           {"stages", stages},
           {"T", to_json(r.result)},
           {"uncovered", to_string(r.uncovered)},
           {"lemma_rhs", real_json(r.lemma_rhs)},
           {"lemma_holds", opt_json(r.lemma_holds)},
           {"hypotheses_met", r.hypotheses_met}};
    if (r.input_violation) j["input_violation"] = to_json(*r.input_violation);
    return j;
}

json to_json(const CoverResult& r) {
    json j{{"s", r.s},
           {"t", r.t},
           {"w", r.w},
           {"r", to_string(r.r)},
           {"R", to_string(r.big_r)},
           {"peeled", r.peeled},
           {"skeleton", to_json(r.skeleton)},
           {"simplification", to_json(r.simplification)},
           {"T", to_json(r.result)},
           {"covered", r.covered.size()},
           {"residue", to_json(r.residue)},
           {"T_sunflower_free", r.result_sunflower_free},
           {"residue_bound", {{"lhs", r.residue.size()}, {"rhs", real_json(r.rhs)}, {"holds", opt_json(r.bound_holds)}}},
           {"hypotheses_met", r.hypotheses_met}};
    if (r.peeling) j["peeling"] = to_json(*r.peeling);
    if (r.skeleton_violation) j["skeleton_violation"] = to_json(*r.skeleton_violation);
    return j;
}

json to_json(const SystemSST& u) {
    json parts = json::array();
    for (const auto& part : u.parts) parts.push_back({{"S", set_to_json(part.s)}, {"B_S", to_json(part.b)}});
    return {{"s", u.s}, {"t", u.t}, {"parts", parts}};
}

json to_json(const ReduceResult& r) {
    json parts = json::array();
    for (const auto& p : r.parts) {
        json sh = json::array();
        for (const auto& [h, ok] : p.shadow_checks) sh.push_back({{"h", h}, {"holds", ok}});
        parts.push_back({{"S", set_to_json(p.s)},
                         {"before", p.before},
                         {"after", p.after},
                         {"size_bound", to_string(p.size_bound)},
                         {"shadow", sh}});
    }
    json j{{"alpha", to_string(r.alpha)}, {"tau", to_string(r.tau)},     {"parts", parts},
           {"system", to_json(r.system)}, {"shadow_ok", r.shadow_ok}, {"hypotheses_met", r.hypotheses_met}};
    j["clauses_ok"] = !r.clause_violation.has_value();
    if (r.clause_violation) j["clause_violation"] = *r.clause_violation;
    return j;
}

json to_json(const ClusterResult& r) {
    json steps = json::array();
    for (const auto& st : r.steps) {
        json mem = json::array();
        for (Mask m : st.members) mem.push_back(set_to_json(m));
        steps.push_back({{"H", set_to_json(st.h)}, {"members", mem}, {"T_i", to_json(st.simplification.result)}});
    }
    json left = json::array();
    for (Mask m : r.leftover) left.push_back(set_to_json(m));
    return {{"lambda", to_string(r.lambda)},
            {"steps", steps},
            {"leftover", left},
            {"final_cover", to_json(r.final_cover)},
            {"T_hat", to_json(r.t_hat)},
            {"phi", {{"value", real_json(r.phi.value)}, {"exact", r.phi.exact}, {"source", r.phi.source}}},
            {"shadow_size", to_string(r.shadow_size)},
            {"count_bound", {{"lhs", r.t_hat.size()}, {"rhs", real_json(r.count_rhs)}, {"holds", opt_json(r.count_holds)}}},
            {"remainder_bound",
             {{"lhs", to_string(r.remainder)}, {"rhs", real_json(r.remainder_rhs)}, {"holds", opt_json(r.remainder_holds)}}},
            {"hypotheses_met", r.hypotheses_met}};
}

json to_json(const PeelResult& r) {
    json ex = json::array();
    for (const auto& e : r.extractions)
        ex.push_back({{"layer", e.layer}, {"T", set_to_json(e.t)}, {"link_size", e.link.size()}});
    json us = json::array(), ws = json::array();
    for (const auto& u : r.u_layers) us.push_back(to_json(u));
    for (const auto& w : r.w_layers) ws.push_back(to_json(w));
    return {{"k", r.k},        {"s", r.s},        {"t", r.t},  {"alpha", to_string(r.alpha)},
            {"extractions", ex}, {"U_layers", us}, {"W_layers", ws}, {"T", to_json(r.result)}};
}

json to_json(const DeltaFilter& d) {
    json ker = json::array();
    for (const auto& [m, x] : d.kernel) ker.push_back({{"F", set_to_json(m)}, {"T", set_to_json(x)}});
    return {{"p", d.p},
            {"t", d.t},
            {"kept", to_json(d.kept)},
            {"removed", to_json(d.removed)},
            {"rounds", d.rounds},
            {"kernels", ker},
            {"removed_vs_reference", {{"removed", d.removed.size()}, {"C(n,k-t-1)", to_string(d.reference)}}}};
}

}  // namespace sforge
