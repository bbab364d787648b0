#include "sforge/bounds.hpp"

#include <map>
#include <sstream>

#include "sforge/errors.hpp"

namespace sforge {

namespace {

Rational count_q(std::size_t c) { return Rational(static_cast<unsigned long>(c)); }

BigInt ipow(long base, long e) { return pow(BigInt(base), static_cast<unsigned long>(e)); }

Real binom(long n, long k) { return Real(Rational(binomial(n, k))); }

// (2¹⁴ s log₂ t)^t
Real phi_coloring_value(int s, int t) { return (Real(Rational(16384L * s)) * Real::log2(Rational(t))).pow(t); }

// lhs ≤ rhs, three-valued.
std::optional<bool> at_most(const Real& lhs, const Rational& rhs) {
    auto c = lhs.compare(rhs);
    if (!c) return std::nullopt;
    return *c <= 0;
}

// Conjunction over three-valued facts: false dominates, then unknown.
std::optional<bool> all_of(std::initializer_list<std::optional<bool>> xs) {
    bool unknown = false;
    for (const auto& x : xs) {
        if (x == false) return false;
        if (!x) unknown = true;
    }
    if (unknown) return std::nullopt;
    return true;
}

class Params {
public:
    explicit Params(const json& j) : j_(j) {
        if (!j_.is_object()) throw PreconditionError("bound parameters must be a JSON object");
    }
    bool has(const char* key) const { return j_.contains(key); }
    long integer(const char* key) const {
        if (!j_.contains(key)) throw PreconditionError(std::string("missing bound parameter '") + key + "'");
        const auto& v = j_.at(key);
        if (v.is_number_integer()) return v.get<long>();
        throw PreconditionError(std::string("bound parameter '") + key + "' must be an integer");
    }
    Rational rational(const char* key) const {
        if (!j_.contains(key)) throw PreconditionError(std::string("missing bound parameter '") + key + "'");
        const auto& v = j_.at(key);
        if (v.is_number_integer()) return Rational(v.get<long>());
        if (v.is_string()) return parse_rational(v.get<std::string>());
        throw PreconditionError(std::string("bound parameter '") + key + "' must be an integer or a rational string");
    }
    std::optional<bool> flag(const char* key) const {
        if (!j_.contains(key)) return std::nullopt;
        return j_.at(key).get<bool>();
    }

private:
    const json& j_;
};

// n ≥ 2¹⁶ s k min{log₂k + 2³⁶s³t⁴, 2³³⁹s⁴³t⁸⁰ + 2¹⁶⁰⁰⁰}
std::optional<bool> main_n_condition(long n, long k, long s, long t) {
    const Real a = Real::log2(Rational(k)) + Real(Rational(ipow(2, 36) * ipow(s, 3) * ipow(t, 4)));
    const Rational b = Rational(ipow(2, 339) * ipow(s, 43) * ipow(t, 80) + ipow(2, 16000));
    auto c = a.compare(b);
    const Real m = (c && *c <= 0) ? a : Real(b);
    return at_most(Real(Rational(65536L * s * k)) * m, Rational(n));
}

void need(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

}  // namespace

const std::vector<std::string>& bound_names() {
    static const std::vector<std::string> names{
        "erdos_rado",   "phi_coloring", "ekr",          "erdos_matching",       "down_closed_core",
        "down_closed_general", "main_large_k", "main_large_k_derived", "main_small_k", "delta_system",
        "bradac",       "example23_lower", "fstar_gap"};
    return names;
}

BoundValue bound_rhs(const std::string& name, const json& params) {
    const Params p(params);
    BoundValue b;
    b.name = name;
    b.params = params;
    auto phi_for = [&](long s, long t) {
        b.phi = phi_value(static_cast<int>(s), static_cast<int>(t));
        return b.phi->value;
    };

    if (name == "erdos_rado") {
        const long s = p.integer("s"), k = p.integer("k");
        need(s >= 2 && k >= 1, "erdos_rado needs s >= 2, k >= 1");
        b.value = Real(Rational(erdos_rado_bound(static_cast<int>(s), static_cast<int>(k))));
        b.expression = "k!(s-1)^k";
        b.hypotheses = "k-uniform family without an s-petal sunflower";
        b.hypotheses_met = true;
    } else if (name == "phi_coloring") {
        const long s = p.integer("s"), t = p.integer("t");
        need(s >= 2 && t >= 1, "phi_coloring needs s >= 2, t >= 1");
        b.value = phi_coloring_value(static_cast<int>(s), static_cast<int>(t));
        b.expression = "(2^14 s log2 t)^t";
        b.hypotheses = "t >= 2 (the value is 0 at t = 1)";
        b.hypotheses_met = t >= 2;
    } else if (name == "ekr") {
        const long n = p.integer("n"), k = p.integer("k");
        need(k >= 1 && n >= k, "ekr needs 1 <= k <= n");
        b.value = binom(n - 1, k - 1);
        b.expression = "C(n-1,k-1)";
        b.hypotheses = "intersecting (s = 2, t = 1), n >= 2k";
        b.hypotheses_met = n >= 2 * k;
    } else if (name == "erdos_matching") {
        const long n = p.integer("n"), k = p.integer("k"), s = p.integer("s");
        need(k >= 1 && n >= k && s >= 2, "erdos_matching needs 1 <= k <= n, s >= 2");
        const BigInt x = binomial(k * s - 1, k), y = binomial(n, k) - binomial(n - (s - 1), k);
        b.value = Real(Rational(x > y ? x : y));
        b.expression = "max{C(ks-1,k), C(n,k)-C(n-s+1,k)}";
        b.hypotheses = "no s pairwise disjoint sets, n >= ks-1; proved for k <= 2, conjectured beyond";
        if (n < k * s - 1)
            b.hypotheses_met = false;
        else if (k <= 2)
            b.hypotheses_met = true;
    } else if (name == "down_closed_core") {
        const long n = p.integer("n"), k = p.integer("k"), s = p.integer("s"), t = p.integer("t");
        need(k >= t && t >= 1 && s >= 2 && n > k, "down_closed_core needs 1 <= t <= k < n, s >= 2");
        const Rational r = ratio(n, k);
        const Real log2r = Real::log2(r);
        const Real phi = phi_for(s, t);
        const Real c = binom(n - t, k - t);
        b.value = phi * c + phi_coloring_value(static_cast<int>(s), static_cast<int>(t)) *
                                Real(Rational(524288L * s * (t + 1))) * log2r / Real(r) * c;
        b.expression = "phi(s,t) C(n-t,k-t) + (2^14 s log2 t)^t 2^19 s(t+1) log2(n/k)/(n/k) C(n-t,k-t)";
        b.hypotheses = "core at most t-1; n/k >= 2^18 s(t+1) log2(n/k), n >= 2^15 s k log2 k";
        b.hypotheses_met = all_of({at_most(Real(Rational(262144L * s * (t + 1))) * log2r, r),
                                   at_most(Real(Rational(32768L * s * k)) * Real::log2(Rational(k)), Rational(n))});
    } else if (name == "down_closed_general") {
        const long s = p.integer("s"), t = p.integer("t"), k = p.integer("k");
        const Rational r = p.rational("r"), a_t = p.rational("a_t");
        need(s >= 2 && t >= 1 && k >= t && r > 1, "down_closed_general needs s >= 2, 1 <= t <= k, r > 1");
        const Real log2r = Real::log2(r);
        Real cover = p.has("cover") ? Real(p.rational("cover")) : phi_for(s, t) * Real(a_t);
        b.value = cover + phi_coloring_value(static_cast<int>(s), static_cast<int>(t)) *
                              Real(Rational(524288L * s * (t + 1))) * log2r / Real(r) * Real(a_t);
        b.expression = std::string(p.has("cover") ? "cover" : "phi(s,t) A_t") +
                       " + (2^14 s log2 t)^t 2^19 s(t+1) log2 r / r A_t";
        b.hypotheses = "core at most t-1; A (r,t)-spread, r >= 2^18 s(t+1) log2 r, r >= 2^15 s log2 k";
        b.hypotheses_met = all_of({at_most(Real(Rational(262144L * s * (t + 1))) * log2r, r),
                                   at_most(Real(Rational(32768L * s)) * Real::log2(Rational(k)), r), p.flag("spread")});
    } else if (name == "main_large_k" || name == "main_large_k_derived" || name == "main_small_k") {
        const long n = p.integer("n"), k = p.integer("k"), s = p.integer("s"), t = p.integer("t");
        need(k >= 1 && t >= 1 && k >= t && s >= 2 && n > k, "main bounds need 1 <= t <= k < n, s >= 2");
        const Rational r = ratio(n, k);
        const Real phi = phi_for(s, t);
        const Real c = binom(n - t, k - t);
        const Real log2n = Real::log2(Rational(n));
        const std::optional<bool> k_large = at_most(Real(Rational(33L * s * t * t)) * log2n, Rational(k));
        const std::optional<bool> base = all_of({t >= 2, k >= 2 * t + 1, main_n_condition(n, k, s, t)});
        if (name == "main_small_k") {
            b.value = phi * c + Real::rpow(Rational(n), Rational(-1, 3)) * c;
            b.expression = "phi(s,t) C(n-t,k-t) + n^(-1/3) C(n-t,k-t)";
            b.hypotheses_met = all_of({base, k_large ? std::optional<bool>(!*k_large) : std::nullopt});
            b.hypotheses = "core exactly t-1; t >= 2, k >= 2t+1, k < 33 s t^2 log2 n, n large, n >= n0(s,t) (unspecified)";
        } else {
            const Real lead = phi_coloring_value(static_cast<int>(s), static_cast<int>(t));
            const Real log2r = Real::log2(r);
            if (name == "main_large_k") {
                b.value = phi * c + lead * Real(Rational(131072L * s * s * t * t)) * Real(ratio(k, n)) * log2r * c;
                b.expression = "phi(s,t) C(n-t,k-t) + (2^14 s log2 t)^t 2^17 s^2 t^2 k log2(n/k)/n C(n-t,k-t)";
            } else {
                b.value = phi * c + lead * Real(Rational(32L * s * s * t * t)) * Real(ratio(k, n)) * log2r * log2r * c;
                b.expression = "phi(s,t) C(n-t,k-t) + (2^14 s log2 t)^t 2^5 s^2 t^2 k log2^2(n/k)/n C(n-t,k-t)";
            }
            b.hypotheses_met = all_of({base, k_large});
            b.hypotheses = "core exactly t-1; t >= 2, k >= 2t+1, k >= 33 s t^2 log2 n, n large, n >= n0(s,t) (unspecified)";
        }
        // n0(s,t) is never specified, so a met hypothesis set is at best unknown.
        if (b.hypotheses_met == true) b.hypotheses_met = std::nullopt;
    } else if (name == "delta_system") {
        const long n = p.integer("n"), k = p.integer("k"), s = p.integer("s"), t = p.integer("t");
        need(k >= t && t >= 1 && s >= 2 && n > k, "delta_system needs 1 <= t <= k < n, s >= 2");
        const Real known = phi_for(s, t) * binom(n, k - t);
        b.expression = "phi(s,t) C(n,k-t) + k c(s,k)/(n-k) C(n,k-t) with phi(s,t) C(n,k-t) = " + known.to_string() +
                       ", c(s,k) <= s^(2^k) 2^(2^(Ck)) unspecified";
        b.hypotheses = "core exactly t-1; k >= 2t+1";
        b.hypotheses_met = k >= 2 * t + 1;
    } else if (name == "bradac") {
        const long n = p.integer("n"), k = p.integer("k"), s = p.integer("s"), t = p.integer("t");
        need(k >= t && t >= 1 && s >= 2, "bradac needs 1 <= t <= k, s >= 2");
        if (k >= 2 * t - 1)
            b.expression = "C_k n^(k-t) s^t = C_k * " + to_string(BigInt(ipow(n, k - t) * ipow(s, t)));
        else
            b.expression = "C_k n^(t-1) s^(k-t+1) = C_k * " + to_string(BigInt(ipow(n, t - 1) * ipow(s, k - t + 1)));
        b.hypotheses = "core exactly t-1; C_k unspecified";
        b.hypotheses_met = true;
    } else if (name == "example23_lower") {
        const long n = p.integer("n"), k = p.integer("k"), t = p.integer("t"), m = p.integer("m");
        need(k >= t && t >= 1 && n > t && m >= 0, "example23_lower needs 1 <= t <= k, n > t, m >= 0");
        const Real c = binom(n - t, k - t);
        b.value = Real(Rational(m)) * c - Real(Rational(t * m * m * (k - t))) / Real(Rational(n - t)) * c;
        b.expression = "m C(n-t,k-t) - t m^2 (k-t)/(n-t) C(n-t,k-t)";
        b.hypotheses = "m = |T| with T t-uniform and s-sunflower-free, n > t m";
        b.hypotheses_met = n > t * m;
    } else if (name == "fstar_gap") {
        const long t = p.integer("t");
        const Rational r = p.rational("r"), a_t = p.rational("a_t");
        need(t >= 1 && r > 0, "fstar_gap needs t >= 1, r > 0");
        const Real phi = p.has("m") ? Real(p.rational("m")) : phi_for(p.integer("s"), t);
        b.value = Real(Rational(t)) * phi * phi / Real(r) * Real(a_t);
        b.expression = "t phi(s,t)^2 / r A_t";
        b.hypotheses = "A (r,t)-spread";
        b.hypotheses_met = p.flag("spread");
    } else {
        throw PreconditionError("unknown bound '" + name + "'");
    }
    return b;
}

SetFamily example_23(int n, int k, int s, int t, const SetFamily& tfam) {
    if (!tfam.empty() && tfam.uniformity() != t) throw PreconditionError("T must be t-uniform");
    if (auto w = find_sunflower(tfam, CorePredicate::any(s)))
        throw PreconditionError("T contains an s-petal sunflower", to_json(*w).dump());
    const Mask supp = tfam.support();
    if ((supp & ~full_mask(n)) != 0) throw PreconditionError("T is not inside [n]");
    std::vector<Mask> out;
    const Mask rest = full_mask(n) & ~supp;
    for (Mask x : tfam) for_each_ksubset(rest, k - t, [&](Mask g) { out.push_back(x | g); });
    SetFamily f(n, std::move(out));
    const BigInt expect = BigInt(static_cast<unsigned long>(tfam.size())) * binomial(n - popcount(supp), k - t);
    if (BigInt(static_cast<unsigned long>(f.size())) != expect)
        throw InvariantViolation("example family size differs from |T| C(n - |supp T|, k - t)");
    if (auto w = find_sunflower(f, CorePredicate::exact(s, t - 1)))
        throw InvariantViolation("example family contains an s-sunflower with core t-1", to_json(*w).dump());
    return f;
}

FStar fstar_family(const Domain& a, const SetFamily& t_star, int s) {
    FStar out;
    const int t = t_star.empty() ? 1 : t_star.uniformity().value_or(-1);
    if (t < 0) throw PreconditionError("T* must be uniform");
    for (Mask x : t_star)
        if (a.link_count_or_zero(x) == 0) throw PreconditionError("T* is not inside the t-shadow of A", set_to_json(x).dump());
    if (auto w = find_sunflower(t_star, CorePredicate::any(s)))
        throw PreconditionError("T* contains an s-petal sunflower", to_json(*w).dump());
    const Mask supp = t_star.support();
    const SetFamily& amb = a.family();
    std::vector<Mask> members;
    for (Mask m : amb)
        if (t_star.contains(m & supp)) members.push_back(m);
    out.family = amb.with(std::move(members));
    if (auto w = find_sunflower(out.family, CorePredicate::at_most(s, t - 1)))
        throw InvariantViolation("F* contains an s-sunflower with core at most t-1", to_json(*w).dump());

    out.covered = static_cast<unsigned long>(trace_cover(amb, t_star).size());
    out.gap = out.covered - static_cast<unsigned long>(out.family.size());
    out.gap_sum = 0;
    for (Mask x : t_star)
        for (int e : elements(supp & ~x)) out.gap_sum += a.link_count_or_zero(x | bit(e));
    if (out.gap > out.gap_sum) throw InvariantViolation("F* gap exceeds the sum of one-element extensions");
    const Rational r = a.nominal_r();
    const Rational a_t(a.max_link(t).second);
    out.gap_spread = count_q(t_star.size()) * Rational(popcount(supp)) * a_t / r;
    out.spread_applies = check_rt_spread(a, r, t).ok;
    if (out.spread_applies && Rational(out.gap_sum) > out.gap_spread)
        throw InvariantViolation("F* gap exceeds |T*| |supp T*| A_t / r on an (r,t)-spread domain");
    out.phi = phi_value(s, t);
    out.gap_phi = Real(Rational(t)) * out.phi.value * out.phi.value / Real(r) * Real(a_t);
    auto c = out.gap_phi.compare(Rational(out.gap));
    if (c) out.gap_phi_holds = *c >= 0;
    if (out.spread_applies && out.gap_phi_holds == false)
        throw InvariantViolation("F* gap exceeds t phi^2 A_t / r on an (r,t)-spread domain");
    return out;
}

InstanceReport verify_instance(const Domain& a, int s, int t, const CorePredicate& pred, std::uint64_t budget) {
    if (s < 2 || t < 1 || t > a.k()) throw PreconditionError("verify_instance needs s >= 2 and 1 <= t <= k");
    InstanceReport rep;
    rep.domain = a.describe();
    rep.s = s;
    rep.t = t;
    rep.pred = pred;
    SearchOptions opt;
    opt.budget = budget;
    rep.search = max_sunflower_free(a, pred, opt);
    if (rep.search.certified) rep.optimum = rep.search.optimum;

    const SetFamily& amb = a.family();
    const Domain tdom = Domain::explicit_family(shadow(amb, t));
    rep.t_star = max_sunflower_free(tdom, CorePredicate::any(s), opt).witness;
    const FStar fs = fstar_family(a, rep.t_star, s);
    rep.construction = fs.family.size();
    rep.construction_valid = is_sunflower_free(fs.family, pred);
    if (rep.construction_valid && rep.optimum && rep.construction > *rep.optimum)
        rep.red_flags.push_back("construction larger than the certified optimum");

    const int k = a.k();
    std::vector<BoundValue> bounds;
    if (a.kind() == DomainKind::Binomial) {
        const int n = a.ground_n();
        const json nkst{{"n", n}, {"k", k}, {"s", s}, {"t", t}};
        if (pred.mode == CoreMode::Any) {
            bounds.push_back(bound_rhs("erdos_rado", {{"s", s}, {"k", k}}));
            bounds.push_back(bound_rhs("phi_coloring", {{"s", s}, {"t", k}}));
        } else if (pred.c == t - 1) {
            if (t == 1) {
                bounds.push_back(bound_rhs("erdos_matching", {{"n", n}, {"k", k}, {"s", s}}));
                if (s == 2) bounds.push_back(bound_rhs("ekr", {{"n", n}, {"k", k}}));
            }
            if (pred.mode == CoreMode::AtMost && n > k) bounds.push_back(bound_rhs("down_closed_core", nkst));
            if (n > k)
                for (const char* nm : {"main_large_k", "main_large_k_derived", "main_small_k", "delta_system"})
                    bounds.push_back(bound_rhs(nm, nkst));
            bounds.push_back(bound_rhs("bradac", nkst));
        }
    } else if (pred.mode == CoreMode::AtMost && pred.c == t - 1 && a.nominal_r() > 1) {
        const BigInt a_t = a.max_link(t).second;
        bounds.push_back(bound_rhs("down_closed_general", {{"s", s},
                                                           {"t", t},
                                                           {"k", k},
                                                           {"r", to_string(a.nominal_r())},
                                                           {"a_t", to_string(a_t)},
                                                           {"spread", check_rt_spread(a, a.nominal_r(), t).ok}}));
    }
    for (auto& b : bounds) {
        BoundCheck bc;
        if (b.value && rep.optimum) {
            auto c = b.value->compare(count_q(*rep.optimum));
            if (c) bc.respected = *c >= 0;
        }
        if (b.hypotheses_met == true && bc.respected == false)
            rep.red_flags.push_back("optimum exceeds " + b.name + " although its hypotheses hold");
        bc.bound = std::move(b);
        rep.bounds.push_back(std::move(bc));
    }
    return rep;
}

namespace {

json tri(const std::optional<bool>& b) { return b ? json(*b) : json("unknown"); }

}  // namespace

json to_json(const BoundValue& b) {
    json j{{"name", b.name},
           {"params", b.params},
           {"expression", b.expression},
           {"hypotheses", b.hypotheses},
           {"hypotheses_met", tri(b.hypotheses_met)}};
    if (b.value) {
        j["value"] = b.value->to_string();
        j["value_lo"] = b.value->lower();
        j["value_hi"] = b.value->upper();
    } else {
        j["value"] = "incomparable";
    }
    if (b.phi) j["phi"] = {{"value", b.phi->value.to_string()}, {"exact", b.phi->exact}, {"source", b.phi->source}};
    return j;
}

json to_json(const FStar& f) {
    return {{"family", to_json(f.family)},
            {"size", f.family.size()},
            {"covered", to_string(f.covered)},
            {"gap", to_string(f.gap)},
            {"gap_sum", to_string(f.gap_sum)},
            {"gap_spread", to_string(f.gap_spread)},
            {"gap_phi", f.gap_phi.to_string()},
            {"gap_phi_holds", tri(f.gap_phi_holds)},
            {"spread_applies", f.spread_applies},
            {"phi", {{"value", f.phi.value.to_string()}, {"exact", f.phi.exact}, {"source", f.phi.source}}}};
}

json to_json(const InstanceReport& r) {
    json bounds = json::array();
    for (const auto& b : r.bounds) {
        json j = to_json(b.bound);
        j["respected"] = tri(b.respected);
        bounds.push_back(j);
    }
    return {{"domain", r.domain},
            {"s", r.s},
            {"t", r.t},
            {"predicate", r.pred.to_string()},
            {"optimum", r.optimum ? json(*r.optimum) : json("unknown")},
            {"search", to_json(r.search)},
            {"T_star", to_json(r.t_star)},
            {"construction", r.construction},
            {"construction_valid", r.construction_valid},
            {"bounds", bounds},
            {"red_flags", r.red_flags}};
}

std::string to_csv(const InstanceReport& r) {
    std::ostringstream out;
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    auto tri_s = [](const std::optional<bool>& b) { return b ? (*b ? "true" : "false") : "unknown"; };
    out << "domain,s,t,predicate,construction,optimum,bound,value,hypotheses_met,respected\n";
    const std::string head = quote(r.domain) + "," + std::to_string(r.s) + "," + std::to_string(r.t) + "," +
                             quote(r.pred.to_string()) + "," + std::to_string(r.construction) + "," +
                             (r.optimum ? std::to_string(*r.optimum) : std::string("unknown"));
    if (r.bounds.empty()) out << head << ",,,,\n";
    for (const auto& b : r.bounds)
        out << head << "," << b.bound.name << "," << quote(b.bound.value ? b.bound.value->to_string() : "incomparable")
            << "," << tri_s(b.bound.hypotheses_met) << "," << tri_s(b.respected) << "\n";
    return out.str();
}

}  // namespace sforge
