#include "ops.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sforge/approximation.hpp"
#include "sforge/boolean.hpp"
#include "sforge/bounds.hpp"
#include "sforge/errors.hpp"
#include "sforge/numeric.hpp"
#include "sforge/random.hpp"
#include "sforge/spread.hpp"
#include "sforge/sunflower.hpp"

namespace sforge::cli {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json parse_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

class Params {
public:
    Params(const json& j, Context& ctx) : j_(j), ctx_(ctx) {
        if (!j_.is_object()) throw ParseError("parameters must be a JSON object");
    }

    bool has(const char* k) const { return j_.contains(k) && !j_.at(k).is_null(); }
    const json& all() const { return j_; }

    const json& raw(const char* k) const {
        if (!has(k)) throw ParseError(std::string("missing parameter: ") + k);
        return j_.at(k);
    }

    long integer(const char* k) const {
        const json& v = raw(k);
        Rational q = rational_of(v, k);
        if (q.get_den() != 1) throw ParseError(std::string("parameter ") + k + " must be an integer");
        if (!q.get_num().fits_slong_p()) throw ParseError(std::string("parameter ") + k + " out of range");
        return q.get_num().get_si();
    }
    long integer(const char* k, long dflt) const { return has(k) ? integer(k) : dflt; }
    std::optional<int> opt_int(const char* k) const {
        return has(k) ? std::optional<int>(static_cast<int>(integer(k))) : std::nullopt;
    }

    std::uint64_t count(const char* k, std::uint64_t dflt) const {
        if (!has(k)) return dflt;
        const long v = integer(k);
        if (v < 0) throw ParseError(std::string("parameter ") + k + " must be nonnegative");
        return static_cast<std::uint64_t>(v);
    }

    Rational rational(const char* k) const { return rational_of(raw(k), k); }
    std::optional<Rational> opt_rational(const char* k) const {
        return has(k) ? std::optional<Rational>(rational(k)) : std::nullopt;
    }

    std::string str(const char* k) const {
        const json& v = raw(k);
        if (!v.is_string()) return v.dump();
        return v.get<std::string>();
    }

    bool flag(const char* k, bool dflt) const {
        if (!has(k)) return dflt;
        const json& v = raw(k);
        if (v.is_boolean()) return v.get<bool>();
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s == "true" || s == "1") return true;
            if (s == "false" || s == "0") return false;
        }
        throw ParseError(std::string("parameter ") + k + " must be a boolean");
    }

    SetFamily family(const char* k) const { return family_of(raw(k)); }

    Domain domain(const char* k) const {
        const json& v = raw(k);
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            if (!s.empty() && s[0] == '$') {
                const std::string h = s.substr(1);
                if (auto it = ctx_.domains.find(h); it != ctx_.domains.end()) return it->second;
                if (auto it = ctx_.families.find(h); it != ctx_.families.end())
                    return Domain::explicit_family(it->second);
                throw ParseError("unknown handle " + s);
            }
            return domain_of_json(load_json(s));
        }
        return domain_of_json(v);
    }

    // A set given as an element list, or the empty set when absent.
    Mask set(const char* k, int n) const { return has(k) ? set_from_json(raw(k), n) : 0; }

    CorePredicate pred(int s, const std::string& dflt) const {
        CorePredicate p = CorePredicate::parse(has("core") ? str("core") : dflt, s);
        if (flag("degenerate", false)) p.degenerate = true;
        return p;
    }

    SetFamily family_of(const json& v) const {
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            if (!s.empty() && s[0] == '$') {
                const std::string h = s.substr(1);
                if (auto it = ctx_.families.find(h); it != ctx_.families.end()) return it->second;
                if (auto it = ctx_.domains.find(h); it != ctx_.domains.end()) return it->second.family();
                throw ParseError("unknown handle " + s);
            }
            const std::string path = !s.empty() && s[0] == '@' ? s.substr(1) : s;
            if (!s.empty() && s[0] == '{') return family_from_json(parse_text(s, "family"));
            const std::string text = read_file(path);
            if (text.rfind("n=", 0) == 0) return family_from_hex_text(text);
            return family_from_json(parse_text(text, path));
        }
        return family_from_json(v);
    }

private:
    static Rational rational_of(const json& v, const char* k) {
        if (v.is_number_integer()) return Rational(v.get<long>());
        if (v.is_number_unsigned()) return Rational(BigInt(std::to_string(v.get<std::uint64_t>())));
        if (v.is_number_float()) return parse_rational(v.dump());
        if (v.is_string()) return parse_rational(v.get<std::string>());
        throw ParseError(std::string("parameter ") + k + " must be a number");
    }

    static json load_json(const std::string& s) {
        if (!s.empty() && s[0] == '{') return parse_text(s, "domain");
        const std::string path = !s.empty() && s[0] == '@' ? s.substr(1) : s;
        return parse_text(read_file(path), path);
    }

    static Domain domain_of_json(const json& v) {
        if (v.is_object() && !v.contains("kind") && v.contains("sets"))
            return Domain::explicit_family(family_from_json(v));
        return Domain::from_json(v);
    }

    const json& j_;
    Context& ctx_;
};

json family_stats(const SetFamily& f) {
    json j{{"n", f.n()}, {"size", f.size()}, {"support", set_to_json(f.support())}};
    if (auto u = f.uniformity()) j["uniformity"] = *u;
    if (!f.empty()) j["max_size"] = f.max_size();
    return j;
}

OpResult with_family(SetFamily f, json extra = json::object()) {
    OpResult r;
    extra["family"] = to_json(f);
    extra["stats"] = family_stats(f);
    r.report = std::move(extra);
    r.family = std::move(f);
    return r;
}

json witness_json(const std::optional<SunflowerWitness>& w) { return w ? to_json(*w) : json(nullptr); }

SetFamily witness_family(int n, const std::optional<SunflowerWitness>& w) {
    return w ? SetFamily(n, w->petals) : SetFamily(n);
}

SystemSST system_of(const json& j) {
    if (!j.is_object() || !j.contains("parts")) throw ParseError("system JSON needs s, t and parts");
    SystemSST u;
    u.s = j.at("s").get<int>();
    u.t = j.at("t").get<int>();
    for (const auto& p : j.at("parts")) {
        const json& b = p.contains("B_S") ? p.at("B_S") : p.at("b");
        SystemPart part;
        part.b = family_from_json(b);
        part.s = set_from_json(p.contains("S") ? p.at("S") : p.at("s"), part.b.n());
        u.parts.push_back(std::move(part));
    }
    return u;
}

using Handler = std::function<OpResult(const Params&, Context&, std::uint64_t)>;

// Decomposition → intersection reduction, shared by reduce and cluster.
std::pair<Decomposition, ReduceResult> reduce_from(const Params& p) {
    const SetFamily f = p.family("family");
    const Domain a = p.domain("domain");
    const auto d = spread_approximation(f, a, p.rational("tau"), static_cast<int>(p.integer("q")));
    auto r = reduce_intersections(d, a, static_cast<int>(p.integer("s")), static_cast<int>(p.integer("t")),
                                  p.rational("alpha"));
    return {d, std::move(r)};
}

const std::map<std::string, Handler>& table() {
    static const std::map<std::string, Handler> ops = [] {
        std::map<std::string, Handler> m;

        // family
        m["family.load"] = [](const Params& p, Context&, std::uint64_t) { return with_family(p.family("family")); };
        m["family.stats"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily f = p.family("family");
            OpResult r;
            r.report = family_stats(f);
            r.report["upward_closed"] = is_upward_closed(f);
            return r;
        };
        m["family.hex"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = {{"text", to_hex_text(p.family("family"))}};
            return r;
        };
        m["family.restrict"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily f = p.family("family");
            return with_family(restrict(f, p.set("a", f.n()), p.set("b", f.n())));
        };
        m["family.link"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily f = p.family("family");
            return with_family(link(f, p.set("set", f.n())));
        };
        m["family.trace"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily f = p.family("family");
            if (p.has("cover")) return with_family(trace_cover(f, p.family("cover")));
            return with_family(trace_cover(f, p.set("set", f.n())));
        };
        m["family.shadow"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(shadow(p.family("family"), static_cast<int>(p.integer("h"))));
        };
        m["family.shadow_upto"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(shadow_upto(p.family("family"), static_cast<int>(p.integer("h"))));
        };
        m["family.layer"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(layer(p.family("family"), static_cast<int>(p.integer("h"))));
        };
        m["family.layers_upto"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(layers_upto(p.family("family"), static_cast<int>(p.integer("h"))));
        };
        m["family.join"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(join(p.family("family"), p.family("other")));
        };
        m["family.upper_closure"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(upper_closure(p.family("family")));
        };
        m["family.union"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(family_union(p.family("a"), p.family("b")));
        };
        m["family.difference"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(family_difference(p.family("a"), p.family("b")));
        };
        m["family.transversal"] = [](const Params& p, Context&, std::uint64_t) {
            const Transversal t = transversal_number(p.family("family"));
            OpResult r;
            r.report = {{"size", t.size}, {"witness", set_to_json(t.witness)}, {"nodes", t.nodes}};
            return r;
        };
        // Uniformly random distinct k-sets of [n].
        m["family.random"] = [](const Params& p, Context&, std::uint64_t seed) {
            const int n = static_cast<int>(p.integer("n")), k = static_cast<int>(p.integer("k"));
            const std::uint64_t count = p.count("count", 1);
            if (n < 1 || n > 64 || k < 0 || k > n) throw PreconditionError("family.random needs 0 <= k <= n <= 64");
            if (BigInt(std::to_string(count)) > binomial(n, k))
                throw PreconditionError("family.random: more sets requested than C(n, k)");
            Rng rng(seed);
            std::vector<Mask> ms;
            std::vector<int> elems(n);
            for (int i = 0; i < n; ++i) elems[i] = i;
            std::set<Mask> seen;
            while (seen.size() < count) {
                rng.shuffle(elems.begin(), elems.end());
                Mask x = 0;
                for (int i = 0; i < k; ++i) x |= bit(elems[i]);
                if (seen.insert(x).second) ms.push_back(x);
            }
            return with_family(SetFamily(n, ms), {{"seed", seed}});
        };
        // Fails the step unless a and b are equal (or a ⊆ b with subset=true).
        m["family.equal"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily a = p.family("a"), b = p.family("b");
            const bool subset = p.flag("subset", false);
            const bool ok = subset ? is_subfamily(a, b) : a == b;
            OpResult r;
            r.report = {{"holds", ok}, {"relation", subset ? "subfamily" : "equal"}};
            if (!ok) {
                const json w{{"only_in_a", to_json(family_difference(a, b))},
                             {"only_in_b", to_json(family_difference(b, a))}};
                throw InvariantViolation(subset ? "family a is not contained in b" : "families differ", w.dump());
            }
            return r;
        };

        // sunflower
        m["sunflower.find"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily f = p.family("family");
            const int s = static_cast<int>(p.integer("s"));
            const auto w = find_sunflower(f, p.pred(s, "any"));
            OpResult r;
            r.report = {{"found", w.has_value()}, {"witness", witness_json(w)}, {"predicate", p.pred(s, "any").to_string()}};
            r.family = witness_family(f.n(), w);
            return r;
        };
        m["sunflower.free"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily f = p.family("family");
            const int s = static_cast<int>(p.integer("s"));
            const auto w = find_sunflower(f, p.pred(s, "any"));
            OpResult r;
            r.report = {{"free", !w.has_value()}, {"witness", witness_json(w)}};
            return r;
        };
        m["sunflower.max"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            const int s = static_cast<int>(p.integer("s"));
            SearchOptions opt;
            opt.budget = p.count("budget", opt.budget);
            opt.split_depth = static_cast<int>(p.integer("split_depth", opt.split_depth));
            const CorePredicate pred = p.pred(s, "any");
            const SearchResult res = max_sunflower_free(a, pred, opt);
            OpResult r;
            r.report = to_json(res);
            r.report["domain"] = a.describe();
            r.report["predicate"] = pred.to_string();
            r.family = res.witness;
            return r;
        };
        m["sunflower.phi"] = [](const Params& p, Context&, std::uint64_t) {
            SearchOptions opt;
            opt.budget = p.count("budget", opt.budget);
            const PhiResult res = phi_exact(static_cast<int>(p.integer("s")), static_cast<int>(p.integer("t")),
                                            static_cast<int>(p.integer("support_bound", 0)), opt);
            OpResult r;
            r.report = to_json(res);
            r.family = res.search.witness;
            return r;
        };
        m["sunflower.product"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(product_construction(static_cast<int>(p.integer("s")), static_cast<int>(p.integer("t"))));
        };
        m["sunflower.erdos_rado"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = {{"value", to_string(erdos_rado_bound(static_cast<int>(p.integer("s")),
                                                             static_cast<int>(p.integer("k"))))}};
            return r;
        };

        // spread
        m["spread.check"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = to_json(check_spread(p.family("family"), p.rational("r")));
            return r;
        };
        m["spread.restrict"] = [](const Params& p, Context&, std::uint64_t) {
            const SetFamily f = p.family("family");
            const Mask x = max_spread_restriction(f, p.rational("r"));
            return with_family(link(f, x), {{"X", set_to_json(x)}});
        };
        m["spread.mc"] = [](const Params& p, Context&, std::uint64_t seed) {
            OpResult r;
            r.report = to_json(spread_lemma_mc(p.family("family"), p.rational("r"), static_cast<int>(p.integer("m")),
                                               p.rational("delta"), p.count("trials", 100000), seed));
            return r;
        };
        m["spread.hit"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = {{"p", to_string(p.rational("p"))},
                        {"probability", to_string(hit_probability_exact(p.family("family"), p.rational("p")))}};
            return r;
        };
        m["spread.reps"] = [](const Params& p, Context&, std::uint64_t seed) {
            std::vector<SetFamily> g;
            for (const auto& v : p.raw("families")) g.push_back(p.family_of(v));
            if (g.empty()) throw ParseError("spread.reps needs a nonempty families list");
            const Mask forbidden = p.set("forbidden", g.front().n());
            OpResult r;
            r.report = to_json(find_disjoint_representatives(g, forbidden, seed,
                                                             static_cast<int>(p.integer("restarts", 64))));
            r.report["seed"] = seed;
            return r;
        };
        m["spread.sunflower"] = [](const Params& p, Context&, std::uint64_t seed) {
            const SetFamily f = p.family("family");
            const auto w = sunflower_via_spread(f, static_cast<int>(p.integer("s")), p.rational("r"), seed);
            OpResult r;
            r.report = {{"found", w.has_value()}, {"witness", witness_json(w)}, {"seed", seed}};
            r.family = witness_family(f.n(), w);
            return r;
        };

        // domains
        m["domains.describe"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            OpResult r;
            r.report = {{"domain", a.to_json()},  {"description", a.describe()}, {"size", to_string(a.size())},
                        {"k", a.k()},             {"ground_n", a.ground_n()},    {"nominal_r", to_string(a.nominal_r())}};
            r.domain = a;
            return r;
        };
        m["domains.spread"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            const Rational rr = p.has("r") ? p.rational("r") : a.nominal_r();
            OpResult r;
            r.report = to_json(check_rt_spread(a, rr, static_cast<int>(p.integer("t"))));
            return r;
        };
        m["domains.assumptions"] = [](const Params& p, Context&, std::uint64_t seed) {
            const Domain a = p.domain("domain");
            const Rational rr = p.has("r") ? p.rational("r") : a.nominal_r();
            OpResult r;
            r.report = to_json(check_assumptions(a, static_cast<int>(p.integer("q")), p.rational("eta"), p.rational("mu"),
                                                 rr, static_cast<int>(p.integer("t")),
                                                 static_cast<int>(p.integer("subfamilies", 100)), seed));
            return r;
        };
        m["domains.homogeneous"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            OpResult r;
            r.report = to_json(check_tau_homogeneous(p.family("family"), a, p.rational("tau"), p.set("set", a.ground_n())));
            return r;
        };
        m["domains.max_homogeneous"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            const SetFamily f = p.family("family");
            const Mask s = max_homogeneous_restriction(f, a, p.rational("tau"), p.set("set", a.ground_n()));
            return with_family(link(f, s), {{"S", set_to_json(s)}});
        };
        m["domains.subfamily"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            auto h = homogeneous_subfamily(p.family("family"), a, p.rational("tau"), p.rational("alpha"),
                                           static_cast<int>(p.integer("t")), p.set("set", a.ground_n()));
            return with_family(h.g, {{"sparse", to_json(h.sparse)}, {"size_bound", to_string(h.size_bound)}});
        };
        m["domains.measure"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            OpResult r;
            r.report = {{"measure", to_string(relative_measure(p.family("family"), a, p.set("set", a.ground_n())))}};
            return r;
        };
        m["domains.regularity"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            OpResult r;
            r.report = {{"holds", regularity_identity_holds(a, p.set("set", a.ground_n()), p.family("family"),
                                                            static_cast<int>(p.integer("h")))}};
            return r;
        };

        // boolean
        m["boolean.measure"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = {{"p", to_string(p.rational("p"))},
                        {"measure", to_string(biased_measure(p.family("family"), p.rational("p")))}};
            return r;
        };
        m["boolean.global"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = to_json(check_global(p.family("family"), p.rational("p"), p.rational("tau")));
            return r;
        };
        m["boolean.stab"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = {{"p", to_string(p.rational("p"))},
                        {"rho", to_string(p.rational("rho"))},
                        {"stability", to_string(stability(p.family("family"), p.rational("p"), p.rational("rho")))}};
            return r;
        };
        m["boolean.threshold"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = to_json(verify_sharp_threshold(p.family("family"), p.rational("p"), p.rational("p_tilde"),
                                                      p.opt_rational("tau")));
            return r;
        };
        m["boolean.upgrade"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = to_json(measure_upgrade(p.family("family"), p.rational("p"), p.rational("tau"),
                                               static_cast<int>(p.integer("z")), static_cast<int>(p.integer("m"))));
            return r;
        };
        m["boolean.hyper"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            r.report = to_json(hypercontractivity_check(p.family("family"), p.rational("p"), p.rational("tau"),
                                                        p.rational("rho"), p.rational("q")));
            return r;
        };

        // pipeline
        m["pipeline.approx"] = [](const Params& p, Context&, std::uint64_t) {
            const auto d = spread_approximation(p.family("family"), p.domain("domain"), p.rational("tau"),
                                                static_cast<int>(p.integer("q")), p.opt_rational("floor"));
            OpResult r;
            r.report = to_json(d);
            r.family = d.remainder;
            return r;
        };
        m["pipeline.peeling"] = [](const Params& p, Context&, std::uint64_t) {
            const auto d = spread_peeling(p.family("family"), p.rational("r"), static_cast<int>(p.integer("w")));
            OpResult r;
            r.report = to_json(d);
            r.family = d.remainder;
            return r;
        };
        m["pipeline.simplify"] = [](const Params& p, Context&, std::uint64_t) {
            SimplifyOptions opt;
            opt.q = p.opt_int("q");
            opt.alpha = p.opt_rational("alpha");
            opt.check_input = p.flag("check_input", true);
            const auto res = simplify(p.family("family"), p.domain("domain"), static_cast<int>(p.integer("s")),
                                      static_cast<int>(p.integer("t")), p.has("eps") ? p.rational("eps") : Rational(1, 2),
                                      opt);
            OpResult r;
            r.report = to_json(res);
            r.family = res.result;
            return r;
        };
        m["pipeline.cover"] = [](const Params& p, Context&, std::uint64_t) {
            const auto res = down_closed_cover(p.family("family"), p.domain("domain"), static_cast<int>(p.integer("s")),
                                               static_cast<int>(p.integer("t")), p.opt_int("w"), p.opt_rational("alpha"));
            OpResult r;
            r.report = to_json(res);
            r.family = res.result;
            return r;
        };
        m["pipeline.reduce"] = [](const Params& p, Context&, std::uint64_t) {
            const auto [d, red] = reduce_from(p);
            OpResult r;
            r.report = {{"decomposition", to_json(d)}, {"reduction", to_json(red)}};
            return r;
        };
        m["pipeline.cluster"] = [](const Params& p, Context&, std::uint64_t) {
            OpResult r;
            SystemSST u;
            if (p.has("system")) {
                const json& sys = p.raw("system");
                u = system_of(sys.is_string() ? parse_text(read_file(sys.get<std::string>()), "system") : sys);
            } else {
                auto [d, red] = reduce_from(p);
                r.report["reduction"] = to_json(red);
                u = std::move(red.system);
            }
            const Domain a = p.domain("domain");
            const auto c = cluster_system(u, a, p.rational("lambda"));
            r.report["clustering"] = to_json(c);
            r.family = c.t_hat;
            return r;
        };
        m["pipeline.peel"] = [](const Params& p, Context&, std::uint64_t) {
            const auto res = peel_high_uniformity(p.family("family"), static_cast<int>(p.integer("s")),
                                                  static_cast<int>(p.integer("t")));
            OpResult r;
            r.report = to_json(res);
            r.family = res.result;
            return r;
        };
        m["pipeline.delta"] = [](const Params& p, Context&, std::uint64_t) {
            const auto d = delta_filter(p.family("family"), static_cast<int>(p.integer("p")),
                                        static_cast<int>(p.integer("t")));
            OpResult r;
            r.report = to_json(d);
            if (p.has("s")) r.report["group_sunflower"] = witness_json(delta_group_sunflower(d, static_cast<int>(p.integer("s"))));
            r.family = d.kept;
            return r;
        };

        // bounds
        m["bounds.eval"] = [](const Params& p, Context&, std::uint64_t) {
            // Bound parameters under "params", or every other key.
            json args = p.has("params") ? p.raw("params") : p.all();
            args.erase("name");
            const std::string name = p.str("name");
            const BoundValue b = bound_rhs(name, args);
            OpResult r;
            r.report = to_json(b);
            std::ostringstream os;
            os << "name,value,hypotheses_met,expression\n" << name << ',';
            if (b.value) os << b.value->to_string();
            os << ',' << (b.hypotheses_met ? (*b.hypotheses_met ? "true" : "false") : "unknown") << ",\""
               << b.expression << "\"\n";
            r.csv = os.str();
            return r;
        };
        m["bounds.list"] = [](const Params&, Context&, std::uint64_t) {
            OpResult r;
            r.report = {{"bounds", bound_names()}};
            return r;
        };
        m["bounds.example23"] = [](const Params& p, Context&, std::uint64_t) {
            return with_family(example_23(static_cast<int>(p.integer("n")), static_cast<int>(p.integer("k")),
                                          static_cast<int>(p.integer("s")), static_cast<int>(p.integer("t")),
                                          p.family("family")));
        };
        m["bounds.fstar"] = [](const Params& p, Context&, std::uint64_t) {
            const FStar f = fstar_family(p.domain("domain"), p.family("family"), static_cast<int>(p.integer("s")));
            OpResult r;
            r.report = to_json(f);
            r.family = f.family;
            return r;
        };
        m["verify"] = [](const Params& p, Context&, std::uint64_t) {
            const Domain a = p.domain("domain");
            const int s = static_cast<int>(p.integer("s")), t = static_cast<int>(p.integer("t"));
            const InstanceReport rep =
                verify_instance(a, s, t, p.pred(s, "atmost:" + std::to_string(t - 1)), p.count("budget", 1'000'000'000));
            OpResult r;
            r.report = to_json(rep);
            r.csv = to_csv(rep);
            r.family = rep.t_star;
            return r;
        };
        return m;
    }();
    return ops;
}

}  // namespace

OpResult run_op(const std::string& name, const json& params, Context& ctx, std::uint64_t seed) {
    const auto& ops = table();
    auto it = ops.find(name);
    if (it == ops.end()) throw ParseError("unknown operation: " + name);
    const Params p(params, ctx);
    try {
        return it->second(p, ctx, seed);
    } catch (const json::exception& e) {
        throw ParseError(name + ": malformed parameter: " + e.what());
    }
}

const std::vector<std::string>& op_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : table()) v.push_back(k);
        return v;
    }();
    return names;
}

std::string flat_csv(const json& report) {
    std::ostringstream os;
    os << "path,value\n";
    const json flat = report.flatten();
    for (const auto& [path, v] : flat.items()) {
        std::string val = v.is_string() ? v.get<std::string>() : v.dump();
        if (val.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : val) q += c == '"' ? std::string("\"\"") : std::string(1, c);
            val = q + "\"";
        }
        os << path << ',' << val << '\n';
    }
    return os.str();
}

}  // namespace sforge::cli
