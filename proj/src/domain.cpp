#include "sforge/domain.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>

#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"
#include "sforge/random.hpp"

namespace sforge {

struct Domain::Cache {
    std::once_flag members_once, counts_once;
    std::optional<SetFamily> members;
    std::unique_ptr<SubsetCounts> counts;
};

namespace {

constexpr std::uint64_t kMaterializeLimit = 2'000'000;

Mask block_mask(int b, int n) { return full_mask(n) << (b * n); }

}  // namespace

Domain Domain::binomial(int n, int k) {
    if (n < 1 || n > kMaxGround || k < 0 || k > n)
        throw PreconditionError("Binomial(n,k) needs 1 <= n <= 64 and 0 <= k <= n");
    Domain d;
    d.kind_ = DomainKind::Binomial;
    d.k_ = k;
    d.ground_n_ = n;
    d.params_ = {n, k};
    d.blocks_ = {full_mask(n)};
    d.cache_ = std::make_shared<Cache>();
    return d;
}

Domain Domain::sequences(int n, int k) {
    if (n < 1 || k < 1 || n * k > kMaxGround) throw PreconditionError("Sequences(n,k) needs n*k <= 64");
    Domain d;
    d.kind_ = DomainKind::Sequences;
    d.k_ = k;
    d.ground_n_ = n * k;
    d.params_ = {n, k};
    for (int b = 0; b < k; ++b) d.blocks_.push_back(block_mask(b, n));
    d.cache_ = std::make_shared<Cache>();
    return d;
}

Domain Domain::kpartite(int n, std::vector<int> part_sizes) {
    const int w = static_cast<int>(part_sizes.size());
    if (n < 1 || w < 1 || n * w > kMaxGround) throw PreconditionError("KPartiteProduct needs n*w <= 64");
    Domain d;
    d.kind_ = DomainKind::KPartiteProduct;
    d.ground_n_ = n * w;
    d.params_ = {n};
    for (int b = 0; b < w; ++b) {
        if (part_sizes[b] < 0 || part_sizes[b] > n) throw PreconditionError("part size outside 0..n");
        d.k_ += part_sizes[b];
        d.params_.push_back(part_sizes[b]);
        d.blocks_.push_back(block_mask(b, n));
    }
    d.cache_ = std::make_shared<Cache>();
    return d;
}

Domain Domain::permutations(int n) {
    if (n < 1 || n > 7) throw PreconditionError("Permutations(n) is limited to n <= 7");
    Domain d;
    d.kind_ = DomainKind::Permutations;
    d.k_ = n;
    d.ground_n_ = n * n;
    d.params_ = {n};
    d.cache_ = std::make_shared<Cache>();
    return d;
}

Domain Domain::complex_layer(const SetFamily& maximal_faces, int k) {
    if (maximal_faces.empty()) throw PreconditionError("complex needs at least one maximal face");
    if (k < 0) throw PreconditionError("layer index must be nonnegative");
    Domain d;
    d.kind_ = DomainKind::ComplexLayer;
    d.k_ = k;
    d.ground_n_ = maximal_faces.n();
    d.params_ = {k};
    d.faces_ = maximal_faces;
    d.cache_ = std::make_shared<Cache>();
    return d;
}

Domain Domain::explicit_family(const SetFamily& members) {
    auto u = members.uniformity();
    if (!u && !members.empty()) throw PreconditionError("explicit domain must be uniform");
    Domain d;
    d.kind_ = DomainKind::ComplexLayer;
    d.explicit_ = true;
    d.k_ = u.value_or(0);
    d.ground_n_ = members.n();
    d.params_ = {d.k_};
    d.faces_ = members;
    d.cache_ = std::make_shared<Cache>();
    std::call_once(d.cache_->members_once, [&] { d.cache_->members = members; });
    return d;
}

Domain Domain::from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ParseError("domain JSON needs a kind");
    const std::string kind = j.at("kind").get<std::string>();
    auto geti = [&](const char* key) {
        if (!j.contains(key)) throw ParseError(std::string("domain field missing: ") + key);
        return j.at(key).get<int>();
    };
    if (kind == "binomial") return binomial(geti("n"), geti("k"));
    if (kind == "sequences") return sequences(geti("n"), geti("k"));
    if (kind == "kpartite" || kind == "kpartite_product") {
        if (!j.contains("parts")) throw ParseError("kpartite domain needs parts");
        return kpartite(geti("n"), j.at("parts").get<std::vector<int>>());
    }
    if (kind == "permutations") return permutations(geti("n"));
    if (kind == "complex_layer") {
        if (!j.contains("maximal_faces")) throw ParseError("complex_layer needs maximal_faces");
        int n = 0;
        for (const auto& f : j.at("maximal_faces"))
            for (const auto& e : f) n = std::max(n, e.get<int>());
        if (j.contains("n")) n = std::max(n, j.at("n").get<int>());
        json fam{{"n", n}, {"sets", j.at("maximal_faces")}};
        return complex_layer(family_from_json(fam), geti("k"));
    }
    if (kind == "explicit") return explicit_family(family_from_json(j.at("family")));
    throw ParseError("unknown domain kind: " + kind);
}

json Domain::to_json() const {
    switch (kind_) {
        case DomainKind::Binomial:
            return {{"kind", "binomial"}, {"n", params_[0]}, {"k", params_[1]}};
        case DomainKind::Sequences:
            return {{"kind", "sequences"}, {"n", params_[0]}, {"k", params_[1]}};
        case DomainKind::KPartiteProduct:
            return {{"kind", "kpartite"},
                    {"n", params_[0]},
                    {"parts", std::vector<int>(params_.begin() + 1, params_.end())}};
        case DomainKind::Permutations:
            return {{"kind", "permutations"}, {"n", params_[0]}};
        case DomainKind::ComplexLayer:
            if (explicit_) return {{"kind", "explicit"}, {"family", sforge::to_json(*faces_)}};
            return {{"kind", "complex_layer"}, {"maximal_faces", sforge::to_json(*faces_)["sets"]}, {"k", k_}};
    }
    return {};
}

std::string Domain::describe() const {
    std::string s;
    auto join_params = [&](std::size_t from) {
        std::string out;
        for (std::size_t i = from; i < params_.size(); ++i) out += (i > from ? "," : "") + std::to_string(params_[i]);
        return out;
    };
    switch (kind_) {
        case DomainKind::Binomial: return "Binomial(" + join_params(0) + ")";
        case DomainKind::Sequences: return "Sequences(" + join_params(0) + ")";
        case DomainKind::KPartiteProduct: return "KPartiteProduct(" + join_params(0) + ")";
        case DomainKind::Permutations: return "Permutations(" + join_params(0) + ")";
        case DomainKind::ComplexLayer:
            return explicit_ ? "Explicit(" + std::to_string(faces_->size()) + " sets)"
                             : "ComplexLayer(" + std::to_string(faces_->size()) + " faces, k=" + std::to_string(k_) + ")";
    }
    return s;
}

BigInt Domain::size() const {
    switch (kind_) {
        case DomainKind::Binomial: return sforge::binomial(params_[0], params_[1]);
        case DomainKind::Sequences: return pow(BigInt(params_[0]), static_cast<unsigned long>(params_[1]));
        case DomainKind::KPartiteProduct: {
            BigInt p = 1;
            for (std::size_t b = 1; b < params_.size(); ++b) p *= sforge::binomial(params_[0], params_[b]);
            return p;
        }
        case DomainKind::Permutations: return factorial(params_[0]);
        case DomainKind::ComplexLayer: return BigInt(static_cast<unsigned long>(family().size()));
    }
    return 0;
}

void Domain::build_members() const {
    std::vector<Mask> out;
    const int n0 = params_.empty() ? 0 : params_[0];
    switch (kind_) {
        case DomainKind::Binomial:
            for_each_ksubset(full_mask(ground_n_), k_, [&](Mask m) { out.push_back(m); });
            break;
        case DomainKind::Sequences: {
            std::function<void(int, Mask)> rec = [&](int pos, Mask acc) {
                if (pos == k_) {
                    out.push_back(acc);
                    return;
                }
                for (int v = 0; v < n0; ++v) rec(pos + 1, acc | bit(pos * n0 + v));
            };
            rec(0, 0);
            break;
        }
        case DomainKind::KPartiteProduct: {
            const int w = static_cast<int>(params_.size()) - 1;
            std::function<void(int, Mask)> rec = [&](int b, Mask acc) {
                if (b == w) {
                    out.push_back(acc);
                    return;
                }
                for_each_ksubset(block_mask(b, n0), params_[b + 1], [&](Mask m) { rec(b + 1, acc | m); });
            };
            rec(0, 0);
            break;
        }
        case DomainKind::Permutations: {
            std::vector<int> perm(n0);
            for (int i = 0; i < n0; ++i) perm[i] = i;
            do {
                Mask m = 0;
                for (int i = 0; i < n0; ++i) m |= bit(i * n0 + perm[i]);
                out.push_back(m);
            } while (std::next_permutation(perm.begin(), perm.end()));
            break;
        }
        case DomainKind::ComplexLayer:
            for (Mask f : *faces_) for_each_ksubset(f, k_, [&](Mask m) { out.push_back(m); });
            break;
    }
    cache_->members = SetFamily(ground_n_, std::move(out));
}

const SetFamily& Domain::family() const {
    if (!explicit_ && kind_ != DomainKind::ComplexLayer && size() > kMaterializeLimit)
        throw CapacityError(describe() + " has too many members to materialize");
    std::call_once(cache_->members_once, [&] { build_members(); });
    return *cache_->members;
}

const SubsetCounts& Domain::counts() const {
    std::call_once(cache_->counts_once, [&] { cache_->counts = std::make_unique<SubsetCounts>(family()); });
    return *cache_->counts;
}

BigInt Domain::link_count_or_zero(Mask t) const {
    const int sz = popcount(t);
    if (!is_subset(t, full_mask(ground_n_)) || sz > k_) return 0;
    switch (kind_) {
        case DomainKind::Binomial: return sforge::binomial(ground_n_ - sz, k_ - sz);
        case DomainKind::Sequences: {
            for (Mask b : blocks_)
                if (popcount(t & b) > 1) return 0;
            return pow(BigInt(params_[0]), static_cast<unsigned long>(k_ - sz));
        }
        case DomainKind::KPartiteProduct: {
            BigInt p = 1;
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                int tb = popcount(t & blocks_[b]);
                if (tb > params_[b + 1]) return 0;
                p *= sforge::binomial(params_[0] - tb, params_[b + 1] - tb);
            }
            return p;
        }
        case DomainKind::Permutations: {
            const int n = params_[0];
            Mask rows = 0, cols = 0;
            for (int e : elements(t)) {
                Mask r = bit(e / n), c = bit(e % n);
                if ((rows & r) || (cols & c)) return 0;
                rows |= r;
                cols |= c;
            }
            return factorial(n - sz);
        }
        case DomainKind::ComplexLayer: return BigInt(static_cast<unsigned long>(counts().count(t)));
    }
    return 0;
}

BigInt Domain::link_count(Mask t) const {
    BigInt c = link_count_or_zero(t);
    if (c == 0) throw PreconditionError(format_set(t) + " is not in the shadow of " + describe());
    return c;
}

std::pair<Mask, BigInt> Domain::max_link(int t) const {
    if (t < 0 || t > k_) throw PreconditionError("max_link needs 0 <= t <= k");
    if (kind_ == DomainKind::Binomial) return {full_mask(t), sforge::binomial(ground_n_ - t, k_ - t)};
    Mask best = 0;
    std::uint64_t best_c = 0;
    bool have = false;
    for (const auto& [x, c] : counts().table()) {
        if (popcount(x) != t) continue;
        if (!have || c > best_c || (c == best_c && x < best)) {
            best = x;
            best_c = c;
            have = true;
        }
    }
    if (!have) throw PreconditionError("domain has no members");
    return {best, BigInt(best_c)};
}

Rational Domain::nominal_r() const {
    switch (kind_) {
        case DomainKind::Binomial: return k_ == 0 ? Rational(ground_n_) : ratio(ground_n_, k_);
        case DomainKind::Sequences: return Rational(params_[0]);
        case DomainKind::KPartiteProduct: {
            Rational best(params_[0]);
            for (std::size_t b = 1; b < params_.size(); ++b)
                if (params_[b] > 0) best = std::min(best, ratio(params_[0], params_[b]));
            return best;
        }
        case DomainKind::Permutations: return ratio(params_[0], 4);
        case DomainKind::ComplexLayer: {
            if (explicit_ || k_ == 0) return Rational(1);
            int rank = faces_->min_size();
            return ratio(rank, k_);
        }
    }
    return Rational(1);
}

Domain Domain::link_domain(Mask s) const {
    return explicit_family(link(family(), s));
}

namespace {

// a * num^j <= b * den^j, exactly.
class ScaledCompare {
public:
    ScaledCompare(const Rational& r, int max_j) {
        num_.push_back(1);
        den_.push_back(1);
        for (int j = 1; j <= max_j; ++j) {
            num_.push_back(num_.back() * BigInt(r.get_num()));
            den_.push_back(den_.back() * BigInt(r.get_den()));
        }
    }
    // a * r^j <= b ?
    bool leq(std::uint64_t a, int j, std::uint64_t b) const {
        BigInt lhs = num_[j] * BigInt(a);
        BigInt rhs = den_[j] * BigInt(b);
        return lhs <= rhs;
    }
    bool geq(std::uint64_t a, int j, std::uint64_t b) const {
        BigInt lhs = num_[j] * BigInt(a);
        BigInt rhs = den_[j] * BigInt(b);
        return lhs >= rhs;
    }

private:
    std::vector<BigInt> num_, den_;
};

bool pair_less(std::pair<Mask, Mask> a, std::pair<Mask, Mask> b) {
    if (a.first != b.first) return canonical_less(a.first, b.first);
    return canonical_less(a.second, b.second);
}

}  // namespace

SpreadnessReport check_rt_spread(const Domain& a, const Rational& r, int t) {
    if (t < 0 || t > a.k()) throw PreconditionError("check_rt_spread needs 0 <= t <= k");
    if (r <= 0) throw PreconditionError("spreadness parameter must be positive");
    SpreadnessReport rep;
    rep.r = r;
    rep.t = t;
    const auto& table = a.counts().table();
    std::vector<std::pair<Mask, std::uint64_t>> entries(table.begin(), table.end());
    const ScaledCompare cmp(r, a.k());
    const std::size_t chunk = 4096;
    const std::size_t nchunks = (entries.size() + chunk - 1) / chunk;
    std::vector<std::optional<std::pair<Mask, Mask>>> found(nchunks);
    parallel_for(nchunks, [&](std::size_t c) {
        std::optional<std::pair<Mask, Mask>> best;
        const std::size_t end = std::min(entries.size(), (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
            const auto [x, cx] = entries[i];
            for_each_subset(x, [&](Mask tt) {
                if (tt == x || popcount(tt) > t) return;
                const std::uint64_t ct = a.counts().count(tt);
                // |A(T)(S)| = |A(T ∪ S)| must be at most r^{-|S|} |A(T)|.
                if (!cmp.leq(cx, popcount(x) - popcount(tt), ct)) {
                    std::pair<Mask, Mask> v{tt, x & ~tt};
                    if (!best || pair_less(v, *best)) best = v;
                }
            });
        }
        found[c] = best;
    });
    for (const auto& f : found)
        if (f && (!rep.violation || pair_less(*f, *rep.violation))) rep.violation = f;
    if (rep.violation) {
        rep.ok = false;
        rep.link_size = BigInt(static_cast<unsigned long>(a.counts().count(rep.violation->first)));
        rep.restricted_size =
            BigInt(static_cast<unsigned long>(a.counts().count(rep.violation->first | rep.violation->second)));
    }
    return rep;
}

Rational relative_measure(const SetFamily& f, const Domain& a, Mask s) {
    BigInt base = a.link_count(s);
    return ratio(BigInt(f.size()), base);
}

bool regularity_identity_holds(const Domain& a, Mask s, const SetFamily& f, int h) {
    const SetFamily lk = link(a.family(), s);
    const SetFamily sh = shadow(lk, h);
    if (sh.empty()) return f.empty();
    Rational lhs = relative_measure(f, a, s);
    Rational sum = 0;
    for (Mask hh : sh) {
        std::uint64_t fh = 0;
        for (Mask g : f)
            if (is_subset(hh, g)) ++fh;
        if (fh == 0) continue;
        sum += ratio(BigInt(fh), a.link_count(s | hh));
    }
    sum /= Rational(static_cast<long>(sh.size()));
    return sum == lhs;
}

AssumptionsReport check_assumptions(const Domain& a, int q, const Rational& eta, const Rational& mu,
                                    const Rational& r, int t, int random_subfamilies, std::uint64_t seed) {
    if (q < 0 || q > a.k()) throw PreconditionError("check_assumptions needs 0 <= q <= k");
    if (t < 1 || t > a.k()) throw PreconditionError("check_assumptions needs 1 <= t <= k");
    AssumptionsReport rep;
    rep.q = q;
    rep.t = t;
    rep.eta = eta;
    rep.mu = mu;
    rep.r = r;

    // 1: (r, q)-spread.
    auto sp = check_rt_spread(a, r, q);
    rep.a1.ok = sp.ok;
    rep.a1.detail = sp.ok ? "every link at depth <= q is r-spread" : "link not r-spread";
    if (!sp.ok) rep.a1.witness = to_json(sp);

    // 2: A_t >= r^{-eta t} |A|, i.e. (A_t/|A|)^d * r^{p t} >= 1 for eta = p/d.
    {
        auto [tm, at] = a.max_link(t);
        const Rational frac = ratio(at, a.size());
        const long p = eta.get_num().get_si(), d = eta.get_den().get_si();
        Rational lhs = pow(frac, d) * pow(r, p * t);
        rep.a2.ok = lhs >= 1;
        rep.a2.detail = "A_t = " + to_string(at) + ", |A| = " + to_string(a.size());
        rep.a2.witness = {{"T", set_to_json(tm)}, {"A_t", to_string(at)}, {"size", to_string(a.size())}};
    }

    // 3: the expectation identity over S in the shadow up to q, h <= t-1.
    {
        const auto& table = a.counts().table();
        std::vector<Mask> sets;
        for (const auto& [x, c] : table)
            if (popcount(x) <= q) sets.push_back(x);
        std::sort(sets.begin(), sets.end(), CanonicalLess{});
        Rng rng(derive_seed(seed, 3));
        std::size_t checked = 0;
        for (Mask s : sets) {
            const SetFamily lk = link(a.family(), s);
            for (int h = 0; h <= t - 1 && h <= a.k() - popcount(s); ++h) {
                std::vector<SetFamily> probes;
                for (Mask g : lk) probes.push_back(lk.with({g}));
                probes.push_back(lk);
                for (int i = 0; i < random_subfamilies; ++i) {
                    std::vector<Mask> sub;
                    for (Mask g : lk)
                        if (rng.below(2)) sub.push_back(g);
                    probes.push_back(lk.with(std::move(sub)));
                }
                for (const auto& fam : probes) {
                    ++checked;
                    if (!regularity_identity_holds(a, s, fam, h)) {
                        rep.a3.ok = false;
                        rep.a3.witness = {{"S", set_to_json(s)}, {"h", h}, {"family", to_json(fam)}};
                        break;
                    }
                }
                if (!rep.a3.ok) break;
            }
            if (!rep.a3.ok) break;
        }
        rep.a3.detail = std::to_string(checked) + " (S, h, F) identities checked";
    }

    // 4: |∂_h A(R)| / |∂_h A| >= (1 - |R|/(mu k))^h for R in the shadow up to q, 1 <= h <= min(t, k-|R|).
    {
        const auto& table = a.counts().table();
        std::map<int, std::uint64_t> level;  // |∂_h A|
        for (const auto& [x, c] : table) ++level[popcount(x)];
        std::unordered_map<Mask, std::vector<std::uint64_t>> up;  // R -> |∂_h A(R)| per h
        for (const auto& [x, c] : table) {
            const int sx = popcount(x);
            for_each_subset(x, [&](Mask rr) {
                const int h = sx - popcount(rr);
                if (popcount(rr) > q || h < 1 || h > t) return;
                auto& v = up[rr];
                if (v.size() <= static_cast<std::size_t>(t)) v.assign(t + 1, 0);
                ++v[h];
            });
        }
        std::vector<Mask> rs;
        for (const auto& [x, c] : table)
            if (popcount(x) <= q) rs.push_back(x);
        std::sort(rs.begin(), rs.end(), CanonicalLess{});
        const Rational muk = mu * a.k();
        for (Mask rr : rs) {
            const int sr = popcount(rr);
            for (int h = 1; h <= t && h <= a.k() - sr; ++h) {
                std::uint64_t num = 0;
                auto it = up.find(rr);
                if (it != up.end()) num = it->second[h];
                const Rational lhs = ratio(BigInt(num), BigInt(level[h]));
                Rational rhs = pow(Rational(1) - Rational(sr) / muk, h);
                if (lhs < rhs) {
                    rep.a4.ok = false;
                    rep.a4.witness = {{"R", set_to_json(rr)}, {"h", h}, {"lhs", to_string(lhs)}, {"rhs", to_string(rhs)}};
                    break;
                }
            }
            if (!rep.a4.ok) break;
        }
        rep.a4.detail = "checked over " + std::to_string(rs.size()) + " sets R";
    }
    return rep;
}

namespace {

void require_in_link(const SetFamily& f, const Domain& a, Mask s) {
    const SetFamily& all = a.family();
    for (Mask g : f)
        if ((g & s) || !all.contains(g | s))
            throw PreconditionError("family member " + format_set(g) + " is not in the ambient link at " +
                                    format_set(s));
}

}  // namespace

HomogeneityVerdict check_tau_homogeneous(const SetFamily& f, const Domain& a, const Rational& tau, Mask s) {
    require_in_link(f, a, s);
    HomogeneityVerdict v;
    v.tau = tau;
    v.worst_ratio = 0;
    if (f.empty()) return v;
    const BigInt base = a.link_count(s);
    const SubsetCounts fc(f);
    bool have = false;
    const Rational fsize(static_cast<long>(f.size()));
    for (const auto& [x, cx] : fc.table()) {
        // (|F(X)| / |A(S∪X)|) / (tau^|X| |F| / |A(S)|)
        Rational r = ratio(BigInt(cx) * base, a.link_count(s | x));
        r /= pow(tau, popcount(x)) * fsize;
        if (!have || r > v.worst_ratio || (r == v.worst_ratio && canonical_less(x, v.worst))) {
            v.worst_ratio = r;
            v.worst = x;
            have = true;
        }
    }
    v.ok = v.worst_ratio <= 1;
    return v;
}

Mask max_homogeneous_restriction(const SetFamily& f, const Domain& a, const Rational& tau, Mask s) {
    if (f.empty()) throw PreconditionError("max_homogeneous_restriction needs a nonempty family");
    require_in_link(f, a, s);
    const BigInt base = a.link_count(s);
    const SubsetCounts fc(f);
    const Rational mu_f = ratio(BigInt(f.size()), base);
    Mask best = 0;
    for (const auto& [x, cx] : fc.table()) {
        const Rational mu_x = ratio(BigInt(cx), a.link_count(s | x));
        if (mu_x < pow(tau, popcount(x)) * mu_f) continue;
        if (popcount(x) > popcount(best) || (popcount(x) == popcount(best) && x < best)) best = x;
    }
    auto check = check_tau_homogeneous(link(f, best), a, tau, s | best);
    if (!check.ok)
        throw InvariantViolation("restriction at the maximal set is not tau-homogeneous",
                                 json{{"S", set_to_json(best)}, {"worst", set_to_json(check.worst)}}.dump());
    return best;
}

HomogeneousSubfamily homogeneous_subfamily(const SetFamily& f, const Domain& a, const Rational& tau,
                                           const Rational& alpha, int t, Mask s) {
    auto hv = check_tau_homogeneous(f, a, tau, s);
    if (!hv.ok)
        throw PreconditionError("family is not tau-homogeneous",
                                json{{"X", set_to_json(hv.worst)}, {"ratio", to_string(hv.worst_ratio)}}.dump());
    const int k = a.k() - popcount(s);
    if (alpha <= 0 || alpha * 2 * k > 1) throw PreconditionError("homogeneous_subfamily needs 0 < alpha <= 1/(2k)");
    HomogeneousSubfamily out{f, f.with({}), 0};
    if (f.empty()) return out;
    const BigInt base = a.link_count(s);
    const Rational mu_f = ratio(BigInt(f.size()), base);
    const SubsetCounts fc(f);
    std::vector<Mask> sparse;
    for (const auto& [p, cp] : fc.table()) {
        if (popcount(p) > t - 1) continue;
        const Rational mu_p = ratio(BigInt(cp), a.link_count(s | p));
        if (mu_p < pow(alpha, popcount(p)) * mu_f) sparse.push_back(p);
    }
    out.sparse = f.with(sparse);
    out.g = family_difference(f, trace_cover(f, out.sparse));
    out.size_bound = (Rational(1) - 2 * alpha * k) * Rational(static_cast<long>(f.size()));
    if (Rational(static_cast<long>(out.g.size())) < out.size_bound)
        throw InvariantViolation("homogeneous subfamily smaller than (1 - 2 alpha k)|F|");
    const Rational tau2 = alpha * pow(tau / alpha, t);
    const SubsetCounts gc(out.g);
    for (const auto& [p, cp] : gc.table()) {
        if (popcount(p) > t - 1) continue;
        auto v = check_tau_homogeneous(link(f, p), a, tau2, s | p);
        if (!v.ok)
            throw InvariantViolation("F(P) not alpha(tau/alpha)^t-homogeneous",
                                     json{{"P", set_to_json(p)}, {"X", set_to_json(v.worst)}}.dump());
    }
    return out;
}

json to_json(const SpreadnessReport& r) {
    json j{{"r", to_string(r.r)}, {"t", r.t}, {"ok", r.ok}};
    if (r.violation) {
        j["violation"] = {{"T", set_to_json(r.violation->first)},
                          {"S", set_to_json(r.violation->second)},
                          {"link_size", to_string(r.link_size)},
                          {"restricted_size", to_string(r.restricted_size)}};
    }
    return j;
}

json to_json(const AssumptionsReport& r) {
    auto one = [](const AssumptionVerdict& v) {
        json j{{"ok", v.ok}, {"detail", v.detail}};
        if (!v.witness.is_null()) j["witness"] = v.witness;
        return j;
    };
    return {{"q", r.q},
            {"t", r.t},
            {"eta", to_string(r.eta)},
            {"mu", to_string(r.mu)},
            {"r", to_string(r.r)},
            {"assumption1", one(r.a1)},
            {"assumption2", one(r.a2)},
            {"assumption3", one(r.a3)},
            {"assumption4", one(r.a4)},
            {"all_ok", r.all_ok()}};
}

json to_json(const HomogeneityVerdict& v) {
    return {{"tau", to_string(v.tau)},
            {"ok", v.ok},
            {"worst", set_to_json(v.worst)},
            {"worst_ratio", to_string(v.worst_ratio)}};
}

}  // namespace sforge
