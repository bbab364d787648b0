#include "sforge/family.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "sforge/errors.hpp"

namespace sforge {

namespace {

void check_ground(int n) {
    if (n < 1 || n > kMaxGround)
        throw PreconditionError("ground set size must be in 1..64, got " + std::to_string(n));
}

void normalize(std::vector<Mask>& v) {
    std::sort(v.begin(), v.end(), CanonicalLess{});
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

void require_same_ground(const SetFamily& a, const SetFamily& b) {
    if (a.n() != b.n())
        throw PreconditionError("families live on different ground sets (" + std::to_string(a.n()) +
                                " vs " + std::to_string(b.n()) + ")");
}

}  // namespace

SetFamily::SetFamily(int n) {
    check_ground(n);
    ground_.n = n;
}

SetFamily::SetFamily(int n, std::vector<Mask> members) : SetFamily(GroundSet{n, {}}, std::move(members)) {}

SetFamily::SetFamily(GroundSet ground, std::vector<Mask> members)
    : ground_(std::move(ground)), members_(std::move(members)) {
    check_ground(ground_.n);
    const Mask full = full_mask(ground_.n);
    for (Mask m : members_)
        if (!is_subset(m, full))
            throw PreconditionError("member " + format_set(m) + " is not a subset of [" + std::to_string(ground_.n) +
                                    "]");
    normalize(members_);
}

SetFamily SetFamily::of(int n, const std::vector<std::vector<int>>& sets) {
    std::vector<Mask> ms;
    ms.reserve(sets.size());
    for (const auto& s : sets) {
        Mask m = 0;
        for (int e : s) {
            if (e < 1 || e > n) throw PreconditionError("element " + std::to_string(e) + " outside [n]");
            m |= bit(e - 1);
        }
        ms.push_back(m);
    }
    return SetFamily(n, std::move(ms));
}

std::optional<int> SetFamily::uniformity() const {
    if (members_.empty()) return std::nullopt;
    int k = popcount(members_.front());
    if (popcount(members_.back()) != k) return std::nullopt;
    return k;
}

bool SetFamily::contains(Mask m) const {
    return std::binary_search(members_.begin(), members_.end(), m, CanonicalLess{});
}

Mask SetFamily::support() const {
    Mask s = 0;
    for (Mask m : members_) s |= m;
    return s;
}

int SetFamily::max_size() const { return members_.empty() ? 0 : popcount(members_.back()); }
int SetFamily::min_size() const { return members_.empty() ? 0 : popcount(members_.front()); }

SetFamily SetFamily::with(std::vector<Mask> members) const {
    SetFamily out;
    out.ground_ = ground_;
    out.members_ = std::move(members);
    normalize(out.members_);
    return out;
}

SetFamily restrict(const SetFamily& f, Mask a, Mask b) {
    if (!is_subset(a, b)) throw PreconditionError("restrict requires A ⊆ B");
    std::vector<Mask> out;
    for (Mask m : f)
        if ((m & b) == a) out.push_back(m & ~b);
    return f.with(std::move(out));
}

SetFamily link(const SetFamily& f, Mask t) { return restrict(f, t, t); }

SetFamily trace_cover(const SetFamily& f, const SetFamily& b) {
    require_same_ground(f, b);
    std::vector<Mask> out;
    for (Mask m : f)
        for (Mask x : b)
            if (is_subset(x, m)) {
                out.push_back(m);
                break;
            }
    return f.with(std::move(out));
}

SetFamily trace_cover(const SetFamily& f, Mask b) {
    std::vector<Mask> out;
    for (Mask m : f)
        if (is_subset(b, m)) out.push_back(m);
    return f.with(std::move(out));
}

SetFamily shadow(const SetFamily& f, int h) {
    std::vector<Mask> out;
    for (Mask m : f) for_each_ksubset(m, h, [&](Mask x) { out.push_back(x); });
    return f.with(std::move(out));
}

SetFamily shadow_upto(const SetFamily& f, int h) {
    std::vector<Mask> out;
    for (int j = 0; j <= h; ++j)
        for (Mask m : f) for_each_ksubset(m, j, [&](Mask x) { out.push_back(x); });
    return f.with(std::move(out));
}

SetFamily join(const SetFamily& f, const SetFamily& b) {
    require_same_ground(f, b);
    std::vector<Mask> out;
    out.reserve(f.size() * b.size());
    for (Mask x : f)
        for (Mask y : b) out.push_back(x | y);
    return f.with(std::move(out));
}

bool in_upper_closure(const SetFamily& f, Mask x) {
    for (Mask m : f)
        if (is_subset(m, x)) return true;
    return false;
}

SetFamily upper_closure(const SetFamily& f) {
    if (f.n() > 24)
        throw CapacityError("upper closure is materialized only for n <= 24 (n = " + std::to_string(f.n()) +
                            "); use membership queries instead");
    const std::size_t N = std::size_t{1} << f.n();
    std::vector<char> up(N, 0);
    for (Mask m : f) up[m] = 1;
    // Superset propagation along each coordinate.
    for (int i = 0; i < f.n(); ++i)
        for (std::size_t x = 0; x < N; ++x)
            if (!(x & bit(i)) && up[x]) up[x | bit(i)] = 1;
    std::vector<Mask> out;
    for (std::size_t x = 0; x < N; ++x)
        if (up[x]) out.push_back(x);
    return f.with(std::move(out));
}

bool is_upward_closed(const SetFamily& f) {
    const Mask full = full_mask(f.n());
    for (Mask m : f)
        for (Mask rest = full & ~m; rest; rest &= rest - 1)
            if (!f.contains(m | (rest & (~rest + 1)))) return false;
    return true;
}

SetFamily family_union(const SetFamily& a, const SetFamily& b) {
    require_same_ground(a, b);
    std::vector<Mask> out(a.members());
    out.insert(out.end(), b.begin(), b.end());
    return a.with(std::move(out));
}

SetFamily family_difference(const SetFamily& a, const SetFamily& b) {
    require_same_ground(a, b);
    std::vector<Mask> out;
    for (Mask m : a)
        if (!b.contains(m)) out.push_back(m);
    return a.with(std::move(out));
}

bool is_subfamily(const SetFamily& a, const SetFamily& b) {
    for (Mask m : a)
        if (!b.contains(m)) return false;
    return true;
}

SetFamily layer(const SetFamily& f, int h) {
    std::vector<Mask> out;
    for (Mask m : f)
        if (popcount(m) == h) out.push_back(m);
    return f.with(std::move(out));
}

SetFamily layers_upto(const SetFamily& f, int h) {
    std::vector<Mask> out;
    for (Mask m : f)
        if (popcount(m) <= h) out.push_back(m);
    return f.with(std::move(out));
}

namespace {

struct HittingSearch {
    const std::vector<Mask>& sets;
    int best;
    Mask best_witness;
    std::uint64_t nodes = 0;

    // Lower bound: greedily collected pairwise-disjoint unhit sets.
    int packing_bound(Mask chosen) const {
        Mask used = 0;
        int cnt = 0;
        for (Mask s : sets)
            if (!(s & chosen) && !(s & used)) {
                used |= s;
                ++cnt;
            }
        return cnt;
    }

    void dfs(Mask chosen, int depth) {
        ++nodes;
        const Mask* pick = nullptr;
        for (const Mask& s : sets)
            if (!(s & chosen)) {
                pick = &s;
                break;
            }
        if (!pick) {
            if (depth < best) {
                best = depth;
                best_witness = chosen;
            }
            return;
        }
        if (depth + packing_bound(chosen) >= best) return;
        for (Mask rest = *pick; rest; rest &= rest - 1) dfs(chosen | (rest & (~rest + 1)), depth + 1);
    }
};

}  // namespace

Transversal transversal_number(const SetFamily& f) {
    if (f.empty()) throw PreconditionError("transversal number of an empty family is undefined here");
    if (f.contains(0)) throw PreconditionError("family contains the empty set; no transversal exists");
    // Greedy cover as the initial incumbent.
    Mask greedy = 0;
    for (Mask m : f)
        if (!(m & greedy)) greedy |= m & (~m + 1);
    HittingSearch hs{f.members(), popcount(greedy) + 1, greedy};
    hs.dfs(0, 0);
    return Transversal{hs.best, hs.best_witness, hs.nodes};
}

SubsetCounts::SubsetCounts(const SetFamily& f) {
    std::size_t est = 0;
    for (Mask m : f) est += std::size_t{1} << std::min(popcount(m), 20);
    table_.reserve(est);
    for (Mask m : f) for_each_subset(m, [&](Mask x) { ++table_[x]; });
    total_ = f.size();
}

std::uint64_t SubsetCounts::count(Mask x) const {
    auto it = table_.find(x);
    return it == table_.end() ? 0 : it->second;
}

json set_to_json(Mask m) {
    json a = json::array();
    for (int e : elements(m)) a.push_back(e + 1);
    return a;
}

Mask set_from_json(const json& j, int n) {
    if (!j.is_array()) throw ParseError("a set must be a JSON array of 1-based elements");
    Mask m = 0;
    for (const auto& e : j) {
        if (!e.is_number_integer()) throw ParseError("set elements must be integers");
        int v = e.get<int>();
        if (v < 1 || v > n) throw ParseError("element " + std::to_string(v) + " outside [" + std::to_string(n) + "]");
        m |= bit(v - 1);
    }
    return m;
}

json to_json(const SetFamily& f) {
    json sets = json::array();
    for (Mask m : f) sets.push_back(set_to_json(m));
    json j{{"n", f.n()}, {"sets", sets}};
    if (!f.ground().labels.empty()) j["labels"] = f.ground().labels;
    return j;
}

SetFamily family_from_json(const json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("sets"))
        throw ParseError("family JSON needs fields n and sets");
    int n = j.at("n").get<int>();
    if (n < 1 || n > kMaxGround) throw ParseError("n must be in 1..64");
    std::vector<Mask> ms;
    for (const auto& s : j.at("sets")) ms.push_back(set_from_json(s, n));
    GroundSet g{n, {}};
    if (j.contains("labels")) g.labels = j.at("labels").get<std::vector<std::string>>();
    return SetFamily(std::move(g), std::move(ms));
}

std::string to_hex_text(const SetFamily& f) {
    std::ostringstream os;
    os << "n=" << f.n() << "\n";
    for (Mask m : f) os << std::hex << m << std::dec << "\n";
    return os.str();
}

SetFamily family_from_hex_text(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    int n = -1;
    std::vector<Mask> ms;
    while (std::getline(is, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (n < 0) {
            if (line.rfind("n=", 0) != 0) throw ParseError("hex family must start with a header n=<int>");
            n = std::stoi(line.substr(2));
            if (n < 1 || n > kMaxGround) throw ParseError("n must be in 1..64");
            continue;
        }
        std::string_view sv(line);
        if (sv.rfind("0x", 0) == 0) sv.remove_prefix(2);
        Mask m = 0;
        auto res = std::from_chars(sv.data(), sv.data() + sv.size(), m, 16);
        if (res.ec != std::errc() || res.ptr != sv.data() + sv.size()) throw ParseError("bad hex mask: " + line);
        if (!is_subset(m, full_mask(n))) throw ParseError("mask outside ground set: " + line);
        ms.push_back(m);
    }
    if (n < 0) throw ParseError("missing n=<int> header");
    return SetFamily(n, std::move(ms));
}

json to_json(const SunflowerWitness& w) {
    json petals = json::array();
    for (Mask m : w.petals) petals.push_back(set_to_json(m));
    json j{{"s", w.s}, {"core", set_to_json(w.core)}, {"sets", petals}};
    if (w.degenerate) j["degenerate"] = true;
    return j;
}

}  // namespace sforge
