#include "sforge/sunflower.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "sforge/errors.hpp"
#include "sforge/parallel.hpp"

namespace sforge {

CorePredicate CorePredicate::parse(std::string_view text, int s) {
    if (s < 2) throw PreconditionError("a sunflower needs s >= 2 petals");
    std::string t(text);
    if (t == "any") return any(s);
    auto colon = t.find(':');
    if (colon == std::string::npos) throw ParseError("core predicate must be any, exact:<c> or atmost:<c>");
    const std::string mode = t.substr(0, colon);
    std::string rest = t.substr(colon + 1);
    bool degenerate = false;
    auto c2 = rest.find(':');
    if (c2 != std::string::npos) {
        if (rest.substr(c2 + 1) != "degenerate") throw ParseError("unknown core predicate flag: " + rest.substr(c2 + 1));
        degenerate = true;
        rest = rest.substr(0, c2);
    }
    int c = 0;
    try {
        std::size_t used = 0;
        c = std::stoi(rest, &used);
        if (used != rest.size() || c < 0) throw ParseError("bad core size: " + rest);
    } catch (const std::logic_error&) {
        throw ParseError("bad core size: " + rest);
    }
    if (mode == "exact") {
        if (degenerate) throw ParseError("the degenerate convention applies to atmost predicates only");
        return exact(s, c);
    }
    if (mode == "atmost") return at_most(s, c, degenerate);
    throw ParseError("unknown core mode: " + mode);
}

std::string CorePredicate::to_string() const {
    switch (mode) {
        case CoreMode::Exact: return "exact:" + std::to_string(c);
        case CoreMode::AtMost: return "atmost:" + std::to_string(c) + (degenerate ? ":degenerate" : "");
        case CoreMode::Any: return "any";
    }
    return {};
}

std::optional<Mask> is_sunflower(const std::vector<Mask>& sets) {
    if (sets.size() < 2) throw PreconditionError("is_sunflower needs at least two sets");
    std::vector<Mask> sorted(sets);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw PreconditionError("sunflower petals must be pairwise distinct sets");
    Mask core = ~Mask{0};
    for (Mask m : sets) core &= m;
    // Pairwise disjoint petals is equivalent to every pairwise intersection being the core.
    Mask used = 0;
    for (Mask m : sets) {
        const Mask petal = m & ~core;
        if (petal & used) return std::nullopt;
        used |= petal;
    }
    return core;
}

namespace {

// Members containing `core` whose petals admit s pairwise disjoint choices.
// Calls fn(indices) for each such s-subset; fn returns false to stop.
template <class Fn>
bool for_each_petal_packing(const std::vector<Mask>& members, const std::vector<int>& cand, Mask core, int s,
                            Fn&& fn) {
    std::vector<int> pick;
    pick.reserve(s);
    bool go = true;
    auto rec = [&](auto&& self, std::size_t from, Mask used) -> void {
        if (!go) return;
        if (static_cast<int>(pick.size()) == s) {
            go = fn(pick);
            return;
        }
        const std::size_t need = static_cast<std::size_t>(s) - pick.size();
        for (std::size_t i = from; i + need <= cand.size() && go; ++i) {
            const Mask petal = members[cand[i]] & ~core;
            if (petal & used) continue;
            pick.push_back(cand[i]);
            self(self, i + 1, used | petal);
            pick.pop_back();
        }
    };
    rec(rec, 0, 0);
    return go;
}

std::vector<Mask> candidate_cores(const std::vector<Mask>& members, const CorePredicate& pred) {
    std::unordered_set<Mask> seen;
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            const Mask c = members[i] & members[j];
            if (pred.accepts(popcount(c))) seen.insert(c);
        }
    std::vector<Mask> cores(seen.begin(), seen.end());
    std::sort(cores.begin(), cores.end(), CanonicalLess{});
    return cores;
}

}  // namespace

std::optional<SunflowerWitness> find_sunflower(const SetFamily& f, const CorePredicate& pred) {
    if (pred.s < 2) throw PreconditionError("a sunflower needs s >= 2 petals");
    if (pred.degenerate && pred.mode == CoreMode::AtMost)
        for (Mask m : f)
            if (popcount(m) <= pred.c) return SunflowerWitness{std::vector<Mask>(pred.s, m), m, pred.s, true};
    const auto& members = f.members();
    for (Mask core : candidate_cores(members, pred)) {
        std::vector<int> cand;
        for (std::size_t i = 0; i < members.size(); ++i)
            if (is_subset(core, members[i])) cand.push_back(static_cast<int>(i));
        if (static_cast<int>(cand.size()) < pred.s) continue;
        std::optional<SunflowerWitness> found;
        for_each_petal_packing(members, cand, core, pred.s, [&](const std::vector<int>& pick) {
            SunflowerWitness w;
            for (int i : pick) w.petals.push_back(members[i]);
            w.core = core;
            w.s = pred.s;
            found = w;
            return false;
        });
        if (found) return found;
    }
    return std::nullopt;
}

bool is_sunflower_free(const SetFamily& f, const CorePredicate& pred) { return !find_sunflower(f, pred); }

BigInt erdos_rado_bound(int s, int k) { return factorial(k) * pow(BigInt(s - 1), static_cast<unsigned long>(k)); }

SetFamily product_construction(int s, int t) {
    if (s < 2 || t < 1 || (s - 1) * t > kMaxGround) throw PreconditionError("product construction needs (s-1)t <= 64");
    const int w = s - 1;
    std::vector<Mask> out{0};
    for (int b = 0; b < t; ++b) {
        std::vector<Mask> next;
        for (Mask m : out)
            for (int v = 0; v < w; ++v) next.push_back(m | bit(b * w + v));
        out = std::move(next);
    }
    return SetFamily(w * t, std::move(out));
}

namespace {

constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kMaxConflictEntries = 60'000'000;

struct Conflicts {
    int s = 0;
    std::vector<int> flat;                 // edge e occupies flat[e*s .. e*s+s)
    std::vector<std::vector<int>> incident;
    std::size_t edges() const { return s ? flat.size() / s : 0; }
};

Conflicts build_conflicts(const std::vector<Mask>& members, const CorePredicate& pred) {
    Conflicts cf;
    cf.s = pred.s;
    cf.incident.resize(members.size());
    for (Mask core : candidate_cores(members, pred)) {
        std::vector<int> cand;
        for (std::size_t i = 0; i < members.size(); ++i)
            if (is_subset(core, members[i])) cand.push_back(static_cast<int>(i));
        for_each_petal_packing(members, cand, core, pred.s, [&](const std::vector<int>& pick) {
            cf.flat.insert(cf.flat.end(), pick.begin(), pick.end());
            if (cf.flat.size() > kMaxConflictEntries)
                throw CapacityError("too many forbidden sunflowers to enumerate for this domain");
            return true;
        });
    }
    for (std::size_t e = 0; e < cf.edges(); ++e)
        for (int j = 0; j < cf.s; ++j) cf.incident[cf.flat[e * cf.s + j]].push_back(static_cast<int>(e));
    return cf;
}

struct Task {
    std::vector<int> included;
    std::vector<std::uint8_t> status;
};

struct Outcome {
    std::size_t best = 0;
    std::vector<int> best_set;
    bool improved = false;
    std::uint64_t nodes = 0;
    bool aborted = false;
};

class Searcher {
public:
    Searcher(const std::vector<Mask>& members, const Conflicts& cf, const CorePredicate& pred,
             const std::vector<Mask>& blocks, std::uint64_t budget)
        : mem_(members), cf_(cf), pred_(pred), blocks_(blocks), budget_(budget),
          status_(members.size(), 0), cnt_(cf.edges(), 0) {
        for (Mask b : blocks_) domain_support_ |= b;
    }

    void exclude_upfront(int m) { status_[m] = 2; }

    // Greedy maximal family in canonical order.
    std::vector<int> greedy() {
        const std::size_t mark = trail_.size();
        std::vector<int> got;
        for (std::size_t m = 0; m < mem_.size(); ++m)
            if (status_[m] == 0) {
                include(static_cast<int>(m));
                got.push_back(static_cast<int>(m));
            }
        for (auto it = got.rbegin(); it != got.rend(); ++it) uninclude(*it);
        undo_to(mark);
        return got;
    }

    void load(const Task& t) {
        for (int m : t.included) include(m);
        for (std::size_t m = 0; m < status_.size(); ++m)
            if (t.status[m] == 2 && status_[m] == 0) {
                status_[m] = 2;
                trail_.push_back(static_cast<int>(m));
            }
    }

    Outcome run(std::size_t incumbent, std::vector<Task>* tasks, int split_depth) {
        out_ = Outcome{};
        out_.best = incumbent;
        tasks_ = tasks;
        split_depth_ = split_depth;
        dfs(0);
        return out_;
    }

private:
    const std::vector<Mask>& mem_;
    const Conflicts& cf_;
    const CorePredicate& pred_;
    const std::vector<Mask>& blocks_;
    Mask domain_support_ = 0;
    std::uint64_t budget_;
    std::vector<std::uint8_t> status_;  // 0 undecided, 1 in, 2 out
    std::vector<std::uint8_t> cnt_;     // included members per conflict
    std::vector<int> included_;
    std::vector<int> trail_;            // excluded members, for undo
    Outcome out_;
    std::vector<Task>* tasks_ = nullptr;
    int split_depth_ = 0;

    void include(int m) {
        status_[m] = 1;
        included_.push_back(m);
        const int s = cf_.s;
        for (int e : cf_.incident[m]) {
            if (++cnt_[e] != s - 1) continue;
            // One member left: it can no longer be added.
            for (int j = 0; j < s; ++j) {
                const int x = cf_.flat[static_cast<std::size_t>(e) * s + j];
                if (status_[x] == 0) {
                    status_[x] = 2;
                    trail_.push_back(x);
                }
            }
        }
    }

    void uninclude(int m) {
        for (int e : cf_.incident[m]) --cnt_[e];
        status_[m] = 0;
        included_.pop_back();
    }

    void undo_to(std::size_t mark) {
        while (trail_.size() > mark) {
            status_[trail_.back()] = 0;
            trail_.pop_back();
        }
    }

    std::size_t cap(int j, int fixed_core) const {
        const int s = pred_.s;
        if (j == 0) return 1;
        if (pred_.mode == CoreMode::Any) {
            if (s == 2) return 1;
            if (j == 1) return static_cast<std::size_t>(s - 1);
            BigInt er = erdos_rado_bound(s, j);
            return er.fits_ulong_p() ? er.get_ui() : kNoCap;
        }
        if (j == 1 && pred_.accepts(fixed_core)) return static_cast<std::size_t>(s - 1);
        if (s == 2) {
            bool all = true;
            for (int c = fixed_core; c < fixed_core + j; ++c) all = all && pred_.accepts(c);
            if (all) return 1;
        }
        return kNoCap;
    }

    void dfs(int depth) {
        if (out_.aborted) return;
        if (++out_.nodes > budget_) {
            out_.aborted = true;
            return;
        }
        // Orbits of undecided members under the pointwise stabilizer of U.
        Mask u = 0;
        for (int m : included_) u |= mem_[m];
        int first = -1;
        std::size_t bound = included_.size();
        std::vector<int> orbit;
        if (!blocks_.empty()) {
            std::unordered_map<Mask, std::size_t> orbit_size;
            for (std::size_t m = 0; m < mem_.size(); ++m) {
                if (status_[m] != 0) continue;
                if (first < 0) first = static_cast<int>(m);
                ++orbit_size[mem_[m] & u];
            }
            for (const auto& [key, size] : orbit_size) {
                const int sample = popcount(key);
                // all members share one size, so j is size - |key|
                const std::size_t c = cap(popcount(mem_[first]) - sample, sample);
                bound += std::min(size, c);
            }
            if (first >= 0) {
                const Mask key = mem_[first] & u;
                for (std::size_t m = first; m < mem_.size(); ++m)
                    if (status_[m] == 0 && (mem_[m] & u) == key) orbit.push_back(static_cast<int>(m));
            }
        } else {
            for (std::size_t m = 0; m < mem_.size(); ++m)
                if (status_[m] == 0) {
                    if (first < 0) first = static_cast<int>(m);
                    ++bound;
                }
            if (first >= 0) orbit.push_back(first);
        }
        if (first < 0) {
            if (included_.size() > out_.best) {
                out_.best = included_.size();
                out_.best_set = included_;
                out_.improved = true;
            }
            return;
        }
        if (bound <= out_.best) return;
        if (tasks_ && depth == split_depth_) {
            tasks_->push_back(Task{included_, status_});
            return;
        }
        {
            const std::size_t mark = trail_.size();
            include(first);
            dfs(depth + 1);
            uninclude(first);
            undo_to(mark);
        }
        {
            const std::size_t mark = trail_.size();
            for (int m : orbit) {
                status_[m] = 2;
                trail_.push_back(m);
            }
            dfs(depth + 1);
            undo_to(mark);
        }
    }
};

}  // namespace

SearchResult max_sunflower_free(const Domain& a, const CorePredicate& pred, const SearchOptions& opt) {
    if (pred.s < 2) throw PreconditionError("a sunflower needs s >= 2 petals");
    const SetFamily& fam = a.family();
    const auto& members = fam.members();
    const Conflicts cf = build_conflicts(members, pred);
    std::vector<Mask> blocks = a.symmetry_blocks();

    SearchResult res;
    res.conflicts = cf.edges();
    auto make = [&] {
        Searcher sr(members, cf, pred, blocks, opt.budget);
        if (pred.degenerate && pred.mode == CoreMode::AtMost)
            for (std::size_t m = 0; m < members.size(); ++m)
                if (popcount(members[m]) <= pred.c) sr.exclude_upfront(static_cast<int>(m));
        return sr;
    };

    Searcher root = make();
    const std::vector<int> greedy = root.greedy();
    std::vector<Task> tasks;
    Outcome top = root.run(greedy.size(), &tasks, opt.split_depth);

    std::size_t best = greedy.size();
    std::vector<int> best_set = greedy;
    if (top.improved) {
        best = top.best;
        best_set = top.best_set;
    }
    std::vector<Outcome> outs(tasks.size());
    const std::size_t start = best;
    parallel_for(tasks.size(), [&](std::size_t i) {
        Searcher sr = make();
        sr.load(tasks[i]);
        outs[i] = sr.run(start, nullptr, 0);
    });
    res.nodes = top.nodes;
    res.certified = !top.aborted;
    for (const auto& o : outs) {
        res.nodes += o.nodes;
        res.certified = res.certified && !o.aborted;
        if (o.improved && o.best > best) {
            best = o.best;
            best_set = o.best_set;
        }
    }
    res.subtasks = tasks.size();
    res.optimum = best;
    std::vector<Mask> chosen;
    for (int m : best_set) chosen.push_back(members[m]);
    res.witness = fam.with(std::move(chosen));
    if (auto w = find_sunflower(res.witness, pred))
        throw InvariantViolation("search returned a family containing a forbidden sunflower",
                                 to_json(*w).dump());
    return res;
}

PhiResult phi_exact(int s, int t, int support_bound, const SearchOptions& opt) {
    if (s < 2 || t < 1) throw PreconditionError("phi(s, t) needs s >= 2 and t >= 1");
    PhiResult r;
    r.s = s;
    r.t = t;
    const int lower = static_cast<int>(std::min<BigInt>(pow(BigInt(s - 1), t), 64).get_si());
    int n = t * (lower + 1);
    if (support_bound > 0) n = std::min(n, support_bound);
    n = std::max(n, t);
    while (true) {
        if (n > kMaxGround) throw CapacityError("phi search needs a ground set above 64 elements");
        r.search = max_sunflower_free(Domain::binomial(n, t), CorePredicate::any(s), opt);
        r.value = r.search.optimum;
        r.support = n;
        const std::size_t needed = static_cast<std::size_t>(t) * (r.value + 1);
        r.unconditional = r.search.certified && static_cast<std::size_t>(n) >= needed;
        if (r.unconditional || !r.search.certified) break;
        if (support_bound > 0 && needed > static_cast<std::size_t>(support_bound)) break;
        n = static_cast<int>(needed);
    }
    return r;
}

json to_json(const SearchResult& r) {
    return {{"optimum", r.optimum},
            {"witness", to_json(r.witness)},
            {"nodes", r.nodes},
            {"certified", r.certified},
            {"conflicts", r.conflicts},
            {"subtasks", r.subtasks}};
}

json to_json(const PhiResult& r) {
    return {{"s", r.s},
            {"t", r.t},
            {"value", r.value},
            {"support", r.support},
            {"unconditional", r.unconditional},
            {"support_restricted", !r.unconditional},
            {"search", to_json(r.search)}};
}

}  // namespace sforge
