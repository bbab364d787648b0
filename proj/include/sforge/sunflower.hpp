#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sforge/domain.hpp"
#include "sforge/family.hpp"

namespace sforge {

enum class CoreMode { Exact, AtMost, Any };

// Which sunflowers count: s petals and a core size condition.
struct CorePredicate {
    int s = 3;
    CoreMode mode = CoreMode::Any;
    int c = 0;  // core size bound for Exact / AtMost
    // AtMost only: a member of size <= c counts as s copies of itself.
    bool degenerate = false;

    static CorePredicate any(int s) { return {s, CoreMode::Any, 0, false}; }
    static CorePredicate exact(int s, int c) { return {s, CoreMode::Exact, c, false}; }
    static CorePredicate at_most(int s, int c, bool degenerate = false) { return {s, CoreMode::AtMost, c, degenerate}; }
    // "any", "exact:1", "atmost:2", "atmost:2:degenerate".
    static CorePredicate parse(std::string_view text, int s);

    bool accepts(int core_size) const {
        switch (mode) {
            case CoreMode::Exact: return core_size == c;
            case CoreMode::AtMost: return core_size <= c;
            case CoreMode::Any: return true;
        }
        return false;
    }
    std::string to_string() const;
};

// Common core if the (pairwise distinct) sets form a sunflower.
std::optional<Mask> is_sunflower(const std::vector<Mask>& sets);

// Lexicographically first witness over cores in canonical order, or none
// (exhaustive).
std::optional<SunflowerWitness> find_sunflower(const SetFamily& f, const CorePredicate& pred);

bool is_sunflower_free(const SetFamily& f, const CorePredicate& pred);

struct SearchResult {
    std::size_t optimum = 0;
    SetFamily witness;
    std::uint64_t nodes = 0;
    bool certified = false;
    std::size_t conflicts = 0;  // forbidden s-subsets of the domain
    std::size_t subtasks = 0;
};

struct SearchOptions {
    std::uint64_t budget = 1'000'000'000;  // nodes per subtask
    int split_depth = 6;                   // branch depth at which subtrees are handed to workers
};

// Largest F ⊆ A without a sunflower matching pred.
SearchResult max_sunflower_free(const Domain& a, const CorePredicate& pred, const SearchOptions& opt = {});

struct PhiResult {
    int s = 0, t = 0;
    std::size_t value = 0;
    int support = 0;             // ground size of the last search
    bool unconditional = false;  // support >= t (value + 1)
    SearchResult search;
};

// phi(s, t) = max size of a t-uniform family without an s-petal sunflower.
// Searches Binomial(N, t) and enlarges N until N >= t (value + 1). A positive
// support_bound caps N, leaving the value flagged support-restricted.
PhiResult phi_exact(int s, int t, int support_bound = 0, const SearchOptions& opt = {});

// t blocks of s-1 elements, one element from each block: (s-1)^t sets, no
// s-petal sunflower.
SetFamily product_construction(int s, int t);

// Erdős–Rado: k!(s-1)^k.
BigInt erdos_rado_bound(int s, int k);

json to_json(const SearchResult& r);
json to_json(const PhiResult& r);

}  // namespace sforge
