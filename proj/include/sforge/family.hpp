#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sforge/bits.hpp"

namespace sforge {

using json = nlohmann::json;

struct GroundSet {
    int n = 1;
    std::vector<std::string> labels;
};

// Immutable family of subsets of [n]. Members are kept sorted in canonical
// order (size, then numeric value) and unique.
class SetFamily {
public:
    SetFamily() = default;
    explicit SetFamily(int n);
    SetFamily(int n, std::vector<Mask> members);
    SetFamily(GroundSet ground, std::vector<Mask> members);

    // 1-based element lists, mostly for tests and literals.
    static SetFamily of(int n, const std::vector<std::vector<int>>& sets);

    int n() const { return ground_.n; }
    const GroundSet& ground() const { return ground_; }
    const std::vector<Mask>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    Mask operator[](std::size_t i) const { return members_[i]; }
    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }

    // k if every member has size k (an empty family reports nullopt).
    std::optional<int> uniformity() const;
    bool contains(Mask m) const;
    Mask support() const;
    int max_size() const;
    int min_size() const;

    // Same ground set, new members.
    SetFamily with(std::vector<Mask> members) const;

    bool operator==(const SetFamily& o) const { return ground_.n == o.ground_.n && members_ == o.members_; }

private:
    GroundSet ground_;
    std::vector<Mask> members_;
};

struct SunflowerWitness {
    std::vector<Mask> petals;  // the s member sets
    Mask core = 0;
    int s = 0;
    // s copies of one small set, counted only under the degenerate convention.
    bool degenerate = false;
};

// F(A, B) = { F \ B : F in F, F ∩ B = A }.
SetFamily restrict(const SetFamily& f, Mask a, Mask b);
// F(T) = F(T, T).
SetFamily link(const SetFamily& f, Mask t);
// F[B]: members containing some member of B.
SetFamily trace_cover(const SetFamily& f, const SetFamily& b);
SetFamily trace_cover(const SetFamily& f, Mask b);
SetFamily shadow(const SetFamily& f, int h);
SetFamily shadow_upto(const SetFamily& f, int h);
SetFamily join(const SetFamily& f, const SetFamily& b);
SetFamily upper_closure(const SetFamily& f);
bool in_upper_closure(const SetFamily& f, Mask x);
bool is_upward_closed(const SetFamily& f);

SetFamily family_union(const SetFamily& a, const SetFamily& b);
SetFamily family_difference(const SetFamily& a, const SetFamily& b);
bool is_subfamily(const SetFamily& a, const SetFamily& b);
SetFamily layer(const SetFamily& f, int h);
SetFamily layers_upto(const SetFamily& f, int h);

struct Transversal {
    int size = 0;
    Mask witness = 0;
    std::uint64_t nodes = 0;
};
Transversal transversal_number(const SetFamily& f);

// |F(X)| = number of members containing X, for every X below some member.
class SubsetCounts {
public:
    explicit SubsetCounts(const SetFamily& f);
    std::uint64_t count(Mask x) const;
    const std::unordered_map<Mask, std::uint64_t>& table() const { return table_; }
    std::uint64_t total() const { return total_; }

private:
    std::unordered_map<Mask, std::uint64_t> table_;
    std::uint64_t total_ = 0;
};

// Serialization. JSON: {"n": int, "sets": [[int,...],...]} with 1-based
// elements. Hex text: header "n=<int>", then one hexadecimal mask per line.
json to_json(const SetFamily& f);
SetFamily family_from_json(const json& j);
json set_to_json(Mask m);
Mask set_from_json(const json& j, int n);
std::string to_hex_text(const SetFamily& f);
SetFamily family_from_hex_text(std::string_view text);
json to_json(const SunflowerWitness& w);

}  // namespace sforge
