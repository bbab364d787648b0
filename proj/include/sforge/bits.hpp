#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace sforge {

// Bit i (0-based) stands for element i+1 of the ground set.
using Mask = std::uint64_t;

constexpr int kMaxGround = 64;

inline int popcount(Mask m) { return std::popcount(m); }

inline bool is_subset(Mask a, Mask b) { return (a & ~b) == 0; }

inline Mask full_mask(int n) {
    return n >= 64 ? ~Mask{0} : (Mask{1} << n) - 1;
}

inline Mask bit(int i) { return Mask{1} << i; }

inline int lowest_element(Mask m) { return std::countr_zero(m); }

// Canonical order: by size, then by numeric value.
inline bool canonical_less(Mask a, Mask b) {
    int pa = popcount(a), pb = popcount(b);
    return pa != pb ? pa < pb : a < b;
}

struct CanonicalLess {
    bool operator()(Mask a, Mask b) const { return canonical_less(a, b); }
};

inline std::vector<int> elements(Mask m) {
    std::vector<int> out;
    out.reserve(popcount(m));
    while (m) {
        out.push_back(std::countr_zero(m));
        m &= m - 1;
    }
    return out;
}

// Visits every subset of m, including m itself and the empty set.
template <class Fn>
void for_each_subset(Mask m, Fn&& fn) {
    Mask s = m;
    while (true) {
        fn(s);
        if (s == 0) break;
        s = (s - 1) & m;
    }
}

// Visits every k-element subset of m in increasing numeric order.
template <class Fn>
void for_each_ksubset(Mask m, int k, Fn&& fn) {
    int sz = popcount(m);
    if (k < 0 || k > sz) return;
    if (k == 0) {
        fn(Mask{0});
        return;
    }
    auto pos = elements(m);
    // Gosper's hack over index space, then scatter to element positions.
    std::uint64_t idx = (k == 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
    const std::uint64_t limit_bit = sz == 64 ? 0 : (std::uint64_t{1} << sz);
    while (true) {
        Mask out = 0;
        for (std::uint64_t r = idx; r; r &= r - 1) out |= bit(pos[std::countr_zero(r)]);
        fn(out);
        if (k == sz) break;
        std::uint64_t c = idx & (~idx + 1);
        std::uint64_t nx = idx + c;
        if (nx == 0 || (limit_bit && (nx & limit_bit))) break;
        idx = (((nx ^ idx) >> 2) / c) | nx;
        if (limit_bit && idx >= limit_bit) break;
    }
}

// "{1,2,5}" with 1-based labels.
inline std::string format_set(Mask m) {
    std::string s = "{";
    bool first = true;
    for (int e : elements(m)) {
        if (!first) s += ",";
        s += std::to_string(e + 1);
        first = false;
    }
    return s + "}";
}

}  // namespace sforge
