#pragma once

// Integer lattice geometry: sites in Z^d, axis-aligned boxes with row-major
// flat indexing, and space-time paths.

#include <cstdint>
#include <string>
#include <vector>

#include "rwre/common.hpp"

namespace rwre {

using Site = std::vector<int>;

inline Site origin_site(int dim) { return Site(static_cast<size_t>(dim), 0); }

inline Site add_sites(const Site& a, const Site& b) {
    Site out(a.size());
    for (size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
    return out;
}

inline Site sub_sites(const Site& a, const Site& b) {
    Site out(a.size());
    for (size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
    return out;
}

inline std::string site_to_string(const Site& s) {
    std::string out = "(";
    for (size_t k = 0; k < s.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(s[k]);
    }
    return out + ")";
}

/// Axis-aligned box [lo_0,hi_0] x ... x [lo_{d-1},hi_{d-1}], row-major flat
/// indexing with the last coordinate fastest.
struct Box {
    Site lo, hi;

    Box() = default;
    Box(Site l, Site h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size()) throw ConfigError("box lo/hi dimension mismatch");
        for (size_t k = 0; k < lo.size(); ++k)
            if (lo[k] > hi[k]) throw ConfigError("box has empty extent");
    }

    static Box centered(int dim, int radius) {
        return Box(Site(static_cast<size_t>(dim), -radius), Site(static_cast<size_t>(dim), radius));
    }
    static Box single(const Site& s) { return Box(s, s); }

    int dim() const { return static_cast<int>(lo.size()); }

    uint64_t size() const {
        uint64_t n = 1;
        for (size_t k = 0; k < lo.size(); ++k)
            n *= static_cast<uint64_t>(hi[k] - lo[k] + 1);
        return n;
    }

    bool contains(const Site& s) const {
        for (size_t k = 0; k < lo.size(); ++k)
            if (s[k] < lo[k] || s[k] > hi[k]) return false;
        return true;
    }

    /// Whether `other` fits inside this box.
    bool covers(const Box& other) const {
        for (size_t k = 0; k < lo.size(); ++k)
            if (other.lo[k] < lo[k] || other.hi[k] > hi[k]) return false;
        return true;
    }

    uint64_t index(const Site& s) const {
        uint64_t idx = 0;
        for (size_t k = 0; k < lo.size(); ++k)
            idx = idx * static_cast<uint64_t>(hi[k] - lo[k] + 1) +
                  static_cast<uint64_t>(s[k] - lo[k]);
        return idx;
    }

    Site site(uint64_t idx) const {
        Site s(lo.size());
        for (size_t k = lo.size(); k-- > 0;) {
            const uint64_t w = static_cast<uint64_t>(hi[k] - lo[k] + 1);
            s[k] = lo[k] + static_cast<int>(idx % w);
            idx /= w;
        }
        return s;
    }

    /// Hull of the Minkowski sum of this box and a finite set of steps.
    Box minkowski_hull(const std::vector<Site>& steps) const {
        Site l = lo, h = hi;
        std::vector<int> mn(lo.size()), mx(lo.size());
        for (size_t k = 0; k < lo.size(); ++k) {
            int a = steps.front()[k], b = steps.front()[k];
            for (const auto& st : steps) {
                a = std::min(a, st[k]);
                b = std::max(b, st[k]);
            }
            l[k] += a;
            h[k] += b;
        }
        return Box(l, h);
    }

    Box shifted(const Site& by) const { return Box(sub_sites(lo, by), sub_sites(hi, by)); }

    bool operator==(const Box& other) const { return lo == other.lo && hi == other.hi; }
};

/// Space-time path x_0..x_t (positions, x_0 normally the origin).
using LatticePath = std::vector<Site>;

inline LatticePath zero_path(int dim, int t) {
    return LatticePath(static_cast<size_t>(t + 1), origin_site(dim));
}

inline LatticePath add_paths(const LatticePath& a, const LatticePath& b) {
    if (a.size() != b.size()) throw ConfigError("path length mismatch");
    LatticePath out(a.size());
    for (size_t s = 0; s < a.size(); ++s) out[s] = add_sites(a[s], b[s]);
    return out;
}

}  // namespace rwre
