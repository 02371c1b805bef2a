// naive_metrics.hpp - straight-line reference implementations of the metrics,
// written independently of the library so they can serve as oracles. They
// work on plain (id, value) pair lists and use linear scans throughout.
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace naive {

using Entries = std::vector<std::pair<std::string, double>>;

inline double lookup(const Entries& e, const std::string& id, double missing) {
    for (const auto& [k, v] : e) {
        if (k == id) return v;
    }
    return missing;
}

inline std::vector<std::string> key_union(const Entries& a, const Entries& b) {
    std::vector<std::string> keys;
    auto add = [&](const std::string& k) {
        for (const auto& existing : keys) {
            if (existing == k) return;
        }
        keys.push_back(k);
    };
    for (const auto& [k, v] : a) add(k);
    for (const auto& [k, v] : b) add(k);
    return keys;
}

// S = sum over the union of (f1(m) + f2(m)) * min/max, absent fractions are 0.
inline double minmax_similarity(const Entries& f1, const Entries& f2) {
    double s = 0.0;
    for (const auto& m : key_union(f1, f2)) {
        const double a = lookup(f1, m, 0.0);
        const double b = lookup(f2, m, 0.0);
        const double lo = a < b ? a : b;
        const double hi = a < b ? b : a;
        if (hi > 0.0 && lo > 0.0) s += (a + b) * (lo / hi);
    }
    return s;
}

inline double euclidean_distance(const Entries& va, const Entries& vb) {
    double sum = 0.0;
    for (const auto& m : key_union(va, vb)) {
        const double d = lookup(va, m, -100.0) - lookup(vb, m, -100.0);
        sum += d * d;
    }
    return std::sqrt(sum);
}

inline double tanimoto_distance(const Entries& va, const Entries& vb) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& m : key_union(va, vb)) {
        const double a = lookup(va, m, -100.0);
        const double b = lookup(vb, m, -100.0);
        dot += a * b;
        na += a * a;
        nb += b * b;
    }
    return 1.0 - dot / (na + nb - dot);
}

// Classic 1 - 6*sum(d^2)/(n(n^2-1)) shortcut. Only valid when neither ranking
// has ties; callers must guarantee that.
inline double spearman_no_ties(const std::vector<double>& ranks_a, const std::vector<double>& ranks_b) {
    const double n = static_cast<double>(ranks_a.size());
    double sum_d2 = 0.0;
    for (std::size_t i = 0; i < ranks_a.size(); ++i) {
        const double d = ranks_a[i] - ranks_b[i];
        sum_d2 += d * d;
    }
    return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

}  // namespace naive
