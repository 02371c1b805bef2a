#include "netfence/fingerprint.hpp"

#include <algorithm>
#include <cmath>

namespace netfence {

OccurrenceFingerprint build_occurrence_fingerprint(const std::vector<std::set<ApId>>& recordings) {
    if (recordings.empty()) throw EmptyInputError("no recordings");
    std::map<ApId, int> seen;
    for (const auto& recording : recordings) {
        for (const auto& ap : recording) seen[ap] += 1;
    }
    OccurrenceFingerprint fp;
    fp.recording_count = static_cast<int>(recordings.size());
    for (const auto& [ap, count] : seen) {
        fp.fractions.emplace(ap, static_cast<double>(count) / fp.recording_count);
    }
    return fp;
}

SignalVector build_signal_vector(const std::vector<std::pair<ApId, double>>& scans) {
    if (scans.empty()) throw EmptyInputError("no scan observations");
    std::map<ApId, double> sums;
    std::map<ApId, int> counts;
    for (const auto& [ap, rssi] : scans) {
        sums[ap] += rssi;
        counts[ap] += 1;
    }
    SignalVector v;
    for (const auto& [ap, sum] : sums) v.means.emplace(ap, sum / counts.at(ap));
    v.sample_counts = std::move(counts);
    v.observation_count = static_cast<int>(scans.size());
    return v;
}

double minmax_similarity(const OccurrenceFingerprint& f1, const OccurrenceFingerprint& f2) {
    // APs missing from one side have fraction 0 there, so only the
    // intersection contributes: min/max is 0 for every one-sided AP.
    double s = 0.0;
    auto it1 = f1.fractions.begin();
    auto it2 = f2.fractions.begin();
    while (it1 != f1.fractions.end() && it2 != f2.fractions.end()) {
        if (it1->first < it2->first) {
            ++it1;
        } else if (it2->first < it1->first) {
            ++it2;
        } else {
            const double a = it1->second;
            const double b = it2->second;
            s += (a + b) * (std::min(a, b) / std::max(a, b));
            ++it1;
            ++it2;
        }
    }
    return s;
}

namespace {

// Walks the key union of two signal vectors, handing (mean_a, mean_b) pairs
// with kFillDbm in place of missing entries.
template <typename Fn>
void for_each_union_filled(const SignalVector& va, const SignalVector& vb, Fn&& fn) {
    auto ita = va.means.begin();
    auto itb = vb.means.begin();
    while (ita != va.means.end() || itb != vb.means.end()) {
        if (itb == vb.means.end() || (ita != va.means.end() && ita->first < itb->first)) {
            fn(ita->second, kFillDbm);
            ++ita;
        } else if (ita == va.means.end() || itb->first < ita->first) {
            fn(kFillDbm, itb->second);
            ++itb;
        } else {
            fn(ita->second, itb->second);
            ++ita;
            ++itb;
        }
    }
}

}  // namespace

double euclidean_distance(const SignalVector& va, const SignalVector& vb) {
    if (va.means.empty() && vb.means.empty()) throw EmptyInputError("both signal vectors empty");
    double sum_sq = 0.0;
    for_each_union_filled(va, vb, [&](double a, double b) {
        const double d = a - b;
        sum_sq += d * d;
    });
    return std::sqrt(sum_sq);
}

double tanimoto_distance(const SignalVector& va, const SignalVector& vb) {
    if (va.means.empty() && vb.means.empty()) throw EmptyInputError("both signal vectors empty");
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for_each_union_filled(va, vb, [&](double a, double b) {
        dot += a * b;
        norm_a += a * a;
        norm_b += b * b;
    });
    // All filled components are negative dBm, so dot > 0 and the denominator
    // is strictly positive.
    return 1.0 - dot / (norm_a + norm_b - dot);
}

RankVector rank_transform(const SignalVector& va) {
    if (va.means.empty()) throw EmptyInputError("empty signal vector");
    std::vector<std::pair<ApId, double>> by_strength(va.means.begin(), va.means.end());
    std::sort(by_strength.begin(), by_strength.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;  // strongest first
        return a.first < b.first;
    });
    RankVector rv;
    std::size_t i = 0;
    while (i < by_strength.size()) {
        std::size_t j = i;
        while (j < by_strength.size() && by_strength[j].second == by_strength[i].second) ++j;
        // Ranks i+1..j averaged across the tied group.
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rv.ranks.emplace(by_strength[k].first, rank);
        i = j;
    }
    return rv;
}

double spearman_correlation(const RankVector& ra, const RankVector& rb) {
    if (ra.ranks.size() != rb.ranks.size()) throw ApSetMismatchError();
    const std::size_t n = ra.ranks.size();
    if (n < 2) throw TooFewError();

    double mean_a = 0.0;
    double mean_b = 0.0;
    auto ita = ra.ranks.begin();
    auto itb = rb.ranks.begin();
    for (; ita != ra.ranks.end(); ++ita, ++itb) {
        if (ita->first != itb->first) throw ApSetMismatchError();
        mean_a += ita->second;
        mean_b += itb->second;
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);

    double cov = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    ita = ra.ranks.begin();
    itb = rb.ranks.begin();
    for (; ita != ra.ranks.end(); ++ita, ++itb) {
        const double da = ita->second - mean_a;
        const double db = itb->second - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 && var_b == 0.0) return 1.0;  // both fully tied => identical rankings
    if (var_a == 0.0 || var_b == 0.0) return 0.0;  // one side carries no ordering
    const double rho = cov / std::sqrt(var_a * var_b);
    return std::clamp(rho, -1.0, 1.0);
}

}  // namespace netfence
