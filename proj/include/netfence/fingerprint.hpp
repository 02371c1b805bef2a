// fingerprint.hpp - Wi-Fi fingerprint types and the four similarity metrics
#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netfence/errors.hpp"

namespace netfence {

/// Opaque access-point identifier. In production this is the hashed MAC in
/// canonical lowercase hex, optionally tagged with an SSID for display; two
/// ApIds are equal iff their strings are equal.
class ApId {
public:
    explicit ApId(std::string value) : value_(std::move(value)) {
        if (value_.empty()) throw Error("ApId must be non-empty");
    }
    const std::string& str() const { return value_; }
    auto operator<=>(const ApId&) const = default;

private:
    std::string value_;
};

// Stand-in RSSI for APs missing from one side of a pairwise vector comparison.
// Never stored in a SignalVector, only applied during union fill.
constexpr double kFillDbm = -100.0;

/// Occurrence fingerprint of a place: for each AP, the fraction of recordings
/// in which it appeared. Zero-fraction entries are never stored, so every
/// stored fraction lies in (0, 1].
struct OccurrenceFingerprint {
    std::map<ApId, double> fractions;
    int recording_count = 0;
};

/// Mean received signal strength per AP. sample_counts carries the number of
/// observations behind each mean; observation_count is the total and is the
/// only count that survives JSON round-trips.
struct SignalVector {
    std::map<ApId, double> means;            // dBm, typically [-100, 0]
    std::map<ApId, int> sample_counts;
    int observation_count = 0;
};

/// Relative signal-strength ranking: rank 1 is the strongest signal, ties get
/// the average of the ranks they span. Rank sum is always n(n+1)/2.
struct RankVector {
    std::map<ApId, double> ranks;
};

/// Presence fractions over a list of scan recordings. Each recording is the
/// set of APs seen in it; an AP counts once per recording no matter how many
/// beacons it produced.
OccurrenceFingerprint build_occurrence_fingerprint(const std::vector<std::set<ApId>>& recordings);

/// Arithmetic mean RSSI per AP over raw (ap, rssi) observations.
SignalVector build_signal_vector(const std::vector<std::pair<ApId, double>>& scans);

/// Similarity of two occurrence fingerprints:
///   MinMax(m) = min(f1(m), f2(m)) / max(f1(m), f2(m))
///   S = sum over the AP union of (f1(m) + f2(m)) * MinMax(m)
/// APs absent from one side contribute 0. S >= 0; disjoint AP sets give 0.
double minmax_similarity(const OccurrenceFingerprint& f1, const OccurrenceFingerprint& f2);

/// 2-norm of the difference over the AP union, missing entries filled with
/// kFillDbm. Result is in dB.
double euclidean_distance(const SignalVector& va, const SignalVector& vb);

/// 1 - (a.b) / (|a|^2 + |b|^2 - a.b) over the filled union vectors. With all
/// components negative dBm the result lies in [0, 1] and grows with
/// dissimilarity; identical vectors give 0.
double tanimoto_distance(const SignalVector& va, const SignalVector& vb);

/// Replace signal strengths by their relative ranking (strongest = 1).
/// Equal means receive averaged ranks.
RankVector rank_transform(const SignalVector& va);

/// Spearman rank-order correlation, computed as the Pearson correlation of
/// the rank values so it stays valid under ties. Requires both vectors to
/// rank the same AP set with n >= 2. If both rankings are fully tied they are
/// necessarily identical and the result is 1; if exactly one side is fully
/// tied there is no monotone association to measure and the result is 0.
double spearman_correlation(const RankVector& ra, const RankVector& rb);

}  // namespace netfence
