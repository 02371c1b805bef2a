// random_gen.hpp - seeded generators for property-style tests
#pragma once

#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netfence/fingerprint.hpp"

namespace testgen {

inline std::string ap_name(int i) { return "ap" + std::to_string(i); }

// Random occurrence fingerprint over a pool of `pool` AP names, at most
// `max_aps` entries, fractions on a 1/denominator grid so they stay exact.
inline netfence::OccurrenceFingerprint random_fingerprint(std::mt19937& rng, int pool = 12,
                                                          int max_aps = 8) {
    std::uniform_int_distribution<int> n_aps(1, max_aps);
    std::uniform_int_distribution<int> pick(0, pool - 1);
    const int denominator = 16;
    std::uniform_int_distribution<int> numer(1, denominator);
    netfence::OccurrenceFingerprint fp;
    fp.recording_count = denominator;
    const int n = n_aps(rng);
    for (int i = 0; i < n; ++i) {
        netfence::ApId ap(ap_name(pick(rng)));
        fp.fractions[ap] = static_cast<double>(numer(rng)) / denominator;
    }
    return fp;
}

// Random signal vector with RSSI in [lo, hi] dBm.
inline netfence::SignalVector random_signal_vector(std::mt19937& rng, int pool = 12, int max_aps = 8,
                                                   double lo = -95.0, double hi = -30.0) {
    std::uniform_int_distribution<int> n_aps(1, max_aps);
    std::uniform_int_distribution<int> pick(0, pool - 1);
    std::uniform_real_distribution<double> rssi(lo, hi);
    netfence::SignalVector v;
    const int n = n_aps(rng);
    for (int i = 0; i < n; ++i) {
        netfence::ApId ap(ap_name(pick(rng)));
        if (v.means.emplace(ap, rssi(rng)).second) {
            v.sample_counts[ap] = 1;
            v.observation_count += 1;
        }
    }
    return v;
}

inline std::vector<std::pair<std::string, double>> as_entries(const netfence::OccurrenceFingerprint& fp) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [ap, f] : fp.fractions) out.emplace_back(ap.str(), f);
    return out;
}

inline std::vector<std::pair<std::string, double>> as_entries(const netfence::SignalVector& v) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [ap, m] : v.means) out.emplace_back(ap.str(), m);
    return out;
}

}  // namespace testgen
