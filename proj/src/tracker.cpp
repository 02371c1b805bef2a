// tracker.cpp - MAC canonicalization, keyed hashing and window maintenance
#include "netfence/tracker.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <set>

namespace netfence {

std::string canonicalize_mac(const std::string& raw) {
    std::string out;
    out.reserve(17);
    for (char ch : raw) {
        if (ch == '-') {
            out.push_back(':');
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    auto is_hex = [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); };
    bool ok = out.size() == 17;
    for (std::size_t i = 0; ok && i < out.size(); ++i) {
        if (i % 3 == 2) {
            ok = out[i] == ':';
        } else {
            ok = is_hex(out[i]);
        }
    }
    if (!ok) throw MalformedMacError("not a 6-byte colon-hex MAC: '" + raw + "'");
    return out;
}

std::string hash_mac(const std::string& mac, const std::string& salt) {
    if (salt.size() < kMinSaltBytes) {
        throw WeakSaltError("salt must be at least 16 bytes, got " +
                            std::to_string(salt.size()));
    }
    const std::string canonical = canonicalize_mac(mac);

    unsigned char digest[EVP_MAX_MD_SIZE];
    std::size_t digest_len = 0;
    if (EVP_Q_mac(nullptr, "HMAC", nullptr, "SHA256", nullptr, salt.data(), salt.size(),
                  reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(),
                  digest, sizeof(digest), &digest_len) == nullptr ||
        digest_len < 16) {
        throw Error("keyed hash computation failed");
    }

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (int i = 0; i < 16; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

TrackerIngest::TrackerIngest(std::string salt, std::int64_t window_span_ms)
    : salt_(std::move(salt)), window_span_ms_(window_span_ms) {
    if (salt_.size() < kMinSaltBytes) {
        throw WeakSaltError("salt must be at least 16 bytes, got " +
                            std::to_string(salt_.size()));
    }
    if (window_span_ms_ <= 0) throw ConfigError("window_span must be positive");
}

std::pair<std::string, DeviceTrack> TrackerIngest::ingest(const ProbeEvent& event) {
    if (event.tracker.empty()) throw ConfigError("probe event tracker id must be non-empty");
    if (event.rssi < -120.0 || event.rssi > 0.0) {
        throw RssiOutOfRangeError("rssi " + std::to_string(event.rssi) +
                                  " outside [-120, 0] dBm");
    }
    const std::string device = hash_mac(event.mac, salt_);

    std::lock_guard lock(mutex_);
    DeviceTrack& track = tracks_[device];
    if (track.device.empty()) track.device = device;

    if (track.newest_ms != INT64_MIN && event.t_ms < track.newest_ms - kReorderToleranceMs) {
        throw StaleEventError("event is " + std::to_string(track.newest_ms - event.t_ms) +
                              " ms older than the newest entry");
    }

    WindowEntry entry{event.tracker, event.rssi, event.t_ms};
    auto pos = std::upper_bound(track.window.begin(), track.window.end(), entry,
                                [](const WindowEntry& a, const WindowEntry& b) {
                                    return a.t_ms < b.t_ms;
                                });
    track.window.insert(pos, std::move(entry));
    track.newest_ms = std::max(track.newest_ms, event.t_ms);

    const std::int64_t cutoff = track.newest_ms - window_span_ms_;
    auto first_kept = std::find_if(track.window.begin(), track.window.end(),
                                   [cutoff](const WindowEntry& e) { return e.t_ms >= cutoff; });
    track.window.erase(track.window.begin(), first_kept);

    return {device, track};
}

DeviceTrack TrackerIngest::track(const std::string& device) const {
    std::lock_guard lock(mutex_);
    auto it = tracks_.find(device);
    if (it != tracks_.end()) return it->second;
    DeviceTrack empty;
    empty.device = device;
    return empty;
}

std::vector<std::string> TrackerIngest::devices() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    out.reserve(tracks_.size());
    for (const auto& [id, track] : tracks_) out.push_back(id);
    return out;
}

namespace {

// Applies the window cut and hands surviving entries to the sink.
template <typename Fn>
void for_each_live_entry(const DeviceTrack& track, std::int64_t now_ms,
                         std::int64_t window_span_ms, Fn&& sink) {
    const std::int64_t cutoff = now_ms - window_span_ms;
    for (const auto& e : track.window) {
        if (e.t_ms >= cutoff && e.t_ms <= now_ms) sink(e);
    }
}

}  // namespace

SignalVector window_aggregate(const DeviceTrack& track, std::int64_t now_ms,
                              std::int64_t window_span_ms) {
    std::map<ApId, double> sums;
    std::map<ApId, int> counts;
    int total = 0;
    for_each_live_entry(track, now_ms, window_span_ms, [&](const WindowEntry& e) {
        const ApId key(e.tracker);
        sums[key] += e.rssi;
        counts[key] += 1;
        ++total;
    });
    if (total == 0) throw EmptyWindowError("no detections within the window");

    SignalVector out;
    for (const auto& [ap, sum] : sums) out.means.emplace(ap, sum / counts.at(ap));
    out.sample_counts = std::move(counts);
    out.observation_count = total;
    return out;
}

OccurrenceFingerprint window_occurrence(const DeviceTrack& track, std::int64_t now_ms,
                                        std::int64_t window_span_ms) {
    std::set<std::int64_t> recordings;
    std::map<ApId, std::set<std::int64_t>> seen_at;
    for_each_live_entry(track, now_ms, window_span_ms, [&](const WindowEntry& e) {
        recordings.insert(e.t_ms);
        seen_at[ApId(e.tracker)].insert(e.t_ms);
    });
    if (recordings.empty()) throw EmptyWindowError("no detections within the window");

    OccurrenceFingerprint out;
    out.recording_count = static_cast<int>(recordings.size());
    for (const auto& [ap, stamps] : seen_at) {
        out.fractions.emplace(ap, static_cast<double>(stamps.size()) / out.recording_count);
    }
    return out;
}

}  // namespace netfence
