// tracker.hpp - probe-request ingestion, MAC hashing and sliding windows
#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "netfence/errors.hpp"
#include "netfence/fingerprint.hpp"

namespace netfence {

/// One probe-request detection as reported by a tracker sensor. The raw MAC
/// exists only at this boundary; it is hashed on ingest and never stored.
struct ProbeEvent {
    std::string tracker;
    std::string mac;
    double rssi = 0.0;  // dBm, valid range [-120, 0]
    std::int64_t t_ms = 0;
};

struct WindowEntry {
    std::string tracker;
    double rssi = 0.0;
    std::int64_t t_ms = 0;
};

/// Per-device sliding window of recent detections, time-ordered, pruned so
/// every entry lies within window_span of the newest one.
struct DeviceTrack {
    std::string device;  // hashed id, 32 hex chars
    std::vector<WindowEntry> window;
    std::int64_t newest_ms = INT64_MIN;
};

/// Lowercases a MAC and normalizes '-' separators to ':'. Throws
/// MalformedMacError unless the result matches aa:bb:cc:dd:ee:ff.
std::string canonicalize_mac(const std::string& raw);

constexpr std::size_t kMinSaltBytes = 16;

/// Keyed HMAC-SHA256 of the canonical MAC, truncated to 128 bits and
/// rendered as 32 lowercase hex chars. Pure: same (mac, salt) gives the same
/// id. Throws WeakSaltError for salts under 16 bytes and MalformedMacError
/// for unparseable MACs.
std::string hash_mac(const std::string& mac, const std::string& salt);

constexpr std::int64_t kDefaultWindowSpanMs = 60'000;
constexpr std::int64_t kReorderToleranceMs = 2'000;

/// Ingestion front end: validates probe events, hashes identities, and keeps
/// one sliding window per device. Thread-safe.
class TrackerIngest {
public:
    explicit TrackerIngest(std::string salt, std::int64_t window_span_ms = kDefaultWindowSpanMs);

    /// Validates, hashes and files one event. Events up to 2 s out of order
    /// are inserted in time order; older ones raise StaleEventError. Returns
    /// the device id and a snapshot of its updated track.
    std::pair<std::string, DeviceTrack> ingest(const ProbeEvent& event);

    /// Snapshot of one device's track; empty track if never seen.
    DeviceTrack track(const std::string& device) const;

    std::vector<std::string> devices() const;
    std::int64_t window_span_ms() const { return window_span_ms_; }

private:
    std::string salt_;
    std::int64_t window_span_ms_;
    mutable std::mutex mutex_;
    std::map<std::string, DeviceTrack> tracks_;
};

/// Mean RSSI per tracker over entries newer than now - span. The result is
/// keyed by tracker id, ready for fence comparison. Throws EmptyWindowError
/// if nothing in the window survives the cut.
SignalVector window_aggregate(const DeviceTrack& track, std::int64_t now_ms,
                              std::int64_t window_span_ms = kDefaultWindowSpanMs);

/// Presence fractions per tracker over the same cut, treating each distinct
/// timestamp in the window as one recording. Feeds occurrence-based fences.
/// Throws EmptyWindowError if the cut leaves nothing.
OccurrenceFingerprint window_occurrence(const DeviceTrack& track, std::int64_t now_ms,
                                        std::int64_t window_span_ms = kDefaultWindowSpanMs);

}  // namespace netfence
