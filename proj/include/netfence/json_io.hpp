// json_io.hpp - JSON wire and file formats for every domain type
#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "netfence/dispatch.hpp"
#include "netfence/fence.hpp"
#include "netfence/fingerprint.hpp"
#include "netfence/sim.hpp"
#include "netfence/tracker.hpp"

namespace netfence::json_io {

using nlohmann::json;

// Fingerprints serialize as {"kind":"occurrence"|"signal","entries":{id:num},
// "count":int}. Signal-vector per-AP sample counts are derived state and do
// not round-trip.
json to_json(const OccurrenceFingerprint& fp);
json to_json(const SignalVector& v);
OccurrenceFingerprint occurrence_from_json(const json& j);
SignalVector signal_from_json(const json& j);
std::variant<OccurrenceFingerprint, SignalVector> fingerprint_from_json(const json& j);

// Probe events: {"tracker","mac","rssi","t"} with t in unix ms.
json to_json(const ProbeEvent& e);
ProbeEvent probe_event_from_json(const json& j);

// Fence events: {"kind","device","fence","t_unix_ms","closeness"}.
json to_json(const FenceEvent& e);
FenceEvent fence_event_from_json(const json& j);

// Fence definitions: {"id","metric","reference":{fingerprint},"enter","exit",
// "confirm","dwell_s"} with optional "d0" for the euclidean scale.
json to_json(const NetworkFence& f);
NetworkFence fence_from_json(const json& j);
std::vector<NetworkFence> fences_from_json(const json& j);  // array form

// Scenario files; waypoints are [x, y, t_s] triples.
json to_json(const sim::Scenario& s);
sim::Scenario scenario_from_json(const json& j);

json to_json(const DeliveryReport& r);

json to_json(const Subscription& s);
Subscription subscription_from_json(const json& j);

/// One delivery attempt's outcome as logged and served via the API.
struct DeliveryRecord {
    std::int64_t t_ms = 0;
    std::string device;
    std::string trigger;  // "rule:<id>" or "fence:<id>"
    std::string content_id;
    std::string outcome;  // dispatch_outcome_name value
};
json to_json(const DeliveryRecord& r);
DeliveryRecord delivery_record_from_json(const json& j);

/// Topic catalog file: topics plus the message payload table and the
/// tracker-id to SSID map used for rule evaluation.
struct TopicsFile {
    std::vector<Topic> topics;
    std::map<std::string, std::string> messages;       // message id -> payload
    std::map<std::string, std::string> tracker_ssids;  // tracker id -> ssid
};
json to_json(const TopicsFile& t);
TopicsFile topics_from_json(const json& j);

/// Parses text as JSON; failures raise ConfigError naming the position.
json parse_or_throw(const std::string& text, const std::string& source_name);

}  // namespace netfence::json_io
