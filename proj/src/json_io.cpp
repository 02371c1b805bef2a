// json_io.cpp - serialization with strict, named-field validation
#include "netfence/json_io.hpp"

namespace netfence::json_io {

namespace {

const json& require(const json& j, const char* key) {
    if (!j.is_object()) throw ConfigError("expected a JSON object with key '" + std::string(key) + "'");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing JSON key '" + std::string(key) + "'");
    return *it;
}

std::string require_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) throw ConfigError("JSON key '" + std::string(key) + "' must be a string");
    return v.get<std::string>();
}

double require_number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) throw ConfigError("JSON key '" + std::string(key) + "' must be a number");
    return v.get<double>();
}

std::int64_t require_int(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer()) {
        throw ConfigError("JSON key '" + std::string(key) + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError("JSON key '" + std::string(key) + "' must be a number");
    return j[key].get<double>();
}

std::map<ApId, double> entries_from_json(const json& j) {
    const json& entries = require(j, "entries");
    if (!entries.is_object()) throw ConfigError("JSON key 'entries' must be an object");
    std::map<ApId, double> out;
    for (const auto& [key, value] : entries.items()) {
        if (!value.is_number()) throw ConfigError("entry '" + key + "' must be a number");
        out.emplace(ApId(key), value.get<double>());
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Fingerprints
// ---------------------------------------------------------------------------

json to_json(const OccurrenceFingerprint& fp) {
    json entries = json::object();
    for (const auto& [ap, fraction] : fp.fractions) entries[ap.str()] = fraction;
    return json{{"kind", "occurrence"}, {"entries", std::move(entries)},
                {"count", fp.recording_count}};
}

json to_json(const SignalVector& v) {
    json entries = json::object();
    for (const auto& [ap, mean] : v.means) entries[ap.str()] = mean;
    return json{{"kind", "signal"}, {"entries", std::move(entries)},
                {"count", v.observation_count}};
}

OccurrenceFingerprint occurrence_from_json(const json& j) {
    if (require_string(j, "kind") != "occurrence") {
        throw ConfigError("expected fingerprint kind 'occurrence'");
    }
    OccurrenceFingerprint fp;
    fp.fractions = entries_from_json(j);
    fp.recording_count = static_cast<int>(require_int(j, "count"));
    if (fp.recording_count < 1) throw ConfigError("fingerprint count must be >= 1");
    for (const auto& [ap, f] : fp.fractions) {
        if (f < 0.0 || f > 1.0) {
            throw ConfigError("occurrence fraction for '" + ap.str() + "' must lie in [0,1]");
        }
    }
    return fp;
}

SignalVector signal_from_json(const json& j) {
    if (require_string(j, "kind") != "signal") {
        throw ConfigError("expected fingerprint kind 'signal'");
    }
    SignalVector v;
    v.means = entries_from_json(j);
    v.observation_count = static_cast<int>(require_int(j, "count"));
    if (v.observation_count < 1) throw ConfigError("fingerprint count must be >= 1");
    for (const auto& [ap, mean] : v.means) v.sample_counts.emplace(ap, 1);
    return v;
}

std::variant<OccurrenceFingerprint, SignalVector> fingerprint_from_json(const json& j) {
    const std::string kind = require_string(j, "kind");
    if (kind == "occurrence") return occurrence_from_json(j);
    if (kind == "signal") return signal_from_json(j);
    throw ConfigError("unknown fingerprint kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

json to_json(const ProbeEvent& e) {
    return json{{"tracker", e.tracker}, {"mac", e.mac}, {"rssi", e.rssi}, {"t", e.t_ms}};
}

ProbeEvent probe_event_from_json(const json& j) {
    ProbeEvent e;
    e.tracker = require_string(j, "tracker");
    e.mac = require_string(j, "mac");
    e.rssi = require_number(j, "rssi");
    e.t_ms = require_int(j, "t");
    return e;
}

json to_json(const FenceEvent& e) {
    return json{{"kind", fence_event_kind_name(e.kind)},
                {"device", e.device},
                {"fence", e.fence},
                {"t_unix_ms", e.t_unix_ms},
                {"closeness", e.closeness}};
}

FenceEvent fence_event_from_json(const json& j) {
    FenceEvent e;
    const std::string kind = require_string(j, "kind");
    if (kind == "enter") {
        e.kind = FenceEventKind::Enter;
    } else if (kind == "exit") {
        e.kind = FenceEventKind::Exit;
    } else if (kind == "dwell") {
        e.kind = FenceEventKind::Dwell;
    } else {
        throw ConfigError("unknown fence event kind '" + kind + "'");
    }
    e.device = require_string(j, "device");
    e.fence = require_string(j, "fence");
    e.t_unix_ms = require_int(j, "t_unix_ms");
    e.closeness = require_number(j, "closeness");
    return e;
}

// ---------------------------------------------------------------------------
// Fence definitions
// ---------------------------------------------------------------------------

json to_json(const NetworkFence& f) {
    json reference = std::holds_alternative<OccurrenceFingerprint>(f.reference)
                         ? to_json(std::get<OccurrenceFingerprint>(f.reference))
                         : to_json(std::get<SignalVector>(f.reference));
    json out{{"id", f.id},
             {"metric", metric_name(f.metric)},
             {"reference", std::move(reference)},
             {"enter", f.enter_threshold},
             {"exit", f.exit_threshold},
             {"confirm", f.confirm_count},
             {"dwell_s", static_cast<double>(f.min_dwell_ms) / 1000.0}};
    if (f.metric == Metric::Euclidean) out["d0"] = f.euclid_scale_dbm;
    return out;
}

NetworkFence fence_from_json(const json& j) {
    NetworkFence f;
    f.id = require_string(j, "id");
    f.metric = metric_from_name(require_string(j, "metric"));
    f.reference = fingerprint_from_json(require(j, "reference"));
    f.enter_threshold = require_number(j, "enter");
    f.exit_threshold = require_number(j, "exit");
    f.confirm_count = static_cast<int>(require_int(j, "confirm"));
    f.min_dwell_ms = static_cast<std::int64_t>(require_number(j, "dwell_s") * 1000.0);
    f.euclid_scale_dbm = number_or(j, "d0", 30.0);
    f.validate();
    return f;
}

std::vector<NetworkFence> fences_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("fence file must hold a JSON array");
    std::vector<NetworkFence> out;
    out.reserve(j.size());
    for (const auto& item : j) out.push_back(fence_from_json(item));
    return out;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

json to_json(const sim::Scenario& s) {
    json aps = json::array();
    for (const auto& ap : s.aps) {
        aps.push_back(json{{"id", ap.id.str()},
                           {"ssid", ap.ssid},
                           {"x", ap.x},
                           {"y", ap.y},
                           {"rssi0", ap.rssi0},
                           {"tracker", ap.acts_as_tracker}});
    }
    json devices = json::array();
    for (const auto& d : s.devices) {
        json waypoints = json::array();
        for (const auto& w : d.waypoints) waypoints.push_back(json::array({w.x, w.y, w.t_s}));
        devices.push_back(json{{"mac", d.mac},
                               {"waypoints", std::move(waypoints)},
                               {"probe_period_s", d.probe_period_s}});
    }
    return json{{"aps", std::move(aps)},
                {"devices", std::move(devices)},
                {"model",
                 {{"n", s.model.exponent},
                  {"sigma_db", s.model.noise_sigma_db},
                  {"floor_dbm", s.model.detection_floor_dbm}}},
                {"duration_s", s.duration_s},
                {"seed", s.seed},
                {"start_unix_ms", s.start_unix_ms}};
}

sim::Scenario scenario_from_json(const json& j) {
    sim::Scenario s;
    const json& aps = require(j, "aps");
    if (!aps.is_array()) throw ConfigError("'aps' must be an array");
    for (const auto& a : aps) {
        sim::ApNode node;
        node.id = ApId(require_string(a, "id"));
        node.ssid = a.contains("ssid") ? require_string(a, "ssid") : node.id.str();
        node.x = require_number(a, "x");
        node.y = require_number(a, "y");
        node.rssi0 = require_number(a, "rssi0");
        node.acts_as_tracker = a.contains("tracker") && a["tracker"].is_boolean()
                                   ? a["tracker"].get<bool>()
                                   : false;
        s.aps.push_back(std::move(node));
    }
    const json& devices = require(j, "devices");
    if (!devices.is_array()) throw ConfigError("'devices' must be an array");
    for (const auto& d : devices) {
        sim::DevicePath path;
        path.mac = require_string(d, "mac");
        const json& waypoints = require(d, "waypoints");
        if (!waypoints.is_array() || waypoints.empty()) {
            throw ConfigError("'waypoints' must be a non-empty array");
        }
        for (const auto& w : waypoints) {
            if (!w.is_array() || w.size() != 3 || !w[0].is_number() || !w[1].is_number() ||
                !w[2].is_number()) {
                throw ConfigError("each waypoint must be an [x, y, t_s] number triple");
            }
            path.waypoints.push_back(
                {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()});
        }
        path.probe_period_s = number_or(d, "probe_period_s", 3.0);
        s.devices.push_back(std::move(path));
    }
    if (j.contains("model")) {
        const json& m = j["model"];
        s.model.exponent = number_or(m, "n", 2.5);
        s.model.noise_sigma_db = number_or(m, "sigma_db", 4.0);
        s.model.detection_floor_dbm = number_or(m, "floor_dbm", -95.0);
        s.model.d0_m = number_or(m, "d0", 1.0);
    }
    s.duration_s = require_number(j, "duration_s");
    s.seed = static_cast<std::uint64_t>(require_int(j, "seed"));
    if (j.contains("start_unix_ms")) s.start_unix_ms = require_int(j, "start_unix_ms");
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Dispatch records
// ---------------------------------------------------------------------------

json to_json(const DeliveryReport& r) {
    return json{{"sent", r.sent},
                {"deduplicated", r.deduplicated},
                {"defunct", r.defunct},
                {"failed", r.failed}};
}

json to_json(const Subscription& s) {
    return json{{"topic_id", s.topic_id},
                {"device", s.device},
                {"token", s.registration_token},
                {"defunct", s.defunct}};
}

Subscription subscription_from_json(const json& j) {
    Subscription s;
    s.topic_id = require_string(j, "topic_id");
    s.device = require_string(j, "device");
    s.registration_token = require_string(j, "token");
    s.defunct = j.contains("defunct") && j["defunct"].is_boolean() && j["defunct"].get<bool>();
    return s;
}

json to_json(const DeliveryRecord& r) {
    return json{{"t_ms", r.t_ms},
                {"device", r.device},
                {"trigger", r.trigger},
                {"content_id", r.content_id},
                {"outcome", r.outcome}};
}

DeliveryRecord delivery_record_from_json(const json& j) {
    DeliveryRecord r;
    r.t_ms = require_int(j, "t_ms");
    r.device = require_string(j, "device");
    r.trigger = require_string(j, "trigger");
    r.content_id = require_string(j, "content_id");
    r.outcome = require_string(j, "outcome");
    return r;
}

// ---------------------------------------------------------------------------
// Topic catalog
// ---------------------------------------------------------------------------

json to_json(const TopicsFile& t) {
    json topics = json::array();
    for (const auto& topic : t.topics) {
        topics.push_back(json{{"id", topic.id},
                              {"business", topic.business_name},
                              {"fences", topic.fence_ids},
                              {"rules", topic.rule_ids}});
    }
    return json{{"topics", std::move(topics)},
                {"messages", t.messages},
                {"trackers", t.tracker_ssids}};
}

TopicsFile topics_from_json(const json& j) {
    TopicsFile out;
    const json& topics = require(j, "topics");
    if (!topics.is_array()) throw ConfigError("'topics' must be an array");
    for (const auto& t : topics) {
        Topic topic;
        topic.id = require_string(t, "id");
        topic.business_name = t.contains("business") ? require_string(t, "business") : topic.id;
        for (const char* key : {"fences", "rules"}) {
            if (!t.contains(key)) continue;
            if (!t[key].is_array()) {
                throw ConfigError("topic '" + topic.id + "': '" + key + "' must be an array");
            }
            for (const auto& v : t[key]) {
                if (!v.is_string()) {
                    throw ConfigError("topic '" + topic.id + "': '" + key +
                                      "' entries must be strings");
                }
                (std::string(key) == "fences" ? topic.fence_ids : topic.rule_ids)
                    .push_back(v.get<std::string>());
            }
        }
        out.topics.push_back(std::move(topic));
    }
    for (const char* key : {"messages", "trackers"}) {
        if (!j.contains(key)) continue;
        if (!j[key].is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
        for (const auto& [k, v] : j[key].items()) {
            if (!v.is_string()) {
                throw ConfigError(std::string("'") + key + "' values must be strings");
            }
            (std::string(key) == "messages" ? out.messages : out.tracker_ssids)[k] =
                v.get<std::string>();
        }
    }
    return out;
}

json parse_or_throw(const std::string& text, const std::string& source_name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
}

}  // namespace netfence::json_io
