// pipeline.hpp - probe event to push delivery processing chain
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "netfence/dispatch.hpp"
#include "netfence/fence.hpp"
#include "netfence/json_io.hpp"
#include "netfence/rules.hpp"
#include "netfence/tracker.hpp"

namespace netfence {

/// Everything one probe event produced.
struct PipelineResult {
    std::string device;
    std::vector<FenceEvent> fence_events;
    std::vector<json_io::DeliveryRecord> deliveries;
    DeliveryReport report;
};

/// Wires ingest -> sliding windows -> fence engine + rules -> match ->
/// dispatch. Configuration reloads swap rule/topic/fence sets atomically.
/// process() serializes the whole chain, preserving per-device ordering.
class Pipeline {
public:
    struct Options {
        std::string salt;
        std::int64_t window_span_ms = kDefaultWindowSpanMs;
        std::int64_t dedup_window_ms = 24LL * 3600 * 1000;
        int utc_offset_min = 0;  // shifts event time into rule-local clock
        std::function<void(std::int64_t)> sleep_ms;  // dispatch retry backoff
    };

    Pipeline(Options options, PushTransport& transport);

    // Configuration. load_topics validates that every referenced fence and
    // rule exists, so call it after load_fences and load_rules.
    void load_fences(std::vector<NetworkFence> fences);
    void load_rules(std::vector<rules::Rule> rulebook);
    void load_topics(json_io::TopicsFile topics);

    /// Full chain for one probe event. Throws the ingest validation errors
    /// (MalformedMac, StaleEvent, RssiOutOfRange) before any state changes.
    PipelineResult process(const ProbeEvent& event);

    /// Injects closeness 0 into stale non-Outside fence states.
    std::vector<FenceEvent> sweep(std::int64_t now_ms, std::int64_t stale_after_ms);

    Dispatcher& dispatcher() { return dispatcher_; }
    FenceEngine& engine() { return engine_; }
    TrackerIngest& tracker() { return tracker_; }

private:
    rules::EvaluationContext context_for(const std::string& device, const SignalVector& visible,
                                         std::int64_t t_ms) const;

    Options options_;
    PushTransport& transport_;
    TrackerIngest tracker_;
    FenceEngine engine_;
    Dispatcher dispatcher_;

    mutable std::mutex mutex_;
    std::vector<rules::Rule> rules_;
    std::map<std::string, bool> rule_first_visit_;     // rule id -> gated
    std::map<std::string, std::string> messages_;      // message id -> payload
    std::map<std::string, std::string> tracker_ssids_; // tracker id -> ssid
};

}  // namespace netfence
