// dispatch.hpp - topics, subscriptions, matching and push delivery
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "netfence/errors.hpp"
#include "netfence/fence.hpp"
#include "netfence/rules.hpp"

namespace netfence {

/// A business offering: groups the fences and rules whose triggers its
/// subscribers receive.
struct Topic {
    std::string id;
    std::string business_name;
    std::vector<std::string> fence_ids;
    std::vector<std::string> rule_ids;
};

struct Subscription {
    std::string topic_id;
    std::string device;              // hashed id
    std::string registration_token;  // opaque push-service handle
    bool defunct = false;            // set after InvalidToken, cleared on re-subscribe
};

enum class TriggerKind { Rule, FenceEnter };

constexpr std::size_t kMaxPushPayloadBytes = 4096;

/// One queued push. The device id is used for routing and dedup bookkeeping
/// only; it never goes into the payload.
struct PushMessage {
    std::string registration_token;
    std::string payload;
    std::string device;
    TriggerKind trigger = TriggerKind::Rule;
    std::string trigger_ref;  // rule id or fence id
    std::string content_id;
    bool first_visit_gated = false;

    std::string dedup_key() const;
};

enum class DeliveryStatus { Accepted, InvalidToken, TransientFailure };

/// Push-provider abstraction. Implementations must tolerate a retry after
/// returning TransientFailure.
class PushTransport {
public:
    virtual ~PushTransport() = default;
    virtual DeliveryStatus send(const std::string& registration_token,
                                const std::string& payload) = 0;
};

/// In-memory transport for tests and dry runs: replays a scripted status
/// sequence per token (default Accepted) and records every attempt.
class RecordingTransport : public PushTransport {
public:
    struct Attempt {
        std::string token;
        std::string payload;
        std::int64_t t_ms;
    };

    DeliveryStatus send(const std::string& registration_token,
                        const std::string& payload) override;

    /// Future send() calls against this token consume these statuses in
    /// order, then fall back to Accepted.
    void script(const std::string& token, std::vector<DeliveryStatus> statuses);
    void set_clock(std::function<std::int64_t()> now_ms);

    const std::vector<Attempt>& attempts() const { return attempts_; }
    std::vector<Attempt> attempts_for(const std::string& token) const;

private:
    std::map<std::string, std::vector<DeliveryStatus>> scripts_;
    std::vector<Attempt> attempts_;
    std::function<std::int64_t()> now_ms_;
};

enum class DispatchOutcome { Sent, Deduplicated, Defunct, Failed, PayloadTooLarge };

std::string dispatch_outcome_name(DispatchOutcome o);

struct DeliveryReport {
    int sent = 0;
    int deduplicated = 0;
    int defunct = 0;
    int failed = 0;  // includes oversized payloads
    std::vector<DispatchOutcome> outcomes;  // aligned with the input messages
};

/// A rule that fired for a device, enriched with what dispatch needs.
struct FiredRule {
    std::string rule_id;
    rules::ActionSpec action;
    bool first_visit = false;  // condition contains FIRST_VISIT()
};

/// Subscription store plus dispatch state (dedup history, visit history).
/// Thread-safe; time and retry sleeping are injected so tests run instantly.
class Dispatcher {
public:
    struct Config {
        std::int64_t dedup_window_ms = 24LL * 3600 * 1000;  // 0 disables dedup
        int max_attempts = 5;
        std::int64_t backoff_base_ms = 1000;
        double backoff_factor = 2.0;
        std::function<void(std::int64_t)> sleep_ms;  // null: no actual sleeping
    };

    Dispatcher();
    explicit Dispatcher(Config config);

    // Topic and subscription management.
    void upsert_topic(Topic topic);
    /// Atomic swap of the whole catalog: topics absent from the new set stop
    /// matching immediately; their subscriptions stay stored but inert.
    void replace_topics(std::vector<Topic> topics);
    std::vector<Topic> topics() const;
    Subscription subscribe(const std::string& topic_id, const std::string& device,
                           const std::string& registration_token);
    bool unsubscribe(const std::string& topic_id, const std::string& device);
    std::vector<Subscription> subscriptions() const;
    void restore_subscription(Subscription s);  // reload path, keeps defunct flag

    /// Builds one PushMessage per (subscribed topic) x (owned fired rule or
    /// Enter event), in topic-id order; rules precede fence events within a
    /// topic. Defunct subscriptions and non-Enter fence events are skipped.
    std::vector<PushMessage> match(const std::string& device, const std::vector<FiredRule>& fired,
                                   const std::vector<FenceEvent>& fence_events) const;

    /// Sends the batch: dedup within the window, exponential backoff on
    /// TransientFailure, defunct marking on InvalidToken, size check before
    /// send. First Accepted delivery of a FIRST_VISIT-gated message records
    /// the visit (the only mutation of visit history).
    DeliveryReport dispatch(const std::vector<PushMessage>& messages, PushTransport& transport,
                            std::int64_t now_ms);

    /// True once a FIRST_VISIT-gated message for (device, rule) was accepted.
    bool has_fired(const std::string& device, const std::string& rule_id) const;
    void restore_visit(const std::string& device, const std::string& rule_id);  // reload path
    std::vector<std::pair<std::string, std::string>> visits() const;

    void restore_dedup(const std::string& dedup_key, std::int64_t accepted_ms);  // reload path
    std::vector<std::pair<std::string, std::int64_t>> dedup_entries() const;

private:
    Config config_;
    mutable std::mutex mutex_;
    std::map<std::string, Topic> topics_;
    std::map<std::pair<std::string, std::string>, Subscription> subscriptions_;
    std::map<std::string, std::int64_t> dedup_accepted_ms_;
    std::set<std::pair<std::string, std::string>> visits_;
};

}  // namespace netfence
