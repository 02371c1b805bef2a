// dispatch.cpp - subscription store, trigger matching and push delivery
#include "netfence/dispatch.hpp"

#include <algorithm>

namespace netfence {

std::string PushMessage::dedup_key() const {
    const char* kind = trigger == TriggerKind::Rule ? "rule" : "fence";
    return device + "|" + kind + ":" + trigger_ref + "|" + content_id;
}

std::string dispatch_outcome_name(DispatchOutcome o) {
    switch (o) {
        case DispatchOutcome::Sent:
            return "sent";
        case DispatchOutcome::Deduplicated:
            return "deduplicated";
        case DispatchOutcome::Defunct:
            return "defunct";
        case DispatchOutcome::Failed:
            return "failed";
        case DispatchOutcome::PayloadTooLarge:
            return "payload_too_large";
    }
    throw ConfigError("unknown dispatch outcome");
}

// ---------------------------------------------------------------------------
// RecordingTransport
// ---------------------------------------------------------------------------

DeliveryStatus RecordingTransport::send(const std::string& registration_token,
                                        const std::string& payload) {
    attempts_.push_back({registration_token, payload, now_ms_ ? now_ms_() : 0});
    auto it = scripts_.find(registration_token);
    if (it == scripts_.end() || it->second.empty()) return DeliveryStatus::Accepted;
    const DeliveryStatus status = it->second.front();
    it->second.erase(it->second.begin());
    return status;
}

void RecordingTransport::script(const std::string& token, std::vector<DeliveryStatus> statuses) {
    scripts_[token] = std::move(statuses);
}

void RecordingTransport::set_clock(std::function<std::int64_t()> now_ms) {
    now_ms_ = std::move(now_ms);
}

std::vector<RecordingTransport::Attempt> RecordingTransport::attempts_for(
    const std::string& token) const {
    std::vector<Attempt> out;
    for (const auto& a : attempts_) {
        if (a.token == token) out.push_back(a);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dispatcher
// ---------------------------------------------------------------------------

Dispatcher::Dispatcher() : Dispatcher(Config{}) {}

Dispatcher::Dispatcher(Config config) : config_(std::move(config)) {
    if (config_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    if (config_.dedup_window_ms < 0) throw ConfigError("dedup_window must be >= 0");
    if (config_.backoff_base_ms < 0) throw ConfigError("backoff_base must be >= 0");
    if (config_.backoff_factor < 1.0) throw ConfigError("backoff_factor must be >= 1");
}

void Dispatcher::upsert_topic(Topic topic) {
    if (topic.id.empty()) throw ConfigError("topic id must be non-empty");
    std::lock_guard lock(mutex_);
    topics_.insert_or_assign(topic.id, std::move(topic));
}

void Dispatcher::replace_topics(std::vector<Topic> topics) {
    std::map<std::string, Topic> fresh;
    for (auto& t : topics) {
        if (t.id.empty()) throw ConfigError("topic id must be non-empty");
        fresh.insert_or_assign(t.id, std::move(t));
    }
    std::lock_guard lock(mutex_);
    topics_ = std::move(fresh);
}

std::vector<Topic> Dispatcher::topics() const {
    std::lock_guard lock(mutex_);
    std::vector<Topic> out;
    out.reserve(topics_.size());
    for (const auto& [id, t] : topics_) out.push_back(t);
    return out;
}

Subscription Dispatcher::subscribe(const std::string& topic_id, const std::string& device,
                                   const std::string& registration_token) {
    if (registration_token.empty()) throw ConfigError("registration token must be non-empty");
    std::lock_guard lock(mutex_);
    if (topics_.count(topic_id) == 0) throw UnknownTopicError("no such topic: " + topic_id);
    Subscription sub{topic_id, device, registration_token, false};
    subscriptions_.insert_or_assign({topic_id, device}, sub);
    return sub;
}

bool Dispatcher::unsubscribe(const std::string& topic_id, const std::string& device) {
    std::lock_guard lock(mutex_);
    return subscriptions_.erase({topic_id, device}) > 0;
}

std::vector<Subscription> Dispatcher::subscriptions() const {
    std::lock_guard lock(mutex_);
    std::vector<Subscription> out;
    out.reserve(subscriptions_.size());
    for (const auto& [key, sub] : subscriptions_) out.push_back(sub);
    return out;
}

void Dispatcher::restore_subscription(Subscription s) {
    std::lock_guard lock(mutex_);
    const std::pair<std::string, std::string> key{s.topic_id, s.device};
    subscriptions_.insert_or_assign(key, std::move(s));
}

std::vector<PushMessage> Dispatcher::match(const std::string& device,
                                           const std::vector<FiredRule>& fired,
                                           const std::vector<FenceEvent>& fence_events) const {
    std::lock_guard lock(mutex_);
    std::vector<PushMessage> out;
    // topics_ iterates in id order, which fixes the output order.
    for (const auto& [topic_id, topic] : topics_) {
        auto sub_it = subscriptions_.find({topic_id, device});
        if (sub_it == subscriptions_.end() || sub_it->second.defunct) continue;
        const Subscription& sub = sub_it->second;

        for (const auto& f : fired) {
            if (std::find(topic.rule_ids.begin(), topic.rule_ids.end(), f.rule_id) ==
                topic.rule_ids.end()) {
                continue;
            }
            PushMessage m;
            m.registration_token = sub.registration_token;
            m.payload = f.action.payload_template.empty() ? f.action.message_id
                                                          : f.action.payload_template;
            m.device = device;
            m.trigger = TriggerKind::Rule;
            m.trigger_ref = f.rule_id;
            m.content_id = f.action.message_id;
            m.first_visit_gated = f.first_visit;
            out.push_back(std::move(m));
        }

        for (const auto& e : fence_events) {
            if (e.kind != FenceEventKind::Enter) continue;
            if (std::find(topic.fence_ids.begin(), topic.fence_ids.end(), e.fence) ==
                topic.fence_ids.end()) {
                continue;
            }
            PushMessage m;
            m.registration_token = sub.registration_token;
            m.payload = "{\"event\":\"enter\",\"fence\":\"" + e.fence + "\",\"business\":\"" +
                        topic.business_name + "\"}";
            m.device = device;
            m.trigger = TriggerKind::FenceEnter;
            m.trigger_ref = e.fence;
            m.content_id = "enter:" + e.fence;
            out.push_back(std::move(m));
        }
    }
    return out;
}

DeliveryReport Dispatcher::dispatch(const std::vector<PushMessage>& messages,
                                    PushTransport& transport, std::int64_t now_ms) {
    DeliveryReport report;
    report.outcomes.reserve(messages.size());

    for (const auto& m : messages) {
        if (m.payload.size() > kMaxPushPayloadBytes) {
            report.failed += 1;
            report.outcomes.push_back(DispatchOutcome::PayloadTooLarge);
            continue;
        }

        const std::string key = m.dedup_key();
        {
            std::lock_guard lock(mutex_);
            auto it = dedup_accepted_ms_.find(key);
            if (config_.dedup_window_ms > 0 && it != dedup_accepted_ms_.end() &&
                now_ms - it->second < config_.dedup_window_ms) {
                report.deduplicated += 1;
                report.outcomes.push_back(DispatchOutcome::Deduplicated);
                continue;
            }
        }

        DeliveryStatus status = DeliveryStatus::TransientFailure;
        std::int64_t backoff = config_.backoff_base_ms;
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            status = transport.send(m.registration_token, m.payload);
            if (status != DeliveryStatus::TransientFailure) break;
            if (attempt == config_.max_attempts) break;
            if (config_.sleep_ms) config_.sleep_ms(backoff);
            backoff = static_cast<std::int64_t>(backoff * config_.backoff_factor);
        }

        std::lock_guard lock(mutex_);
        switch (status) {
            case DeliveryStatus::Accepted:
                report.sent += 1;
                report.outcomes.push_back(DispatchOutcome::Sent);
                dedup_accepted_ms_[key] = now_ms;
                if (m.first_visit_gated && m.trigger == TriggerKind::Rule) {
                    visits_.insert({m.device, m.trigger_ref});
                }
                break;
            case DeliveryStatus::InvalidToken:
                report.defunct += 1;
                report.outcomes.push_back(DispatchOutcome::Defunct);
                for (auto& [skey, sub] : subscriptions_) {
                    if (sub.registration_token == m.registration_token) sub.defunct = true;
                }
                break;
            case DeliveryStatus::TransientFailure:
                report.failed += 1;
                report.outcomes.push_back(DispatchOutcome::Failed);
                break;
        }
    }
    return report;
}

bool Dispatcher::has_fired(const std::string& device, const std::string& rule_id) const {
    std::lock_guard lock(mutex_);
    return visits_.count({device, rule_id}) > 0;
}

void Dispatcher::restore_visit(const std::string& device, const std::string& rule_id) {
    std::lock_guard lock(mutex_);
    visits_.insert({device, rule_id});
}

std::vector<std::pair<std::string, std::string>> Dispatcher::visits() const {
    std::lock_guard lock(mutex_);
    return {visits_.begin(), visits_.end()};
}

void Dispatcher::restore_dedup(const std::string& dedup_key, std::int64_t accepted_ms) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = dedup_accepted_ms_.try_emplace(dedup_key, accepted_ms);
    if (!inserted) it->second = std::max(it->second, accepted_ms);
}

std::vector<std::pair<std::string, std::int64_t>> Dispatcher::dedup_entries() const {
    std::lock_guard lock(mutex_);
    return {dedup_accepted_ms_.begin(), dedup_accepted_ms_.end()};
}

}  // namespace netfence
