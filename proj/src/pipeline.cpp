// pipeline.cpp - one probe event through the full processing chain
#include "netfence/pipeline.hpp"

#include <algorithm>
#include <set>

namespace netfence {

namespace {

Dispatcher::Config dispatcher_config(const Pipeline::Options& options) {
    Dispatcher::Config cfg;
    cfg.dedup_window_ms = options.dedup_window_ms;
    cfg.sleep_ms = options.sleep_ms;
    return cfg;
}

}  // namespace

Pipeline::Pipeline(Options options, PushTransport& transport)
    : options_(options),
      transport_(transport),
      tracker_(options.salt, options.window_span_ms),
      dispatcher_(dispatcher_config(options)) {}

void Pipeline::load_fences(std::vector<NetworkFence> fences) {
    engine_.replace_fences(std::move(fences));
}

void Pipeline::load_rules(std::vector<rules::Rule> rulebook) {
    std::map<std::string, bool> gated;
    for (const auto& r : rulebook) {
        gated[r.id] = rules::contains_first_visit(*r.condition);
    }
    std::lock_guard lock(mutex_);
    rules_ = std::move(rulebook);
    rule_first_visit_ = std::move(gated);
}

void Pipeline::load_topics(json_io::TopicsFile topics) {
    std::set<std::string> fence_ids;
    for (const auto& f : engine_.fences()) fence_ids.insert(f.id);
    std::set<std::string> rule_ids;
    {
        std::lock_guard lock(mutex_);
        for (const auto& r : rules_) rule_ids.insert(r.id);
    }
    for (const auto& t : topics.topics) {
        for (const auto& f : t.fence_ids) {
            if (fence_ids.count(f) == 0) {
                throw ConfigError("topic '" + t.id + "' references unknown fence '" + f + "'");
            }
        }
        for (const auto& r : t.rule_ids) {
            if (rule_ids.count(r) == 0) {
                throw ConfigError("topic '" + t.id + "' references unknown rule '" + r + "'");
            }
        }
    }

    dispatcher_.replace_topics(std::move(topics.topics));
    std::lock_guard lock(mutex_);
    messages_ = std::move(topics.messages);
    tracker_ssids_ = std::move(topics.tracker_ssids);
}

rules::EvaluationContext Pipeline::context_for(const std::string& device,
                                               const SignalVector& visible,
                                               std::int64_t t_ms) const {
    rules::EvaluationContext ctx;
    for (const auto& [ap, mean] : visible.means) {
        auto it = tracker_ssids_.find(ap.str());
        const std::string ssid = it != tracker_ssids_.end() ? it->second : ap.str();
        ctx.visible.push_back({ssid, ap, mean});
    }
    const std::int64_t local_s = t_ms / 1000 + std::int64_t(options_.utc_offset_min) * 60;
    ctx.clock_s = static_cast<int>(((local_s % 86'400) + 86'400) % 86'400);
    ctx.device = device;
    ctx.has_fired = [this](const std::string& dev, const std::string& rule_id) {
        return dispatcher_.has_fired(dev, rule_id);
    };
    return ctx;
}

PipelineResult Pipeline::process(const ProbeEvent& event) {
    std::lock_guard lock(mutex_);

    auto [device, track] = tracker_.ingest(event);
    const std::int64_t now = track.newest_ms;

    PipelineResult result;
    result.device = device;

    // Fences: signal-vector metrics first, then occurrence metrics. The
    // engine skips fences whose metric does not accept the observation kind.
    const SignalVector signal = window_aggregate(track, now, options_.window_span_ms);
    auto events = engine_.observe(device, signal, now);
    result.fence_events.insert(result.fence_events.end(), events.begin(), events.end());
    const OccurrenceFingerprint occurrence =
        window_occurrence(track, now, options_.window_span_ms);
    events = engine_.observe(device, occurrence, now);
    result.fence_events.insert(result.fence_events.end(), events.begin(), events.end());

    // Rules over the current visibility picture.
    const rules::EvaluationContext ctx = context_for(device, signal, now);
    std::vector<FiredRule> fired;
    for (const auto& [rule_id, action] : rules::evaluate_all(rules_, ctx)) {
        FiredRule f;
        f.rule_id = rule_id;
        f.action = action;
        auto payload = messages_.find(action.message_id);
        if (payload != messages_.end()) f.action.payload_template = payload->second;
        auto gated = rule_first_visit_.find(rule_id);
        f.first_visit = gated != rule_first_visit_.end() && gated->second;
        fired.push_back(std::move(f));
    }

    const std::vector<PushMessage> messages =
        dispatcher_.match(device, fired, result.fence_events);
    result.report = dispatcher_.dispatch(messages, transport_, now);

    for (std::size_t i = 0; i < messages.size(); ++i) {
        json_io::DeliveryRecord rec;
        rec.t_ms = now;
        rec.device = messages[i].device;
        rec.trigger = (messages[i].trigger == TriggerKind::Rule ? "rule:" : "fence:") +
                      messages[i].trigger_ref;
        rec.content_id = messages[i].content_id;
        rec.outcome = dispatch_outcome_name(result.report.outcomes[i]);
        result.deliveries.push_back(std::move(rec));
    }
    return result;
}

std::vector<FenceEvent> Pipeline::sweep(std::int64_t now_ms, std::int64_t stale_after_ms) {
    return engine_.sweep(now_ms, stale_after_ms);
}

}  // namespace netfence
