// test_dispatch.cpp - subscription matching and delivery semantics tests
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>
#include <vector>

#include "doctest.h"
#include "netfence/dispatch.hpp"

using namespace netfence;

namespace {

Topic topic(std::string id, std::vector<std::string> fences = {},
            std::vector<std::string> rules = {}) {
    Topic t;
    t.id = std::move(id);
    t.business_name = "biz-" + t.id;
    t.fence_ids = std::move(fences);
    t.rule_ids = std::move(rules);
    return t;
}

FiredRule fired(std::string rule_id, std::string message_id, bool first_visit = false) {
    FiredRule f;
    f.rule_id = std::move(rule_id);
    f.action.message_id = std::move(message_id);
    f.first_visit = first_visit;
    return f;
}

FenceEvent enter(std::string fence, std::string device = "dev1") {
    return FenceEvent{FenceEventKind::Enter, std::move(device), std::move(fence), 1000, 0.9};
}

Dispatcher::Config instant_config() {
    Dispatcher::Config cfg;
    cfg.sleep_ms = [](std::int64_t) {};
    return cfg;
}

}  // namespace

TEST_CASE("subscribe stores, upserts and validates") {
    Dispatcher d(instant_config());
    d.upsert_topic(topic("cafe"));

    CHECK_THROWS_AS(d.subscribe("nope", "dev1", "tok1"), UnknownTopicError);
    CHECK_THROWS_AS(d.subscribe("cafe", "dev1", ""), ConfigError);

    d.subscribe("cafe", "dev1", "tok1");
    auto subs = d.subscriptions();
    REQUIRE(subs.size() == 1);
    CHECK(subs[0].registration_token == "tok1");

    d.subscribe("cafe", "dev1", "tok2");
    subs = d.subscriptions();
    REQUIRE(subs.size() == 1);
    CHECK(subs[0].registration_token == "tok2");
    CHECK_FALSE(subs[0].defunct);

    CHECK(d.unsubscribe("cafe", "dev1"));
    CHECK_FALSE(d.unsubscribe("cafe", "dev1"));
    CHECK(d.subscriptions().empty());
}

TEST_CASE("match produces nothing for unsubscribed devices") {
    Dispatcher d(instant_config());
    d.upsert_topic(topic("cafe", {"f1"}, {"r1"}));
    CHECK(d.match("dev1", {fired("r1", "m1")}, {enter("f1")}).empty());
}

TEST_CASE("match pairs fired rules and enter events with owning topics") {
    Dispatcher d(instant_config());
    d.upsert_topic(topic("cafe", {"f1"}, {"r1"}));
    d.subscribe("cafe", "dev1", "tok1");

    const auto rule_only = d.match("dev1", {fired("r1", "m1")}, {});
    REQUIRE(rule_only.size() == 1);
    CHECK(rule_only[0].trigger == TriggerKind::Rule);
    CHECK(rule_only[0].trigger_ref == "r1");
    CHECK(rule_only[0].payload == "m1");
    CHECK(rule_only[0].registration_token == "tok1");

    const auto foreign = d.match("dev1", {fired("other_rule", "m1")}, {});
    CHECK(foreign.empty());

    const auto enter_only = d.match("dev1", {}, {enter("f1")});
    REQUIRE(enter_only.size() == 1);
    CHECK(enter_only[0].trigger == TriggerKind::FenceEnter);
    CHECK(enter_only[0].trigger_ref == "f1");

    FenceEvent ex = enter("f1");
    ex.kind = FenceEventKind::Exit;
    FenceEvent dw = enter("f1");
    dw.kind = FenceEventKind::Dwell;
    CHECK(d.match("dev1", {}, {ex, dw}).empty());
}

TEST_CASE("two triggered topics yield two messages in topic-id order") {
    Dispatcher d(instant_config());
    d.upsert_topic(topic("zeta", {}, {"r1"}));
    d.upsert_topic(topic("alpha", {}, {"r1"}));
    d.subscribe("zeta", "dev1", "tokz");
    d.subscribe("alpha", "dev1", "toka");

    const auto msgs = d.match("dev1", {fired("r1", "m1")}, {});
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].registration_token == "toka");
    CHECK(msgs[1].registration_token == "tokz");
}

TEST_CASE("payloads use the template when present and never leak the device id") {
    Dispatcher d(instant_config());
    d.upsert_topic(topic("cafe", {"f1"}, {"r1"}));
    d.subscribe("cafe", "0123abcd0123abcd0123abcd0123abcd", "tok1");

    FiredRule f = fired("r1", "m1");
    f.action.payload_template = "{\"coupon\":\"espresso\"}";
    const auto msgs =
        d.match("0123abcd0123abcd0123abcd0123abcd", {f}, {enter("f1", "0123abcd0123abcd0123abcd0123abcd")});
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].payload == "{\"coupon\":\"espresso\"}");
    for (const auto& m : msgs) {
        CHECK(m.payload.find("0123abcd0123abcd0123abcd0123abcd") == std::string::npos);
    }
}

TEST_CASE("duplicate dedup keys inside the window are suppressed") {
    Dispatcher d(instant_config());
    RecordingTransport transport;
    PushMessage m;
    m.registration_token = "tok";
    m.payload = "p";
    m.device = "dev";
    m.trigger_ref = "r1";
    m.content_id = "m1";

    const auto report = d.dispatch({m, m}, transport, 1000);
    CHECK(report.sent == 1);
    CHECK(report.deduplicated == 1);
    REQUIRE(report.outcomes.size() == 2);
    CHECK(report.outcomes[0] == DispatchOutcome::Sent);
    CHECK(report.outcomes[1] == DispatchOutcome::Deduplicated);
    CHECK(transport.attempts().size() == 1);

    const auto later = d.dispatch({m}, transport, 1000 + 24LL * 3600 * 1000 - 1);
    CHECK(later.deduplicated == 1);
    const auto expired = d.dispatch({m}, transport, 1000 + 24LL * 3600 * 1000);
    CHECK(expired.sent == 1);
}

TEST_CASE("a zero dedup window disables suppression") {
    Dispatcher::Config cfg = instant_config();
    cfg.dedup_window_ms = 0;
    Dispatcher d(cfg);
    RecordingTransport transport;
    PushMessage m;
    m.registration_token = "tok";
    m.payload = "p";
    m.device = "dev";
    m.trigger_ref = "r1";
    m.content_id = "m1";

    const auto report = d.dispatch({m, m}, transport, 1000);
    CHECK(report.sent == 2);
    CHECK(report.deduplicated == 0);
}

TEST_CASE("invalid tokens defunct the subscription without retry") {
    Dispatcher d(instant_config());
    d.upsert_topic(topic("cafe", {}, {"r1"}));
    d.subscribe("cafe", "dev1", "dead-token");

    RecordingTransport transport;
    transport.script("dead-token", {DeliveryStatus::InvalidToken});

    PushMessage m;
    m.registration_token = "dead-token";
    m.payload = "p";
    m.device = "dev1";
    m.trigger_ref = "r1";
    m.content_id = "m1";

    const auto report = d.dispatch({m}, transport, 1000);
    CHECK(report.defunct == 1);
    CHECK(transport.attempts().size() == 1);
    REQUIRE(d.subscriptions().size() == 1);
    CHECK(d.subscriptions()[0].defunct);

    CHECK(d.match("dev1", {fired("r1", "m1")}, {}).empty());

    d.subscribe("cafe", "dev1", "fresh-token");
    CHECK_FALSE(d.subscriptions()[0].defunct);
    CHECK(d.match("dev1", {fired("r1", "m1")}, {}).size() == 1);
}

TEST_CASE("oversized payloads are rejected before any send") {
    Dispatcher d(instant_config());
    RecordingTransport transport;

    PushMessage big;
    big.registration_token = "tok";
    big.payload = std::string(4097, 'x');
    big.device = "dev";
    big.trigger_ref = "r1";
    big.content_id = "m1";

    PushMessage fits = big;
    fits.payload = std::string(4096, 'x');
    fits.content_id = "m2";

    const auto report = d.dispatch({big, fits}, transport, 1000);
    CHECK(report.failed == 1);
    CHECK(report.sent == 1);
    REQUIRE(report.outcomes.size() == 2);
    CHECK(report.outcomes[0] == DispatchOutcome::PayloadTooLarge);
    CHECK(report.outcomes[1] == DispatchOutcome::Sent);
    REQUIRE(transport.attempts().size() == 1);
    CHECK(transport.attempts()[0].payload.size() == 4096);
}

TEST_CASE("transient failures back off exponentially and eventually succeed") {
    std::vector<std::int64_t> sleeps;
    Dispatcher::Config cfg;
    cfg.sleep_ms = [&](std::int64_t ms) { sleeps.push_back(ms); };
    Dispatcher d(cfg);

    RecordingTransport transport;
    transport.script("tok", {DeliveryStatus::TransientFailure, DeliveryStatus::TransientFailure,
                             DeliveryStatus::Accepted});

    PushMessage m;
    m.registration_token = "tok";
    m.payload = "p";
    m.device = "dev";
    m.trigger_ref = "r1";
    m.content_id = "m1";

    const auto report = d.dispatch({m}, transport, 1000);
    CHECK(report.sent == 1);
    CHECK(transport.attempts().size() == 3);
    CHECK(sleeps == std::vector<std::int64_t>{1000, 2000});
}

TEST_CASE("persistent transient failure exhausts five attempts then fails") {
    std::vector<std::int64_t> sleeps;
    Dispatcher::Config cfg;
    cfg.sleep_ms = [&](std::int64_t ms) { sleeps.push_back(ms); };
    Dispatcher d(cfg);

    RecordingTransport transport;
    transport.script("tok", std::vector<DeliveryStatus>(10, DeliveryStatus::TransientFailure));

    PushMessage m;
    m.registration_token = "tok";
    m.payload = "p";
    m.device = "dev";
    m.trigger_ref = "r1";
    m.content_id = "m1";

    const auto report = d.dispatch({m}, transport, 1000);
    CHECK(report.failed == 1);
    CHECK(report.sent == 0);
    CHECK(transport.attempts().size() == 5);
    CHECK(sleeps == std::vector<std::int64_t>{1000, 2000, 4000, 8000});

    // Failure does not burn the dedup key: a later retrigger sends.
    transport.script("tok", {});
    const auto retry = d.dispatch({m}, transport, 2000);
    CHECK(retry.sent == 1);
}

TEST_CASE("a burst of identical triggers is accepted at most once") {
    Dispatcher d(instant_config());
    RecordingTransport transport;

    PushMessage m;
    m.registration_token = "tok";
    m.payload = "p";
    m.device = "dev";
    m.trigger_ref = "r1";
    m.content_id = "m1";

    std::vector<PushMessage> burst(50, m);
    auto report = d.dispatch(burst, transport, 1000);
    CHECK(report.sent == 1);
    CHECK(report.deduplicated == 49);

    for (int i = 0; i < 20; ++i) {
        report = d.dispatch({m}, transport, 2000 + i);
        CHECK(report.sent == 0);
        CHECK(report.deduplicated == 1);
    }
    CHECK(transport.attempts().size() == 1);
}

TEST_CASE("visit history is written on first accepted delivery only") {
    Dispatcher::Config cfg = instant_config();
    cfg.dedup_window_ms = 0;  // isolate FIRST_VISIT from dedup suppression
    Dispatcher d(cfg);
    RecordingTransport transport;

    PushMessage m;
    m.registration_token = "tok";
    m.payload = "p";
    m.device = "dev";
    m.trigger_ref = "coupon_rule";
    m.content_id = "m1";
    m.first_visit_gated = true;

    transport.script("tok", std::vector<DeliveryStatus>(5, DeliveryStatus::TransientFailure));
    d.dispatch({m}, transport, 1000);
    CHECK_FALSE(d.has_fired("dev", "coupon_rule"));

    transport.script("tok", {});
    d.dispatch({m}, transport, 2000);
    CHECK(d.has_fired("dev", "coupon_rule"));
    CHECK_FALSE(d.has_fired("dev", "other_rule"));
    CHECK_FALSE(d.has_fired("other_dev", "coupon_rule"));
}

TEST_CASE("a first-visit rule delivers once across two crossings") {
    Dispatcher::Config cfg = instant_config();
    cfg.dedup_window_ms = 0;  // prove suppression comes from visit history
    Dispatcher d(cfg);
    d.upsert_topic(topic("cafe", {}, {"fv"}));
    d.subscribe("cafe", "dev1", "tok1");
    RecordingTransport transport;

    const rules::Rule rule = rules::parse_rule(
        "RULE fv: IF IS_VISIBLE('mycafe') AND FIRST_VISIT() THEN PRESENT coupon");

    auto crossing = [&](std::int64_t t) {
        rules::EvaluationContext ctx;
        ctx.visible = {{"mycafe", ApId("ap1"), -55.0}};
        ctx.clock_s = 12 * 3600;
        ctx.device = "dev1";
        ctx.has_fired = [&](const std::string& dev, const std::string& rid) {
            return d.has_fired(dev, rid);
        };
        std::vector<FiredRule> fs;
        if (rules::evaluate(rule, ctx)) {
            fs.push_back(fired(rule.id, rule.action.message_id,
                               rules::contains_first_visit(*rule.condition)));
        }
        return d.dispatch(d.match("dev1", fs, {}), transport, t);
    };

    const auto first = crossing(1000);
    CHECK(first.sent == 1);
    const auto second = crossing(2'000'000);
    CHECK(second.sent == 0);
    CHECK(transport.attempts().size() == 1);
}

TEST_CASE("restored state reproduces defunct flags and visit history") {
    Dispatcher d(instant_config());
    d.upsert_topic(topic("cafe", {}, {"r1"}));
    Subscription s;
    s.topic_id = "cafe";
    s.device = "dev1";
    s.registration_token = "tok";
    s.defunct = true;
    d.restore_subscription(s);
    CHECK(d.match("dev1", {fired("r1", "m1")}, {}).empty());

    d.restore_visit("dev1", "r1");
    CHECK(d.has_fired("dev1", "r1"));
    REQUIRE(d.visits().size() == 1);
    CHECK(d.visits()[0].first == "dev1");
}
