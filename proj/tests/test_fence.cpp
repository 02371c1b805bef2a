// test_fence.cpp - closeness normalization and hysteresis engine tests
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "netfence/fence.hpp"
#include "support/random_gen.hpp"

using namespace netfence;

namespace {

constexpr double kTol = 1e-9;

OccurrenceFingerprint occ(std::vector<std::pair<std::string, double>> fractions,
                          int recordings = 10) {
    OccurrenceFingerprint fp;
    for (auto& [name, f] : fractions) fp.fractions.emplace(ApId(name), f);
    fp.recording_count = recordings;
    return fp;
}

SignalVector sig(std::vector<std::pair<std::string, double>> means) {
    SignalVector v;
    for (auto& [name, m] : means) {
        v.means.emplace(ApId(name), m);
        v.sample_counts.emplace(ApId(name), 1);
    }
    v.observation_count = 1;
    return v;
}

NetworkFence occurrence_fence(std::string id, OccurrenceFingerprint ref) {
    NetworkFence f;
    f.id = std::move(id);
    f.metric = Metric::MinMax;
    f.reference = std::move(ref);
    f.validate();
    return f;
}

NetworkFence signal_fence(std::string id, Metric metric, SignalVector ref) {
    NetworkFence f;
    f.id = std::move(id);
    f.metric = metric;
    f.reference = std::move(ref);
    f.validate();
    return f;
}

ProximityState fresh_state(const std::string& device = "dev", const std::string& fence = "f") {
    ProximityState s;
    s.device = device;
    s.fence = fence;
    return s;
}

// Naive transcription of the documented hysteresis behaviour, kept separate
// from the production state machine on purpose.
struct ReferenceMachine {
    int confirm = 2;
    double enter = 0.7;
    double exit = 0.4;
    std::int64_t dwell_ms = 30'000;

    int phase = 0;  // 0 outside, 1 candidate, 2 inside
    int count = 0;
    std::int64_t since = 0;
    bool dwelled = false;

    std::vector<std::string> feed(double c, std::int64_t t) {
        std::vector<std::string> events;
        if (phase == 0) {
            if (c >= enter) {
                count = 1;
                if (count >= confirm) {
                    phase = 2;
                    since = t;
                    dwelled = false;
                    events.push_back("enter");
                } else {
                    phase = 1;
                }
            }
        } else if (phase == 1) {
            if (c >= enter) {
                count += 1;
                if (count >= confirm) {
                    phase = 2;
                    since = t;
                    dwelled = false;
                    events.push_back("enter");
                }
            } else {
                phase = 0;
                count = 0;
            }
        } else {
            if (c <= exit) {
                phase = 0;
                count = 0;
                events.push_back("exit");
            } else if (!dwelled && t - since >= dwell_ms) {
                dwelled = true;
                events.push_back("dwell");
            }
        }
        return events;
    }
};

}  // namespace

TEST_CASE("closeness of a reference against itself is 1 for every metric") {
    const auto ref_occ = occ({{"a", 0.8}, {"b", 0.4}});
    CHECK(closeness(occurrence_fence("f", ref_occ), ref_occ) == doctest::Approx(1.0).epsilon(kTol));

    const auto ref_sig = sig({{"a", -50.0}, {"b", -60.0}, {"c", -72.0}});
    for (Metric m : {Metric::Euclidean, Metric::Tanimoto, Metric::Spearman}) {
        CAPTURE(metric_name(m));
        CHECK(closeness(signal_fence("f", m, ref_sig), ref_sig) ==
              doctest::Approx(1.0).epsilon(kTol));
    }
}

TEST_CASE("disjoint occurrence fingerprints score zero") {
    const auto fence = occurrence_fence("f", occ({{"a", 0.9}}));
    CHECK(closeness(fence, occ({{"b", 0.9}})) == doctest::Approx(0.0).epsilon(kTol));
}

TEST_CASE("euclidean closeness matches the exp(-d/D0) normalization") {
    const auto fence = signal_fence("f", Metric::Euclidean, sig({{"B", -60.0}}));
    const double d = std::sqrt(4100.0);
    CHECK(closeness(fence, sig({{"A", -50.0}})) ==
          doctest::Approx(std::exp(-d / 30.0)).epsilon(1e-12));
    CHECK(closeness(fence, sig({{"A", -50.0}})) == doctest::Approx(0.1183).epsilon(1e-3));

    NetworkFence wide = fence;
    wide.euclid_scale_dbm = 60.0;
    CHECK(closeness(wide, sig({{"A", -50.0}})) ==
          doctest::Approx(std::exp(-d / 60.0)).epsilon(1e-12));
}

TEST_CASE("tanimoto closeness is one minus the distance") {
    const auto fence = signal_fence("f", Metric::Tanimoto, sig({{"B", -60.0}}));
    CHECK(closeness(fence, sig({{"A", -50.0}})) ==
          doctest::Approx(1.0 - (1.0 - 11000.0 / 15100.0)).epsilon(1e-12));
}

TEST_CASE("spearman closeness uses common APs and needs at least two") {
    const auto ref = sig({{"a", -40.0}, {"b", -60.0}, {"c", -80.0}});
    const auto fence = signal_fence("f", Metric::Spearman, ref);

    CHECK(closeness(fence, sig({{"a", -70.0}, {"b", -60.0}, {"c", -50.0}})) ==
          doctest::Approx(0.0).epsilon(kTol));
    CHECK(closeness(fence, sig({{"a", -35.0}, {"b", -55.0}, {"c", -75.0}})) ==
          doctest::Approx(1.0).epsilon(kTol));
    CHECK(closeness(fence, sig({{"a", -50.0}, {"x", -50.0}})) ==
          doctest::Approx(0.0).epsilon(kTol));
    CHECK(closeness(fence, sig({{"a", -50.0}, {"b", -60.0}, {"z", -40.0}})) ==
          doctest::Approx(1.0).epsilon(kTol));
}

TEST_CASE("closeness rejects observations of the wrong kind") {
    const auto occ_fence = occurrence_fence("f1", occ({{"a", 0.5}}));
    const auto sig_fence = signal_fence("f2", Metric::Euclidean, sig({{"a", -50.0}}));
    CHECK_THROWS_AS(closeness(occ_fence, sig({{"a", -50.0}})), MetricMismatchError);
    CHECK_THROWS_AS(closeness(sig_fence, occ({{"a", 0.5}})), MetricMismatchError);
}

TEST_CASE("fence validation rejects inconsistent definitions") {
    NetworkFence f;
    f.id = "f";
    f.metric = Metric::MinMax;
    f.reference = sig({{"a", -50.0}});
    CHECK_THROWS_AS(f.validate(), ConfigError);

    f.metric = Metric::Tanimoto;
    CHECK_NOTHROW(f.validate());

    f.reference = occ({{"a", 0.5}});
    CHECK_THROWS_AS(f.validate(), ConfigError);

    f.metric = Metric::MinMax;
    CHECK_NOTHROW(f.validate());

    f.exit_threshold = 0.7;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f.exit_threshold = 0.4;

    f.confirm_count = 0;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f.confirm_count = 2;

    f.reference = OccurrenceFingerprint{};
    CHECK_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("two confirming observations enter, an interrupted candidacy does not") {
    const auto fence = occurrence_fence("f", occ({{"a", 1.0}}));

    ProximityState s = fresh_state();
    auto r1 = step(s, 0.9, 1000, fence);
    CHECK(r1.events.empty());
    CHECK(r1.state.phase == Phase::Candidate);

    auto r2 = step(r1.state, 0.9, 2000, fence);
    REQUIRE(r2.events.size() == 1);
    CHECK(r2.events[0].kind == FenceEventKind::Enter);
    CHECK(r2.events[0].t_unix_ms == 2000);
    CHECK(r2.events[0].closeness == doctest::Approx(0.9));
    CHECK(r2.state.phase == Phase::Inside);

    auto i1 = step(fresh_state(), 0.9, 1000, fence);
    auto i2 = step(i1.state, 0.2, 2000, fence);
    CHECK(i2.events.empty());
    CHECK(i2.state.phase == Phase::Outside);
}

TEST_CASE("confirm_count of one enters immediately") {
    auto fence = occurrence_fence("f", occ({{"a", 1.0}}));
    fence.confirm_count = 1;
    auto r = step(fresh_state(), 0.8, 500, fence);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == FenceEventKind::Enter);
}

TEST_CASE("the hysteresis band emits nothing in either phase") {
    auto fence = occurrence_fence("f", occ({{"a", 1.0}}));
    fence.min_dwell_ms = INT64_MAX / 2;

    ProximityState outside = fresh_state();
    ProximityState inside = fresh_state();
    inside.phase = Phase::Inside;
    inside.inside_since_ms = 0;

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> band(0.4000001, 0.6999999);
    for (int i = 1; i <= 200; ++i) {
        const double c = band(rng);
        auto ro = step(outside, c, i * 1000, fence);
        CHECK(ro.events.empty());
        outside = ro.state;
        auto ri = step(inside, c, i * 1000, fence);
        CHECK(ri.events.empty());
        inside = ri.state;
    }
    CHECK(outside.phase == Phase::Outside);
    CHECK(inside.phase == Phase::Inside);
}

TEST_CASE("dwell fires once when the stay reaches min_dwell, exit wins over dwell") {
    auto fence = occurrence_fence("f", occ({{"a", 1.0}}));
    fence.confirm_count = 1;
    fence.min_dwell_ms = 30'000;

    auto r = step(fresh_state(), 0.9, 0, fence);
    REQUIRE(r.events.size() == 1);

    r = step(r.state, 0.9, 29'999, fence);
    CHECK(r.events.empty());

    r = step(r.state, 0.9, 30'000, fence);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == FenceEventKind::Dwell);

    r = step(r.state, 0.9, 60'000, fence);
    CHECK(r.events.empty());

    auto leave = step(fresh_state(), 0.9, 0, fence);
    leave = step(leave.state, 0.1, 40'000, fence);
    REQUIRE(leave.events.size() == 1);
    CHECK(leave.events[0].kind == FenceEventKind::Exit);
}

TEST_CASE("re-entering restarts the dwell clock") {
    auto fence = occurrence_fence("f", occ({{"a", 1.0}}));
    fence.confirm_count = 1;
    fence.min_dwell_ms = 10'000;

    auto r = step(fresh_state(), 0.9, 0, fence);
    r = step(r.state, 0.9, 10'000, fence);  // dwell
    r = step(r.state, 0.1, 11'000, fence);  // exit
    r = step(r.state, 0.9, 12'000, fence);  // enter again
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == FenceEventKind::Enter);
    r = step(r.state, 0.9, 13'000, fence);
    CHECK(r.events.empty());
    r = step(r.state, 0.9, 22'000, fence);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == FenceEventKind::Dwell);
}

TEST_CASE("time may stall but never run backwards") {
    const auto fence = occurrence_fence("f", occ({{"a", 1.0}}));
    auto r = step(fresh_state(), 0.1, 1000, fence);
    CHECK_NOTHROW(step(r.state, 0.1, 1000, fence));
    CHECK_THROWS_AS(step(r.state, 0.1, 999, fence), NonMonotoneTimeError);
}

TEST_CASE("emitted streams match a brute-force reference machine") {
    for (int confirm = 1; confirm <= 3; ++confirm) {
        auto fence = occurrence_fence("f", occ({{"a", 1.0}}));
        fence.confirm_count = confirm;
        fence.min_dwell_ms = 2500;
        const double levels[] = {0.0, 0.55, 1.0};

        for (int len = 1; len <= 6; ++len) {
            int combos = 1;
            for (int i = 0; i < len; ++i) combos *= 3;
            for (int code = 0; code < combos; ++code) {
                ReferenceMachine ref;
                ref.confirm = confirm;
                ref.dwell_ms = 2500;
                ProximityState state = fresh_state();

                std::vector<std::string> expect;
                std::vector<std::string> got;
                int c = code;
                for (int k = 0; k < len; ++k) {
                    const double level = levels[c % 3];
                    c /= 3;
                    const std::int64_t t = (k + 1) * 1000;
                    for (const auto& e : ref.feed(level, t)) expect.push_back(e);
                    auto r = step(std::move(state), level, t, fence);
                    state = std::move(r.state);
                    for (const auto& e : r.events) got.push_back(fence_event_kind_name(e.kind));
                }
                CAPTURE(confirm);
                CAPTURE(len);
                CAPTURE(code);
                CHECK(got == expect);
            }
        }
    }
}

TEST_CASE("event streams alternate enter and exit with dwell only inside") {
    std::mt19937 rng(20260817);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<int> confirm_dist(1, 3);

    for (int trial = 0; trial < 200; ++trial) {
        auto fence = occurrence_fence("f", occ({{"a", 1.0}}));
        fence.confirm_count = confirm_dist(rng);
        fence.min_dwell_ms = 3000;

        ProximityState state = fresh_state();
        int last_transition = -1;  // -1 none, 0 exit, 1 enter
        bool inside = false;
        for (int k = 0; k < 60; ++k) {
            auto r = step(std::move(state), uni(rng), (k + 1) * 1000, fence);
            state = std::move(r.state);
            for (const auto& e : r.events) {
                if (e.kind == FenceEventKind::Enter) {
                    CHECK(last_transition != 1);
                    last_transition = 1;
                    inside = true;
                } else if (e.kind == FenceEventKind::Exit) {
                    CHECK(last_transition != 0);
                    last_transition = 0;
                    inside = false;
                } else {
                    CHECK(inside);
                }
                CHECK(e.closeness >= 0.0);
                CHECK(e.closeness <= 1.0);
            }
        }
    }
}

TEST_CASE("closeness stays within the unit interval on random inputs") {
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 300; ++trial) {
        const SignalVector ref = testgen::random_signal_vector(rng);
        const SignalVector obs = testgen::random_signal_vector(rng);
        if (ref.means.empty()) continue;
        for (Metric m : {Metric::Euclidean, Metric::Tanimoto, Metric::Spearman}) {
            const double c = closeness(signal_fence("f", m, ref), obs);
            CAPTURE(metric_name(m));
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
        const OccurrenceFingerprint oref = testgen::random_fingerprint(rng);
        const OccurrenceFingerprint oobs = testgen::random_fingerprint(rng);
        if (oref.fractions.empty()) continue;
        const double c = closeness(occurrence_fence("f", oref), oobs);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
    }
}

TEST_CASE("engine with no fences emits nothing") {
    FenceEngine engine;
    CHECK(engine.observe("dev", occ({{"a", 1.0}}), 1000).empty());
    CHECK(engine.observe("dev", sig({{"a", -50.0}}), 2000).empty());
}

TEST_CASE("engine confirms an identity observation into an enter event") {
    FenceEngine engine;
    const auto ref = occ({{"a", 0.8}, {"b", 0.4}});
    engine.add_fence(occurrence_fence("cafe", ref));

    CHECK(engine.observe("dev", ref, 1000).empty());
    const auto events = engine.observe("dev", ref, 2000);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == FenceEventKind::Enter);
    CHECK(events[0].fence == "cafe");
    CHECK(events[0].device == "dev");

    const auto inside = engine.inside_devices("cafe");
    REQUIRE(inside.size() == 1);
    CHECK(inside[0] == "dev");
}

TEST_CASE("disjoint fences only fire for the matching reference") {
    FenceEngine engine;
    const auto ref1 = occ({{"a", 1.0}});
    const auto ref2 = occ({{"z", 1.0}});
    engine.add_fence(occurrence_fence("one", ref1));
    engine.add_fence(occurrence_fence("two", ref2));

    engine.observe("dev", ref1, 1000);
    const auto events = engine.observe("dev", ref1, 2000);
    REQUIRE(events.size() == 1);
    CHECK(events[0].fence == "one");
    CHECK(engine.inside_devices("two").empty());
}

TEST_CASE("observations only reach fences of the matching metric kind") {
    FenceEngine engine;
    engine.add_fence(occurrence_fence("presence", occ({{"a", 1.0}})));
    auto near = signal_fence("near", Metric::Euclidean, sig({{"a", -50.0}}));
    near.confirm_count = 1;
    engine.add_fence(near);

    const auto events = engine.observe("dev", sig({{"a", -50.0}}), 1000);
    REQUIRE(events.size() == 1);
    CHECK(events[0].fence == "near");
    CHECK(engine.state_of("dev", "presence").phase == Phase::Outside);
    CHECK(engine.state_of("dev", "presence").last_t_ms == INT64_MIN);
}

TEST_CASE("replacing fences keeps state for surviving ids only") {
    FenceEngine engine;
    const auto ref = occ({{"a", 1.0}});
    engine.add_fence(occurrence_fence("keep", ref));
    engine.add_fence(occurrence_fence("drop", ref));
    engine.observe("dev", ref, 1000);
    engine.observe("dev", ref, 2000);
    CHECK(engine.inside_devices("keep").size() == 1);
    CHECK(engine.inside_devices("drop").size() == 1);

    engine.replace_fences({occurrence_fence("keep", ref), occurrence_fence("fresh", ref)});
    CHECK(engine.inside_devices("keep").size() == 1);
    CHECK(engine.inside_devices("drop").empty());
    CHECK(engine.state_of("dev", "drop").phase == Phase::Outside);

    REQUIRE(engine.fences().size() == 2);
    CHECK(engine.fences()[0].id == "fresh");
    CHECK(engine.fences()[1].id == "keep");
}

TEST_CASE("sweep exits devices that went silent") {
    FenceEngine engine;
    const auto ref = occ({{"a", 1.0}});
    engine.add_fence(occurrence_fence("f", ref));
    engine.observe("dev", ref, 1000);
    engine.observe("dev", ref, 2000);
    REQUIRE(engine.inside_devices("f").size() == 1);

    CHECK(engine.sweep(100'000, 120'000).empty());
    REQUIRE(engine.inside_devices("f").size() == 1);

    const auto events = engine.sweep(125'000, 120'000);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == FenceEventKind::Exit);
    CHECK(events[0].t_unix_ms == 125'000);
    CHECK(engine.inside_devices("f").empty());

    CHECK(engine.sweep(300'000, 120'000).empty());
}

TEST_CASE("engine rejects out-of-order observations per device") {
    FenceEngine engine;
    const auto ref = occ({{"a", 1.0}});
    engine.add_fence(occurrence_fence("f", ref));
    engine.observe("dev", ref, 5000);
    CHECK_THROWS_AS(engine.observe("dev", ref, 4000), NonMonotoneTimeError);
    CHECK_NOTHROW(engine.observe("dev", ref, 5000));
    CHECK_NOTHROW(engine.observe("other", ref, 1000));
}
