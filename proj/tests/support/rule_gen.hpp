// rule_gen.hpp - random rule/condition/context generators for property tests
#pragma once

#include <random>
#include <string>
#include <vector>

#include "netfence/rules.hpp"

namespace testgen {

using namespace netfence::rules;

inline std::string random_pattern(std::mt19937& rng) {
    // Pool exercises globs, quote escaping, spaces and non-ASCII text.
    static const std::vector<std::string> pieces = {"a",  "b",   "cafe", "Caf\xc3\xa9", "*",
                                                    "x7", "' '", "net",  " ",           "''"};
    std::uniform_int_distribution<int> len(1, 4);
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) out += pieces[pick(rng)];
    return out;
}

inline CondPtr random_condition(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> kind(0, depth > 1 ? 7 : 4);
    switch (kind(rng)) {
        case 0:
            return make_visible(random_pattern(rng));
        case 1: {
            std::uniform_int_distribution<int> lo(-100, -40);
            const int l = lo(rng);
            std::uniform_int_distribution<int> hi(l, -20);
            return make_rssi_in(random_pattern(rng), l, hi(rng));
        }
        case 2: {
            std::uniform_int_distribution<int> minute(0, 24 * 60 - 1);
            return make_time_between(minute(rng), minute(rng));
        }
        case 3:
            return make_first_visit();
        case 4:
            return make_client(random_pattern(rng));
        case 5:
            return make_not(random_condition(rng, depth - 1));
        case 6:
            return make_and(random_condition(rng, depth - 1), random_condition(rng, depth - 1));
        default:
            return make_or(random_condition(rng, depth - 1), random_condition(rng, depth - 1));
    }
}

inline Rule random_rule(std::mt19937& rng, int index) {
    std::uniform_int_distribution<int> depth(1, 5);
    Rule r;
    r.id = "rule_" + std::to_string(index);
    r.condition = random_condition(rng, depth(rng));
    r.action.message_id = "msg_" + std::to_string(index % 7);
    return r;
}

inline EvaluationContext random_context(std::mt19937& rng) {
    static const std::vector<std::string> ssids = {"cafe", "Caf\xc3\xa9 Nord", "net a", "x7b", "zz"};
    std::uniform_int_distribution<int> n(0, 4);
    std::uniform_int_distribution<std::size_t> pick(0, ssids.size() - 1);
    std::uniform_real_distribution<double> rssi(-95.0, -25.0);
    std::uniform_int_distribution<int> clock(0, 24 * 3600 - 1);
    std::uniform_int_distribution<int> coin(0, 1);

    EvaluationContext ctx;
    const int count = n(rng);
    for (int i = 0; i < count; ++i) {
        ctx.visible.push_back(
            {ssids[pick(rng)], netfence::ApId("ap" + std::to_string(i)), rssi(rng)});
    }
    ctx.clock_s = clock(rng);
    ctx.device = coin(rng) ? "0123abcd0123abcd0123abcd0123abcd" : "ffff0000ffff0000ffff0000ffff0000";
    const bool fired = coin(rng) == 1;
    ctx.has_fired = [fired](const std::string&, const std::string&) { return fired; };
    return ctx;
}

}  // namespace testgen
