// rules.hpp - proximity rule language: parser, printer, evaluator, linter
//
// Rule files are UTF-8 text with '#' line comments, one production per
// statement:
//
//   RULE coupon1: IF IS_VISIBLE('mycafe') AND FIRST_VISIT() THEN PRESENT coupon_msg
//
// Grammar (EBNF):
//   rulebook := { rule }
//   rule     := "RULE" ident ":" "IF" cond "THEN" "PRESENT" ident
//   cond     := or
//   or       := and { "OR" and }
//   and      := unary { "AND" unary }
//   unary    := "NOT" unary | "(" cond ")" | pred
//   pred     := "IS_VISIBLE" "(" string ")"
//             | "RSSI_IN" "(" string "," number "," number ")"
//             | "TIME_BETWEEN" "(" hhmm "," hhmm ")"
//             | "FIRST_VISIT" "(" ")"
//             | "CLIENT" "(" string ")"
//
// Strings are single-quoted with '' escaping a quote; numbers are signed
// integers (dBm); hhmm is 'HH:MM'. Precedence NOT > AND > OR, left
// associative, parentheses override.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "netfence/errors.hpp"
#include "netfence/fingerprint.hpp"

namespace netfence::rules {

class ParseError : public Error {
public:
    ParseError(int line, int column, std::string detail, std::vector<std::string> expected = {});
    int line;
    int column;
    std::vector<std::string> expected;
};

enum class CondKind { Visible, RssiIn, TimeBetween, FirstVisit, Client, And, Or, Not };

struct Condition;
using CondPtr = std::shared_ptr<const Condition>;

// One node of a condition tree. Leaf payload fields are only meaningful for
// the matching kind; And/Or use left+right, Not uses left.
struct Condition {
    CondKind kind = CondKind::Visible;
    std::string pattern;              // Visible, RssiIn, Client: glob pattern
    int rssi_lo = 0;                  // RssiIn, dBm
    int rssi_hi = 0;
    int start_min = 0;                // TimeBetween, minutes since midnight
    int end_min = 0;                  // start > end means an overnight window
    CondPtr left;
    CondPtr right;
};

CondPtr make_visible(std::string ssid_glob);
CondPtr make_rssi_in(std::string ssid_glob, int lo_dbm, int hi_dbm);
CondPtr make_time_between(int start_min, int end_min);
CondPtr make_first_visit();
CondPtr make_client(std::string id_glob);
CondPtr make_and(CondPtr left, CondPtr right);
CondPtr make_or(CondPtr left, CondPtr right);
CondPtr make_not(CondPtr child);

/// Action of a fired rule: an opaque reference into the content store plus
/// the payload bytes bound from it (empty until bound). Payloads above 4096
/// bytes are flagged by lint and rejected at dispatch.
struct ActionSpec {
    std::string message_id;
    std::string payload_template;
};

constexpr std::size_t kMaxPayloadBytes = 4096;
constexpr int kMaxConditionDepth = 32;

struct Rule {
    std::string id;
    CondPtr condition;
    ActionSpec action;
    bool enabled = true;
};

struct VisibleNet {
    std::string ssid;
    ApId ap;
    double rssi;  // dBm
};

/// Everything a rule may look at. `has_fired(device, rule_id)` answers
/// whether this rule already fired for this device; an empty function means
/// "never". Evaluation only reads; recording firings is the dispatcher's job.
struct EvaluationContext {
    std::vector<VisibleNet> visible;
    int clock_s = 0;  // seconds since local midnight
    std::string device;  // hashed device id
    std::function<bool(const std::string& device, const std::string& rule_id)> has_fired;
};

/// Parse exactly one rule; trailing content is an error.
Rule parse_rule(const std::string& text);

/// Parse a whole rule file (zero or more rules).
std::vector<Rule> parse_rulebook(const std::string& text);

/// Canonical text form; parse(print_rule(r)) reproduces the identical AST.
std::string print_rule(const Rule& rule);
std::string print_condition(const Condition& cond);

bool evaluate(const Rule& rule, const EvaluationContext& ctx);

/// Evaluate every enabled rule; returns fired (rule id, action) pairs in
/// ascending rule-id order. Pure: history is only read.
std::vector<std::pair<std::string, ActionSpec>> evaluate_all(const std::vector<Rule>& rules,
                                                             const EvaluationContext& ctx);

struct LintWarning {
    std::string rule_id;
    std::string message;
};

/// Flags duplicate ids, over-limit payloads, and double-negation style.
std::vector<LintWarning> lint_rulebook(const std::vector<Rule>& rules);

bool condition_equal(const Condition& a, const Condition& b);
bool rule_equal(const Rule& a, const Rule& b);
bool contains_first_visit(const Condition& cond);
int condition_depth(const Condition& cond);

/// Case-insensitive glob match with '*' wildcards. Both strings are decoded
/// as UTF-8 and case-folded per codepoint (ASCII plus Latin-1 letters), so
/// '*Café*' matches 'Old CAFÉ 12'.
bool glob_match(const std::string& pattern, const std::string& text);

/// "HH:MM" or "HH:MM:SS" -> seconds since midnight. Throws Error on bad input.
int parse_clock(const std::string& text);

}  // namespace netfence::rules
