#include "netfence/rules.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace netfence::rules {

namespace {

std::string format_parse_error(int line, int column, const std::string& detail,
                               const std::vector<std::string>& expected) {
    std::ostringstream os;
    os << "parse error at " << line << ":" << column << ": " << detail;
    if (!expected.empty()) {
        os << " (expected ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i) os << ", ";
            os << expected[i];
        }
        os << ")";
    }
    return os.str();
}

}  // namespace

ParseError::ParseError(int line_, int column_, std::string detail, std::vector<std::string> expected_)
    : Error(format_parse_error(line_, column_, detail, expected_)),
      line(line_),
      column(column_),
      expected(std::move(expected_)) {}

// ---------------------------------------------------------------------------
// Condition construction
// ---------------------------------------------------------------------------

namespace {

CondPtr make_node(Condition c) { return std::make_shared<const Condition>(std::move(c)); }

}  // namespace

CondPtr make_visible(std::string ssid_glob) {
    Condition c;
    c.kind = CondKind::Visible;
    c.pattern = std::move(ssid_glob);
    return make_node(std::move(c));
}

CondPtr make_rssi_in(std::string ssid_glob, int lo_dbm, int hi_dbm) {
    if (lo_dbm > hi_dbm) throw Error("RSSI_IN lower bound exceeds upper bound");
    Condition c;
    c.kind = CondKind::RssiIn;
    c.pattern = std::move(ssid_glob);
    c.rssi_lo = lo_dbm;
    c.rssi_hi = hi_dbm;
    return make_node(std::move(c));
}

CondPtr make_time_between(int start_min, int end_min) {
    Condition c;
    c.kind = CondKind::TimeBetween;
    c.start_min = start_min;
    c.end_min = end_min;
    return make_node(std::move(c));
}

CondPtr make_first_visit() {
    Condition c;
    c.kind = CondKind::FirstVisit;
    return make_node(std::move(c));
}

CondPtr make_client(std::string id_glob) {
    Condition c;
    c.kind = CondKind::Client;
    c.pattern = std::move(id_glob);
    return make_node(std::move(c));
}

CondPtr make_and(CondPtr left, CondPtr right) {
    Condition c;
    c.kind = CondKind::And;
    c.left = std::move(left);
    c.right = std::move(right);
    return make_node(std::move(c));
}

CondPtr make_or(CondPtr left, CondPtr right) {
    Condition c;
    c.kind = CondKind::Or;
    c.left = std::move(left);
    c.right = std::move(right);
    return make_node(std::move(c));
}

CondPtr make_not(CondPtr child) {
    Condition c;
    c.kind = CondKind::Not;
    c.left = std::move(child);
    return make_node(std::move(c));
}

// ---------------------------------------------------------------------------
// Glob matching over case-folded codepoints
// ---------------------------------------------------------------------------

namespace {

// Case fold for ASCII and the Latin-1 supplement letters; everything else
// passes through unchanged.
std::uint32_t fold_codepoint(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
    return cp;
}

// Decode UTF-8 into codepoints; an invalid byte is taken as its own
// codepoint so matching stays total over arbitrary input.
std::vector<std::uint32_t> decode_utf8(const std::string& s) {
    std::vector<std::uint32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        std::uint32_t cp = b0;
        if ((b0 & 0x80u) == 0) {
            len = 1;
        } else if ((b0 & 0xE0u) == 0xC0u) {
            len = 2;
            cp = b0 & 0x1Fu;
        } else if ((b0 & 0xF0u) == 0xE0u) {
            len = 3;
            cp = b0 & 0x0Fu;
        } else if ((b0 & 0xF8u) == 0xF0u) {
            len = 4;
            cp = b0 & 0x07u;
        } else {
            out.push_back(b0);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back(b0);
            ++i;
            continue;
        }
        bool valid = true;
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char bk = static_cast<unsigned char>(s[i + k]);
            if ((bk & 0xC0u) != 0x80u) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3Fu);
        }
        if (!valid) {
            out.push_back(b0);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::vector<std::uint32_t> decode_folded(const std::string& s) {
    auto cps = decode_utf8(s);
    for (auto& cp : cps) cp = fold_codepoint(cp);
    return cps;
}

}  // namespace

bool glob_match(const std::string& pattern, const std::string& text) {
    const auto p = decode_folded(pattern);
    const auto t = decode_folded(text);
    constexpr std::uint32_t kStar = '*';

    std::size_t pi = 0, ti = 0;
    std::size_t star = std::string::npos, star_t = 0;
    while (ti < t.size()) {
        if (pi < p.size() && p[pi] == kStar) {
            star = pi++;
            star_t = ti;
        } else if (pi < p.size() && p[pi] == t[ti]) {
            ++pi;
            ++ti;
        } else if (star != std::string::npos) {
            pi = star + 1;
            ti = ++star_t;
        } else {
            return false;
        }
    }
    while (pi < p.size() && p[pi] == kStar) ++pi;
    return pi == p.size();
}

int parse_clock(const std::string& text) {
    int h = 0, m = 0, s = 0;
    char extra = 0;
    int fields = std::sscanf(text.c_str(), "%d:%d:%d%c", &h, &m, &s, &extra);
    if (fields == 4) throw Error("bad clock value: " + text);
    if (fields < 2) throw Error("bad clock value: " + text);
    if (fields == 2) s = 0;
    if (h < 0 || h > 23 || m < 0 || m > 59 || s < 0 || s > 59) {
        throw Error("bad clock value: " + text);
    }
    return h * 3600 + m * 60 + s;
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok { Ident, String, Number, Colon, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::string text;  // ident name, string content (unescaped), or number
    long number = 0;
    int line = 1;
    int col = 1;
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::String: return "string";
        case Tok::Number: return "number";
        case Tok::Colon: return "':'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Comma: return "','";
        case Tok::End: return "end of input";
    }
    return "?";
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws_and_comments();
            Token t;
            t.line = line_;
            t.col = col_;
            if (eof()) {
                t.kind = Tok::End;
                out.push_back(t);
                return out;
            }
            const char c = peek();
            if (c == ':') {
                t.kind = Tok::Colon;
                advance();
            } else if (c == '(') {
                t.kind = Tok::LParen;
                advance();
            } else if (c == ')') {
                t.kind = Tok::RParen;
                advance();
            } else if (c == ',') {
                t.kind = Tok::Comma;
                advance();
            } else if (c == '\'') {
                t.kind = Tok::String;
                t.text = lex_string();
            } else if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
                t.kind = Tok::Number;
                t.text = lex_number(t);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.kind = Tok::Ident;
                t.text = lex_ident();
            } else {
                throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
            }
            out.push_back(std::move(t));
        }
    }

private:
    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws_and_comments() {
        while (!eof()) {
            const char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                return;
            }
        }
    }

    std::string lex_string() {
        const int line = line_, col = col_;
        advance();  // opening quote
        std::string out;
        while (true) {
            if (eof()) throw ParseError(line, col, "unterminated string");
            const char c = peek();
            if (c == '\'') {
                advance();
                if (!eof() && peek() == '\'') {  // '' escapes a literal quote
                    out.push_back('\'');
                    advance();
                    continue;
                }
                return out;
            }
            out.push_back(c);
            advance();
        }
    }

    std::string lex_number(Token& t) {
        const int line = line_, col = col_;
        std::string out;
        if (peek() == '-' || peek() == '+') {
            out.push_back(peek());
            advance();
        }
        bool any = false;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
            out.push_back(peek());
            advance();
            any = true;
        }
        if (!any) throw ParseError(line, col, "malformed number");
        try {
            t.number = std::stol(out);
        } catch (const std::out_of_range&) {
            throw ParseError(line, col, "number out of range");
        }
        return out;
    }

    std::string lex_ident() {
        std::string out;
        while (!eof()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                out.push_back(c);
                advance();
            } else {
                break;
            }
        }
        return out;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
    explicit Parser(const std::string& text) : tokens_(Lexer(text).run()) {}

    std::vector<Rule> rulebook() {
        std::vector<Rule> rules;
        while (!at(Tok::End)) rules.push_back(rule());
        return rules;
    }

    Rule single_rule() {
        Rule r = rule();
        if (!at(Tok::End)) {
            const Token& t = cur();
            throw ParseError(t.line, t.col, "trailing content after rule", {"end of input"});
        }
        return r;
    }

private:
    Rule rule() {
        expect_keyword("RULE");
        Rule r;
        r.id = expect(Tok::Ident, "rule id").text;
        expect(Tok::Colon, "':'");
        expect_keyword("IF");
        const Token& cond_tok = cur();
        r.condition = cond(0);
        if (condition_depth(*r.condition) > kMaxConditionDepth) {
            throw ParseError(cond_tok.line, cond_tok.col, "condition tree deeper than 32");
        }
        expect_keyword("THEN");
        expect_keyword("PRESENT");
        r.action.message_id = expect(Tok::Ident, "message id").text;
        return r;
    }

    CondPtr cond(int depth) { return parse_or(depth); }

    CondPtr parse_or(int depth) {
        guard(depth);
        CondPtr left = parse_and(depth);
        while (at_keyword("OR")) {
            next();
            left = make_or(std::move(left), parse_and(depth));
        }
        return left;
    }

    CondPtr parse_and(int depth) {
        CondPtr left = parse_unary(depth);
        while (at_keyword("AND")) {
            next();
            left = make_and(std::move(left), parse_unary(depth));
        }
        return left;
    }

    CondPtr parse_unary(int depth) {
        guard(depth);
        if (at_keyword("NOT")) {
            next();
            return make_not(parse_unary(depth + 1));
        }
        if (at(Tok::LParen)) {
            next();
            CondPtr inner = cond(depth + 1);
            expect(Tok::RParen, "')'");
            return inner;
        }
        return pred();
    }

    CondPtr pred() {
        const Token& t = cur();
        if (t.kind != Tok::Ident) {
            throw ParseError(t.line, t.col, "expected a condition",
                             {"IS_VISIBLE", "RSSI_IN", "TIME_BETWEEN", "FIRST_VISIT", "CLIENT",
                              "NOT", "'('"});
        }
        if (t.text == "IS_VISIBLE") {
            next();
            expect(Tok::LParen, "'('");
            std::string ssid = expect(Tok::String, "ssid pattern").text;
            expect(Tok::RParen, "')'");
            return make_visible(std::move(ssid));
        }
        if (t.text == "RSSI_IN") {
            next();
            expect(Tok::LParen, "'('");
            std::string ssid = expect(Tok::String, "ssid pattern").text;
            expect(Tok::Comma, "','");
            const Token lo = expect(Tok::Number, "low dBm bound");
            expect(Tok::Comma, "','");
            const Token hi = expect(Tok::Number, "high dBm bound");
            expect(Tok::RParen, "')'");
            if (lo.number > hi.number) {
                throw ParseError(lo.line, lo.col, "RSSI_IN lower bound exceeds upper bound");
            }
            return make_rssi_in(std::move(ssid), static_cast<int>(lo.number),
                                static_cast<int>(hi.number));
        }
        if (t.text == "TIME_BETWEEN") {
            next();
            expect(Tok::LParen, "'('");
            const Token start = expect(Tok::String, "start time 'HH:MM'");
            expect(Tok::Comma, "','");
            const Token end = expect(Tok::String, "end time 'HH:MM'");
            expect(Tok::RParen, "')'");
            return make_time_between(parse_hhmm(start), parse_hhmm(end));
        }
        if (t.text == "FIRST_VISIT") {
            next();
            expect(Tok::LParen, "'('");
            expect(Tok::RParen, "')'");
            return make_first_visit();
        }
        if (t.text == "CLIENT") {
            next();
            expect(Tok::LParen, "'('");
            std::string id = expect(Tok::String, "client id pattern").text;
            expect(Tok::RParen, "')'");
            return make_client(std::move(id));
        }
        throw ParseError(t.line, t.col, "unknown condition '" + t.text + "'",
                         {"IS_VISIBLE", "RSSI_IN", "TIME_BETWEEN", "FIRST_VISIT", "CLIENT", "NOT",
                          "'('"});
    }

    static int parse_hhmm(const Token& t) {
        const std::string& s = t.text;
        const bool ok = s.size() == 5 && std::isdigit(static_cast<unsigned char>(s[0])) &&
                        std::isdigit(static_cast<unsigned char>(s[1])) && s[2] == ':' &&
                        std::isdigit(static_cast<unsigned char>(s[3])) &&
                        std::isdigit(static_cast<unsigned char>(s[4]));
        if (!ok) throw ParseError(t.line, t.col, "bad time '" + s + "'", {"'HH:MM'"});
        const int h = (s[0] - '0') * 10 + (s[1] - '0');
        const int m = (s[3] - '0') * 10 + (s[4] - '0');
        if (h > 23 || m > 59) throw ParseError(t.line, t.col, "bad time '" + s + "'", {"'HH:MM'"});
        return h * 60 + m;
    }

    void guard(int depth) const {
        if (depth > kMaxConditionDepth) {
            const Token& t = cur();
            throw ParseError(t.line, t.col, "condition nesting deeper than 32");
        }
    }

    const Token& cur() const { return tokens_[pos_]; }
    void next() { ++pos_; }
    bool at(Tok k) const { return cur().kind == k; }
    bool at_keyword(const char* kw) const { return cur().kind == Tok::Ident && cur().text == kw; }

    const Token& expect(Tok k, const char* what) {
        if (!at(k)) {
            const Token& t = cur();
            throw ParseError(t.line, t.col,
                             std::string("expected ") + what + ", got " + describe(t), {what});
        }
        const Token& t = cur();
        next();
        return t;
    }

    void expect_keyword(const char* kw) {
        if (!at_keyword(kw)) {
            const Token& t = cur();
            throw ParseError(t.line, t.col,
                             std::string("expected ") + kw + ", got " + describe(t),
                             {kw});
        }
        next();
    }

    static std::string describe(const Token& t) {
        if (t.kind == Tok::Ident) return "'" + t.text + "'";
        if (t.kind == Tok::String) return "string";
        if (t.kind == Tok::Number) return "number " + t.text;
        return tok_name(t.kind);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

Rule parse_rule(const std::string& text) { return Parser(text).single_rule(); }

std::vector<Rule> parse_rulebook(const std::string& text) { return Parser(text).rulebook(); }

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

std::string escape_string(const std::string& s) {
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'') out += "''";
        else out.push_back(c);
    }
    out += "'";
    return out;
}

std::string format_hhmm(int minutes) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
    return buf;
}

int precedence(CondKind k) {
    switch (k) {
        case CondKind::Or: return 1;
        case CondKind::And: return 2;
        case CondKind::Not: return 3;
        default: return 4;
    }
}

void print_node(const Condition& c, int min_prec, std::string& out) {
    const int prec = precedence(c.kind);
    const bool parens = prec < min_prec;
    if (parens) out += "(";
    switch (c.kind) {
        case CondKind::Visible:
            out += "IS_VISIBLE(" + escape_string(c.pattern) + ")";
            break;
        case CondKind::RssiIn:
            out += "RSSI_IN(" + escape_string(c.pattern) + ", " + std::to_string(c.rssi_lo) + ", " +
                   std::to_string(c.rssi_hi) + ")";
            break;
        case CondKind::TimeBetween:
            out += "TIME_BETWEEN('" + format_hhmm(c.start_min) + "', '" + format_hhmm(c.end_min) +
                   "')";
            break;
        case CondKind::FirstVisit:
            out += "FIRST_VISIT()";
            break;
        case CondKind::Client:
            out += "CLIENT(" + escape_string(c.pattern) + ")";
            break;
        case CondKind::And:
            print_node(*c.left, 2, out);
            out += " AND ";
            print_node(*c.right, 3, out);  // right operand binds tighter: chains stay left-assoc
            break;
        case CondKind::Or:
            print_node(*c.left, 1, out);
            out += " OR ";
            print_node(*c.right, 2, out);
            break;
        case CondKind::Not:
            out += "NOT ";
            print_node(*c.left, 3, out);
            break;
    }
    if (parens) out += ")";
}

}  // namespace

std::string print_condition(const Condition& cond) {
    std::string out;
    print_node(cond, 0, out);
    return out;
}

std::string print_rule(const Rule& rule) {
    return "RULE " + rule.id + ": IF " + print_condition(*rule.condition) + " THEN PRESENT " +
           rule.action.message_id;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

bool eval_node(const Condition& c, const Rule& rule, const EvaluationContext& ctx) {
    switch (c.kind) {
        case CondKind::Visible:
            return std::any_of(ctx.visible.begin(), ctx.visible.end(),
                               [&](const VisibleNet& n) { return glob_match(c.pattern, n.ssid); });
        case CondKind::RssiIn:
            return std::any_of(ctx.visible.begin(), ctx.visible.end(), [&](const VisibleNet& n) {
                return glob_match(c.pattern, n.ssid) && n.rssi >= c.rssi_lo && n.rssi <= c.rssi_hi;
            });
        case CondKind::TimeBetween: {
            const int m = ctx.clock_s / 60;
            if (c.start_min <= c.end_min) return m >= c.start_min && m <= c.end_min;
            return m >= c.start_min || m <= c.end_min;  // overnight window
        }
        case CondKind::FirstVisit:
            return !(ctx.has_fired && ctx.has_fired(ctx.device, rule.id));
        case CondKind::Client:
            return glob_match(c.pattern, ctx.device);
        case CondKind::And:
            return eval_node(*c.left, rule, ctx) && eval_node(*c.right, rule, ctx);
        case CondKind::Or:
            return eval_node(*c.left, rule, ctx) || eval_node(*c.right, rule, ctx);
        case CondKind::Not:
            return !eval_node(*c.left, rule, ctx);
    }
    return false;
}

}  // namespace

bool evaluate(const Rule& rule, const EvaluationContext& ctx) {
    return eval_node(*rule.condition, rule, ctx);
}

std::vector<std::pair<std::string, ActionSpec>> evaluate_all(const std::vector<Rule>& rules,
                                                             const EvaluationContext& ctx) {
    std::vector<std::pair<std::string, ActionSpec>> fired;
    for (const Rule& r : rules) {
        if (!r.enabled) continue;
        if (evaluate(r, ctx)) fired.emplace_back(r.id, r.action);
    }
    std::sort(fired.begin(), fired.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return fired;
}

// ---------------------------------------------------------------------------
// Lint and tree helpers
// ---------------------------------------------------------------------------

namespace {

bool has_double_negation(const Condition& c) {
    if (c.kind == CondKind::Not && c.left->kind == CondKind::Not) return true;
    if (c.left && has_double_negation(*c.left)) return true;
    if (c.right && has_double_negation(*c.right)) return true;
    return false;
}

}  // namespace

std::vector<LintWarning> lint_rulebook(const std::vector<Rule>& rules) {
    std::vector<LintWarning> warnings;
    std::set<std::string> seen;
    for (const Rule& r : rules) {
        if (!seen.insert(r.id).second) {
            warnings.push_back({r.id, "duplicate rule id '" + r.id + "'"});
        }
        if (r.action.payload_template.size() > kMaxPayloadBytes) {
            warnings.push_back({r.id, "payload is " + std::to_string(r.action.payload_template.size()) +
                                          " bytes, over the 4096-byte push limit"});
        }
        if (has_double_negation(*r.condition)) {
            warnings.push_back({r.id, "double negation NOT NOT can be simplified"});
        }
    }
    return warnings;
}

bool condition_equal(const Condition& a, const Condition& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case CondKind::Visible:
        case CondKind::Client:
            return a.pattern == b.pattern;
        case CondKind::RssiIn:
            return a.pattern == b.pattern && a.rssi_lo == b.rssi_lo && a.rssi_hi == b.rssi_hi;
        case CondKind::TimeBetween:
            return a.start_min == b.start_min && a.end_min == b.end_min;
        case CondKind::FirstVisit:
            return true;
        case CondKind::Not:
            return condition_equal(*a.left, *b.left);
        case CondKind::And:
        case CondKind::Or:
            return condition_equal(*a.left, *b.left) && condition_equal(*a.right, *b.right);
    }
    return false;
}

bool rule_equal(const Rule& a, const Rule& b) {
    return a.id == b.id && a.enabled == b.enabled && a.action.message_id == b.action.message_id &&
           condition_equal(*a.condition, *b.condition);
}

bool contains_first_visit(const Condition& cond) {
    if (cond.kind == CondKind::FirstVisit) return true;
    if (cond.left && contains_first_visit(*cond.left)) return true;
    if (cond.right && contains_first_visit(*cond.right)) return true;
    return false;
}

int condition_depth(const Condition& cond) {
    int child = 0;
    if (cond.left) child = condition_depth(*cond.left);
    if (cond.right) child = std::max(child, condition_depth(*cond.right));
    return 1 + child;
}

}  // namespace netfence::rules
