// store.cpp - JSON-lines logs, rotation and snapshot recovery
#include "netfence/store.hpp"

#include <system_error>

#include "netfence/json_io.hpp"

namespace netfence {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<json> read_lines(const fs::path& path) {
    std::vector<json> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error&) {
            // A torn final line after an abrupt stop is expected; skip it.
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// EventLog
// ---------------------------------------------------------------------------

EventLog::EventLog(fs::path path, std::size_t rotate_bytes)
    : path_(std::move(path)), rotate_bytes_(rotate_bytes) {
    fs::create_directories(path_.parent_path().empty() ? "." : path_.parent_path());
    std::error_code ec;
    written_ = fs::exists(path_, ec) ? static_cast<std::size_t>(fs::file_size(path_, ec)) : 0;
    out_.open(path_, std::ios::app);
    if (!out_) throw ConfigError("cannot open log file: " + path_.string());
}

void EventLog::append(const json& record) {
    const std::string line = record.dump();
    std::lock_guard lock(mutex_);
    if (written_ > 0 && written_ + line.size() + 1 > rotate_bytes_) {
        out_.close();
        fs::path rotated = path_;
        rotated += ".1";
        std::error_code ec;
        fs::rename(path_, rotated, ec);
        out_.open(path_, std::ios::trunc);
        written_ = 0;
    }
    out_ << line << '\n';
    out_.flush();
    written_ += line.size() + 1;
}

std::vector<json> EventLog::read_all() const {
    fs::path rotated = path_;
    rotated += ".1";
    std::vector<json> out = read_lines(rotated);
    std::vector<json> current = read_lines(path_);
    out.insert(out.end(), current.begin(), current.end());
    return out;
}

// ---------------------------------------------------------------------------
// StateStore
// ---------------------------------------------------------------------------

StateStore::StateStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    log_.open(log_path(), std::ios::app);
    if (!log_) throw ConfigError("cannot open state log: " + log_path().string());
}

void StateStore::append(const json& record) {
    std::lock_guard lock(mutex_);
    log_ << record.dump() << '\n';
    log_.flush();
}

void StateStore::restore(Dispatcher& dispatcher) {
    std::ifstream snap(snapshot_path());
    if (snap) {
        std::string text((std::istreambuf_iterator<char>(snap)),
                         std::istreambuf_iterator<char>());
        if (!text.empty()) {
            const json j = json_io::parse_or_throw(text, snapshot_path().string());
            for (const auto& s : j.value("subscriptions", json::array())) {
                dispatcher.restore_subscription(json_io::subscription_from_json(s));
            }
            const json dedup = j.value("dedup", json::object());
            for (const auto& [key, t] : dedup.items()) {
                dispatcher.restore_dedup(key, t.get<std::int64_t>());
            }
            for (const auto& v : j.value("visits", json::array())) {
                dispatcher.restore_visit(v.at(0).get<std::string>(),
                                         v.at(1).get<std::string>());
            }
        }
    }

    for (const json& record : read_lines(log_path())) {
        const std::string op = record.value("op", "");
        if (op == "subscribe") {
            dispatcher.restore_subscription(
                json_io::subscription_from_json(record.at("sub")));
        } else if (op == "unsubscribe") {
            dispatcher.unsubscribe(record.at("topic_id").get<std::string>(),
                                   record.at("device").get<std::string>());
        } else if (op == "defunct") {
            Subscription defunct;
            bool found = false;
            for (const auto& s : dispatcher.subscriptions()) {
                if (s.topic_id == record.at("topic_id").get<std::string>() &&
                    s.device == record.at("device").get<std::string>()) {
                    defunct = s;
                    found = true;
                }
            }
            if (found) {
                defunct.defunct = true;
                dispatcher.restore_subscription(defunct);
            }
        } else if (op == "dedup") {
            dispatcher.restore_dedup(record.at("key").get<std::string>(),
                                     record.at("t_ms").get<std::int64_t>());
        } else if (op == "visit") {
            dispatcher.restore_visit(record.at("device").get<std::string>(),
                                     record.at("rule").get<std::string>());
        }
    }
}

void StateStore::record_subscribe(const Subscription& sub) {
    append(json{{"op", "subscribe"}, {"sub", json_io::to_json(sub)}});
}

void StateStore::record_unsubscribe(const std::string& topic_id, const std::string& device) {
    append(json{{"op", "unsubscribe"}, {"topic_id", topic_id}, {"device", device}});
}

void StateStore::record_defunct(const std::string& topic_id, const std::string& device) {
    append(json{{"op", "defunct"}, {"topic_id", topic_id}, {"device", device}});
}

void StateStore::record_dedup(const std::string& dedup_key, std::int64_t accepted_ms) {
    append(json{{"op", "dedup"}, {"key", dedup_key}, {"t_ms", accepted_ms}});
}

void StateStore::record_visit(const std::string& device, const std::string& rule_id) {
    append(json{{"op", "visit"}, {"device", device}, {"rule", rule_id}});
}

void StateStore::snapshot(const Dispatcher& dispatcher) {
    json subs = json::array();
    for (const auto& s : dispatcher.subscriptions()) subs.push_back(json_io::to_json(s));
    json dedup = json::object();
    for (const auto& [key, t] : dispatcher.dedup_entries()) dedup[key] = t;
    json visits = json::array();
    for (const auto& [device, rule] : dispatcher.visits()) {
        visits.push_back(json::array({device, rule}));
    }
    const json snap{{"subscriptions", std::move(subs)},
                    {"dedup", std::move(dedup)},
                    {"visits", std::move(visits)}};

    std::lock_guard lock(mutex_);
    const fs::path tmp = snapshot_path().string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw ConfigError("cannot write snapshot: " + tmp.string());
        out << snap.dump(2) << '\n';
    }
    fs::rename(tmp, snapshot_path());
    log_.close();
    log_.open(log_path(), std::ios::trunc);
}

}  // namespace netfence
