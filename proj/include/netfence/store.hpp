// store.hpp - append-only JSON-lines logs and snapshot persistence
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "netfence/dispatch.hpp"
#include "netfence/errors.hpp"

namespace netfence {

/// Append-only JSON-lines file with size-based rotation: when the active
/// file exceeds rotate_bytes it is renamed to "<name>.1" (replacing the
/// previous rotation) and a fresh file is started. Every append is flushed
/// so an abrupt stop loses at most the line being written.
class EventLog {
public:
    explicit EventLog(std::filesystem::path path, std::size_t rotate_bytes = 16 * 1024 * 1024);

    void append(const nlohmann::json& record);

    /// All parseable records, rotated file first, oldest to newest.
    std::vector<nlohmann::json> read_all() const;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::size_t rotate_bytes_;
    std::mutex mutex_;
    std::ofstream out_;
    std::size_t written_;
};

/// Durable dispatcher state: a snapshot JSON plus a change log replayed on
/// top of it. Subscriptions, accepted dedup keys and visit history survive
/// an abrupt stop; a graceful snapshot() folds the log into the snapshot.
class StateStore {
public:
    explicit StateStore(std::filesystem::path dir);

    /// Replays snapshot.json plus state.log into the dispatcher.
    void restore(Dispatcher& dispatcher);

    void record_subscribe(const Subscription& sub);
    void record_unsubscribe(const std::string& topic_id, const std::string& device);
    void record_defunct(const std::string& topic_id, const std::string& device);
    void record_dedup(const std::string& dedup_key, std::int64_t accepted_ms);
    void record_visit(const std::string& device, const std::string& rule_id);

    /// Writes the dispatcher's full state to snapshot.json and truncates the
    /// change log. Called on graceful shutdown.
    void snapshot(const Dispatcher& dispatcher);

    std::filesystem::path snapshot_path() const { return dir_ / "snapshot.json"; }
    std::filesystem::path log_path() const { return dir_ / "state.log"; }

private:
    void append(const nlohmann::json& record);

    std::filesystem::path dir_;
    std::mutex mutex_;
    std::ofstream log_;
};

}  // namespace netfence
