// service.hpp - HTTP/JSON gateway around the pipeline
#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "netfence/config.hpp"
#include "netfence/pipeline.hpp"
#include "netfence/store.hpp"

namespace httplib {
class Server;
}

namespace netfence {

/// The long-running gateway: loads configuration artifacts, restores durable
/// state, serves the HTTP API, runs periodic staleness sweeps, and snapshots
/// on graceful stop.
class GatewayService {
public:
    GatewayService(GatewayConfig config, PushTransport& transport);
    ~GatewayService();

    /// Replaces the wall clock, for deterministic tests. Set before start().
    void set_clock(std::function<std::int64_t()> now_ms);

    /// Binds (port 0 picks a free one) and serves on a background thread.
    void start();

    /// Graceful stop: halts the sweeper and server, writes the snapshot.
    void stop();

    /// Abrupt-stop simulation for durability tests: halts threads without
    /// snapshotting, leaving only what already reached the logs.
    void crash_stop();

    int port() const { return port_; }
    Pipeline& pipeline() { return *pipeline_; }
    EventLog& event_log() { return *event_log_; }

    /// Reloads fences, rules and topics from the configured paths; throws on
    /// any error, leaving the running configuration untouched.
    void reload();

    std::vector<json_io::DeliveryRecord> deliveries_since(std::int64_t since_ms) const;

private:
    void load_artifacts();
    void register_routes();
    void record_dispatch_effects(const PipelineResult& result);
    void sweep_loop();
    void shutdown(bool snapshot);
    std::int64_t now_ms() const;

    GatewayConfig config_;
    PushTransport& transport_;
    std::function<std::int64_t()> clock_;
    std::unique_ptr<Pipeline> pipeline_;
    std::unique_ptr<StateStore> state_store_;
    std::unique_ptr<EventLog> event_log_;
    std::unique_ptr<httplib::Server> server_;

    mutable std::mutex deliveries_mutex_;
    std::vector<json_io::DeliveryRecord> deliveries_;

    std::thread server_thread_;
    std::thread sweep_thread_;
    std::mutex sweep_mutex_;
    std::condition_variable sweep_cv_;
    std::atomic<bool> running_{false};
    bool stopped_ = false;
    int port_ = 0;
};

}  // namespace netfence
