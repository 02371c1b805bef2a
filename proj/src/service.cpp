// service.cpp - HTTP/JSON gateway around the pipeline
#include "netfence/service.hpp"

#include <chrono>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "httplib.h"
#include "netfence/json_io.hpp"

namespace netfence {

namespace {

using nlohmann::json;

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void respond(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void respond_error(httplib::Response& res, int status, const std::string& message) {
    respond(res, status, json{{"error", message}});
}

/// Parses a request body. The parser's own message can quote body excerpts,
/// so failures map to a generic error: request bodies may hold raw MACs and
/// no endpoint may echo one.
json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error&) {
        throw ConfigError("malformed JSON body");
    }
}

}  // namespace

GatewayService::GatewayService(GatewayConfig config, PushTransport& transport)
    : config_(std::move(config)), transport_(transport) {
    clock_ = [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };

    Pipeline::Options options;
    options.salt = config_.salt;
    options.window_span_ms = config_.window_span_ms;
    options.dedup_window_ms = config_.dedup_window_ms;
    options.utc_offset_min = config_.utc_offset_min;
    pipeline_ = std::make_unique<Pipeline>(options, transport_);

    const std::filesystem::path data_dir(config_.data_dir);
    event_log_ = std::make_unique<EventLog>(data_dir / "events.log");
    state_store_ = std::make_unique<StateStore>(data_dir);

    load_artifacts();
    state_store_->restore(pipeline_->dispatcher());

    // Re-expose deliveries recorded before the last stop.
    for (const auto& record : event_log_->read_all()) {
        if (record.value("type", "") == "delivery") {
            deliveries_.push_back(json_io::delivery_record_from_json(record));
        }
    }
}

GatewayService::~GatewayService() {
    try {
        stop();
    } catch (...) {
        // Destruction must not throw; a failed snapshot leaves the log intact.
    }
}

void GatewayService::set_clock(std::function<std::int64_t()> now_ms) {
    clock_ = std::move(now_ms);
}

std::int64_t GatewayService::now_ms() const { return clock_(); }

void GatewayService::load_artifacts() {
    // Parse and cross-validate everything before touching the live pipeline,
    // so a bad file cannot leave a half-applied configuration.
    auto fences = json_io::fences_from_json(
        json_io::parse_or_throw(read_file_or_throw(config_.fences_path), config_.fences_path));
    auto rulebook = rules::parse_rulebook(read_file_or_throw(config_.rulebook_path));
    auto topics = json_io::topics_from_json(
        json_io::parse_or_throw(read_file_or_throw(config_.topics_path), config_.topics_path));

    std::set<std::string> fence_ids;
    for (const auto& f : fences) fence_ids.insert(f.id);
    std::set<std::string> rule_ids;
    for (const auto& r : rulebook) rule_ids.insert(r.id);
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

    pipeline_->load_fences(std::move(fences));
    pipeline_->load_rules(std::move(rulebook));
    pipeline_->load_topics(std::move(topics));
}

void GatewayService::reload() { load_artifacts(); }

std::vector<json_io::DeliveryRecord> GatewayService::deliveries_since(
    std::int64_t since_ms) const {
    std::lock_guard lock(deliveries_mutex_);
    std::vector<json_io::DeliveryRecord> out;
    for (const auto& rec : deliveries_) {
        if (rec.t_ms >= since_ms) out.push_back(rec);
    }
    return out;
}

void GatewayService::register_routes() {
    server_->Post("/v1/events", [this](const httplib::Request& req, httplib::Response& res) {
        json fence_events = json::array();
        json deliveries = json::array();
        int accepted = 0;
        int stale = 0;
        try {
            json body = parse_body(req.body);
            if (!body.is_array()) body = json::array({body});
            for (const auto& item : body) {
                const ProbeEvent event = json_io::probe_event_from_json(item);
                PipelineResult result;
                try {
                    result = pipeline_->process(event);
                } catch (const StaleEventError&) {
                    ++stale;  // late beyond the reorder tolerance: drop, keep going
                    continue;
                }
                ++accepted;
                for (const auto& fe : result.fence_events) {
                    json line = json_io::to_json(fe);
                    line["type"] = "fence_event";
                    event_log_->append(line);
                    fence_events.push_back(json_io::to_json(fe));
                }
                {
                    std::lock_guard lock(deliveries_mutex_);
                    for (const auto& rec : result.deliveries) {
                        json line = json_io::to_json(rec);
                        line["type"] = "delivery";
                        event_log_->append(line);
                        deliveries_.push_back(rec);
                        deliveries.push_back(json_io::to_json(rec));
                    }
                }
                record_dispatch_effects(result);
            }
            respond(res, 202, json{{"accepted", accepted},
                                   {"stale", stale},
                                   {"fence_events", fence_events},
                                   {"deliveries", deliveries}});
        } catch (const MalformedMacError&) {
            // The original message quotes the input; never echo it.
            respond_error(res, 400, "malformed mac address");
        } catch (const Error& e) {
            respond_error(res, 400, e.what());
        }
    });

    server_->Post("/v1/subscriptions", [this](const httplib::Request& req,
                                              httplib::Response& res) {
        try {
            const json body = parse_body(req.body);
            const std::string topic_id = body.at("topic_id").get<std::string>();
            const std::string device = body.at("device_id").get<std::string>();
            const std::string token = body.at("token").get<std::string>();
            bool existed = false;
            for (const auto& s : pipeline_->dispatcher().subscriptions()) {
                if (s.topic_id == topic_id && s.device == device) existed = true;
            }
            const Subscription sub = pipeline_->dispatcher().subscribe(topic_id, device, token);
            state_store_->record_subscribe(sub);
            respond(res, existed ? 200 : 201, json_io::to_json(sub));
        } catch (const UnknownTopicError& e) {
            respond_error(res, 404, e.what());
        } catch (const json::exception&) {
            respond_error(res, 400, "body must carry topic_id, device_id and token strings");
        } catch (const Error& e) {
            respond_error(res, 400, e.what());
        }
    });

    server_->Delete("/v1/subscriptions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
        try {
            const json body = parse_body(req.body);
            const std::string topic_id = body.at("topic_id").get<std::string>();
            const std::string device = body.at("device_id").get<std::string>();
            const bool removed = pipeline_->dispatcher().unsubscribe(topic_id, device);
            if (removed) state_store_->record_unsubscribe(topic_id, device);
            respond(res, 200, json{{"removed", removed}});
        } catch (const json::exception&) {
            respond_error(res, 400, "body must carry topic_id and device_id strings");
        } catch (const Error& e) {
            respond_error(res, 400, e.what());
        }
    });

    server_->Get(R"(/v1/fences/([^/]+)/devices)", [this](const httplib::Request& req,
                                                         httplib::Response& res) {
        const std::string fence_id = req.matches[1];
        bool known = false;
        for (const auto& f : pipeline_->engine().fences()) {
            if (f.id == fence_id) known = true;
        }
        if (!known) {
            respond_error(res, 404, "unknown fence: " + fence_id);
            return;
        }
        json devices = json::array();
        for (const auto& d : pipeline_->engine().inside_devices(fence_id)) devices.push_back(d);
        respond(res, 200, json{{"fence", fence_id}, {"devices", devices}});
    });

    server_->Get("/v1/deliveries", [this](const httplib::Request& req, httplib::Response& res) {
        std::int64_t since = 0;
        if (req.has_param("since")) {
            try {
                since = std::stoll(req.get_param_value("since"));
            } catch (const std::exception&) {
                respond_error(res, 400, "since must be an integer unix-ms timestamp");
                return;
            }
        }
        json records = json::array();
        for (const auto& rec : deliveries_since(since)) records.push_back(json_io::to_json(rec));
        respond(res, 200, json{{"deliveries", records}});
    });

    server_->Post("/v1/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
        try {
            reload();
            respond(res, 200, json{{"reloaded", true}});
        } catch (const Error& e) {
            respond_error(res, 400, e.what());
        }
    });

    server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            res.set_content(json{{"error", "no such endpoint"}}.dump(), "application/json");
        }
    });

    server_->set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                      std::exception_ptr) {
        respond_error(res, 500, "internal error");
    });
}

void GatewayService::record_dispatch_effects(const PipelineResult& result) {
    for (const auto& rec : result.deliveries) {
        if (rec.outcome != dispatch_outcome_name(DispatchOutcome::Sent)) continue;
        // Matches PushMessage::dedup_key(): device|kind:ref|content.
        state_store_->record_dedup(rec.device + "|" + rec.trigger + "|" + rec.content_id,
                                   rec.t_ms);
        const std::string rule_prefix = "rule:";
        if (rec.trigger.rfind(rule_prefix, 0) == 0) {
            const std::string rule_id = rec.trigger.substr(rule_prefix.size());
            if (pipeline_->dispatcher().has_fired(rec.device, rule_id)) {
                state_store_->record_visit(rec.device, rule_id);
            }
        }
    }
    if (result.report.defunct > 0) {
        for (const auto& s : pipeline_->dispatcher().subscriptions()) {
            if (s.defunct) state_store_->record_defunct(s.topic_id, s.device);
        }
    }
}

void GatewayService::start() {
    if (running_) return;
    server_ = std::make_unique<httplib::Server>();
    register_routes();

    if (config_.listen_port == 0) {
        port_ = server_->bind_to_any_port(config_.listen_host);
        if (port_ < 0) throw ConfigError("cannot bind to " + config_.listen_host);
    } else {
        if (!server_->bind_to_port(config_.listen_host, config_.listen_port)) {
            throw ConfigError("cannot bind to " + config_.listen_host + ":" +
                              std::to_string(config_.listen_port));
        }
        port_ = config_.listen_port;
    }

    running_ = true;
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    while (!server_->is_running()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    sweep_thread_ = std::thread([this] { sweep_loop(); });
}

void GatewayService::sweep_loop() {
    std::unique_lock lock(sweep_mutex_);
    while (running_) {
        sweep_cv_.wait_for(lock, std::chrono::milliseconds(config_.staleness_sweep_ms),
                           [this] { return !running_; });
        if (!running_) break;
        for (const auto& fe : pipeline_->sweep(now_ms(), config_.staleness_sweep_ms)) {
            json line = json_io::to_json(fe);
            line["type"] = "fence_event";
            event_log_->append(line);
        }
    }
}

void GatewayService::stop() { shutdown(true); }

void GatewayService::crash_stop() { shutdown(false); }

void GatewayService::shutdown(bool snapshot) {
    if (stopped_) return;
    stopped_ = true;
    const bool was_running = running_.exchange(false);
    if (was_running) {
        {
            std::lock_guard lock(sweep_mutex_);
        }
        sweep_cv_.notify_all();
        if (sweep_thread_.joinable()) sweep_thread_.join();
        server_->stop();
        if (server_thread_.joinable()) server_thread_.join();
    }
    // Graceful stops fold the change log into the snapshot even if start()
    // was never called; a simulated crash leaves only the logs behind.
    if (snapshot) state_store_->snapshot(pipeline_->dispatcher());
}

}  // namespace netfence
