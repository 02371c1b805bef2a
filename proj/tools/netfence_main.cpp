// netfence_main.cpp - command line entry: serve, sim, fingerprint, rules
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "netfence/config.hpp"
#include "netfence/json_io.hpp"
#include "netfence/rules.hpp"
#include "netfence/service.hpp"
#include "netfence/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;  // valid invocation, operation failed
constexpr int kExitUsage = 2;   // bad arguments or unparseable input

using nlohmann::json;

/// Input that failed to parse (JSON text, rule syntax): exit code 2.
struct UsageFailure {
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw netfence::ConfigError("cannot read file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw UsageFailure{path + ": " + e.what()};
    }
}

std::atomic<bool> g_stop{false};

void request_stop(int) { g_stop = true; }

/// Serve-mode transport: there is no push provider wired into this artifact,
/// so deliveries are acknowledged and logged to stdout.
class LoggingTransport : public netfence::PushTransport {
public:
    netfence::DeliveryStatus send(const std::string& registration_token,
                                  const std::string& payload) override {
        std::cout << "push token=" << registration_token << " bytes=" << payload.size()
                  << std::endl;
        return netfence::DeliveryStatus::Accepted;
    }
};

int run_serve(const std::string& config_path) {
    const netfence::GatewayConfig config = netfence::load_config_file(config_path);
    LoggingTransport transport;
    netfence::GatewayService service(config, transport);

    std::signal(SIGINT, request_stop);
    std::signal(SIGTERM, request_stop);
    service.start();
    std::cout << "netfence listening on " << config.listen_host << ":" << service.port()
              << std::endl;

    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    std::cout << "shutting down, writing snapshot" << std::endl;
    service.stop();
    return kExitOk;
}

int run_sim(const std::string& scenario_path, const std::string& out_path) {
    const netfence::sim::Scenario scenario =
        netfence::json_io::scenario_from_json(parse_json_file(scenario_path));
    const std::vector<netfence::ProbeEvent> events = netfence::sim::run_scenario(scenario);

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw netfence::ConfigError("cannot write file: " + out_path);
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    for (const auto& e : events) {
        out << netfence::json_io::to_json(e).dump() << "\n";
    }
    return kExitOk;
}

/// Scan logs are JSON lines; each line is one recording:
/// {"aps": [{"id": "...", "rssi": -47.0}, ...]}.
struct ScanLog {
    std::vector<std::set<netfence::ApId>> recordings;
    std::vector<std::pair<netfence::ApId, double>> samples;
};

ScanLog read_scan_log(const std::string& path) {
    std::istringstream lines(read_file(path));
    ScanLog log;
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw UsageFailure{path + ":" + std::to_string(line_no) + ": " + e.what()};
        }
        if (!j.is_object() || !j.contains("aps") || !j["aps"].is_array()) {
            throw UsageFailure{path + ":" + std::to_string(line_no) +
                               ": each recording needs an \"aps\" array"};
        }
        std::set<netfence::ApId> seen;
        for (const auto& ap : j["aps"]) {
            if (!ap.is_object() || !ap.contains("id") || !ap["id"].is_string() ||
                !ap.contains("rssi") || !ap["rssi"].is_number()) {
                throw UsageFailure{path + ":" + std::to_string(line_no) +
                                   ": aps entries need string \"id\" and numeric \"rssi\""};
            }
            netfence::ApId id(ap["id"].get<std::string>());
            seen.insert(id);
            log.samples.emplace_back(std::move(id), ap["rssi"].get<double>());
        }
        log.recordings.push_back(std::move(seen));
    }
    if (log.recordings.empty()) {
        throw netfence::EmptyInputError("no recordings in " + path);
    }
    return log;
}

int run_fingerprint_build(const std::string& scans_path, const std::string& kind,
                          const std::string& out_path) {
    const ScanLog log = read_scan_log(scans_path);
    json result;
    if (kind == "occurrence") {
        result = netfence::json_io::to_json(netfence::build_occurrence_fingerprint(log.recordings));
    } else {
        result = netfence::json_io::to_json(netfence::build_signal_vector(log.samples));
    }
    if (out_path.empty()) {
        std::cout << result.dump(2) << std::endl;
    } else {
        std::ofstream file(out_path, std::ios::binary);
        if (!file) throw netfence::ConfigError("cannot write file: " + out_path);
        file << result.dump(2) << "\n";
    }
    return kExitOk;
}

int run_fingerprint_compare(const std::string& a_path, const std::string& b_path) {
    const ScanLog a = read_scan_log(a_path);
    const ScanLog b = read_scan_log(b_path);

    const auto fa = netfence::build_occurrence_fingerprint(a.recordings);
    const auto fb = netfence::build_occurrence_fingerprint(b.recordings);
    const auto va = netfence::build_signal_vector(a.samples);
    const auto vb = netfence::build_signal_vector(b.samples);

    std::cout << "minmax_similarity: " << netfence::minmax_similarity(fa, fb) << "\n";
    std::cout << "euclidean_distance: " << netfence::euclidean_distance(va, vb) << "\n";
    std::cout << "tanimoto_distance: " << netfence::tanimoto_distance(va, vb) << "\n";

    // Spearman is defined over the shared access points, like the fence
    // closeness path: restrict both vectors before ranking.
    netfence::SignalVector ca;
    netfence::SignalVector cb;
    for (const auto& [ap, mean] : va.means) {
        auto it = vb.means.find(ap);
        if (it == vb.means.end()) continue;
        ca.means.emplace(ap, mean);
        cb.means.emplace(ap, it->second);
    }
    if (ca.means.size() < 2) {
        std::cout << "spearman: undefined (fewer than 2 shared access points)\n";
    } else {
        std::cout << "spearman: "
                  << netfence::spearman_correlation(netfence::rank_transform(ca),
                                                    netfence::rank_transform(cb))
                  << "\n";
    }
    return kExitOk;
}

int run_rules_check(const std::string& rulebook_path) {
    std::vector<netfence::rules::Rule> rulebook;
    try {
        rulebook = netfence::rules::parse_rulebook(read_file(rulebook_path));
    } catch (const netfence::rules::ParseError& e) {
        throw UsageFailure{rulebook_path + ":" + std::to_string(e.line) + ":" +
                           std::to_string(e.column) + ": " + e.what()};
    }
    const auto warnings = netfence::rules::lint_rulebook(rulebook);
    for (const auto& w : warnings) {
        std::cout << "warning: [" << w.rule_id << "] " << w.message << "\n";
    }
    if (!warnings.empty()) {
        std::cout << rulebook_path << ": " << warnings.size() << " warning(s)" << std::endl;
        return kExitDomain;
    }
    std::cout << rulebook_path << ": ok, " << rulebook.size() << " rule(s)" << std::endl;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netfence: Wi-Fi presence geofencing gateway"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "run the gateway service");
    std::string config_path;
    serve->add_option("--config", config_path, "gateway configuration file")
        ->required();

    auto* sim = app.add_subcommand("sim", "emit a scenario's probe events as JSON lines");
    std::string scenario_path;
    std::string sim_out;
    sim->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sim->add_option("--out", sim_out, "write events here instead of stdout");

    auto* fingerprint = app.add_subcommand("fingerprint", "build and compare fingerprints");
    fingerprint->require_subcommand(1);
    auto* fp_build = fingerprint->add_subcommand("build", "build a fingerprint from a scan log");
    std::string scans_path;
    std::string fp_kind = "occurrence";
    std::string fp_out;
    fp_build->add_option("scans", scans_path, "scan log (JSON lines)")->required();
    fp_build->add_option("--kind", fp_kind, "occurrence or signal")
        ->check(CLI::IsMember({"occurrence", "signal"}));
    fp_build->add_option("--out", fp_out, "write the fingerprint here instead of stdout");
    auto* fp_compare =
        fingerprint->add_subcommand("compare", "print every applicable metric for two scan logs");
    std::string a_path;
    std::string b_path;
    fp_compare->add_option("a", a_path, "first scan log")->required();
    fp_compare->add_option("b", b_path, "second scan log")->required();

    auto* rules_cmd = app.add_subcommand("rules", "rulebook utilities");
    rules_cmd->require_subcommand(1);
    auto* rules_check = rules_cmd->add_subcommand("check", "parse and lint a rulebook");
    std::string rulebook_path;
    rules_check->add_option("rulebook", rulebook_path, "rulebook file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*serve) return run_serve(config_path);
        if (*sim) return run_sim(scenario_path, sim_out);
        if (*fp_build) return run_fingerprint_build(scans_path, fp_kind, fp_out);
        if (*fp_compare) return run_fingerprint_compare(a_path, b_path);
        if (*rules_check) return run_rules_check(rulebook_path);
    } catch (const UsageFailure& e) {
        std::cerr << "error: " << e.message << std::endl;
        return kExitUsage;
    } catch (const netfence::Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitDomain;
    }
    return kExitUsage;
}
