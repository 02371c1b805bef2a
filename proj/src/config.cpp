// config.cpp - config parsing, salt resolution and path checks
#include "netfence/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netfence/json_io.hpp"
#include "netfence/tracker.hpp"

namespace netfence {

namespace fs = std::filesystem;

std::string decode_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw ConfigError("hex string must have even length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw ConfigError("invalid hex character");
    };
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        out.push_back(static_cast<char>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
    }
    return out;
}

namespace {

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string resolve_existing(const std::string& base_dir, const std::string& path,
                             const char* what) {
    fs::path p(path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    if (!fs::exists(p)) {
        throw ConfigError(std::string(what) + " path does not exist: " + p.string());
    }
    return p.string();
}

std::string resolve_salt(const nlohmann::json& j, const std::string& base_dir,
                         const EnvLookup& env) {
    if (j.contains("salt_env")) {
        const std::string var = j["salt_env"].get<std::string>();
        const std::string hex = env(var);
        if (hex.empty()) throw ConfigError("salt environment variable " + var + " is not set");
        if (hex.size() < 32) {
            throw ConfigError("salt in " + var + " must be at least 32 hex chars");
        }
        return decode_hex(hex);
    }
    if (j.contains("salt_file")) {
        const std::string path =
            resolve_existing(base_dir, j["salt_file"].get<std::string>(), "salt file");
        return read_file_or_throw(path);
    }
    throw ConfigError("config needs 'salt_env' or 'salt_file'");
}

}  // namespace

GatewayConfig config_from_json(const nlohmann::json& j, const std::string& base_dir,
                               const EnvLookup& env) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    GatewayConfig cfg;
    cfg.salt = resolve_salt(j, base_dir, env);
    if (cfg.salt.size() < kMinSaltBytes) {
        throw ConfigError("salt must decode to at least 16 bytes");
    }

    auto number_or = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
        return j[key].get<double>();
    };
    cfg.window_span_ms = static_cast<std::int64_t>(number_or("window_span_s", 60.0) * 1000.0);
    cfg.dedup_window_ms =
        static_cast<std::int64_t>(number_or("dedup_window_h", 24.0) * 3600.0 * 1000.0);
    cfg.staleness_sweep_ms =
        static_cast<std::int64_t>(number_or("staleness_sweep_s", 120.0) * 1000.0);
    cfg.utc_offset_min = static_cast<int>(number_or("utc_offset_min", 0.0));
    if (cfg.window_span_ms <= 0) throw ConfigError("'window_span_s' must be positive");
    if (cfg.staleness_sweep_ms <= 0) throw ConfigError("'staleness_sweep_s' must be positive");
    if (cfg.dedup_window_ms < 0) throw ConfigError("'dedup_window_h' must be >= 0");

    for (const char* key : {"fences", "rules", "topics"}) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw ConfigError(std::string("config needs a '") + key + "' file path");
        }
    }
    cfg.fences_path = resolve_existing(base_dir, j["fences"].get<std::string>(), "fences");
    cfg.rulebook_path = resolve_existing(base_dir, j["rules"].get<std::string>(), "rules");
    cfg.topics_path = resolve_existing(base_dir, j["topics"].get<std::string>(), "topics");

    if (j.contains("listen")) {
        const std::string listen = j["listen"].get<std::string>();
        const auto colon = listen.rfind(':');
        if (colon == std::string::npos) throw ConfigError("'listen' must be host:port");
        cfg.listen_host = listen.substr(0, colon);
        try {
            cfg.listen_port = std::stoi(listen.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("'listen' port is not a number");
        }
        if (cfg.listen_port < 0 || cfg.listen_port > 65535) {
            throw ConfigError("'listen' port out of range");
        }
    }

    if (!j.contains("data_dir") || !j["data_dir"].is_string()) {
        throw ConfigError("config needs a 'data_dir' path");
    }
    fs::path data(j["data_dir"].get<std::string>());
    if (data.is_relative()) data = fs::path(base_dir) / data;
    fs::create_directories(data);
    cfg.data_dir = data.string();

    return cfg;
}

GatewayConfig load_config_file(const std::string& path) {
    const std::string text = read_file_or_throw(path);
    const nlohmann::json j = json_io::parse_or_throw(text, path);
    const std::string base = fs::path(path).parent_path().string();
    return config_from_json(j, base.empty() ? "." : base, [](const std::string& name) {
        const char* v = std::getenv(name.c_str());
        return v ? std::string(v) : std::string();
    });
}

}  // namespace netfence
