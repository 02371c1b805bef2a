// config.hpp - gateway configuration loading
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "json.hpp"
#include "netfence/errors.hpp"

namespace netfence {

/// Operational settings for the gateway. The salt arrives as raw bytes after
/// decoding; file paths are validated to exist at load time.
struct GatewayConfig {
    std::string salt;  // >= 16 bytes after decoding
    std::int64_t window_span_ms = 60'000;
    std::string fences_path;
    std::string rulebook_path;
    std::string topics_path;
    std::int64_t dedup_window_ms = 24LL * 3600 * 1000;
    std::int64_t staleness_sweep_ms = 120'000;
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::string data_dir;
    int utc_offset_min = 0;
};

/// Decodes an even-length hex string to bytes; throws ConfigError otherwise.
std::string decode_hex(const std::string& hex);

/// Environment lookup signature: returns empty string when unset.
using EnvLookup = std::function<std::string(const std::string&)>;

/// Builds a config from its JSON form. Salt comes from "salt_env" (a hex
/// string of >= 32 hex chars in that variable) or "salt_file" (raw bytes).
/// Paths in "fences"/"rules"/"topics"/"data_dir" are resolved relative to
/// base_dir and must exist (data_dir is created if missing).
GatewayConfig config_from_json(const nlohmann::json& j, const std::string& base_dir,
                               const EnvLookup& env);

/// Reads and parses a config file, using the real process environment.
GatewayConfig load_config_file(const std::string& path);

}  // namespace netfence
