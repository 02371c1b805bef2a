// sim.hpp - deterministic radio-world simulator for end-to-end testing
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "netfence/errors.hpp"
#include "netfence/fingerprint.hpp"
#include "netfence/tracker.hpp"

namespace netfence::sim {

/// A wireless node at a fixed 2-D position. rssi0 is the expected signal at
/// the 1 m reference distance. Tracker-flagged nodes also act as passive
/// probe-request sensors.
struct ApNode {
    ApId id{"ap"};
    std::string ssid;
    double x = 0.0;
    double y = 0.0;
    double rssi0 = -40.0;  // dBm at d0, plausible range [-60, -20]
    bool acts_as_tracker = false;

    void validate() const;  // throws ConfigError
};

/// Log-distance path loss with Gaussian shadowing:
/// rssi(d) = rssi0 - 10 n log10(max(d, 0.1) / d0) + N(0, sigma^2).
struct PathLossModel {
    double exponent = 2.5;
    double noise_sigma_db = 4.0;
    double detection_floor_dbm = -95.0;
    double d0_m = 1.0;

    void validate(const std::vector<ApNode>& aps) const;  // throws ConfigError
};

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double t_s = 0.0;
};

/// A simulated phone: a raw MAC, a piecewise-linear trajectory, and a fixed
/// probing cadence.
struct DevicePath {
    std::string mac;
    std::vector<Waypoint> waypoints;
    double probe_period_s = 3.0;

    void validate() const;  // throws ConfigError
};

struct Scenario {
    std::vector<ApNode> aps;
    std::vector<DevicePath> devices;
    PathLossModel model;
    double duration_s = 120.0;
    std::uint64_t seed = 42;
    std::int64_t start_unix_ms = 1'700'000'000'000;

    void validate() const;  // throws ConfigError
};

/// Deterministic Gaussian source (Box-Muller over mt19937_64). A sigma of 0
/// returns 0 without consuming randomness, so noise-free runs are exact.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}
    double gaussian(double sigma);

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// One noisy signal sample at a position, or nullopt when the result falls
/// below the detection floor. Exactly one Gaussian draw per call (none when
/// sigma is 0), keeping streams aligned regardless of detection outcomes.
std::optional<double> rssi_at(const ApNode& ap, double x, double y, const PathLossModel& model,
                              NoiseSource& noise);

/// Position along the path at time t_s: linear between waypoints, clamped to
/// the endpoints outside the waypoint span.
std::pair<double, double> position_at(const DevicePath& path, double t_s);

/// Generates the full probe-event stream: each device probes at t = k *
/// probe_period while t < duration; every tracker-flagged AP that detects
/// the probe reports one event. Events are time-ordered; identical seeds
/// give identical streams; devices on identical paths produce identical
/// streams up to the mac field.
std::vector<ProbeEvent> run_scenario(const Scenario& scenario);

/// Averages `samples` noisy scans at a fixed spot into the reference vector
/// (keyed by tracker id) used to define a fence. Throws EmptyWindowError if
/// no tracker ever detects the spot.
SignalVector record_reference(const std::vector<ApNode>& aps, double x, double y,
                              const PathLossModel& model, int samples, std::uint64_t seed);

}  // namespace netfence::sim
