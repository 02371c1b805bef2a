// sim.cpp - path-loss sampling and probe-event generation
#include "netfence/sim.hpp"

#include <algorithm>
#include <cmath>

namespace netfence::sim {

void ApNode::validate() const {
    if (rssi0 < -60.0 || rssi0 > -20.0) {
        throw ConfigError("ap '" + id.str() + "': rssi0 must lie in [-60, -20] dBm");
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw ConfigError("ap '" + id.str() + "': position must be finite");
    }
}

void PathLossModel::validate(const std::vector<ApNode>& aps) const {
    if (exponent <= 0.0) throw ConfigError("path-loss exponent must be positive");
    if (noise_sigma_db < 0.0) throw ConfigError("noise sigma must be >= 0");
    if (d0_m <= 0.0) throw ConfigError("reference distance must be positive");
    for (const auto& ap : aps) {
        if (detection_floor_dbm >= ap.rssi0) {
            throw ConfigError("detection floor must sit below rssi0 of ap '" + ap.id.str() +
                              "'");
        }
    }
}

void DevicePath::validate() const {
    canonicalize_mac(mac);
    if (waypoints.empty()) throw ConfigError("device path needs at least one waypoint");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        if (!std::isfinite(waypoints[i].x) || !std::isfinite(waypoints[i].y)) {
            throw ConfigError("waypoint positions must be finite");
        }
        if (i > 0 && waypoints[i].t_s <= waypoints[i - 1].t_s) {
            throw ConfigError("waypoint times must be strictly increasing");
        }
    }
    if (probe_period_s <= 0.0) throw ConfigError("probe_period must be positive");
}

void Scenario::validate() const {
    if (duration_s <= 0.0) throw ConfigError("scenario duration must be positive");
    for (const auto& ap : aps) ap.validate();
    model.validate(aps);
    for (const auto& d : devices) d.validate();
}

double NoiseSource::gaussian(double sigma) {
    if (sigma == 0.0) return 0.0;
    if (has_spare_) {
        has_spare_ = false;
        return spare_ * sigma;
    }
    std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);
    const double u1 = uni(rng_);
    const double u2 = uni(rng_);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle) * sigma;
}

std::optional<double> rssi_at(const ApNode& ap, double x, double y, const PathLossModel& model,
                              NoiseSource& noise) {
    const double dx = x - ap.x;
    const double dy = y - ap.y;
    const double d = std::max(std::sqrt(dx * dx + dy * dy), 0.1);
    const double rssi = ap.rssi0 - 10.0 * model.exponent * std::log10(d / model.d0_m) +
                        noise.gaussian(model.noise_sigma_db);
    if (rssi < model.detection_floor_dbm) return std::nullopt;
    return rssi;
}

std::pair<double, double> position_at(const DevicePath& path, double t_s) {
    const auto& wp = path.waypoints;
    if (t_s <= wp.front().t_s) return {wp.front().x, wp.front().y};
    if (t_s >= wp.back().t_s) return {wp.back().x, wp.back().y};
    for (std::size_t i = 1; i < wp.size(); ++i) {
        if (t_s <= wp[i].t_s) {
            const double span = wp[i].t_s - wp[i - 1].t_s;
            const double f = (t_s - wp[i - 1].t_s) / span;
            return {wp[i - 1].x + f * (wp[i].x - wp[i - 1].x),
                    wp[i - 1].y + f * (wp[i].y - wp[i - 1].y)};
        }
    }
    return {wp.back().x, wp.back().y};
}

std::vector<ProbeEvent> run_scenario(const Scenario& scenario) {
    scenario.validate();

    // Trackers sample in a fixed id order so noise draws line up across runs.
    std::vector<const ApNode*> trackers;
    for (const auto& ap : scenario.aps) {
        if (ap.acts_as_tracker) trackers.push_back(&ap);
    }
    std::sort(trackers.begin(), trackers.end(),
              [](const ApNode* a, const ApNode* b) { return a->id < b->id; });

    std::vector<ProbeEvent> events;
    for (const auto& device : scenario.devices) {
        // Every device draws from an identically seeded source: devices on
        // identical paths then see identical noise, and the mac never feeds
        // the generator.
        NoiseSource noise(scenario.seed);
        const std::string mac = canonicalize_mac(device.mac);
        for (double t_s = 0.0; t_s < scenario.duration_s; t_s += device.probe_period_s) {
            const auto [x, y] = position_at(device, t_s);
            const std::int64_t t_ms =
                scenario.start_unix_ms + static_cast<std::int64_t>(std::llround(t_s * 1000.0));
            for (const ApNode* tracker : trackers) {
                const auto rssi = rssi_at(*tracker, x, y, scenario.model, noise);
                if (!rssi) continue;
                ProbeEvent ev;
                ev.tracker = tracker->id.str();
                ev.mac = mac;
                ev.rssi = std::clamp(*rssi, -120.0, 0.0);
                ev.t_ms = t_ms;
                events.push_back(std::move(ev));
            }
        }
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const ProbeEvent& a, const ProbeEvent& b) { return a.t_ms < b.t_ms; });
    return events;
}

SignalVector record_reference(const std::vector<ApNode>& aps, double x, double y,
                              const PathLossModel& model, int samples, std::uint64_t seed) {
    if (samples < 1) throw ConfigError("record_reference needs at least one sample");
    for (const auto& ap : aps) ap.validate();
    model.validate(aps);

    std::vector<const ApNode*> trackers;
    for (const auto& ap : aps) {
        if (ap.acts_as_tracker) trackers.push_back(&ap);
    }
    std::sort(trackers.begin(), trackers.end(),
              [](const ApNode* a, const ApNode* b) { return a->id < b->id; });

    NoiseSource noise(seed);
    std::map<ApId, double> sums;
    std::map<ApId, int> counts;
    for (int s = 0; s < samples; ++s) {
        for (const ApNode* tracker : trackers) {
            const auto rssi = rssi_at(*tracker, x, y, model, noise);
            if (!rssi) continue;
            sums[tracker->id] += *rssi;
            counts[tracker->id] += 1;
        }
    }
    if (sums.empty()) throw EmptyWindowError("no tracker detects this position");

    SignalVector out;
    int total = 0;
    for (const auto& [ap, sum] : sums) {
        out.means.emplace(ap, sum / counts.at(ap));
        total += counts.at(ap);
    }
    out.sample_counts = counts;
    out.observation_count = total;
    return out;
}

}  // namespace netfence::sim
