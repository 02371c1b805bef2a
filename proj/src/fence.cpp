// fence.cpp - closeness normalization and hysteresis state machine
#include "netfence/fence.hpp"

#include <algorithm>
#include <cmath>

namespace netfence {

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::MinMax:
            return "minmax";
        case Metric::Euclidean:
            return "euclidean";
        case Metric::Tanimoto:
            return "tanimoto";
        case Metric::Spearman:
            return "spearman";
    }
    throw ConfigError("unknown metric value");
}

Metric metric_from_name(const std::string& name) {
    if (name == "minmax") return Metric::MinMax;
    if (name == "euclidean") return Metric::Euclidean;
    if (name == "tanimoto") return Metric::Tanimoto;
    if (name == "spearman") return Metric::Spearman;
    throw ConfigError("unknown metric name: " + name);
}

std::string fence_event_kind_name(FenceEventKind k) {
    switch (k) {
        case FenceEventKind::Enter:
            return "enter";
        case FenceEventKind::Exit:
            return "exit";
        case FenceEventKind::Dwell:
            return "dwell";
    }
    throw ConfigError("unknown fence event kind");
}

void NetworkFence::validate() const {
    if (id.empty()) throw ConfigError("fence id must be non-empty");
    const bool wants_occurrence = metric == Metric::MinMax;
    const bool has_occurrence = std::holds_alternative<OccurrenceFingerprint>(reference);
    if (wants_occurrence != has_occurrence) {
        throw ConfigError("fence '" + id + "': metric " + metric_name(metric) +
                          (wants_occurrence ? " needs an occurrence fingerprint reference"
                                            : " needs a signal vector reference"));
    }
    const bool empty_ref = has_occurrence
                               ? std::get<OccurrenceFingerprint>(reference).fractions.empty()
                               : std::get<SignalVector>(reference).means.empty();
    if (empty_ref) throw ConfigError("fence '" + id + "': reference fingerprint is empty");
    if (!(exit_threshold < enter_threshold)) {
        throw ConfigError("fence '" + id + "': exit_threshold must be below enter_threshold");
    }
    if (enter_threshold < 0.0 || enter_threshold > 1.0 || exit_threshold < 0.0 ||
        exit_threshold > 1.0) {
        throw ConfigError("fence '" + id + "': thresholds must lie in [0,1]");
    }
    if (confirm_count < 1) throw ConfigError("fence '" + id + "': confirm_count must be >= 1");
    if (min_dwell_ms < 0) throw ConfigError("fence '" + id + "': min_dwell must be >= 0");
    if (euclid_scale_dbm <= 0.0) throw ConfigError("fence '" + id + "': scale must be positive");
}

// ---------------------------------------------------------------------------
// Closeness
// ---------------------------------------------------------------------------

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Restricts both signal vectors to their common APs and returns the rank
// correlation mapped onto [0,1]; fewer than 2 common APs means closeness 0.
double spearman_closeness(const SignalVector& a, const SignalVector& b) {
    std::map<ApId, double> ca;
    std::map<ApId, double> cb;
    for (const auto& [ap, mean] : a.means) {
        auto it = b.means.find(ap);
        if (it != b.means.end()) {
            ca.emplace(ap, mean);
            cb.emplace(ap, it->second);
        }
    }
    if (ca.size() < 2) return 0.0;
    SignalVector ra;
    SignalVector rb;
    ra.means = std::move(ca);
    rb.means = std::move(cb);
    const double rho = spearman_correlation(rank_transform(ra), rank_transform(rb));
    return clamp01((rho + 1.0) / 2.0);
}

}  // namespace

double closeness(const NetworkFence& fence, const OccurrenceFingerprint& observation) {
    if (fence.metric != Metric::MinMax) {
        throw MetricMismatchError("fence '" + fence.id + "' (" + metric_name(fence.metric) +
                                  ") cannot score an occurrence fingerprint");
    }
    const auto& ref = std::get<OccurrenceFingerprint>(fence.reference);
    const double self = minmax_similarity(ref, ref);
    if (self <= 0.0) return 0.0;
    return clamp01(minmax_similarity(observation, ref) / self);
}

double closeness(const NetworkFence& fence, const SignalVector& observation) {
    if (fence.metric == Metric::MinMax) {
        throw MetricMismatchError("fence '" + fence.id +
                                  "' (minmax) cannot score a signal vector");
    }
    const auto& ref = std::get<SignalVector>(fence.reference);
    switch (fence.metric) {
        case Metric::Euclidean:
            return clamp01(std::exp(-euclidean_distance(observation, ref) /
                                    fence.euclid_scale_dbm));
        case Metric::Tanimoto:
            return clamp01(1.0 - tanimoto_distance(observation, ref));
        case Metric::Spearman:
            return spearman_closeness(observation, ref);
        default:
            throw MetricMismatchError("unhandled metric");
    }
}

// ---------------------------------------------------------------------------
// Hysteresis state machine
// ---------------------------------------------------------------------------

StepResult step(ProximityState state, double closeness, std::int64_t t_ms,
                const NetworkFence& fence) {
    if (t_ms < state.last_t_ms) {
        throw NonMonotoneTimeError("fence '" + fence.id + "', device '" + state.device +
                                   "': timestamp went backwards");
    }

    StepResult out;
    auto emit = [&](FenceEventKind kind) {
        out.events.push_back({kind, state.device, state.fence, t_ms, closeness});
    };

    switch (state.phase) {
        case Phase::Outside:
            if (closeness >= fence.enter_threshold) {
                state.candidate_count = 1;
                if (state.candidate_count >= fence.confirm_count) {
                    state.phase = Phase::Inside;
                    state.inside_since_ms = t_ms;
                    state.dwell_emitted = false;
                    emit(FenceEventKind::Enter);
                } else {
                    state.phase = Phase::Candidate;
                }
            }
            break;
        case Phase::Candidate:
            if (closeness >= fence.enter_threshold) {
                ++state.candidate_count;
                if (state.candidate_count >= fence.confirm_count) {
                    state.phase = Phase::Inside;
                    state.inside_since_ms = t_ms;
                    state.dwell_emitted = false;
                    state.candidate_count = 0;
                    emit(FenceEventKind::Enter);
                }
            } else {
                state.phase = Phase::Outside;
                state.candidate_count = 0;
            }
            break;
        case Phase::Inside:
            if (closeness <= fence.exit_threshold) {
                state.phase = Phase::Outside;
                state.candidate_count = 0;
                state.dwell_emitted = false;
                emit(FenceEventKind::Exit);
            } else if (!state.dwell_emitted &&
                       t_ms - state.inside_since_ms >= fence.min_dwell_ms) {
                state.dwell_emitted = true;
                emit(FenceEventKind::Dwell);
            }
            break;
    }

    state.last_t_ms = t_ms;
    state.last_closeness = closeness;
    out.state = std::move(state);
    return out;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

void FenceEngine::add_fence(NetworkFence fence) {
    fence.validate();
    std::lock_guard lock(mutex_);
    fences_.insert_or_assign(fence.id, std::move(fence));
}

void FenceEngine::replace_fences(std::vector<NetworkFence> fences) {
    for (const auto& f : fences) f.validate();
    std::lock_guard lock(mutex_);
    std::map<std::string, NetworkFence> next;
    for (auto& f : fences) {
        const std::string id = f.id;
        next.insert_or_assign(id, std::move(f));
    }
    fences_ = std::move(next);
    for (auto it = states_.begin(); it != states_.end();) {
        if (fences_.count(it->first.second) == 0) {
            it = states_.erase(it);
        } else {
            ++it;
        }
    }
}

std::vector<FenceEvent> FenceEngine::observe_impl(
    const std::string& device, const std::variant<OccurrenceFingerprint, SignalVector>& obs,
    std::int64_t t_ms) {
    const bool is_occurrence = std::holds_alternative<OccurrenceFingerprint>(obs);
    std::lock_guard lock(mutex_);
    std::vector<FenceEvent> out;
    for (const auto& [id, fence] : fences_) {
        const bool wants_occurrence = fence.metric == Metric::MinMax;
        if (wants_occurrence != is_occurrence) continue;
        const double c = is_occurrence ? closeness(fence, std::get<OccurrenceFingerprint>(obs))
                                       : closeness(fence, std::get<SignalVector>(obs));
        auto [it, inserted] = states_.try_emplace({device, id});
        if (inserted) {
            it->second.device = device;
            it->second.fence = id;
        }
        StepResult r = step(std::move(it->second), c, t_ms, fence);
        it->second = std::move(r.state);
        out.insert(out.end(), r.events.begin(), r.events.end());
    }
    return out;
}

std::vector<FenceEvent> FenceEngine::observe(const std::string& device,
                                             const OccurrenceFingerprint& observation,
                                             std::int64_t t_ms) {
    return observe_impl(device, observation, t_ms);
}

std::vector<FenceEvent> FenceEngine::observe(const std::string& device,
                                             const SignalVector& observation, std::int64_t t_ms) {
    return observe_impl(device, observation, t_ms);
}

std::vector<FenceEvent> FenceEngine::sweep(std::int64_t now_ms, std::int64_t stale_after_ms) {
    std::lock_guard lock(mutex_);
    std::vector<FenceEvent> out;
    for (auto& [key, state] : states_) {
        if (state.phase == Phase::Outside) continue;
        if (now_ms - state.last_t_ms < stale_after_ms) continue;
        auto fit = fences_.find(key.second);
        if (fit == fences_.end()) continue;
        const std::int64_t t = std::max(now_ms, state.last_t_ms);
        StepResult r = step(std::move(state), 0.0, t, fit->second);
        state = std::move(r.state);
        out.insert(out.end(), r.events.begin(), r.events.end());
    }
    return out;
}

std::vector<std::string> FenceEngine::inside_devices(const std::string& fence_id) const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [key, state] : states_) {
        if (key.second == fence_id && state.phase == Phase::Inside) out.push_back(key.first);
    }
    return out;
}

std::vector<NetworkFence> FenceEngine::fences() const {
    std::lock_guard lock(mutex_);
    std::vector<NetworkFence> out;
    out.reserve(fences_.size());
    for (const auto& [id, fence] : fences_) out.push_back(fence);
    return out;
}

ProximityState FenceEngine::state_of(const std::string& device,
                                     const std::string& fence_id) const {
    std::lock_guard lock(mutex_);
    auto it = states_.find({device, fence_id});
    if (it != states_.end()) return it->second;
    ProximityState fresh;
    fresh.device = device;
    fresh.fence = fence_id;
    return fresh;
}

}  // namespace netfence
