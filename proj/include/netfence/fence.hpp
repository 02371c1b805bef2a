// fence.hpp - network fences with hysteresis over fingerprint closeness
#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "netfence/errors.hpp"
#include "netfence/fingerprint.hpp"

namespace netfence {

enum class Metric { MinMax, Euclidean, Tanimoto, Spearman };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);  // throws ConfigError on unknown names

/// A place defined by one reference fingerprint plus hysteresis parameters.
/// MinMax compares occurrence fingerprints; the other metrics compare signal
/// vectors. Construction validates reference/metric agreement, a non-empty
/// reference, and exit_threshold < enter_threshold.
struct NetworkFence {
    std::string id;
    Metric metric = Metric::MinMax;
    std::variant<OccurrenceFingerprint, SignalVector> reference;
    double enter_threshold = 0.7;
    double exit_threshold = 0.4;
    int confirm_count = 2;
    std::int64_t min_dwell_ms = 30'000;
    double euclid_scale_dbm = 30.0;  // D0 in closeness = exp(-d / D0)

    void validate() const;  // throws ConfigError
};

enum class Phase { Outside, Candidate, Inside };

struct ProximityState {
    std::string device;
    std::string fence;
    Phase phase = Phase::Outside;
    int candidate_count = 0;          // meaningful while Candidate
    std::int64_t inside_since_ms = 0; // meaningful while Inside
    bool dwell_emitted = false;
    std::int64_t last_t_ms = INT64_MIN;
    double last_closeness = 0.0;
};

enum class FenceEventKind { Enter, Exit, Dwell };

std::string fence_event_kind_name(FenceEventKind k);

struct FenceEvent {
    FenceEventKind kind = FenceEventKind::Enter;
    std::string device;
    std::string fence;
    std::int64_t t_unix_ms = 0;
    double closeness = 0.0;
};

/// Normalized closeness in [0,1] between a fence reference and an observation.
/// minmax: S(obs,ref)/S(ref,ref) clamped; tanimoto: 1 - d; euclidean:
/// exp(-d/D0); spearman: (rho+1)/2 over the common APs, 0 if fewer than 2.
/// Throws MetricMismatchError when the observation type does not fit the
/// fence metric.
double closeness(const NetworkFence& fence, const OccurrenceFingerprint& observation);
double closeness(const NetworkFence& fence, const SignalVector& observation);

struct StepResult {
    ProximityState state;
    std::vector<FenceEvent> events;
};

/// Advances one (device, fence) hysteresis state by one observation.
/// Outside -> Candidate at closeness >= enter_threshold, confirmed into
/// Inside (Enter) after confirm_count consecutive hits; any miss while
/// Candidate resets to Outside. Inside emits Exit at closeness <=
/// exit_threshold, else one Dwell when t - since first reaches min_dwell.
/// Throws NonMonotoneTimeError if t_ms goes backwards (equal is allowed).
StepResult step(ProximityState state, double closeness, std::int64_t t_ms,
                const NetworkFence& fence);

/// Registry of fences plus per-(device, fence) hysteresis state. All methods
/// are safe to call from multiple threads.
class FenceEngine {
public:
    /// Adds or replaces one fence definition, keeping any existing state.
    void add_fence(NetworkFence fence);

    /// Atomically swaps the registry. State is kept for fence ids that
    /// survive the swap and dropped for removed fences.
    void replace_fences(std::vector<NetworkFence> fences);

    /// Runs closeness + step against every fence whose metric accepts this
    /// observation type; returns emitted events in fence-id order.
    std::vector<FenceEvent> observe(const std::string& device,
                                    const OccurrenceFingerprint& observation, std::int64_t t_ms);
    std::vector<FenceEvent> observe(const std::string& device, const SignalVector& observation,
                                    std::int64_t t_ms);

    /// Injects closeness 0 at now_ms into every non-Outside state whose last
    /// update is older than stale_after_ms, emitting the resulting Exits.
    std::vector<FenceEvent> sweep(std::int64_t now_ms, std::int64_t stale_after_ms);

    std::vector<std::string> inside_devices(const std::string& fence_id) const;
    std::vector<NetworkFence> fences() const;
    ProximityState state_of(const std::string& device, const std::string& fence_id) const;

private:
    std::vector<FenceEvent> observe_impl(const std::string& device,
                                         const std::variant<OccurrenceFingerprint, SignalVector>& obs,
                                         std::int64_t t_ms);

    mutable std::mutex mutex_;
    std::map<std::string, NetworkFence> fences_;
    std::map<std::pair<std::string, std::string>, ProximityState> states_;
};

}  // namespace netfence
