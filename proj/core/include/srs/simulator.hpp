#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "srs/geometry.hpp"
#include "srs/kernels.hpp"
#include "srs/rng.hpp"

namespace srs {

struct GeometryError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Throws GeometryError unless L >= 4 * max(r, R) and the kernels live in the torus dimension.
void validate_geometry(const TorusGeometry& geom, const KernelSet& kernels);

enum class EventKind { death, fission };

struct EventRecord {
    EventKind kind;
    double time;
    Vec subject;
    std::optional<std::pair<Vec, Vec>> offspring;
};

/// State of one realisation of the birth-death process on the torus.
///
/// Per-point death rates m(x) + sum_{y != x} a(x - y) are cached and kept in step with
/// the configuration; per-cell sums of those rates drive victim selection. Fission
/// is state-independent, so its total is |points| * <b>.
class SimState {
public:
    /// Empty state; points are added with add_point() or by init_poisson().
    SimState(KernelSet kernels, TorusGeometry geom, std::uint64_t seed);

    const KernelSet& kernels() const noexcept { return kernels_; }
    const TorusGeometry& geometry() const noexcept { return config_.geometry(); }
    const Configuration& config() const noexcept { return config_; }
    std::size_t size() const noexcept { return config_.size(); }
    double time() const noexcept { return time_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t event_count() const noexcept { return events_; }
    std::uint64_t death_count() const noexcept { return deaths_; }
    std::uint64_t fission_count() const noexcept { return fissions_; }
    Rng& rng() noexcept { return rng_; }

    /// Cached rate; throws std::out_of_range for an unknown id.
    double death_rate(std::size_t id) const;
    std::span<const double> death_rates() const noexcept { return rates_; }
    double total_death_rate() const noexcept { return total_death_; }
    double total_fission_rate() const noexcept { return static_cast<double>(size()) * fission_rate_; }
    double total_rate() const noexcept { return total_death_rate() + total_fission_rate(); }

    /// Recomputes m(x) + sum a over the cell list, without touching the cache.
    double compute_death_rate(std::size_t id) const;

    std::size_t add_point(const Vec& p);
    void remove_point(std::size_t id);

    /// Draws the waiting time to the next event, Exp(total_rate()). Rates are not
    /// modified. Returns +inf when no event is possible.
    double draw_waiting_time();

    /// One Gillespie event at the current rates. Returns nullopt in an absorbing state
    /// (extinct population, or all rates zero); the clock is then left unchanged.
    std::optional<EventRecord> step();

    /// Applies a pre-drawn event at time t (used by run() to draw the clock first).
    EventRecord apply_event(double t);

    void set_time(double t) noexcept { time_ = t; }

    /// Rebuilds every cached rate and aggregate from scratch.
    void rebuild_caches();
    /// Largest relative difference between cached and freshly computed rates
    /// (per point and for the total).
    double cache_drift() const;

private:
    void add_rate_to_cell(std::size_t cell, double delta) noexcept;
    std::size_t select_death_victim();

    KernelSet kernels_;
    Configuration config_;
    double fission_rate_;
    double competition_range_;
    bool has_competition_;
    std::vector<double> rates_;
    std::vector<double> cell_rates_;
    double total_death_ = 0.0;
    double time_ = 0.0;
    std::uint64_t seed_;
    Rng rng_;
    std::uint64_t events_ = 0;
    std::uint64_t deaths_ = 0;
    std::uint64_t fissions_ = 0;
};

/// N ~ Poisson(kappa L^d) points placed independently and uniformly; t = 0.
SimState init_poisson(double kappa, const KernelSet& kernels, const TorusGeometry& geom, std::uint64_t seed);

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<double> snapshot_times;
    /// One configuration per snapshot time. After extinction the remaining slots hold
    /// the empty configuration, so the list always has snapshot_times.size() entries.
    std::vector<Configuration> snapshots;
    bool extinct = false;
    double extinction_time = 0.0;
    double final_time = 0.0;
    std::uint64_t events = 0;
    std::uint64_t deaths = 0;
    std::uint64_t fissions = 0;
};

inline constexpr std::uint64_t kCacheRebuildInterval = std::uint64_t{1} << 16;

/// Advances `state` until t >= horizon or absorption, recording a copy of the
/// configuration at each snapshot time. Throws std::invalid_argument if snapshot_times
/// are unsorted or exceed the horizon.
RunResult run(SimState& state, double horizon, std::span<const double> snapshot_times);

struct ReplicaSpec {
    KernelSet kernels;
    TorusGeometry geometry;
    double kappa;
    double horizon;
    std::vector<double> snapshot_times;
};

/// Independent replicas; replica i uses stream i of the family rooted at `seed`.
/// Results are ordered by replica id whatever the number of worker threads.
std::vector<RunResult> run_replicas(const ReplicaSpec& spec, std::size_t replicas, std::uint64_t seed,
                                    unsigned jobs = 1);

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) noexcept;

}  // namespace srs
