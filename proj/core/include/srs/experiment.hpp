#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>

#include "srs/config.hpp"

namespace srs {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_assertion = 3,
    exit_collision = 4,
};

struct OutputCollision : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommandOptions {
    std::optional<std::uint64_t> seed;  // overrides the config seed
    unsigned jobs = 1;
    bool force = false;
    bool assert_subpoisson = false;
    std::optional<std::filesystem::path> compare_dir;
    std::ostream* log = nullptr;  // progress messages; nullptr for silence
};

/// output.dir, resolved against $SRS_OUTPUT_ROOT (or the working directory) when relative.
std::filesystem::path resolve_output_dir(const ExperimentConfig& c);

/// Runs the replicas and writes manifest.json, snapshots.csv and events.csv.
/// Returns the run directory.
std::filesystem::path cmd_simulate(ExperimentConfig c, const CommandOptions& opts);

/// Reads a run directory and writes counts.csv, correlations.csv, timeseries.csv,
/// ftheta.csv, subpoisson.csv, ruelle.csv and kolmogorov.csv into it. Model and
/// geometry come from the run's manifest; observable settings from `settings` when
/// given. Returns exit_assertion when assert_subpoisson is set and any test fails.
int cmd_observe(const std::filesystem::path& run_dir, const std::optional<ExperimentConfig>& settings,
                const CommandOptions& opts);

/// Writes meanfield.csv, pair_u_<closure>.csv and pair_g_<closure>.csv, plus
/// comparison.csv when opts.compare_dir names a run directory.
std::filesystem::path cmd_hierarchy(ExperimentConfig c, const CommandOptions& opts);

/// simulate, observe, then hierarchy compared against the fresh run.
int cmd_full(ExperimentConfig c, const CommandOptions& opts);

}  // namespace srs
