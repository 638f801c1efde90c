#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srs/hierarchy.hpp"
#include "srs/kernels.hpp"
#include "srs/observables.hpp"

namespace srs {

/// Invalid or malformed configuration. `field()` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ProfileSpec {
    Shape shape = Shape::tophat;
    double range = 1.0;
    double amplitude = 0.0;

    friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

struct ThetaSpec {
    ThetaShape shape = ThetaShape::tophat_well;
    Vec lo{0.0, 0.0};
    Vec hi{1.0, 1.0};
    double depth = -0.5;

    ThetaFunction build(int dim) const { return ThetaFunction(shape, Box{lo, hi}, depth, dim); }
    friend bool operator==(const ThetaSpec&, const ThetaSpec&) = default;
};

enum class ClosureChoice { kirkwood, factorized, both };

struct ExperimentConfig {
    // model
    ProfileSpec competition{Shape::tophat, 1.0, 0.05};
    FissionForm fission_form = FissionForm::delta_decomposition;
    ProfileSpec dispersal{Shape::tophat, 1.0, 0.5};
    ProfileSpec offspring{Shape::tophat, 0.5, 1.0};
    double mortality = 0.2;
    // geometry
    int dim = 1;
    double side = 100.0;
    // initial state and schedule
    double kappa = 1.0;
    double horizon = 10.0;
    std::vector<double> snapshots{0.0, 5.0, 10.0};
    std::size_t replicas = 10;
    std::uint64_t seed = 1;
    // observables
    std::vector<double> windows{0.5, 1.0, 2.0};
    std::vector<double> bins{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0};
    std::vector<ThetaSpec> thetas;
    double confidence = 0.997;
    std::size_t mc_samples = 64;
    std::size_t min_replicas = 1000;
    double ruelle_budget = -1.0;  // <= 0: no budget
    // hierarchy
    ClosureChoice closure = ClosureChoice::kirkwood;
    double grid_step = 0.05;
    double r_max = 4.0;
    double hierarchy_horizon = 10.0;
    double output_step = 0.1;
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    // output
    std::string output_dir = "run";

    /// Throws ConfigError naming the first violated field.
    void validate() const;

    KernelSet kernels() const;
    TorusGeometry geometry() const { return TorusGeometry(dim, side); }
    std::vector<Closure> closures() const;
    /// Window of volume v: the cube [0, v^(1/d)]^d.
    Box window(double volume) const;
    std::vector<ThetaFunction> theta_functions() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::string_view to_string(ClosureChoice c) noexcept;

/// Parses `key = value` lines; `#` starts a comment. Unknown or repeated keys are
/// errors. Missing keys keep their defaults. The result is validated.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config: every key, fixed order, shortest round-trip numbers.
std::string serialize_config(const ExperimentConfig& c);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace srs
