#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "srs/geometry.hpp"
#include "srs/kernels.hpp"
#include "srs/rng.hpp"
#include "srs/simulator.hpp"
#include "srs/stats.hpp"

namespace srs {

enum class ThetaShape { tophat_well, smooth_bump };

std::string_view to_string(ThetaShape s) noexcept;
ThetaShape theta_shape_from_string(std::string_view name);

/// Test function theta with values in (-1, 0] and compact support in a box.
///   tophat_well: depth on the box.
///   smooth_bump: depth * prod_i bump(t_i), bump(t) = exp(1 - 1 / (1 - t^2)), t_i the
///                coordinate rescaled to [-1, 1] across the box.
class ThetaFunction {
public:
    /// Throws std::invalid_argument unless -1 < depth <= 0 and the box is nonempty.
    ThetaFunction(ThetaShape shape, Box support, double depth, int dim);
    /// theta == 0.
    static ThetaFunction zero(int dim);

    ThetaShape shape() const noexcept { return shape_; }
    const Box& support() const noexcept { return support_; }
    double depth() const noexcept { return depth_; }
    int dim() const noexcept { return dim_; }
    bool is_zero() const noexcept { return depth_ == 0.0; }

    double operator()(const Vec& x) const noexcept;
    /// Integral of theta over R^d.
    double integral() const noexcept;

private:
    ThetaShape shape_;
    Box support_;
    double depth_;
    int dim_;
};

/// Integral of exp(1 - 1/(1 - t^2)) over [-1, 1].
double smooth_bump_integral() noexcept;

/// F^theta(gamma) = prod over points of (1 + theta(x)).
double f_theta(const Configuration& config, const ThetaFunction& theta) noexcept;

/// Poisson value exp(kappa * int theta).
inline double poisson_f_theta(double kappa, const ThetaFunction& theta) noexcept {
    return std::exp(kappa * theta.integral());
}

/// (L F^theta)(gamma): the death and competition sum exactly, the fission integral by
/// Monte Carlo with `mc_samples` offspring draws per contributing point. Only points
/// inside supp theta or within offspring reach of it are visited.
Estimate generator_on_f_theta(const Configuration& config, const ThetaFunction& theta, const KernelSet& kernels,
                              std::size_t mc_samples, Rng& rng);

struct CountDistribution {
    Box window;
    double volume = 0.0;
    /// counts[n] = number of replicas with exactly n points in the window.
    std::vector<std::size_t> counts;
    std::size_t replicas = 0;

    double frequency(std::size_t n) const noexcept {
        return n < counts.size() ? static_cast<double>(counts[n]) / static_cast<double>(replicas) : 0.0;
    }
    /// Binomial standard error of frequency(n).
    double frequency_se(std::size_t n) const noexcept;
    double mean() const noexcept;
    double variance() const noexcept;
    /// variance / mean (NaN for an all-empty window).
    double var_to_mean() const noexcept;
};

/// Empirical law of |gamma cap window| over the snapshots. Throws std::invalid_argument
/// for an empty snapshot set.
CountDistribution count_distribution(std::span<const Configuration> snapshots, const Box& window);
/// Same, reading snapshot `index` of every run.
CountDistribution count_distribution(std::span<const RunResult> runs, std::size_t index, const Box& window);

struct SubPoissonResult {
    bool satisfied = false;
    /// Smallest passing grid kappa (NaN when none passes).
    double kappa_min = std::numeric_limits<double>::quiet_NaN();
    /// Count with the largest standardised excess over the Poisson value, at kappa_min
    /// or, on failure, at the grid kappa that comes closest to passing (-1 if none).
    long worst_n = -1;
    double worst_excess = 0.0;
    double var_to_mean = std::numeric_limits<double>::quiet_NaN();
    double void_probability = 0.0;
};

/// Checks mu(n) <= pi_kappa(n) for every n >= 1: a count violates the bound when its
/// lower confidence limit (two-sided `confidence`) exceeds the Poisson probability.
/// n = 0 is excluded and reported separately as the void probability.
/// Throws std::invalid_argument for fewer than two replicas or an empty grid.
SubPoissonResult sub_poisson_test(const CountDistribution& cd, std::span<const double> kappa_grid,
                                  double confidence = 0.997);

/// `points` values evenly spanning [k1, 4 k1].
std::vector<double> default_kappa_grid(double k1, std::size_t points = 61);

struct CorrelationEstimate {
    Estimate k1;
    std::vector<double> edges;
    std::vector<Estimate> k2;
    std::size_t replicas = 0;

    std::size_t bins() const noexcept { return k2.size(); }
    /// k2(bin) / k1^2.
    double normalized_k2(std::size_t bin) const noexcept { return k2[bin].value / (k1.value * k1.value); }
};

struct BinEdgeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// k1 = mean N / L^d; k2(bin) = mean ordered-pair count with separation in
/// [lo, hi) / (L^d * shell volume). Standard errors are over snapshots.
/// Throws BinEdgeError for unsorted edges or edges beyond L/2.
CorrelationEstimate estimate_correlations(std::span<const Configuration> snapshots, std::span<const double> edges);
CorrelationEstimate estimate_correlations(std::span<const RunResult> runs, std::size_t index,
                                          std::span<const double> edges);

/// Volume of the shell lo <= |x| < hi in R^d.
double shell_volume(double lo, double hi, int dim) noexcept;

struct RuelleDiagnostic {
    double kappa_hat = 0.0;
    double kappa_hat_se = 0.0;
    double k1 = 0.0;
    double sup_sqrt_k2 = 0.0;
    std::size_t sup_bin = 0;
    double budget = std::numeric_limits<double>::infinity();
    bool satisfied = true;
};

/// kappa_hat = max(k1, sup_bins sqrt(k2)); satisfied unless kappa_hat exceeds the
/// budget by more than three standard errors.
RuelleDiagnostic ruelle_check(const CorrelationEstimate& ce,
                              double budget = std::numeric_limits<double>::infinity());

struct KolmogorovOptions {
    std::size_t mc_samples = 64;
    double confidence = 0.95;
    std::size_t min_replicas = 1000;
};

struct KolmogorovPoint {
    double t = 0.0;
    Estimate lhs;       // d/dt mu_t(F^theta), finite differences on snapshots
    Estimate rhs;       // mu_t(L F^theta)
    Estimate residual;  // lhs - rhs, paired per replica
    bool consistent = false;
};

struct InsufficientReplicas : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Compares the time derivative of the replica mean of F^theta with the replica mean
/// of L F^theta at each evaluation time. Every evaluation time must be a snapshot
/// time; the derivative uses the three-point (possibly non-uniform) stencil through
/// its neighbouring snapshots, one-sided at either end of the grid.
std::vector<KolmogorovPoint> kolmogorov_residual(std::span<const RunResult> runs, const ThetaFunction& theta,
                                                 const KernelSet& kernels, std::span<const double> eval_times,
                                                 const KolmogorovOptions& options, Rng& rng);

}  // namespace srs
