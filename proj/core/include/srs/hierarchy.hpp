#pragma once

#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "srs/kernels.hpp"

namespace srs {

/// Rates entering the first-order (mean-field) truncation.
struct MeanFieldParams {
    double fission_rate = 0.0;          // <b>
    double mortality = 0.0;             // m
    double competition_integral = 0.0;  // A = int a

    /// Requires a constant mortality field.
    static MeanFieldParams from(const KernelSet& kernels);
};

/// du/dt = (<b> - m) u - A u^2.
inline double mean_field_rhs(double u, const MeanFieldParams& p) noexcept {
    return (p.fission_rate - p.mortality) * u - p.competition_integral * u * u;
}

/// u* = (<b> - m) / A. Throws std::domain_error unless <b> > m and A > 0.
double carrying_capacity(const MeanFieldParams& p);

/// Closed-form solution of the mean-field equation from u(0) = u0.
double logistic_solution(double u0, const MeanFieldParams& p, double t) noexcept;

struct Trajectory {
    std::vector<double> t;
    std::vector<double> u;
};

/// Adaptive Dormand-Prince integration. Without output times, 101 evenly spaced
/// samples over [0, horizon] are returned. Throws std::invalid_argument for
/// horizon <= 0 or u0 < 0.
Trajectory solve_mean_field(double u0, const MeanFieldParams& p, double horizon,
                            std::span<const double> output_times = {}, double abs_tol = 1e-10,
                            double rel_tol = 1e-10);

enum class Closure { kirkwood, factorized };

std::string_view to_string(Closure c) noexcept;
Closure closure_from_string(std::string_view name);

struct PairGridSpec {
    double step = 0.05;
    double r_max = 4.0;
};

struct GridResolutionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct BlowUpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Density u and pair function g on the cell centres rho_j = (j + 1/2) h, j < N,
/// of a radial grid on [0, r_max]. Beyond r_max, g = u^2.
struct PairState {
    double u = 0.0;
    std::vector<double> g;
};

struct PairDerivative {
    double du = 0.0;
    std::vector<double> dg;
};

/// Second-order truncation of the correlation-function evolution for the
/// delta-decomposition kernel in the translation-invariant, isotropic setting.
///
/// With h = g - u^2 and I3 the third-order competition term,
///   du/dt    = (<b> - m) u - int a g
///   dg/dt(x) = 2 u beta(x) + 2 (beta * g)(x) - 2 (m + a(x)) g(x) - 2 I3(x)
///   I3(x)    = int a(y) k3(0, x, y) dy, k3 closed by
///     kirkwood:   k3 = g(x) g(y) g(x - y) / u^3
///     factorized: k3 = u (g(x) + g(y) + g(x - y)) - 2 u^3
/// Convolutions act on h, so the Poisson part u^2 is integrated exactly. The outermost
/// node is pinned to u^2.
class PairModel {
public:
    /// Throws GridResolutionError when h > min(r, R) / 20 or r_max < 2 (r + R), and
    /// std::invalid_argument for a product-density kernel or non-constant mortality.
    PairModel(const KernelSet& kernels, PairGridSpec grid, Closure closure);

    std::size_t nodes() const noexcept { return centers_.size(); }
    double step() const noexcept { return step_; }
    double r_max() const noexcept { return step_ * static_cast<double>(centers_.size()); }
    std::span<const double> centers() const noexcept { return centers_; }
    Closure closure() const noexcept { return closure_; }
    const MeanFieldParams& rates() const noexcept { return rates_; }

    PairState poisson_state(double u) const;
    PairDerivative rhs(const PairState& s) const;

    /// Shell-weighted average of node values whose centres fall in [lo, hi).
    double bin_average(std::span<const double> values, double lo, double hi) const;

private:
    double interpolate(std::span<const double> h, double rho) const noexcept;

    struct TripleTerm {
        std::size_t i;
        double weight;
        double s;
        double dist;
    };

    MeanFieldParams rates_;
    Closure closure_;
    int dim_;
    double step_;
    std::vector<double> centers_;
    std::vector<double> beta_at_;                // beta(rho_i)
    std::vector<double> a_at_;                   // a(rho_i)
    std::vector<double> a_weights_;              // q_j = int_{cell j} a dx
    std::vector<double> beta_conv_;              // row-major N x N
    std::vector<double> a_conv_;                 // row-major N x N
    std::vector<TripleTerm> triple_;             // quadrature of int a(y) h(y) h(x - y) dy
};

struct PairTrajectory {
    std::vector<double> t;
    std::vector<PairState> states;
};

/// Method-of-lines integration with adaptive Dormand-Prince. Throws BlowUpError when
/// any value exceeds 1e6 times the initial scale.
PairTrajectory solve_pair(const PairModel& model, const PairState& initial, double horizon,
                          std::span<const double> output_times = {}, double abs_tol = 1e-8, double rel_tol = 1e-8);

}  // namespace srs
