#include "srs/hierarchy.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "quadrature.hpp"

namespace srs {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kAngles = 32;

using detail::integrate_pieces;

std::vector<double> sample_times(double horizon, std::span<const double> output_times, bool& prepend_zero) {
    std::vector<double> times(output_times.begin(), output_times.end());
    if (times.empty()) {
        times.resize(101);
        for (std::size_t i = 0; i < times.size(); ++i) times[i] = horizon * static_cast<double>(i) / 100.0;
    }
    if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0 || times.back() > horizon * (1.0 + 1e-12))
        throw std::invalid_argument("output times must be sorted and lie in [0, horizon]");
    prepend_zero = times.front() > 0.0;
    if (prepend_zero) times.insert(times.begin(), 0.0);
    return times;
}

// Angular integral of f(|rho e - s w|) over the unit circle, restricted to directions
// where the distance is at most `range` (f vanishes beyond it).
double circle_integral(const RadialProfile& f, double rho, double s) {
    const double range = f.range();
    if (rho == 0.0 || s == 0.0) return 2.0 * kPi * f.at_radius(std::max(rho, s));
    const double c = (rho * rho + s * s - range * range) / (2.0 * rho * s);
    if (c >= 1.0) return 0.0;
    const double upper = c <= -1.0 ? kPi : std::acos(c);
    auto g = [&](double phi) {
        const double d2 = rho * rho + s * s - 2.0 * rho * s * std::cos(phi);
        return f.at_radius(std::sqrt(std::max(0.0, d2)));
    };
    return 2.0 * integrate_pieces(g, 0.0, upper, {});
}

// Weight of cell [lo, hi] in (f * h)(rho) for radial h that is constant on the cell.
double convolution_weight(const RadialProfile& f, int dim, double rho, double lo, double hi) {
    const double range = f.range();
    if (dim == 1) {
        auto k = [&](double s) { return f.at_radius(rho - s) + f.at_radius(rho + s); };
        return integrate_pieces(k, lo, hi, {rho - range, rho + range, range - rho, rho});
    }
    auto k = [&](double s) { return s * circle_integral(f, rho, s); };
    return detail::integrate_pieces_adaptive(k, lo, hi, {std::fabs(rho - range), rho + range, rho});
}

}  // namespace

MeanFieldParams MeanFieldParams::from(const KernelSet& kernels) {
    if (!kernels.mortality.is_constant())
        throw std::invalid_argument("mean-field truncation requires constant mortality");
    MeanFieldParams p;
    p.fission_rate = fission_total_rate(kernels.fission);
    p.mortality = kernels.mortality.m_star();
    p.competition_integral = srs::competition_integral(kernels.competition);
    return p;
}

double carrying_capacity(const MeanFieldParams& p) {
    const double growth = p.fission_rate - p.mortality;
    if (!(growth > 0.0) || !(p.competition_integral > 0.0))
        throw std::domain_error("carrying capacity needs <b> > m and A > 0");
    return growth / p.competition_integral;
}

double logistic_solution(double u0, const MeanFieldParams& p, double t) noexcept {
    const double r = p.fission_rate - p.mortality;
    const double A = p.competition_integral;
    if (r == 0.0) return u0 / (1.0 + A * u0 * t);
    const double e = std::exp(r * t);
    if (A == 0.0) return u0 * e;
    // r u0 e / (r + A u0 (e - 1)), rearranged to stay finite for large r t
    const double em = std::exp(-r * t);
    return r * u0 / (r * em + A * u0 * (1.0 - em));
}

Trajectory solve_mean_field(double u0, const MeanFieldParams& p, double horizon, std::span<const double> output_times,
                            double abs_tol, double rel_tol) {
    if (!(horizon > 0.0)) throw std::invalid_argument("hierarchy.horizon must be positive");
    if (!(u0 >= 0.0)) throw std::invalid_argument("initial density must be nonnegative");
    bool prepend = false;
    const auto times = sample_times(horizon, output_times, prepend);
    using State = std::array<double, 1>;
    State x{u0};
    Trajectory traj;
    auto sys = [&](const State& s, State& dsdt, double) { dsdt[0] = mean_field_rhs(s[0], p); };
    auto obs = [&](const State& s, double t) {
        traj.t.push_back(t);
        traj.u.push_back(s[0]);
    };
    auto stepper = odeint::make_dense_output(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), 1e-3, obs);
    if (prepend) {
        traj.t.erase(traj.t.begin());
        traj.u.erase(traj.u.begin());
    }
    return traj;
}

std::string_view to_string(Closure c) noexcept { return c == Closure::kirkwood ? "kirkwood" : "factorized"; }

Closure closure_from_string(std::string_view name) {
    if (name == "kirkwood") return Closure::kirkwood;
    if (name == "factorized") return Closure::factorized;
    throw std::invalid_argument("unknown closure '" + std::string(name) + "' (expected kirkwood or factorized)");
}

PairModel::PairModel(const KernelSet& kernels, PairGridSpec grid, Closure closure)
    : rates_(MeanFieldParams::from(kernels)), closure_(closure), dim_(kernels.dim()), step_(grid.step) {
    if (kernels.fission.form() != FissionForm::delta_decomposition)
        throw std::invalid_argument("pair dynamics supports the delta-decomposition fission kernel only");
    const double r = kernels.competition.range();
    const double R = kernels.fission.dispersal_range();
    if (!(grid.step > 0.0) || grid.step > std::min(r, R) / 20.0 * (1.0 + 1e-9))
        throw GridResolutionError("hierarchy.grid_step: must be positive and <= min(r, R)/20 = " +
                                  std::to_string(std::min(r, R) / 20.0));
    if (grid.r_max < 2.0 * (r + R) * (1.0 - 1e-12))
        throw GridResolutionError("hierarchy.r_max: must be >= 2 (r + R) = " + std::to_string(2.0 * (r + R)));

    const auto n = static_cast<std::size_t>(std::ceil(grid.r_max / grid.step - 1e-9));
    centers_.resize(n);
    for (std::size_t j = 0; j < n; ++j) centers_[j] = (static_cast<double>(j) + 0.5) * step_;

    const RadialProfile& a = kernels.competition.profile();
    const RadialProfile& beta = kernels.fission.profile();
    const double sphere = dim_ == 1 ? 2.0 : 2.0 * kPi;

    beta_at_.resize(n);
    a_at_.resize(n);
    a_weights_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        beta_at_[j] = beta.at_radius(centers_[j]);
        a_at_[j] = a.at_radius(centers_[j]);
        const double lo = static_cast<double>(j) * step_, hi = lo + step_;
        a_weights_[j] = integrate_pieces(
            [&](double s) { return sphere * (dim_ == 1 ? 1.0 : s) * a.at_radius(s); }, lo, hi, {r});
    }

    beta_conv_.assign(n * n, 0.0);
    a_conv_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double lo = static_cast<double>(j) * step_, hi = lo + step_;
            // cells farther than the kernel range contribute nothing
            const bool near_beta = lo <= centers_[i] + R && hi >= centers_[i] - R;
            const bool near_a = lo <= centers_[i] + r && hi >= centers_[i] - r;
            if (near_beta && beta.amplitude() > 0.0) beta_conv_[i * n + j] = convolution_weight(beta, dim_, centers_[i], lo, hi);
            if (near_a && a.amplitude() > 0.0)
                a_conv_[i * n + j] = convolution_weight(a, dim_, centers_[i], lo, hi);
        }
    }

    if (closure_ == Closure::kirkwood && a.amplitude() > 0.0) {
        // 4-point Gauss-Legendre per cell (split at r) times the direction average.
        static constexpr std::array<double, 4> gx{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                  0.8611363115940526};
        static constexpr std::array<double, 4> gw{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                  0.3478548451374538};
        for (std::size_t i = 0; i < n; ++i) {
            const double rho = centers_[i];
            for (std::size_t j = 0; j < n; ++j) {
                const double lo = static_cast<double>(j) * step_;
                const double hi = std::min(lo + step_, r);
                if (!(hi > lo)) break;
                for (std::size_t q = 0; q < gx.size(); ++q) {
                    const double s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[q];
                    const double base = 0.5 * (hi - lo) * gw[q] * a.at_radius(s) * (dim_ == 1 ? 1.0 : s);
                    if (base == 0.0) continue;
                    if (dim_ == 1) {
                        triple_.push_back({i, base, s, std::fabs(rho - s)});
                        triple_.push_back({i, base, s, rho + s});
                    } else {
                        for (int k = 0; k < kAngles; ++k) {
                            const double phi = (static_cast<double>(k) + 0.5) * kPi / kAngles;
                            const double dist =
                                std::sqrt(std::max(0.0, rho * rho + s * s - 2.0 * rho * s * std::cos(phi)));
                            triple_.push_back({i, base * 2.0 * kPi / kAngles, s, dist});
                        }
                    }
                }
            }
        }
    }
}

PairState PairModel::poisson_state(double u) const { return {u, std::vector<double>(nodes(), u * u)}; }

double PairModel::interpolate(std::span<const double> h, double rho) const noexcept {
    const double t = rho / step_ - 0.5;
    if (t <= 0.0) return h[0];
    const auto j = static_cast<std::size_t>(t);
    if (j >= h.size()) return 0.0;
    const double f = t - static_cast<double>(j);
    const double right = j + 1 < h.size() ? h[j + 1] : 0.0;
    return h[j] * (1.0 - f) + right * f;
}

PairDerivative PairModel::rhs(const PairState& s) const {
    const std::size_t n = nodes();
    if (s.g.size() != n) throw std::invalid_argument("pair state has the wrong number of grid nodes");
    const double u = s.u;
    const double u2 = u * u;
    const double b = rates_.fission_rate;
    const double m = rates_.mortality;
    const double A = rates_.competition_integral;

    std::vector<double> h(n);
    for (std::size_t j = 0; j < n; ++j) h[j] = s.g[j] - u2;

    double ah = 0.0;
    for (std::size_t j = 0; j < n; ++j) ah += a_weights_[j] * h[j];

    PairDerivative d;
    d.du = (b - m) * u - A * u2 - ah;
    d.dg.assign(n, 0.0);

    std::vector<double> triple(n, 0.0);
    if (closure_ == Closure::kirkwood)
        for (const auto& t : triple_) triple[t.i] += t.weight * interpolate(h, t.s) * interpolate(h, t.dist);

    for (std::size_t i = 0; i + 1 < n; ++i) {
        double beta_h = 0.0, a_h = 0.0;
        const double* wb = &beta_conv_[i * n];
        for (std::size_t j = 0; j < n; ++j) beta_h += wb[j] * h[j];
        const double* wa = &a_conv_[i * n];
        for (std::size_t j = 0; j < n; ++j) a_h += wa[j] * h[j];
        double third;
        if (closure_ == Closure::kirkwood) {
            third = u > 0.0 ? s.g[i] / (u2 * u) * (A * u2 * u2 + u2 * ah + u2 * a_h + triple[i]) : 0.0;
        } else {
            // u (A g + int a h + a * h): the three pair terms minus 2 u^3, integrated against a
            third = u * (A * s.g[i] + ah + a_h);
        }
        d.dg[i] = 2.0 * u * beta_at_[i] + 2.0 * (b * u2 + beta_h) - 2.0 * (m + a_at_[i]) * s.g[i] - 2.0 * third;
    }
    d.dg[n - 1] = 2.0 * u * d.du;
    return d;
}

double PairModel::bin_average(std::span<const double> values, double lo, double hi) const {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < nodes(); ++j) {
        if (centers_[j] < lo || centers_[j] >= hi) continue;
        const double a = static_cast<double>(j) * step_, c = a + step_;
        const double w = dim_ == 1 ? (c - a) : (c * c - a * a);
        num += w * values[j];
        den += w;
    }
    if (den == 0.0) throw std::invalid_argument("bin_average: no grid node inside the bin");
    return num / den;
}

PairTrajectory solve_pair(const PairModel& model, const PairState& initial, double horizon,
                          std::span<const double> output_times, double abs_tol, double rel_tol) {
    if (!(horizon > 0.0)) throw std::invalid_argument("hierarchy.horizon must be positive");
    if (initial.g.size() != model.nodes()) throw std::invalid_argument("pair state has the wrong number of grid nodes");
    bool prepend = false;
    const auto times = sample_times(horizon, output_times, prepend);
    const std::size_t n = model.nodes();

    double scale = std::max(1.0, std::fabs(initial.u));
    for (double v : initial.g) scale = std::max(scale, std::fabs(v));
    const double limit = 1e6 * scale;

    using State = std::vector<double>;
    State x(n + 1);
    x[0] = initial.u;
    std::copy(initial.g.begin(), initial.g.end(), x.begin() + 1);

    PairState work;
    work.g.resize(n);
    auto sys = [&](const State& st, State& dxdt, double t) {
        for (double v : st)
            if (!std::isfinite(v) || std::fabs(v) > limit)
                throw BlowUpError("pair dynamics blew up at t = " + std::to_string(t) + " (a value exceeds 1e6 x initial scale)");
        work.u = st[0];
        std::copy(st.begin() + 1, st.end(), work.g.begin());
        const PairDerivative d = model.rhs(work);
        dxdt[0] = d.du;
        std::copy(d.dg.begin(), d.dg.end(), dxdt.begin() + 1);
    };

    PairTrajectory traj;
    auto obs = [&](const State& st, double t) {
        traj.t.push_back(t);
        PairState ps;
        ps.u = st[0];
        ps.g.assign(st.begin() + 1, st.end());
        traj.states.push_back(std::move(ps));
    };
    auto stepper = odeint::make_dense_output(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), 1e-3, obs);
    if (prepend) {
        traj.t.erase(traj.t.begin());
        traj.states.erase(traj.states.begin());
    }
    return traj;
}

}  // namespace srs
