#include "srs/observables.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <string>

namespace srs {

std::string_view to_string(ThetaShape s) noexcept {
    return s == ThetaShape::tophat_well ? "tophat-well" : "smooth-bump";
}

ThetaShape theta_shape_from_string(std::string_view name) {
    if (name == "tophat-well") return ThetaShape::tophat_well;
    if (name == "smooth-bump") return ThetaShape::smooth_bump;
    throw std::invalid_argument("unknown theta shape '" + std::string(name) + "' (expected tophat-well or smooth-bump)");
}

double smooth_bump_integral() noexcept {
    static const double value = [] {
        boost::math::quadrature::tanh_sinh<double> q;
        return q.integrate([](double t) { return std::exp(1.0 - 1.0 / (1.0 - t * t)); }, -1.0, 1.0);
    }();
    return value;
}

ThetaFunction::ThetaFunction(ThetaShape shape, Box support, double depth, int dim)
    : shape_(shape), support_(support), depth_(depth), dim_(dim) {
    if (!(depth > -1.0 && depth <= 0.0)) throw std::invalid_argument("theta depth must lie in (-1, 0]");
    if (dim != 1 && dim != 2) throw std::invalid_argument("theta dimension must be 1 or 2");
    for (int i = 0; i < dim; ++i)
        if (!(support.hi[i] > support.lo[i])) throw std::invalid_argument("theta support box is empty");
}

ThetaFunction ThetaFunction::zero(int dim) { return ThetaFunction(ThetaShape::tophat_well, Box::cube(0.0, 1.0, dim), 0.0, dim); }

double ThetaFunction::operator()(const Vec& x) const noexcept {
    if (depth_ == 0.0 || !support_.contains(x, dim_)) return 0.0;
    if (shape_ == ThetaShape::tophat_well) return depth_;
    double v = depth_;
    for (int i = 0; i < dim_; ++i) {
        const double c = 0.5 * (support_.lo[i] + support_.hi[i]);
        const double h = 0.5 * (support_.hi[i] - support_.lo[i]);
        const double t = (x[i] - c) / h;
        const double q = 1.0 - t * t;
        if (q <= 0.0) return 0.0;
        v *= std::exp(1.0 - 1.0 / q);
    }
    return v;
}

double ThetaFunction::integral() const noexcept {
    const double vol = support_.volume(dim_);
    if (shape_ == ThetaShape::tophat_well) return depth_ * vol;
    double v = depth_;
    for (int i = 0; i < dim_; ++i) v *= 0.5 * (support_.hi[i] - support_.lo[i]) * smooth_bump_integral();
    return v;
}

double f_theta(const Configuration& config, const ThetaFunction& theta) noexcept {
    if (theta.is_zero()) return 1.0;
    double f = 1.0;
    for (const Vec& x : config.points()) f *= 1.0 + theta(x);
    return f;
}

Estimate generator_on_f_theta(const Configuration& config, const ThetaFunction& theta, const KernelSet& kernels,
                              std::size_t mc_samples, Rng& rng) {
    if (theta.is_zero() || config.empty()) return {0.0, 0.0};
    const TorusGeometry& geom = config.geometry();
    const double F = f_theta(config, theta);
    const double b_total = fission_total_rate(kernels.fission);
    const auto& a = kernels.competition;
    const double reach = kernels.fission.offspring_reach();
    const bool delta = kernels.fission.form() == FissionForm::delta_decomposition;
    const int d = config.dim();

    double value = 0.0;
    double variance = 0.0;
    for (std::size_t id = 0; id < config.size(); ++id) {
        const Vec& x = config[id];
        const double tx = theta(x);
        if (tx != 0.0) {
            double rate = kernels.mortality(x);
            if (!a.is_zero()) {
                config.for_each_within(x, a.range(), [&](std::size_t j, const Vec& disp, double) {
                    if (j != id) rate += a(disp);
                });
            }
            // F(gamma \ x) - F(gamma)
            value += rate * F * (1.0 / (1.0 + tx) - 1.0);
        }
        if (b_total == 0.0 || mc_samples == 0) continue;
        if (tx == 0.0 && geom.distance_to_box(x, theta.support()) > reach) continue;
        RunningStats acc;
        for (std::size_t k = 0; k < mc_samples; ++k) {
            if (delta) {
                // F(gamma \ x u {x, x + xi}) - F(gamma) = F * theta(x + xi)
                const Vec xi = kernels.fission.profile().sample(rng);
                Vec y = x;
                for (int i = 0; i < d; ++i) y[i] += xi[i];
                acc.add(theta(geom.wrap(y)));
            } else {
                auto [y1, y2] = sample_offspring(kernels.fission, x, rng);
                const double ratio = (1.0 + theta(geom.wrap(y1))) * (1.0 + theta(geom.wrap(y2))) / (1.0 + tx);
                acc.add(ratio - 1.0);
            }
        }
        const double scale = b_total * F;
        value += scale * acc.mean();
        variance += scale * scale * acc.variance() / static_cast<double>(mc_samples);
    }
    return {value, std::sqrt(variance)};
}

double CountDistribution::frequency_se(std::size_t n) const noexcept {
    const double p = frequency(n);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(replicas));
}

double CountDistribution::mean() const noexcept {
    double s = 0.0;
    for (std::size_t n = 0; n < counts.size(); ++n) s += static_cast<double>(n) * static_cast<double>(counts[n]);
    return s / static_cast<double>(replicas);
}

double CountDistribution::variance() const noexcept {
    if (replicas < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (std::size_t n = 0; n < counts.size(); ++n) {
        const double dn = static_cast<double>(n) - m;
        s += dn * dn * static_cast<double>(counts[n]);
    }
    return s / static_cast<double>(replicas - 1);
}

double CountDistribution::var_to_mean() const noexcept {
    const double m = mean();
    return m > 0.0 ? variance() / m : std::numeric_limits<double>::quiet_NaN();
}

namespace {

std::size_t window_count(const Configuration& c, const Box& window) {
    std::size_t n = 0;
    if (window.volume(c.dim()) == 0.0) return 0;
    for (const Vec& x : c.points())
        if (window.contains(x, c.dim())) ++n;
    return n;
}

void add_count(CountDistribution& cd, std::size_t n) {
    if (cd.counts.size() <= n) cd.counts.resize(n + 1, 0);
    ++cd.counts[n];
    ++cd.replicas;
}

}  // namespace

CountDistribution count_distribution(std::span<const Configuration> snapshots, const Box& window) {
    if (snapshots.empty()) throw std::invalid_argument("count_distribution: empty replica set");
    CountDistribution cd;
    cd.window = window;
    cd.volume = window.volume(snapshots.front().dim());
    for (const auto& c : snapshots) add_count(cd, window_count(c, window));
    return cd;
}

CountDistribution count_distribution(std::span<const RunResult> runs, std::size_t index, const Box& window) {
    if (runs.empty()) throw std::invalid_argument("count_distribution: empty replica set");
    CountDistribution cd;
    cd.window = window;
    cd.volume = window.volume(runs.front().snapshots.at(index).dim());
    for (const auto& r : runs) add_count(cd, window_count(r.snapshots.at(index), window));
    return cd;
}

SubPoissonResult sub_poisson_test(const CountDistribution& cd, std::span<const double> kappa_grid, double confidence) {
    if (cd.replicas < 2) throw std::invalid_argument("sub_poisson_test: degenerate histogram (fewer than two replicas)");
    if (kappa_grid.empty()) throw std::invalid_argument("sub_poisson_test: empty kappa grid");
    const double z = two_sided_z(confidence);
    SubPoissonResult res;
    res.var_to_mean = cd.var_to_mean();
    res.void_probability = cd.frequency(0);

    double closest = std::numeric_limits<double>::infinity();
    for (double kappa : kappa_grid) {
        double worst = -std::numeric_limits<double>::infinity();
        long worst_n = -1;
        for (std::size_t n = 1; n < cd.counts.size(); ++n) {
            if (cd.counts[n] == 0) continue;
            const double p = cd.frequency(n);
            const double se = cd.frequency_se(n);
            const double pi = poisson_pmf(kappa * cd.volume, static_cast<long>(n));
            // standardised excess of the lower confidence limit over the bound
            const double excess = se > 0.0 ? (p - pi) / se - z : (p > pi ? 1.0 : -1.0);
            if (excess > worst) {
                worst = excess;
                worst_n = static_cast<long>(n);
            }
        }
        if (worst <= 0.0) {
            res.satisfied = true;
            res.kappa_min = kappa;
            res.worst_n = worst_n;
            res.worst_excess = worst_n < 0 ? 0.0 : worst;
            return res;
        }
        if (worst < closest) {
            closest = worst;
            res.worst_n = worst_n;
            res.worst_excess = worst;
        }
    }
    return res;
}

std::vector<double> default_kappa_grid(double k1, std::size_t points) {
    const double lo = k1 > 0.0 ? k1 : 1e-9;
    std::vector<double> grid(std::max<std::size_t>(points, 2));
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = lo * (1.0 + 3.0 * static_cast<double>(i) / static_cast<double>(grid.size() - 1));
    return grid;
}

double shell_volume(double lo, double hi, int dim) noexcept {
    if (dim == 1) return 2.0 * (hi - lo);
    return std::numbers::pi * (hi * hi - lo * lo);
}

namespace {

void check_edges(std::span<const double> edges, const TorusGeometry& geom) {
    if (edges.size() < 2) throw BinEdgeError("correlation bins: need at least two edges");
    if (edges.front() < 0.0) throw BinEdgeError("correlation bins: edges must be nonnegative");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) throw BinEdgeError("correlation bins: edges must be strictly increasing");
    if (edges.back() > 0.5 * geom.side())
        throw BinEdgeError("correlation bins: largest edge exceeds L/2 (minimal-image bias)");
}

template <typename Snapshot>
CorrelationEstimate correlate(std::size_t count, Snapshot&& snapshot, std::span<const double> edges) {
    if (count == 0) throw std::invalid_argument("estimate_correlations: empty snapshot set");
    const TorusGeometry geom = snapshot(0).geometry();
    check_edges(edges, geom);
    const int d = geom.dim();
    const double volume = geom.volume();
    const std::size_t bins = edges.size() - 1;
    std::vector<double> norm(bins);
    for (std::size_t b = 0; b < bins; ++b) norm[b] = volume * shell_volume(edges[b], edges[b + 1], d);
    const double rmax = edges.back();
    const double rmin = edges.front();

    RunningStats k1;
    std::vector<RunningStats> k2(bins);
    std::vector<double> pairs(bins);
    for (std::size_t s = 0; s < count; ++s) {
        const Configuration& c = snapshot(s);
        k1.add(static_cast<double>(c.size()) / volume);
        std::fill(pairs.begin(), pairs.end(), 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            c.for_each_within(c[i], rmax, [&](std::size_t j, const Vec&, double dd) {
                if (j == i) return;
                const double r = std::sqrt(dd);
                if (r < rmin || r >= rmax) return;
                const auto it = std::upper_bound(edges.begin(), edges.end(), r);
                pairs[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
            });
        }
        for (std::size_t b = 0; b < bins; ++b) k2[b].add(pairs[b] / norm[b]);
    }
    CorrelationEstimate ce;
    ce.k1 = {k1.mean(), k1.se()};
    ce.edges.assign(edges.begin(), edges.end());
    ce.k2.reserve(bins);
    for (const auto& s : k2) ce.k2.push_back({s.mean(), s.se()});
    ce.replicas = count;
    return ce;
}

}  // namespace

CorrelationEstimate estimate_correlations(std::span<const Configuration> snapshots, std::span<const double> edges) {
    return correlate(snapshots.size(), [&](std::size_t i) -> const Configuration& { return snapshots[i]; }, edges);
}

CorrelationEstimate estimate_correlations(std::span<const RunResult> runs, std::size_t index,
                                          std::span<const double> edges) {
    return correlate(runs.size(), [&](std::size_t i) -> const Configuration& { return runs[i].snapshots.at(index); },
                     edges);
}

RuelleDiagnostic ruelle_check(const CorrelationEstimate& ce, double budget) {
    RuelleDiagnostic r;
    r.k1 = ce.k1.value;
    r.budget = budget;
    double sup = 0.0, sup_se = 0.0;
    for (std::size_t b = 0; b < ce.bins(); ++b) {
        const double v = std::sqrt(std::max(0.0, ce.k2[b].value));
        if (v > sup) {
            sup = v;
            sup_se = v > 0.0 ? ce.k2[b].se / (2.0 * v) : 0.0;
            r.sup_bin = b;
        }
    }
    r.sup_sqrt_k2 = sup;
    if (r.k1 >= sup) {
        r.kappa_hat = r.k1;
        r.kappa_hat_se = ce.k1.se;
    } else {
        r.kappa_hat = sup;
        r.kappa_hat_se = sup_se;
    }
    r.satisfied = r.kappa_hat - 3.0 * r.kappa_hat_se <= budget;
    return r;
}

namespace {

// Three-point derivative weights at x[k] through x[i0], x[i0+1], x[i0+2].
std::array<double, 3> derivative_weights(double t0, double t1, double t2, double at) {
    // Lagrange basis derivatives evaluated at `at`.
    const double w0 = ((at - t1) + (at - t2)) / ((t0 - t1) * (t0 - t2));
    const double w1 = ((at - t0) + (at - t2)) / ((t1 - t0) * (t1 - t2));
    const double w2 = ((at - t0) + (at - t1)) / ((t2 - t0) * (t2 - t1));
    return {w0, w1, w2};
}

}  // namespace

std::vector<KolmogorovPoint> kolmogorov_residual(std::span<const RunResult> runs, const ThetaFunction& theta,
                                                 const KernelSet& kernels, std::span<const double> eval_times,
                                                 const KolmogorovOptions& options, Rng& rng) {
    if (runs.size() < std::max<std::size_t>(options.min_replicas, 2))
        throw InsufficientReplicas("kolmogorov_residual: " + std::to_string(runs.size()) + " replicas, need " +
                                   std::to_string(std::max<std::size_t>(options.min_replicas, 2)));
    const auto& times = runs.front().snapshot_times;
    if (times.size() < 3) throw std::invalid_argument("kolmogorov_residual: need at least three snapshot times");
    const double z = two_sided_z(options.confidence);

    std::vector<KolmogorovPoint> out;
    for (double t : eval_times) {
        const auto it = std::find_if(times.begin(), times.end(), [&](double s) { return std::fabs(s - t) <= 1e-12 * std::max(1.0, std::fabs(t)); });
        if (it == times.end()) throw std::invalid_argument("kolmogorov_residual: evaluation time is not a snapshot time");
        const auto k = static_cast<std::size_t>(it - times.begin());
        const std::size_t i0 = k == 0 ? 0 : (k + 1 == times.size() ? k - 2 : k - 1);
        const auto w = derivative_weights(times[i0], times[i0 + 1], times[i0 + 2], times[k]);

        RunningStats lhs, rhs, res;
        for (const auto& run : runs) {
            double deriv = 0.0;
            for (std::size_t j = 0; j < 3; ++j) deriv += w[j] * f_theta(run.snapshots.at(i0 + j), theta);
            const double g = generator_on_f_theta(run.snapshots.at(k), theta, kernels, options.mc_samples, rng).value;
            lhs.add(deriv);
            rhs.add(g);
            res.add(deriv - g);
        }
        KolmogorovPoint p;
        p.t = times[k];
        p.lhs = {lhs.mean(), lhs.se()};
        p.rhs = {rhs.mean(), rhs.se()};
        p.residual = {res.mean(), res.se()};
        p.consistent = std::fabs(p.residual.value) <= z * p.residual.se + 1e-12;
        out.push_back(p);
    }
    return out;
}

}  // namespace srs
