#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace srs {

/// Welford accumulator.
class RunningStats {
public:
    void add(double x) noexcept {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    /// Unbiased sample variance (0 for fewer than two samples).
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const noexcept { return std::sqrt(variance()); }
    /// Standard error of the mean.
    double se() const noexcept { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

Estimate mean_se(std::span<const double> xs);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

/// Ordinary least squares y = intercept + slope * x with the textbook slope SE.
LinearFit ols(std::span<const double> x, std::span<const double> y);

double normal_quantile(double p);
double student_t_quantile(double p, double dof);

/// Two-sided z for a confidence level, e.g. 0.95 -> 1.96.
inline double two_sided_z(double confidence) { return normal_quantile(0.5 + 0.5 * confidence); }

/// (lambda^n / n!) exp(-lambda), evaluated in log space.
double poisson_pmf(double lambda, long n) noexcept;

}  // namespace srs
