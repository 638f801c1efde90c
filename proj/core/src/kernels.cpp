#include "srs/kernels.hpp"

#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace srs {

namespace {

constexpr double kPi = std::numbers::pi;
using detail::integrate_pieces;

}  // namespace

std::string_view to_string(Shape s) noexcept {
    switch (s) {
        case Shape::tophat: return "tophat";
        case Shape::triangle: return "triangle";
        case Shape::truncated_bell: return "truncated-bell";
    }
    return "?";
}

Shape shape_from_string(std::string_view name) {
    if (name == "tophat") return Shape::tophat;
    if (name == "triangle") return Shape::triangle;
    if (name == "truncated-bell") return Shape::truncated_bell;
    throw std::invalid_argument("unknown kernel shape '" + std::string(name) +
                                "' (expected tophat, triangle or truncated-bell)");
}

RadialProfile::RadialProfile(Shape shape, double range, double amplitude, int dim)
    : shape_(shape), range_(range), amplitude_(amplitude), dim_(dim) {
    if (!(range > 0.0) || !std::isfinite(range)) throw std::invalid_argument("kernel range must be positive");
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
        throw std::invalid_argument("kernel amplitude must be nonnegative");
    if (dim != 1 && dim != 2) throw std::invalid_argument("kernel dimension must be 1 or 2");
}

double RadialProfile::at_radius(double rho) const noexcept {
    rho = std::fabs(rho);
    switch (shape_) {
        case Shape::tophat:
            return rho <= range_ ? amplitude_ : 0.0;
        case Shape::triangle:
            return rho < range_ ? amplitude_ * (1.0 - rho / range_) : 0.0;
        case Shape::truncated_bell: {
            if (rho > range_) return 0.0;
            const double s = bell_width();
            return amplitude_ * std::exp(-rho * rho / (2.0 * s * s));
        }
    }
    return 0.0;
}

double RadialProfile::integral() const noexcept {
    const double r = range_;
    const double a = amplitude_;
    switch (shape_) {
        case Shape::tophat:
            return dim_ == 1 ? 2.0 * r * a : kPi * r * r * a;
        case Shape::triangle:
            return dim_ == 1 ? r * a : kPi * r * r * a / 3.0;
        case Shape::truncated_bell: {
            const double s = bell_width();
            if (dim_ == 1) return a * s * std::sqrt(2.0 * kPi) * std::erf(r / (s * std::sqrt(2.0)));
            return 2.0 * kPi * a * s * s * (1.0 - std::exp(-r * r / (2.0 * s * s)));
        }
    }
    return 0.0;
}

Vec RadialProfile::sample(Rng& rng, int max_tries) const {
    for (int i = 0; i < max_tries; ++i) {
        Vec x{0.0, 0.0};
        double rho;
        if (dim_ == 1) {
            x[0] = range_ * (2.0 * rng.uniform() - 1.0);
            rho = std::fabs(x[0]);
        } else {
            rho = range_ * std::sqrt(rng.uniform());
            const double phi = 2.0 * kPi * rng.uniform();
            x = {rho * std::cos(phi), rho * std::sin(phi)};
        }
        if (shape_ == Shape::tophat && amplitude_ > 0.0) return x;
        if (amplitude_ > 0.0 && rng.uniform() * amplitude_ < at_radius(rho)) return x;
    }
    throw SamplingError("offspring sampling: rejection cap of " + std::to_string(max_tries) +
                        " tries exceeded (degenerate density?)");
}

MortalityField MortalityField::constant(double m) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("mortality.m must be a finite rate >= 0");
    MortalityField f;
    f.m_star_ = m;
    f.m_max_ = m;
    return f;
}

MortalityField MortalityField::bounded(std::function<double(const Vec&)> fn, double m_star, double m_max) {
    if (!fn) throw std::invalid_argument("mortality: empty function");
    if (!(m_star >= 0.0) || !(m_max >= m_star) || !std::isfinite(m_max))
        throw std::invalid_argument("mortality: bounds must satisfy 0 <= m_star <= m_max < inf");
    MortalityField f;
    f.fn_ = std::move(fn);
    f.m_star_ = m_star;
    f.m_max_ = m_max;
    return f;
}

double MortalityField::operator()(const Vec& x) const {
    if (!fn_) return m_star_;
    const double v = fn_(x);
    if (!(v >= m_star_ && v <= m_max_)) throw std::domain_error("mortality: value outside declared bounds");
    return v;
}

std::string_view to_string(FissionForm f) noexcept {
    return f == FissionForm::delta_decomposition ? "delta" : "product";
}

FissionForm fission_form_from_string(std::string_view name) {
    if (name == "delta") return FissionForm::delta_decomposition;
    if (name == "product") return FissionForm::product_density;
    throw std::invalid_argument("unknown fission form '" + std::string(name) + "' (expected delta or product)");
}

DispersalKernel FissionKernel::dispersal() const {
    if (form_ != FissionForm::delta_decomposition)
        throw std::logic_error("dispersal(): product-density kernels have no parametric beta");
    return DispersalKernel(profile_);
}

double FissionKernel::dispersal_range() const noexcept {
    return form_ == FissionForm::delta_decomposition ? profile_.range() : 2.0 * profile_.range();
}

double FissionKernel::beta_at(const Vec& z) const {
    if (form_ == FissionForm::delta_decomposition) return profile_(z);
    const RadialProfile& phi = profile_;
    const double rho = phi.range();
    const double zn = norm(z, dim());
    if (zn > 2.0 * rho) return 0.0;
    if (dim() == 1) {
        // beta(z) = int phi(w + z) phi(w) dw
        const double zz = z[0];
        auto f = [&](double w) { return phi.at_radius(w + zz) * phi.at_radius(w); };
        const double lo = std::max(-rho, -rho - zz);
        const double hi = std::min(rho, rho - zz);
        return integrate_pieces(f, lo, hi, {0.0, -zz});
    }
    // Polar coordinates for w around the origin; the angle integral only covers
    // directions where |w + z| <= rho.
    auto inner = [&](double s) {
        if (s == 0.0 || zn == 0.0) return 2.0 * kPi * phi.at_radius(std::max(s, zn));
        const double c = (rho * rho - s * s - zn * zn) / (2.0 * s * zn);
        if (c < -1.0) return 0.0;
        const double from = c >= 1.0 ? 0.0 : std::acos(c);
        auto g = [&](double ph) {
            const double d2 = s * s + zn * zn - 2.0 * s * zn * std::cos(ph);
            return phi.at_radius(std::sqrt(std::max(0.0, d2)));
        };
        // |w + z| with the angle measured from -z: d2 grows with ph, so the
        // admissible directions are [0, pi - from].
        return 2.0 * integrate_pieces(g, 0.0, kPi - from, {});
    };
    auto outer = [&](double s) { return s * phi.at_radius(s) * inner(s); };
    return detail::integrate_pieces_adaptive(outer, 0.0, rho, {std::fabs(rho - zn)});
}

double fission_total_rate(const FissionKernel& b) noexcept {
    const double i = b.profile().integral();
    return b.form() == FissionForm::delta_decomposition ? i : i * i;
}

std::pair<Vec, Vec> sample_offspring(const FissionKernel& b, const Vec& x, Rng& rng) {
    const int d = b.dim();
    auto shifted = [d](const Vec& p, const Vec& v) {
        Vec y = p;
        for (int i = 0; i < d; ++i) y[i] += v[i];
        return y;
    };
    if (b.form() == FissionForm::delta_decomposition) {
        const Vec xi = b.profile().sample(rng);
        const Vec other = shifted(x, xi);
        if (rng() >> 63) return {x, other};
        return {other, x};
    }
    const Vec xi1 = b.profile().sample(rng);
    const Vec xi2 = b.profile().sample(rng);
    return {shifted(x, xi1), shifted(x, xi2)};
}

DispersalClass classify_dispersal(const CompetitionKernel& a, const DispersalKernel& beta, double grid_step,
                                  double tol) {
    if (!(grid_step > 0.0)) throw std::invalid_argument("classify_dispersal: grid_step must be positive");
    const int d = beta.dim();
    const double floor_value = tol * beta.profile().max_value();
    const auto n = static_cast<long>(std::ceil(beta.range() / grid_step));
    double omega = std::numeric_limits<double>::infinity();
    bool any = false;
    auto probe = [&](const Vec& x) {
        const double bx = beta(x);
        if (!(bx > floor_value)) return;
        any = true;
        omega = std::min(omega, a(x) / bx);
    };
    for (long i = -n; i <= n; ++i) {
        if (d == 1) {
            probe({static_cast<double>(i) * grid_step, 0.0});
            continue;
        }
        for (long j = -n; j <= n; ++j) probe({static_cast<double>(i) * grid_step, static_cast<double>(j) * grid_step});
    }
    if (!any) return {DispersalTag::short_range, std::numeric_limits<double>::infinity()};
    if (omega > 0.0) return {DispersalTag::short_range, omega};
    return {DispersalTag::long_range, 0.0};
}

}  // namespace srs
