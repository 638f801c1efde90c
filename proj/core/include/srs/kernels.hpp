#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "srs/geometry.hpp"
#include "srs/rng.hpp"

namespace srs {

/// Radial profiles with compact support [0, range].
///   tophat:         amp                      for rho <= range
///   triangle:       amp * (1 - rho / range)  for rho <  range
///   truncated_bell: amp * exp(-rho^2 / (2 s^2)), s = range / 2, for rho <= range
/// Jumps: tophat and truncated_bell at rho = range (value taken from inside).
enum class Shape { tophat, triangle, truncated_bell };

std::string_view to_string(Shape s) noexcept;
/// Throws std::invalid_argument for an unknown name.
Shape shape_from_string(std::string_view name);

/// Isotropic nonnegative profile f(|x|) on R^d, d in {1, 2}.
class RadialProfile {
public:
    /// Throws std::invalid_argument for range <= 0, amplitude < 0 or d outside {1, 2}.
    RadialProfile(Shape shape, double range, double amplitude, int dim);

    Shape shape() const noexcept { return shape_; }
    double range() const noexcept { return range_; }
    double amplitude() const noexcept { return amplitude_; }
    int dim() const noexcept { return dim_; }
    double bell_width() const noexcept { return 0.5 * range_; }

    double at_radius(double rho) const noexcept;
    double operator()(const Vec& x) const noexcept { return at_radius(norm(x, dim_)); }
    /// Closed-form integral over R^d.
    double integral() const noexcept;
    double max_value() const noexcept { return amplitude_; }

    /// Draws a displacement with density f / integral(f) by rejection from the
    /// uniform law on the support ball. Throws SamplingError after `max_tries`.
    Vec sample(Rng& rng, int max_tries = 10000) const;

    friend bool operator==(const RadialProfile&, const RadialProfile&) = default;

private:
    Shape shape_;
    double range_;
    double amplitude_;
    int dim_;
};

struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Competition kernel a: extra death rate contributed by a neighbour at displacement x.
class CompetitionKernel {
public:
    explicit CompetitionKernel(RadialProfile p) : p_(p) {}
    static CompetitionKernel none(int dim, double range = 1.0) {
        return CompetitionKernel(RadialProfile(Shape::tophat, range, 0.0, dim));
    }

    double operator()(const Vec& x) const noexcept { return p_(x); }
    double at_radius(double rho) const noexcept { return p_.at_radius(rho); }
    double range() const noexcept { return p_.range(); }
    int dim() const noexcept { return p_.dim(); }
    bool is_zero() const noexcept { return p_.amplitude() == 0.0; }
    const RadialProfile& profile() const noexcept { return p_; }

    friend bool operator==(const CompetitionKernel&, const CompetitionKernel&) = default;

private:
    RadialProfile p_;
};

/// A = integral of a over R^d.
inline double competition_integral(const CompetitionKernel& a) noexcept { return a.profile().integral(); }

/// Dispersal kernel beta: density of the separation y1 - y2 between siblings.
class DispersalKernel {
public:
    explicit DispersalKernel(RadialProfile p) : p_(p) {}

    double operator()(const Vec& x) const noexcept { return p_(x); }
    double at_radius(double rho) const noexcept { return p_.at_radius(rho); }
    double range() const noexcept { return p_.range(); }
    int dim() const noexcept { return p_.dim(); }
    const RadialProfile& profile() const noexcept { return p_; }

    friend bool operator==(const DispersalKernel&, const DispersalKernel&) = default;

private:
    RadialProfile p_;
};

/// Mortality m(x): a constant, or a bounded callable with declared bounds.
class MortalityField {
public:
    static MortalityField constant(double m);
    /// `fn` must take values in [m_star, m_max]; evaluation throws std::domain_error otherwise.
    static MortalityField bounded(std::function<double(const Vec&)> fn, double m_star, double m_max);

    bool is_constant() const noexcept { return !fn_; }
    double operator()(const Vec& x) const;
    /// Essential infimum of m.
    double m_star() const noexcept { return m_star_; }
    double m_max() const noexcept { return m_max_; }

private:
    MortalityField() = default;
    std::function<double(const Vec&)> fn_;
    double m_star_ = 0.0;
    double m_max_ = 0.0;
};

enum class FissionForm { delta_decomposition, product_density };

std::string_view to_string(FissionForm f) noexcept;
FissionForm fission_form_from_string(std::string_view name);

/// Offspring law b(x | y1, y2).
///
/// delta_decomposition: b = 1/2 (delta(x - y1) + delta(x - y2)) beta(y1 - y2), kept
///   symbolic. One offspring sits at the parent, the other at parent + xi, xi ~ beta / <b>.
/// product_density: b = phi(y1 - x) phi(y2 - x) for an offspring profile phi; then
///   <b> = (int phi)^2 and beta is the autocorrelation of phi.
///
/// Both forms depend on offsets only, so translation invariance holds by construction.
class FissionKernel {
public:
    static FissionKernel delta(DispersalKernel beta) { return FissionKernel(FissionForm::delta_decomposition, beta.profile()); }
    static FissionKernel product(RadialProfile offspring) { return FissionKernel(FissionForm::product_density, offspring); }
    static FissionKernel none(int dim, double range = 1.0) {
        return delta(DispersalKernel(RadialProfile(Shape::tophat, range, 0.0, dim)));
    }

    FissionForm form() const noexcept { return form_; }
    int dim() const noexcept { return profile_.dim(); }
    /// beta itself (delta form) or the offspring profile phi (product form).
    const RadialProfile& profile() const noexcept { return profile_; }
    /// Only for the delta form; throws std::logic_error otherwise.
    DispersalKernel dispersal() const;

    /// Evaluates the sibling-separation density beta(z). Closed form for the delta
    /// form, Gauss-Legendre quadrature of the autocorrelation for the product form.
    double beta_at(const Vec& z) const;
    /// Range R of beta.
    double dispersal_range() const noexcept;
    /// Largest distance from the parent at which an offspring can land.
    double offspring_reach() const noexcept { return profile_.range(); }

    friend bool operator==(const FissionKernel&, const FissionKernel&) = default;

private:
    FissionKernel(FissionForm form, RadialProfile p) : form_(form), profile_(p) {}
    FissionForm form_;
    RadialProfile profile_;
};

/// <b> = integral of beta = total fission rate per entity.
double fission_total_rate(const FissionKernel& b) noexcept;

/// Draws (y1, y2) with density b(x | ., .) / <b>. Delta form: exactly one of the
/// two equals x bit-for-bit, chosen by a fair coin.
std::pair<Vec, Vec> sample_offspring(const FissionKernel& b, const Vec& x, Rng& rng);

struct KernelSet {
    CompetitionKernel competition;
    MortalityField mortality;
    FissionKernel fission;

    int dim() const noexcept { return competition.dim(); }
    /// max(r, R): the longest range any rate depends on.
    double interaction_range() const noexcept {
        return std::max(competition.range(), fission.dispersal_range());
    }
};

enum class DispersalTag { short_range, long_range };

struct DispersalClass {
    DispersalTag tag;
    /// min a / beta over the probe set; positive iff tag is short_range.
    double omega;
};

/// Decides a >= omega * beta on the probe grid {i * grid_step}^d restricted to points
/// where beta > tol * max beta. Throws std::invalid_argument for grid_step <= 0.
DispersalClass classify_dispersal(const CompetitionKernel& a, const DispersalKernel& beta,
                                  double grid_step, double tol = 1e-9);

}  // namespace srs
