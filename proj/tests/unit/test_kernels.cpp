#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "srs/kernels.hpp"
#include "srs/stats.hpp"

using namespace srs;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double kPi = std::numbers::pi;

double radial_integral_oracle(const RadialProfile& p) {
    auto f = [&](double r) { return p.dim() == 1 ? 2.0 * p.at_radius(r) : 2.0 * kPi * r * p.at_radius(r); };
    return gauss_kronrod<double, 61>::integrate(f, 0.0, p.range(), 15, 1e-13);
}

double ks_statistic(std::vector<double> xs, auto cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace

TEST_SUITE("kernels") {
    TEST_CASE("evaluation examples") {
        const CompetitionKernel a(RadialProfile(Shape::tophat, 1.0, 0.3, 1));
        CHECK(a({0.5, 0.0}) == 0.3);
        CHECK(a({1.5, 0.0}) == 0.0);
        const RadialProfile tri(Shape::triangle, 2.0, 1.0, 1);
        CHECK(tri.at_radius(1.0) == doctest::Approx(0.5).epsilon(1e-15));
    }

    TEST_CASE("zero beyond range and symmetric") {
        for (int d : {1, 2})
            for (Shape s : {Shape::tophat, Shape::triangle, Shape::truncated_bell}) {
                const RadialProfile p(s, 1.3, 0.7, d);
                for (double r : {1.3000001, 1.5, 10.0, 1e6}) {
                    CHECK(p.at_radius(r) == 0.0);
                    CHECK(p({r, 0.0}) == 0.0);
                    if (d == 2) CHECK(p({r / std::sqrt(2.0) + 1e-9, r / std::sqrt(2.0) + 1e-9}) == 0.0);
                }
                for (double x : {0.0, 0.2, 0.9, 1.2}) {
                    CHECK(p({x, d == 2 ? 0.3 : 0.0}) == p({-x, d == 2 ? -0.3 : 0.0}));
                    CHECK(p.at_radius(x) >= 0.0);
                }
            }
    }

    TEST_CASE("closed-form integrals") {
        CHECK(competition_integral(CompetitionKernel(RadialProfile(Shape::tophat, 1.0, 0.3, 1))) ==
              doctest::Approx(0.6).epsilon(1e-15));
        CHECK(competition_integral(CompetitionKernel(RadialProfile(Shape::tophat, 1.0, 1.0, 2))) ==
              doctest::Approx(kPi).epsilon(1e-15));
        for (int d : {1, 2})
            for (Shape s : {Shape::tophat, Shape::triangle, Shape::truncated_bell}) {
                const RadialProfile p(s, 1.7, 0.4, d);
                CAPTURE(d);
                CAPTURE(to_string(s));
                CHECK(std::fabs(p.integral() - radial_integral_oracle(p)) <= 1e-10 * p.integral());
            }
    }

    TEST_CASE("fission total rate") {
        const auto b1 = FissionKernel::delta(DispersalKernel(RadialProfile(Shape::tophat, 1.0, 0.5, 1)));
        CHECK(fission_total_rate(b1) == doctest::Approx(1.0).epsilon(1e-12));
        const auto b2 = FissionKernel::delta(DispersalKernel(RadialProfile(Shape::tophat, 1.0, 1.0, 2)));
        CHECK(fission_total_rate(b2) == doctest::Approx(kPi).epsilon(1e-12));
        for (Shape s : {Shape::triangle, Shape::truncated_bell}) {
            const RadialProfile p(s, 0.8, 1.3, 1);
            CHECK(std::fabs(fission_total_rate(FissionKernel::delta(DispersalKernel(p))) - radial_integral_oracle(p)) <=
                  1e-12 * p.integral());
        }
    }

    TEST_CASE("product density rate and dispersal autocorrelation") {
        const RadialProfile phi(Shape::truncated_bell, 0.6, 1.5, 1);
        const auto b = FissionKernel::product(phi);
        // nested quadrature of b(0 | y1, y2) = phi(y1) phi(y2)
        auto inner = [&](double y1) {
            return gauss_kronrod<double, 31>::integrate([&](double y2) { return phi.at_radius(y1) * phi.at_radius(y2); },
                                                        -0.6, 0.6, 10, 1e-12);
        };
        const double total = gauss_kronrod<double, 31>::integrate(inner, -0.6, 0.6, 10, 1e-12);
        CHECK(std::fabs(fission_total_rate(b) - total) <= 1e-8 * total);
        CHECK(b.dispersal_range() == 1.2);
        for (double z : {0.0, 0.3, 0.7, 1.1, 1.3}) {
            const double lo = std::max(-0.6, -0.6 - z), hi = std::min(0.6, 0.6 - z);
            const double beta = hi > lo ? gauss_kronrod<double, 31>::integrate(
                                              [&](double x) { return phi.at_radius(x) * phi.at_radius(x + z); }, lo, hi, 10, 1e-13)
                                        : 0.0;
            CHECK(b.beta_at({z, 0.0}) == doctest::Approx(beta).epsilon(1e-8));
        }
    }

    TEST_CASE("product density dispersal in two dimensions") {
        const RadialProfile phi(Shape::tophat, 0.5, 2.0, 2);
        const auto b = FissionKernel::product(phi);
        // two disks of radius rho at distance z overlap in a lens
        for (double z : {0.0, 0.25, 0.6, 0.99}) {
            const double r = 0.5;
            const double lens = 2.0 * r * r * std::acos(z / (2.0 * r)) - 0.5 * z * std::sqrt(4.0 * r * r - z * z);
            CHECK(b.beta_at({z, 0.0}) == doctest::Approx(4.0 * lens).epsilon(1e-8));
        }
        CHECK(b.beta_at({1.01, 0.0}) == 0.0);
    }

    TEST_CASE("delta offspring: one child at the parent, |y1 - y2| uniform") {
        const auto b = FissionKernel::delta(DispersalKernel(RadialProfile(Shape::tophat, 1.0, 0.5, 1)));
        Rng rng(11);
        const Vec x{3.25, 0.0};
        std::vector<double> sep;
        RunningStats sum;
        int first = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            auto [y1, y2] = sample_offspring(b, x, rng);
            const bool p1 = y1 == x, p2 = y2 == x;
            REQUIRE((p1 || p2));
            first += p1;
            sep.push_back(std::fabs(y1[0] - y2[0]));
            sum.add((y1[0] - x[0]) + (y2[0] - x[0]));
        }
        const double d = ks_statistic(sep, [](double s) { return std::clamp(s, 0.0, 1.0); });
        CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
        CHECK(std::fabs(sum.mean()) < 3.0 * sum.se());
        CHECK(std::abs(first - n / 2) < 3.0 * std::sqrt(n / 4.0));
    }

    TEST_CASE("delta offspring offset matches beta / <b> on 64 bins") {
        const RadialProfile p(Shape::triangle, 1.5, 2.0, 1);
        const auto b = FissionKernel::delta(DispersalKernel(p));
        Rng rng(5);
        const int n = 100000, bins = 64;
        std::vector<double> counts(bins, 0.0);
        for (int i = 0; i < n; ++i) {
            auto [y1, y2] = sample_offspring(b, {0.0, 0.0}, rng);
            const double xi = y1[0] == 0.0 ? y2[0] : y1[0];
            const int k = std::clamp(static_cast<int>((xi + 1.5) / 3.0 * bins), 0, bins - 1);
            counts[k] += 1.0;
        }
        auto cdf = [](double x) {  // triangle on [-1.5, 1.5]
            const double t = x / 1.5;
            return t < 0 ? 0.5 * (1 + t) * (1 + t) : 1.0 - 0.5 * (1 - t) * (1 - t);
        };
        double chi2 = 0.0;
        for (int k = 0; k < bins; ++k) {
            const double lo = -1.5 + 3.0 * k / bins, hi = lo + 3.0 / bins;
            const double e = n * (cdf(hi) - cdf(lo));
            chi2 += (counts[k] - e) * (counts[k] - e) / e;
        }
        const double pval = 1.0 - boost::math::cdf(boost::math::chi_squared(bins - 1), chi2);
        CHECK(pval > 0.01);
    }

    TEST_CASE("product offspring are independent draws around the parent") {
        const auto b = FissionKernel::product(RadialProfile(Shape::tophat, 0.5, 1.0, 2));
        Rng rng(9);
        RunningStats mx, cross;
        for (int i = 0; i < 20000; ++i) {
            auto [y1, y2] = sample_offspring(b, {5.0, 5.0}, rng);
            CHECK(std::hypot(y1[0] - 5.0, y1[1] - 5.0) <= 0.5);
            mx.add(y1[0] - 5.0 + y2[0] - 5.0);
            cross.add((y1[0] - 5.0) * (y2[0] - 5.0));
        }
        CHECK(std::fabs(mx.mean()) < 3.0 * mx.se());
        CHECK(std::fabs(cross.mean()) < 3.0 * cross.se());
    }

    TEST_CASE("rejection cap") {
        const RadialProfile zero(Shape::triangle, 1.0, 0.0, 1);
        Rng rng(1);
        CHECK_THROWS_AS(zero.sample(rng, 50), SamplingError);
    }

    TEST_CASE("classify_dispersal examples") {
        auto cls = [](double r, double ra, double R, double rb, int d = 1) {
            return classify_dispersal(CompetitionKernel(RadialProfile(Shape::tophat, r, ra, d)),
                                      DispersalKernel(RadialProfile(Shape::tophat, R, rb, d)), 0.01);
        };
        auto c1 = cls(2, 1, 1, 1);
        CHECK(c1.tag == DispersalTag::short_range);
        CHECK(c1.omega == doctest::Approx(1.0));
        CHECK(cls(1, 1, 2, 1).tag == DispersalTag::long_range);
        auto c3 = cls(1, 0.25, 1, 0.5);
        CHECK(c3.tag == DispersalTag::short_range);
        CHECK(c3.omega == doctest::Approx(0.5));
        auto c4 = cls(1, 0.25 * 7, 1, 0.5 * 7);
        CHECK(c4.tag == c3.tag);
        CHECK(c4.omega == doctest::Approx(c3.omega).epsilon(1e-14));
        CHECK(cls(1, 0.25, 1, 0.5, 2).omega == doctest::Approx(0.5));
        CHECK_THROWS_AS(classify_dispersal(CompetitionKernel::none(1), DispersalKernel(RadialProfile(Shape::tophat, 1, 1, 1)), 0.0),
                        std::invalid_argument);
    }

    TEST_CASE("invalid kernels") {
        CHECK_THROWS_AS(RadialProfile(Shape::tophat, 0.0, 1.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(RadialProfile(Shape::tophat, 1.0, -1.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(RadialProfile(Shape::tophat, 1.0, 1.0, 3), std::invalid_argument);
        CHECK_THROWS_AS(shape_from_string("gaussian"), std::invalid_argument);
        CHECK(shape_from_string("truncated-bell") == Shape::truncated_bell);
        CHECK_THROWS_AS(MortalityField::constant(-0.1), std::invalid_argument);
        const auto m = MortalityField::bounded([](const Vec& x) { return x[0] < 5 ? 0.1 : 0.3; }, 0.1, 0.3);
        CHECK(m({1.0, 0.0}) == 0.1);
        CHECK(m.m_star() == 0.1);
        const auto bad = MortalityField::bounded([](const Vec&) { return 2.0; }, 0.1, 0.3);
        CHECK_THROWS_AS(bad({0.0, 0.0}), std::domain_error);
    }
}
