#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "srs/hierarchy.hpp"

using namespace srs;

namespace {

KernelSet kernels(double a_amp, double m, double beta_amp, int dim = 1, double r = 1.0, double R = 1.0,
                  Shape a_shape = Shape::tophat, Shape b_shape = Shape::tophat) {
    return {CompetitionKernel(RadialProfile(a_shape, r, a_amp, dim)), MortalityField::constant(m),
            FissionKernel::delta(DispersalKernel(RadialProfile(b_shape, R, beta_amp, dim)))};
}

}  // namespace

TEST_SUITE("hierarchy") {
    TEST_CASE("mean-field rhs examples") {
        const MeanFieldParams p{1.0, 0.2, 0.08};
        CHECK(mean_field_rhs(0.0, p) == 0.0);
        CHECK(mean_field_rhs(5.0, p) == doctest::Approx(2.0).epsilon(1e-15));
        const double us = carrying_capacity(p);
        CHECK(us == doctest::Approx(10.0).epsilon(1e-15));
        CHECK(std::fabs(mean_field_rhs(us, p)) <= 1e-14);
        const double h = 1e-6;
        CHECK((mean_field_rhs(us + h, p) - mean_field_rhs(us - h, p)) / (2 * h) < 0.0);
        CHECK_THROWS_AS(carrying_capacity(MeanFieldParams{0.1, 0.2, 0.08}), std::domain_error);
        CHECK_THROWS_AS(carrying_capacity(MeanFieldParams{1.0, 0.2, 0.0}), std::domain_error);
        const auto from = MeanFieldParams::from(kernels(0.04, 0.2, 0.5));
        CHECK(from.fission_rate == doctest::Approx(1.0));
        CHECK(from.competition_integral == doctest::Approx(0.08));
    }

    TEST_CASE("mean-field integration against the logistic closed form") {
        const MeanFieldParams p{1.0, 0.2, 0.08};
        const double us = 10.0;
        const auto half = solve_mean_field(us / 2, p, 20.0);
        REQUIRE(half.t.size() == 101);
        for (std::size_t i = 0; i < half.t.size(); ++i) {
            CHECK(std::fabs(half.u[i] - logistic_solution(us / 2, p, half.t[i])) <= 1e-8);
            if (i) CHECK(half.u[i] >= half.u[i - 1]);
        }
        const auto fixed = solve_mean_field(us, p, 5.0);
        for (double u : fixed.u) CHECK(u == doctest::Approx(us).epsilon(1e-12));
        const MeanFieldParams decay{0.3, 1.0, 0.0};
        const std::vector<double> times{0.5, 1.0, 4.0};
        const auto d = solve_mean_field(3.0, decay, 4.0, times);
        REQUIRE(d.t.size() == 3);
        for (std::size_t i = 0; i < d.t.size(); ++i)
            CHECK(std::fabs(d.u[i] / (3.0 * std::exp(-0.7 * d.t[i])) - 1.0) <= 1e-8);
        const auto zero = solve_mean_field(0.0, p, 3.0);
        for (double u : zero.u) CHECK(u == 0.0);
        CHECK_THROWS_AS(solve_mean_field(1.0, p, 0.0), std::invalid_argument);
        const auto long_run = solve_mean_field(1.0, p, 60.0);
        CHECK(std::fabs(long_run.u.back() - us) < 1e-6);
    }

    TEST_CASE("pair rhs at Poisson data") {
        for (int dim : {1, 2}) {
            for (Closure cl : {Closure::kirkwood, Closure::factorized}) {
                const double ba = dim == 1 ? 0.5 : 0.4, aa = 0.07, m = 0.3, u = 2.5;
                const auto k = kernels(aa, m, ba, dim, 1.0, 1.0, Shape::triangle, Shape::truncated_bell);
                const PairModel model(k, {0.05, 4.0}, cl);
                const auto rates = model.rates();
                const auto d = model.rhs(model.poisson_state(u));
                CHECK(d.du == doctest::Approx(mean_field_rhs(u, rates)).epsilon(1e-10));
                const RadialProfile beta = k.fission.profile();
                const RadialProfile a = k.competition.profile();
                const double b = rates.fission_rate, A = rates.competition_integral;
                for (std::size_t i = 0; i + 1 < model.nodes(); ++i) {
                    const double rho = model.centers()[i];
                    const double expect = 2 * u * beta.at_radius(rho) + 2 * b * u * u - 2 * m * u * u -
                                          2 * a.at_radius(rho) * u * u - 2 * A * u * u * u;
                    CHECK(d.dg[i] == doctest::Approx(expect).epsilon(1e-9));
                }
                CHECK(d.dg.back() == doctest::Approx(2 * u * d.du));
            }
        }
    }

    TEST_CASE("pure growth onset and zero rates") {
        const PairModel model(kernels(0.0, 0.0, 0.5), {0.05, 4.0}, Closure::kirkwood);
        const auto d = model.rhs(model.poisson_state(1.5));
        CHECK(d.du == doctest::Approx(1.5));
        // sibling term lifts small separations above the Poisson-consistent 2 u du
        CHECK(d.dg[0] > 2 * 1.5 * d.du);
        CHECK(d.dg[60] == doctest::Approx(2 * 1.5 * d.du));

        const PairModel still(kernels(0.0, 0.0, 0.0), {0.05, 4.0}, Closure::kirkwood);
        auto s = still.poisson_state(2.0);
        s.g[3] = 5.0;
        const auto z = still.rhs(s);
        CHECK(z.du == 0.0);
        for (double v : z.dg) CHECK(v == 0.0);
        const auto traj = solve_pair(still, s, 2.0);
        CHECK(traj.states.back().u == 2.0);
        CHECK(traj.states.back().g == s.g);
    }

    TEST_CASE("convolution weights integrate the kernels") {
        // constant excess h = c: (beta * h) = <b> c and int a h = A c away from r_max
        for (int dim : {1, 2})
            for (Closure cl : {Closure::factorized, Closure::kirkwood}) {
                const double u = 2.0, c = 0.7, m = 0.1;
                const auto k = kernels(0.05, m, 0.3, dim, 1.0, 1.0, Shape::truncated_bell, Shape::triangle);
                const PairModel model(k, {0.05, 5.0}, cl);
                const double b = model.rates().fission_rate, A = model.rates().competition_integral;
                PairState s{u, std::vector<double>(model.nodes(), u * u + c)};
                const auto d = model.rhs(s);
                CHECK(d.du == doctest::Approx((b - m) * u - A * u * u - A * c).epsilon(1e-10));
                const RadialProfile beta = k.fission.profile(), a = k.competition.profile();
                const double g = u * u + c;
                for (std::size_t i = 0; i < model.nodes(); ++i) {
                    const double rho = model.centers()[i];
                    if (rho > 5.0 - 1.5) break;
                    const double third = cl == Closure::factorized ? u * A * (g + 2 * c) : A * g * g * g / (u * u * u);
                    const double expect = 2 * u * beta.at_radius(rho) + 2 * (b * u * u + b * c) -
                                          2 * (m + a.at_radius(rho)) * g - 2 * third;
                    CAPTURE(dim);
                    CAPTURE(rho);
                    CHECK(d.dg[i] == doctest::Approx(expect).epsilon(1e-8));
                }
            }
    }

    TEST_CASE("grid validation") {
        const auto k = kernels(0.05, 0.2, 0.5);
        CHECK_THROWS_AS(PairModel(k, {0.06, 4.0}, Closure::kirkwood), GridResolutionError);
        CHECK_THROWS_AS(PairModel(k, {0.05, 3.9}, Closure::kirkwood), GridResolutionError);
        CHECK_NOTHROW(PairModel(k, {0.05, 4.0}, Closure::kirkwood));
        const KernelSet prod{CompetitionKernel(RadialProfile(Shape::tophat, 1.0, 0.05, 1)), MortalityField::constant(0.2),
                             FissionKernel::product(RadialProfile(Shape::tophat, 0.5, 1.0, 1))};
        CHECK_THROWS_AS(PairModel(prod, {0.025, 4.0}, Closure::kirkwood), std::invalid_argument);
        CHECK(closure_from_string("factorized") == Closure::factorized);
        CHECK_THROWS_AS(closure_from_string("cubic"), std::invalid_argument);
    }

    TEST_CASE("pair solve: blow-up detection") {
        // huge fission with no losses grows without bound
        const PairModel model(kernels(0.0, 0.0, 10.0), {0.05, 4.0}, Closure::factorized);
        CHECK_THROWS_AS(solve_pair(model, model.poisson_state(1.0), 5.0), BlowUpError);
    }

    TEST_CASE("grid refinement") {
        const auto k = kernels(0.05, 0.2, 0.5);
        for (Closure cl : {Closure::kirkwood, Closure::factorized}) {
            const PairModel coarse(k, {0.05, 4.0}, cl), fine(k, {0.025, 4.0}, cl);
            const std::vector<double> t{5.0, 20.0};
            const auto a = solve_pair(coarse, coarse.poisson_state(2.0), 20.0, t);
            const auto b = solve_pair(fine, fine.poisson_state(2.0), 20.0, t);
            for (std::size_t i = 0; i < t.size(); ++i) {
                CHECK(std::fabs(a.states[i].u / b.states[i].u - 1.0) < 0.01);
                for (double lo : {0.0, 0.5, 1.0, 2.0, 3.0}) {
                    const double ga = coarse.bin_average(a.states[i].g, lo, lo + 0.5);
                    const double gb = fine.bin_average(b.states[i].g, lo, lo + 0.5);
                    CHECK(std::fabs(ga / gb - 1.0) < 0.01);
                }
            }
        }
    }

    TEST_CASE("long-range weak competition approaches mean field") {
        // A = 0.1 spread over r = 10; dispersal on the same scale so clumps cannot form
        const auto k = kernels(0.005, 0.2, 0.5, 1, 10.0, 10.0);
        for (Closure cl : {Closure::kirkwood, Closure::factorized}) {
            const PairModel model(k, {0.1, 40.0}, cl);
            const std::vector<double> t{2.0, 5.0, 10.0, 20.0, 40.0};
            const auto pair = solve_pair(model, model.poisson_state(1.0), 40.0, t);
            const auto mf = solve_mean_field(1.0, model.rates(), 40.0, t);
            for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::fabs(pair.states[i].u / mf.u[i] - 1.0) < 0.05);
        }
    }
}
