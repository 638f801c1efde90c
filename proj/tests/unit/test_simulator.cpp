#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/exponential.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "srs/observables.hpp"
#include "srs/simulator.hpp"
#include "srs/stats.hpp"

using namespace srs;

namespace {

KernelSet kernels(double a_amp, double m, double beta_amp, int dim = 1, double r = 1.0, double R = 1.0) {
    return {CompetitionKernel(RadialProfile(Shape::tophat, r, a_amp, dim)), MortalityField::constant(m),
            FissionKernel::delta(DispersalKernel(RadialProfile(Shape::tophat, R, beta_amp, dim)))};
}

}  // namespace

TEST_SUITE("simulator") {
    TEST_CASE("death rate examples") {
        const auto k = kernels(0.3, 0.2, 0.0);
        SimState s(k, TorusGeometry(1, 10.0), 1);
        s.add_point({1.0, 0});
        CHECK(s.death_rate(0) == doctest::Approx(0.2));
        s.add_point({9.5, 0});  // torus distance 1.5
        CHECK(s.death_rate(0) == doctest::Approx(0.2));
        CHECK(s.death_rate(1) == doctest::Approx(0.2));
        s.add_point({0.5, 0});  // 0.5 from the first point, 1.0 from the second
        CHECK(s.death_rate(0) == doctest::Approx(0.5));
        CHECK(s.death_rate(2) == doctest::Approx(0.8));
        CHECK_THROWS_AS(s.death_rate(7), std::out_of_range);
    }

    TEST_CASE("geometry guard") {
        CHECK_THROWS_AS(SimState(kernels(0.1, 0.1, 0.5, 1, 1.0, 3.0), TorusGeometry(1, 11.9), 1), GeometryError);
        CHECK_NOTHROW(SimState(kernels(0.1, 0.1, 0.5, 1, 1.0, 3.0), TorusGeometry(1, 12.0), 1));
    }

    TEST_CASE("single point death and fission") {
        {
            SimState s(kernels(0.0, 1.0, 0.0), TorusGeometry(1, 10.0), 3);
            s.add_point({5.0, 0});
            auto ev = s.step();
            REQUIRE(ev);
            CHECK(ev->kind == EventKind::death);
            CHECK(!ev->offspring);
            CHECK(s.size() == 0);
            CHECK(!s.step());
        }
        {
            SimState s(kernels(0.0, 0.0, 0.5), TorusGeometry(1, 10.0), 3);
            s.add_point({5.0, 0});
            auto ev = s.step();
            REQUIRE(ev);
            CHECK(ev->kind == EventKind::fission);
            REQUIRE(ev->offspring);
            CHECK(s.size() == 2);
            CHECK((ev->offspring->first == Vec{5.0, 0} || ev->offspring->second == Vec{5.0, 0}));
        }
    }

    TEST_CASE("death time of an isolated point is Exp(m)") {
        std::vector<double> t;
        for (std::uint64_t i = 0; i < 20000; ++i) {
            SimState s(kernels(0.0, 1.0, 0.0), TorusGeometry(1, 10.0), i);
            s.add_point({1.0, 0});
            t.push_back(s.step()->time);
        }
        std::sort(t.begin(), t.end());
        double d = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double F = 1.0 - std::exp(-t[i]);
            d = std::max({d, (i + 1.0) / t.size() - F, F - static_cast<double>(i) / t.size()});
        }
        CHECK(d < 1.628 / std::sqrt(static_cast<double>(t.size())));
    }

    TEST_CASE("frozen-rate clock law") {
        auto s = init_poisson(2.0, kernels(0.1, 0.3, 0.5), TorusGeometry(1, 50.0), 21);
        const double total = s.total_rate();
        std::vector<double> w;
        for (int i = 0; i < 100000; ++i) w.push_back(s.draw_waiting_time());
        std::sort(w.begin(), w.end());
        double d = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double F = 1.0 - std::exp(-total * w[i]);
            d = std::max({d, (i + 1.0) / w.size() - F, F - static_cast<double>(i) / w.size()});
        }
        CHECK(d < 1.628 / std::sqrt(static_cast<double>(w.size())));
    }

    TEST_CASE("population changes by one per event and rates stay cached") {
        for (int dim : {1, 2}) {
            const double side = dim == 1 ? 60.0 : 12.0;
            const auto k = kernels(0.2, 0.3, dim == 1 ? 0.5 : 0.3, dim);
            auto s = init_poisson(2.0, k, TorusGeometry(dim, side), 5);
            for (int i = 0; i < 5000 && s.size() > 0; ++i) {
                const auto before = s.size();
                auto ev = s.step();
                REQUIRE(ev);
                if (ev->kind == EventKind::death)
                    CHECK(s.size() + 1 == before);
                else
                    CHECK(s.size() == before + 1);
                CHECK(s.total_fission_rate() == static_cast<double>(s.size()) * fission_total_rate(k.fission));
            }
            CHECK(s.cache_drift() < 1e-9);
            for (double r : s.death_rates()) CHECK(r >= k.mortality.m_star());
            CHECK(s.config().index_consistent());
        }
    }

    TEST_CASE("fission then killing both offspring restores the rates") {
        const auto k = kernels(0.25, 0.1, 0.5);
        auto s = init_poisson(3.0, k, TorusGeometry(1, 20.0), 8);
        std::vector<double> before(s.death_rates().begin(), s.death_rates().end());
        const Vec parent = s.config()[0];
        s.remove_point(0);
        const auto i1 = s.add_point(parent);
        const auto i2 = s.add_point(s.geometry().wrap({parent[0] + 0.4, 0}));
        s.remove_point(std::max(i1, i2));
        s.remove_point(std::min(i1, i2));
        s.add_point(parent);
        CHECK(s.cache_drift() < 1e-12);
        std::vector<double> after(s.death_rates().begin(), s.death_rates().end());
        // same multiset of rates (ids permute under swap-with-last)
        std::sort(before.begin(), before.end());
        std::sort(after.begin(), after.end());
        REQUIRE(before.size() == after.size());
        for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-12));
    }

    TEST_CASE("translation invariance of rates") {
        const auto k = kernels(0.3, 0.2, 0.3, 2);
        auto s = init_poisson(1.5, k, TorusGeometry(2, 12.0), 4);
        SimState t(k, TorusGeometry(2, 12.0), 4);
        for (const Vec& p : s.config().points()) t.add_point({p[0] + 3.7, p[1] - 5.1});
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(t.death_rate(i) == doctest::Approx(s.death_rate(i)).epsilon(1e-12));
    }

    TEST_CASE("Poisson initial law") {
        RunningStats n;
        const auto k = kernels(0.0, 0.0, 0.0);
        for (std::uint64_t i = 0; i < 10000; ++i) n.add(static_cast<double>(init_poisson(1.0, k, TorusGeometry(1, 10.0), i).size()));
        CHECK(std::fabs(n.mean() - 10.0) < 3.0 * n.se());
        // variance SE for Poisson(10): sqrt((mu4 - sigma^4) / n) with mu4 = 3 l^2 + l
        const double var_se = std::sqrt((3 * 100.0 + 10.0 - 100.0) / 10000.0);
        CHECK(std::fabs(n.variance() - 10.0) < 3.0 * var_se);
        CHECK_THROWS_AS(init_poisson(0.0, k, TorusGeometry(1, 10.0), 1), std::invalid_argument);
    }

    TEST_CASE("Poisson sub-window counts in two dimensions") {
        const auto k = kernels(0.0, 0.0, 0.0, 2);
        std::vector<Configuration> snaps;
        for (std::uint64_t i = 0; i < 3000; ++i) snaps.push_back(init_poisson(2.0, k, TorusGeometry(2, 20.0), i).config());
        const auto cd = count_distribution(snaps, Box{{0, 0}, {1, 1}});
        for (std::size_t n = 0; n < 8; ++n)
            CHECK(std::fabs(cd.frequency(n) - poisson_pmf(2.0, static_cast<long>(n))) <
                  3.0 * std::sqrt(poisson_pmf(2.0, static_cast<long>(n)) * (1 - poisson_pmf(2.0, static_cast<long>(n))) / 3000.0) + 1e-12);
    }

    TEST_CASE("determinism") {
        const auto k = kernels(0.1, 0.2, 0.5);
        auto a = init_poisson(1.0, k, TorusGeometry(1, 30.0), 99);
        auto b = init_poisson(1.0, k, TorusGeometry(1, 30.0), 99);
        CHECK(a.config() == b.config());
        const std::vector<double> times{0.0, 1.0, 2.0};
        const auto ra = run(a, 2.0, times);
        const auto rb = run(b, 2.0, times);
        CHECK(ra.snapshots == rb.snapshots);
        CHECK(ra.events == rb.events);
        const ReplicaSpec spec{k, TorusGeometry(1, 30.0), 1.0, 2.0, times};
        const auto serial = run_replicas(spec, 6, 5, 1);
        const auto parallel = run_replicas(spec, 6, 5, 3);
        for (std::size_t i = 0; i < 6; ++i) CHECK(serial[i].snapshots == parallel[i].snapshots);
        CHECK(serial[0].snapshots != serial[1].snapshots);
    }

    TEST_CASE("run schedule and extinction") {
        const auto k = kernels(0.0, 0.0, 0.0);
        auto s = init_poisson(1.0, k, TorusGeometry(1, 10.0), 1);
        const auto init = s.config();
        const std::vector<double> zero{0.0};
        const auto r0 = run(s, 0.0, zero);
        REQUIRE(r0.snapshots.size() == 1);
        CHECK(r0.snapshots[0] == init);

        auto d = init_poisson(1.0, kernels(0.0, 5.0, 0.0), TorusGeometry(1, 10.0), 2);
        const std::vector<double> times{0.0, 10.0, 20.0};
        const auto rd = run(d, 20.0, times);
        CHECK(rd.extinct);
        CHECK(rd.extinction_time < 20.0);
        CHECK(rd.snapshots.size() == 3);
        CHECK(rd.snapshots[2].empty());
        const std::vector<double> unsorted{1.0, 0.5};
        CHECK_THROWS_AS(run(d, 2.0, unsorted), std::invalid_argument);
        const std::vector<double> late{3.0};
        CHECK_THROWS_AS(run(d, 2.0, late), std::invalid_argument);
    }

    TEST_CASE("pure birth mean grows like e^t") {
        const auto k = kernels(0.0, 0.0, 0.5);
        const std::vector<double> times{0.0, 1.0, 2.0, 3.0};
        const ReplicaSpec spec{k, TorusGeometry(1, 100.0), 1.0, 3.0, times};
        const auto runs = run_replicas(spec, 200, 17, 1);
        for (std::size_t j = 1; j < times.size(); ++j) {
            RunningStats ratio;
            // per replica N(t) - N(0) e^t has mean zero
            for (const auto& r : runs)
                ratio.add(static_cast<double>(r.snapshots[j].size()) - static_cast<double>(r.snapshots[0].size()) * std::exp(times[j]));
            CHECK(std::fabs(ratio.mean()) < 3.0 * ratio.se());
        }
    }

    TEST_CASE("subcritical mean decays at m - <b>") {
        const auto k = kernels(0.0, 1.5, 0.25);  // <b> = 0.5
        const std::vector<double> times{0.0, 1.0, 2.0};
        const ReplicaSpec spec{k, TorusGeometry(1, 100.0), 1.0, 2.0, times};
        const auto runs = run_replicas(spec, 300, 23, 1);
        for (std::size_t j = 1; j < times.size(); ++j) {
            RunningStats diff;
            for (const auto& r : runs)
                diff.add(static_cast<double>(r.snapshots[j].size()) - static_cast<double>(r.snapshots[0].size()) * std::exp(-times[j]));
            CHECK(std::fabs(diff.mean()) < 3.0 * diff.se());
        }
    }
}
