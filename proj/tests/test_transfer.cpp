#include "critmix/error.hpp"
#include "critmix/transfer.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace critmix;

namespace {

MapFamily reference()
{
    return MapFamily({MapSpec::good(2), MapSpec::bad(2)}, {0.6, 0.4});
}

MapFamily doubling()
{
    return MapFamily::relaxed({MapSpec::good(1)}, {1.0});
}

} // namespace

TEST_CASE("doubling map matrix")
{
    const std::size_t n = 64;
    const UlamMatrix m = build_ulam(doubling(), n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = (2 * i) % n;
        CHECK(m.entry(i, a) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(m.entry(i, a + 1) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(m.row_sum(i) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("row sums")
{
    const UlamMatrix m = build_ulam(reference(), 1024);
    for (std::size_t i = 0; i < 1024; ++i)
        CHECK(std::abs(m.row_sum(i) - 1.0) <= 1e-12);
}

TEST_CASE("aggregation commutes with refinement")
{
    const MapFamily f = reference();
    const UlamMatrix coarse = build_ulam(f, 64);
    const UlamMatrix fine = build_ulam(f, 128);
    double worst = 0.0;
    for (std::size_t I = 0; I < 64; ++I)
        for (std::size_t J = 0; J < 64; ++J) {
            double agg = 0.0;
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = 0; b < 2; ++b)
                    agg += fine.entry(2 * I + a, 2 * J + b);
            worst = std::max(worst, std::abs(0.5 * agg - coarse.entry(I, J)));
        }
    CHECK(worst <= 1e-10);
}

TEST_CASE("stationary density of the doubling map is uniform")
{
    const StationaryResult st = stationary_density(build_ulam(doubling(), 256), 1e-13);
    for (std::size_t i = 0; i < 256; ++i)
        CHECK(st.density.density(i) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(stationarity_residual(doubling(), DensityGrid::uniform(256)) <= 1e-10);
}

TEST_CASE("stationary density of the reference family")
{
    const MapFamily f = reference();
    const UlamMatrix m = build_ulam(f, 512);
    const double tol = 1e-12;
    const StationaryResult st = stationary_density(m, tol);
    CHECK(st.converged);
    double total = 0.0;
    double min_window = 1e300;
    for (std::size_t i = 0; i < 512; ++i) {
        total += st.density.masses[i];
        if (i >= 256 && i < 384)
            min_window = std::min(min_window, st.density.density(i));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(min_window > 0.0);
    CHECK(stationarity_residual(m, st.density) <= 10.0 * tol);
}

TEST_CASE("uniform density is far from stationary for a non-doubling family")
{
    const MapFamily f({MapSpec::good(2), MapSpec::bad(3)}, {0.7, 0.3});
    CHECK(stationarity_residual(f, DensityGrid::uniform(1024)) > 0.01);
}

TEST_CASE("non-convergence is reported")
{
    const UlamMatrix m = build_ulam(reference(), 128);
    CHECK_THROWS_AS(stationary_density(m, 1e-30, 3), Error);
    const StationaryResult st = stationary_density(m, 1e-30, 3, true);
    CHECK_FALSE(st.converged);
}

TEST_CASE("orbit histogram matches ulam for the good map")
{
    const MapFamily f = MapFamily::relaxed({MapSpec::good(2)}, {1.0});
    const DensityGrid u = stationary_density(build_ulam(f, 1024), 1e-13).density;
    const DensityGrid o = density_from_orbit(f, RngSeed{1, 0}, 20'000'000, 1024, 1000);
    CHECK(coarsen(u, 32).l1_distance(coarsen(o, 32)) < 0.05);
}

TEST_CASE("orbit histogram is deterministic across workers")
{
    const MapFamily f = reference();
    const DensityGrid a = density_from_orbit(f, RngSeed{2, 0}, 1'000'000, 256, 1000, 1);
    const DensityGrid b = density_from_orbit(f, RngSeed{2, 0}, 1'000'000, 256, 1000, 4);
    CHECK(a.masses == b.masses);
}

TEST_CASE("quantile inverts the cumulative mass")
{
    DensityGrid d = DensityGrid::uniform(4);
    CHECK(d.quantile(0.3) == doctest::Approx(0.3));
    d.masses = {0.0, 0.5, 0.5, 0.0};
    CHECK(d.quantile(0.25) == doctest::Approx(0.375));
    CHECK(d.cell_of(1.0) == 3);
    CHECK(d.cell_of(0.5) == 2);
}

TEST_CASE("coarsening preserves mass")
{
    const DensityGrid fine = stationary_density(build_ulam(reference(), 256), 1e-12).density;
    const DensityGrid c = coarsen(fine, 4);
    CHECK(c.grid_size == 64);
    for (std::size_t i = 0; i < 64; ++i)
        CHECK(c.masses[i] == doctest::Approx(fine.masses[4 * i] + fine.masses[4 * i + 1] + fine.masses[4 * i + 2] + fine.masses[4 * i + 3]));
}

TEST_CASE("ulam and orbit densities agree in L1")
{
    const MapFamily f = reference();
    const DensityGrid ulam = stationary_density(build_ulam(f, 256), 1e-12).density;
    const DensityGrid orbit = density_from_orbit(f, RngSeed{3, 0}, 100'000'000, 256, 10'000);
    CHECK(ulam.l1_distance(orbit) < 0.05);
}

TEST_CASE("time near one half under theta above one")
{
    const MapFamily f({MapSpec::good(2), MapSpec::bad(2)}, {0.4, 0.6});
    const double a = time_near_half(f, RngSeed{4, 0}, 100'000, 1000, 0.01);
    const double b = time_near_half(f, RngSeed{4, 0}, 10'000'000, 1000, 0.01);
    CHECK(b > a);
}
