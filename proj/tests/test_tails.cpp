#include "critmix/error.hpp"
#include "critmix/tails.hpp"

#include <doctest.h>

#include <cmath>

using namespace critmix;

namespace {

MapFamily reference()
{
    return MapFamily({MapSpec::good(2), MapSpec::bad(2)}, {0.6, 0.4});
}

} // namespace

TEST_CASE("lower series for a single bad map")
{
    const MapFamily f = reference();
    for (std::int64_t n : {1, 2, 5, 9}) {
        double direct = 0.0;
        for (int k = 0; k <= 20; ++k)
            direct += std::pow(0.4, k) * std::exp2(-static_cast<double>(std::max<std::int64_t>(n - 1 - k, 1)) / (std::exp2(k) * 2.0));
        CHECK(tail_lower(f, n, 20).value == doctest::Approx(0.25 * 0.6 * direct).epsilon(1e-13));
    }
    const SeriesValue v = tail_lower(f, 3, 20);
    CHECK(v.truncation_error == doctest::Approx(0.25 * 0.6 * std::pow(0.4, 21) / 0.6));
}

TEST_CASE("lower series is non-increasing")
{
    const MapFamily f = reference();
    double prev = tail_lower(f, 1).value;
    for (std::int64_t n = 2; n < 200; ++n) {
        const double v = tail_lower(f, n).value;
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("truncation depth from s")
{
    CHECK(reference().constants().s == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(default_j_max(reference()) == 80);
}

TEST_CASE("upper dominates lower and vanishes")
{
    const MapFamily f = reference();
    for (std::int64_t n = 1; n <= 40; ++n)
        CHECK(tail_upper(f, n).value >= tail_lower(f, n).value);
    CHECK(tail_upper(f, 100000).value < 0.05 * tail_upper(f, 100).value);
}

TEST_CASE("exact tail at small n")
{
    const MapFamily f = reference();
    CHECK(tail_exact(f, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(tail_exact(f, 2) == doctest::Approx(0.25 - 0.6 * 0.25 * (std::sqrt(0.5) - 0.5)).epsilon(1e-12));
    const auto table = tail_exact_table(f, 12);
    for (std::int64_t n = 1; n <= 12; ++n)
        CHECK(table[static_cast<std::size_t>(n)] == doctest::Approx(tail_exact(f, n)).epsilon(1e-12));
}

TEST_CASE("sandwich up to n = 12")
{
    for (const MapFamily& f : {reference(),
                               MapFamily({MapSpec::good(2), MapSpec::bad(2), MapSpec::bad(3)}, {0.5, 0.3, 0.2}),
                               MapFamily({MapSpec::good(1.5), MapSpec::good(3), MapSpec::bad(2.5)}, {0.4, 0.3, 0.3})}) {
        const auto exact = tail_exact_table(f, 12);
        for (std::int64_t n = 1; n <= 12; ++n) {
            const double ex = exact[static_cast<std::size_t>(n)];
            CHECK(tail_lower(f, n).value <= ex);
            CHECK(ex <= tail_upper(f, n).value);
        }
    }
}

TEST_CASE("Monte Carlo survival")
{
    const MapFamily f = reference();
    const TailMc one = tail_mc(f, {1}, 1000, RngSeed{3, 0});
    CHECK(one.survival[0] == 1.0);

    const TailMc mc = tail_mc(f, {6}, 100000, RngSeed{4, 0});
    CHECK(std::abs(mc.survival[0] - 4.0 * tail_exact(f, 6)) <= 3.0 * mc.stderr_[0]);
}

TEST_CASE("tail slope for a single bad map")
{
    const MapFamily f = reference();
    std::vector<std::int64_t> ns;
    for (double n = 20; n <= 2000; n *= 1.25)
        ns.push_back(static_cast<std::int64_t>(n));
    const TailMc mc = tail_mc(f, ns, 1'000'000, RngSeed{5, 0});
    const SlopeFit fit = fit_tail_exponent(ns, mc.survival, 20, 2000);
    const double g = f.constants().gamma1;
    CHECK(fit.slope >= g - 1.0 - 0.15);
    CHECK(fit.slope <= g - 1.0 + 0.15);
}

TEST_CASE("tail above the summable rate when theta exceeds one")
{
    const MapFamily f({MapSpec::good(2), MapSpec::bad(2)}, {0.4, 0.6});
    REQUIRE(f.constants().theta == doctest::Approx(1.2));
    std::vector<std::int64_t> ns;
    for (double n = 20; n <= 2000; n *= 1.25)
        ns.push_back(static_cast<std::int64_t>(n));
    const TailMc mc = tail_mc(f, ns, 200'000, RngSeed{6, 0});
    const SlopeFit fit = fit_tail_exponent(ns, mc.survival, 20, 2000);
    CHECK(fit.slope > -1.0);
}

TEST_CASE("slope fit sanity")
{
    std::vector<std::int64_t> ns;
    std::vector<double> s;
    for (std::int64_t n = 10; n <= 1000; n *= 2) {
        ns.push_back(n);
        s.push_back(std::pow(static_cast<double>(n), -1.5));
    }
    CHECK(fit_tail_exponent(ns, s, 1, 100000).slope == doctest::Approx(-1.5).epsilon(1e-6));
    CHECK_THROWS_AS(fit_tail_exponent({10, 20, 40, 80}, {1, 0.5, 0.25, 0.125}, 1, 1000), Error);
}

TEST_CASE("return time samples are deterministic and parallel-safe")
{
    const MapFamily f = reference();
    const auto a = sample_return_times(f, 5000, RngSeed{8, 0}, 1);
    const auto b = sample_return_times(f, 5000, RngSeed{8, 0}, 4);
    CHECK(a == b);
    for (auto t : a)
        CHECK((t == -1 || t >= 2));
}
