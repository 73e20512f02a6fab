#include "critmix/error.hpp"
#include "critmix/induced.hpp"
#include "critmix/orbit.hpp"

#include <doctest.h>

#include <cmath>

using namespace critmix;

namespace {

MapFamily reference()
{
    return MapFamily({MapSpec::good(2), MapSpec::bad(2)}, {0.6, 0.4});
}

} // namespace

TEST_CASE("hand-iterated trajectory")
{
    const MapFamily f = reference();
    const Trajectory t = iterate(f, Word{0, 0}, 0.6, 2);
    REQUIRE(t.points.size() == 3);
    CHECK(t.points[1] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(t.points[2] == doctest::Approx(0.64).epsilon(1e-14));
    CHECK(t.symbols == Word{0, 0});
}

TEST_CASE("zero steps keeps only the start")
{
    const Trajectory t = iterate(reference(), Word{}, 0.37, 0);
    CHECK(t.points == std::vector<double>{0.37});
    CHECK(t.symbols.empty());
}

TEST_CASE("all-bad orbit squares the gap")
{
    const Trajectory t = iterate(reference(), Word{1, 1, 1}, 0.25, 3);
    const double expect[] = {0.5, 0.25, 0.0625, 0.00390625};
    for (int k = 0; k < 4; ++k)
        CHECK(1.0 - 2.0 * t.points[static_cast<std::size_t>(k)] == doctest::Approx(expect[k]).epsilon(1e-14));
}

TEST_CASE("word shorter than the orbit")
{
    CHECK_THROWS_AS(iterate(reference(), Word{0}, 0.3, 2), Error);
}

TEST_CASE("trajectory matches pointwise evaluation away from one half")
{
    const MapFamily f = reference();
    const SymbolStream om(f, RngSeed{9, 0});
    const Trajectory t = iterate(f, om, 0.61, 200);
    for (std::size_t k = 0; k + 1 < t.points.size(); ++k) {
        const double x = t.points[k];
        if (std::abs(x - 0.5) < 1e-6 || x > 1.0 - 1e-9)
            continue;
        CHECK(eval_map(f.spec(t.symbols[k]), x) == doctest::Approx(t.points[k + 1]).epsilon(1e-9));
    }
}

TEST_CASE("fast-forward through the doubling run")
{
    const double x = 1.0 - std::ldexp(1.0, -10);
    const RightBlock rb = fast_forward_right(x, 1'000'000);
    double y = x;
    std::int64_t steps = 0;
    while (y >= 0.75) {
        y = 2.0 * y - 1.0;
        ++steps;
    }
    CHECK(rb.steps == steps);
    CHECK(rb.x_out == y);
    CHECK(rb.x_out >= 0.5);
    CHECK(rb.x_out <= 0.75);

    const RightBlock b8 = fast_forward_right(0.8, 1'000'000);
    CHECK(b8.steps == 1);
    CHECK(b8.x_out == doctest::Approx(0.6));

    const RightBlock b75 = fast_forward_right(0.75, 1'000'000);
    CHECK(b75.steps == 1);
    CHECK(b75.x_out == 0.5);
    CHECK(b75.boundary);

    const RightBlock inside = fast_forward_right(0.6, 1'000'000);
    CHECK(inside.steps == 0);
    CHECK_THROWS_AS(fast_forward_right(1.0, 1'000'000), Error);
    CHECK_THROWS_AS(fast_forward_right(0.3, 1'000'000), Error);
}

TEST_CASE("birkhoff sums")
{
    const MapFamily f = reference();
    const SymbolStream om(f, RngSeed{3, 0});
    const Trajectory t = iterate(f, om, 0.6, 100);
    const PointFunction one = [](const SymbolStream&, std::uint64_t, double) { return 1.0; };
    const PointFunction xcoord = [](const SymbolStream&, std::uint64_t, double x) { return x; };
    CHECK(birkhoff_sum(one, om, t, 100) == 100.0);
    CHECK(birkhoff_sum(xcoord, om, t, 1) == 0.6);
}

TEST_CASE("window visits equal partition hits")
{
    const MapFamily f = reference();
    const SymbolStream om(f, RngSeed{5, 0});
    const double x0 = window_start(om, 0);
    const std::uint64_t n = 20000;
    const Trajectory t = iterate(f, om, x0, n);
    const PointFunction ind = [](const SymbolStream&, std::uint64_t, double x) {
        return (x > 0.5 && x < 0.75) ? 1.0 : 0.0;
    };
    const double visits = birkhoff_sum(ind, om, t, n);

    double returns = 0.0;
    std::uint64_t time = 0;
    Point p = Point::from_x(x0);
    while (true) {
        ++returns;
        const FastReturn r = next_return(f, om, time, p);
        REQUIRE(r.status == ReturnStatus::Ok);
        time += static_cast<std::uint64_t>(r.phi);
        if (time >= n)
            break;
        p = r.out;
    }
    CHECK(visits == returns);
}

TEST_CASE("walker agrees with plain stepping")
{
    const MapFamily f = reference();
    const SymbolStream om(f, RngSeed{8, 0});
    const double x0 = 0.55;
    const Trajectory t = iterate(f, om, x0, 5000);
    Walker w(f, om, x0);
    std::vector<std::uint64_t> hits;
    while (w.advance_to_window(5001)) {
        hits.push_back(w.time());
        w.step();
    }
    std::vector<std::uint64_t> plain;
    for (std::uint64_t k = 0; k < t.states.size(); ++k)
        if (t.states[k].in_window())
            plain.push_back(k);
    CHECK(hits == plain);
}
