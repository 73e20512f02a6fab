#include "critmix/error.hpp"
#include "critmix/induced.hpp"
#include "critmix/orbit.hpp"
#include "critmix/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace critmix;

namespace {

MapFamily reference()
{
    return MapFamily({MapSpec::good(2), MapSpec::bad(2)}, {0.6, 0.4});
}

Observable bump(const MapFamily& f, double lo = 0.5625, double hi = 0.6875)
{
    ObservableParams p;
    p.lo = lo;
    p.hi = hi;
    return Observable::make(f, ObservableKind::BumpX, p);
}

Observable constant(const MapFamily& f, double v)
{
    ObservableParams p;
    p.value = v;
    return Observable::make(f, ObservableKind::Constant, p);
}

CorrelationSeries synthetic(const std::vector<std::int64_t>& ns, auto&& fn, double se)
{
    CorrelationSeries s;
    s.n_values = ns;
    for (std::int64_t n : ns) {
        s.estimates.push_back(fn(static_cast<double>(n)));
        s.stderrs.push_back(se);
    }
    return s;
}

std::string error_code(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST_CASE("bump observable")
{
    const MapFamily f = reference();
    const Observable h = bump(f);
    const SymbolStream om(f, RngSeed{1, 0});
    CHECK(h(om, 0, 0.625) == doctest::Approx(1.0));
    CHECK(h(om, 0, 0.59375) == doctest::Approx(0.25));
    CHECK(h(om, 0, 0.5625) == 0.0);
    CHECK(h(om, 0, 0.3) == 0.0);
    CHECK(h.window_supported());
    CHECK(h.thm14_compatible());
    CHECK(h.holder_constant() == doctest::Approx(32.0));
    CHECK(h.integral(f, DensityGrid::uniform(64)) == doctest::Approx(2.0 / 3.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("indicator on the whole interval is flagged")
{
    const MapFamily f = reference();
    ObservableParams p;
    p.lo = 0.0;
    p.hi = 1.0;
    const Observable h = Observable::make(f, ObservableKind::IndicatorBV, p);
    CHECK_FALSE(h.thm14_compatible());
    CHECK_FALSE(h.window_supported());
    CHECK(std::isinf(h.holder_constant()));
    CHECK(h.variation_bound() == 2.0);
}

TEST_CASE("invalid observable parameters")
{
    const MapFamily f = reference();
    ObservableParams p;
    p.lo = 0.7;
    p.hi = 0.6;
    CHECK(error_code([&] { Observable::make(f, ObservableKind::BumpX, p); }) == "invalid_observable");
    ObservableParams q;
    q.depth = 1;
    q.coefficients = {1.0};
    CHECK(error_code([&] { Observable::make(f, ObservableKind::ProductCylinderBump, q); }) == "invalid_observable");
    ObservableParams a;
    a.alpha = 0.0;
    CHECK(error_code([&] { Observable::make(f, ObservableKind::BumpX, a); }) == "invalid_observable");
}

TEST_CASE("cylinder bump certificate for a good first symbol")
{
    const MapFamily f = reference();
    ObservableParams p;
    p.depth = 1;
    p.coefficients = {1.0, 0.0};
    const Observable h = Observable::make(f, ObservableKind::ProductCylinderBump, p);
    CHECK(h.holder_constant() == doctest::Approx(std::max(32.0, 2.0)));
    CHECK(h(SymbolStream::fixed(Word{0}), 0, 0.625) == doctest::Approx(1.0));
    CHECK(h(SymbolStream::fixed(Word{1}), 0, 0.625) == 0.0);
}

TEST_CASE("Hoelder certificate holds on random pairs")
{
    const MapFamily f({MapSpec::good(2), MapSpec::bad(2), MapSpec::bad(3)}, {0.5, 0.3, 0.2});
    struct Case {
        int depth;
        double alpha;
        std::vector<double> coef;
    };
    std::vector<Case> cases{{1, 1.0, {1.0, 0.0, 0.0}}, {2, 0.5, {}}, {3, 0.8, {}}};
    CounterRng rng(RngSeed{99, 0});
    std::uint64_t k = 0;
    for (Case& c : cases) {
        if (c.coef.empty()) {
            c.coef.resize(static_cast<std::size_t>(std::pow(3, c.depth)));
            for (double& v : c.coef)
                v = 4.0 * rng.uniform(k++) - 2.0;
        }
        ObservableParams p;
        p.depth = c.depth;
        p.alpha = c.alpha;
        p.coefficients = c.coef;
        const Observable h = Observable::make(f, ObservableKind::ProductCylinderBump, p);
        const double C = h.holder_constant();
        double worst = 0.0;
        for (int i = 0; i < 100000; ++i) {
            const SymbolStream a(f, RngSeed{7, static_cast<std::uint64_t>(i)});
            const bool same_prefix = rng.uniform(k++) < 0.5;
            const SymbolStream b = same_prefix ? a : SymbolStream(f, RngSeed{8, static_cast<std::uint64_t>(i)});
            const double x = 0.55 + 0.15 * rng.uniform(k++);
            const double y = rng.uniform(k++) < 0.5 ? x + 0.01 * (rng.uniform(k++) - 0.5)
                                                    : 0.55 + 0.15 * rng.uniform(k++);
            const double d = product_metric(a, 0, x, b, 0, y, 64);
            if (d == 0.0)
                continue;
            const double ratio = std::abs(h(a, 0, x) - h(b, 0, y)) / std::pow(d, c.alpha);
            worst = std::max(worst, ratio);
        }
        CHECK(worst <= C);
        CHECK(worst > 0.0);
    }
}

TEST_CASE("observable JSON round trip")
{
    const MapFamily f = reference();
    const Observable h = bump(f).plus(bump(f, 0.52, 0.73), -0.4).plus(constant(f, 0.25), 1.0);
    const Observable g = Observable::from_json(f, nlohmann::json::parse(h.to_json().dump()));
    CHECK(g.to_json() == h.to_json());
    const SymbolStream om(f, RngSeed{1, 0});
    for (double x : {0.1, 0.55, 0.6, 0.7, 0.9})
        CHECK(g(om, 0, x) == h(om, 0, x));
}

TEST_CASE("constants are uncorrelated")
{
    const MapFamily f = reference();
    const Observable one = constant(f, 1.0);
    CorrelationOptions o;
    o.budget = 200'000;
    o.burn_in = 1000;
    const auto cs = correlation_series(f, one, one, {0, 1, 5, 20}, o, RngSeed{1, 0});
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(cs.stderrs[k] > 0.0);
        CHECK(std::abs(cs.estimates[k]) <= cs.stderrs[k]);
    }
}

TEST_CASE("lag zero is the plug-in variance")
{
    const MapFamily f = reference();
    const Observable h = bump(f);
    CorrelationOptions o;
    o.budget = 3'200'000;
    o.burn_in = 1000;
    const auto cs = correlation_series(f, h, h, {0}, o, RngSeed{2, 0});
    CHECK(cs.estimates[0] > 0.0);

    std::vector<double> per;
    for (std::uint64_t b = 0; b < 32; ++b) {
        const SymbolStream om(f, RngSeed{2, 0}.substream(b));
        Walker w(f, om, window_start(om, 0));
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::uint64_t t = 0; t < 1000 + 100'000; ++t) {
            if (t >= 1000) {
                const double v = h(om, t, w.x());
                s1 += v;
                s2 += v * v;
            }
            w.step();
        }
        per.push_back(s2 / 100'000.0 - (s1 / 100'000.0) * (s1 / 100'000.0));
    }
    const double direct = std::accumulate(per.begin(), per.end(), 0.0) / 32.0;
    CHECK(cs.estimates[0] == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("ensemble needs an acs regime")
{
    const MapFamily f({MapSpec::good(2), MapSpec::bad(2)}, {0.4, 0.6});
    const Observable h = bump(f);
    CorrelationOptions o;
    o.method = CorrelationMethod::Ensemble;
    const DensityGrid d = DensityGrid::uniform(64);
    CHECK(error_code([&] { correlation_series(f, h, h, {1}, o, RngSeed{1, 0}, &d); }) == "no_stationary_density");
    try {
        correlation_series(f, h, h, {1}, o, RngSeed{1, 0}, &d);
    } catch (const Error& e) {
        CHECK(e.exit_code() == 2);
    }
}

TEST_CASE("estimators agree across methods")
{
    const MapFamily f = reference();
    const Observable h = bump(f);
    const std::vector<std::int64_t> lags{0, 10, 50};
    CorrelationOptions ts;
    ts.budget = 200'000'000;
    const auto a = correlation_series(f, h, h, lags, ts, RngSeed{3, 0});
    const DensityGrid d = density_from_orbit(f, RngSeed{4, 0}, 100'000'000, 1024, 10'000);
    CorrelationOptions en;
    en.method = CorrelationMethod::Ensemble;
    en.budget = 20'000'000;
    const auto b = correlation_series(f, h, h, lags, en, RngSeed{5, 0}, &d);
    for (std::size_t k = 0; k < lags.size(); ++k) {
        const double se = std::hypot(a.stderrs[k], b.stderrs[k]);
        CHECK(std::abs(a.estimates[k] - b.estimates[k]) <= 3.0 * se);
    }
}

TEST_CASE("centering by a constant does not change correlations")
{
    const MapFamily f = reference();
    const Observable h = bump(f);
    CorrelationOptions o;
    o.budget = 3'200'000;
    o.burn_in = 1000;
    const std::vector<std::int64_t> lags{1, 3, 10};
    const auto raw = correlation_series(f, h, h, lags, o, RngSeed{6, 0});
    const Observable hc = h.plus(constant(f, 1.0), -raw.mean_h);
    const auto cen = correlation_series(f, h, hc, lags, o, RngSeed{6, 0});
    CHECK_FALSE(cen.induced);
    for (std::size_t k = 0; k < lags.size(); ++k)
        CHECK(std::abs(raw.estimates[k] - cen.estimates[k]) <= 3.0 * std::hypot(raw.stderrs[k], cen.stderrs[k]));
}

TEST_CASE("polynomial fit sanity")
{
    std::vector<std::int64_t> ns;
    for (std::int64_t n = 10; n <= 500; n = n * 5 / 4)
        ns.push_back(n);
    const auto s = synthetic(ns, [](double n) { return 3.0 * std::pow(n, -0.32); }, 1e-6);
    const DecayFit fit = fit_decay(s, DecayModel::Poly, 10, 500);
    REQUIRE(fit.ok());
    CHECK(fit.exponent == doctest::Approx(-0.32).epsilon(0.01 / 0.32));
    CHECK(fit.envelope == doctest::Approx(-0.32).epsilon(1e-6));

    const auto e = synthetic(ns, [](double n) { return 0.5 * std::exp(-0.02 * n); }, 1e-12);
    const ModelComparison mc = compare_models(e, 10, 500);
    CHECK(mc.preferred == "exp");
    CHECK(mc.exp.exponent == doctest::Approx(-0.02));
}

TEST_CASE("noise floor yields insufficient signal")
{
    std::vector<std::int64_t> ns{10, 20, 40, 80, 160, 320};
    const auto s = synthetic(ns, [](double n) { return 1e-3 / n; }, 1e-4);
    const DecayFit fit = fit_decay(s, DecayModel::Poly, 10, 500);
    CHECK(fit.status == "insufficient_signal");
    CHECK_FALSE(fit.ok());
}

TEST_CASE("exponential decay for a single good map")
{
    const MapFamily f = MapFamily::relaxed({MapSpec::good(2)}, {1.0});
    ObservableParams p;
    p.lo = 0.5;
    p.hi = 0.75;
    const Observable ind = Observable::make(f, ObservableKind::IndicatorBV, p);
    std::vector<std::int64_t> lags;
    for (std::int64_t n = 2; n <= 40; ++n)
        lags.push_back(n);
    CorrelationOptions o;
    o.budget = 200'000'000;
    const auto cs = correlation_series(f, ind, ind, lags, o, RngSeed{7, 0});
    const ModelComparison mc = compare_models(cs, 2, 40);
    REQUIRE(mc.poly.ok());
    REQUIRE(mc.exp.ok());
    CHECK(mc.exp.rss < mc.poly.rss);
}

TEST_CASE("zero observable has a degenerate CLT")
{
    const MapFamily f = reference();
    CltOptions o;
    o.series_steps = 1'000'000;
    o.max_lag = 20;
    o.burn_in = 1000;
    const CltReport r = clt_experiment(f, Observable::zero(), 1000, 100, RngSeed{1, 0},
                                       DensityGrid::uniform(64), o);
    for (double v : r.values)
        CHECK(v == 0.0);
    CHECK(r.sigma2_series == 0.0);
}

TEST_CASE("CLT regime checks")
{
    const MapFamily hot({MapSpec::good(2), MapSpec::bad(2)}, {0.4, 0.6});
    CHECK(error_code([&] { clt_experiment(hot, bump(hot), 100, 10, RngSeed{1, 0}, DensityGrid::uniform(64)); })
          == "no_stationary_density");
    const MapFamily f = reference();
    ObservableParams p;
    p.lo = 0.0;
    p.hi = 1.0;
    const Observable wide = Observable::make(f, ObservableKind::IndicatorBV, p);
    CHECK_FALSE(f.constants().strong_clt);
    CHECK(error_code([&] { clt_experiment(f, wide, 100, 10, RngSeed{1, 0}, DensityGrid::uniform(64)); })
          == "clt_hypothesis");
}

TEST_CASE("CLT variance is stable when n doubles")
{
    const MapFamily f = reference();
    const Observable h = center_observable(f, bump(f), bump(f, 0.52, 0.73), RngSeed{2, 0}, 200'000'000);
    const DensityGrid d = DensityGrid::uniform(256);
    CltOptions o;
    o.series_steps = 10'000'000;
    o.max_lag = 200;
    const CltReport a = clt_experiment(f, h, 10'000, 10'000, RngSeed{3, 0}, d, o);
    const CltReport b = clt_experiment(f, h, 20'000, 10'000, RngSeed{4, 0}, d, o);
    CHECK(std::abs(b.variance - a.variance) < 0.1 * a.variance);
    CHECK(std::abs(a.skewness) < 0.1);
}
