#include "critmix/stats.hpp"

#include "critmix/error.hpp"
#include "critmix/fit.hpp"
#include "critmix/induced.hpp"
#include "critmix/orbit.hpp"
#include "critmix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>

namespace critmix {

namespace {

// Inverse CDF of a piecewise-constant density, optionally restricted to a cell range.
class CdfSampler {
public:
    CdfSampler(const DensityGrid& d, std::size_t first, std::size_t last)
        : grid_(d.grid_size), first_(first)
    {
        cum_.reserve(last - first + 1);
        cum_.push_back(0.0);
        for (std::size_t i = first; i < last; ++i)
            cum_.push_back(cum_.back() + std::max(0.0, d.masses[i]));
        if (!(cum_.back() > 0.0))
            throw Error(ErrorKind::Domain, "empty_density", "density has no mass on the sampled range");
    }

    double total() const noexcept { return cum_.back(); }

    double operator()(double u) const
    {
        const double target = u * cum_.back();
        auto it = std::upper_bound(cum_.begin() + 1, cum_.end(), target);
        if (it == cum_.end())
            --it;
        const auto k = static_cast<std::size_t>(it - cum_.begin()) - 1;
        const double m = cum_[k + 1] - cum_[k];
        const double frac = m > 0.0 ? std::clamp((target - cum_[k]) / m, 0.0, 1.0) : 0.5;
        const double x = (static_cast<double>(first_ + k) + frac) / static_cast<double>(grid_);
        return std::clamp(x, 0.0, std::nextafter(1.0, 0.0));
    }

private:
    std::size_t grid_;
    std::size_t first_;
    std::vector<double> cum_;
};

struct LagTable {
    std::int64_t max_lag = 0;
    std::vector<int> index;

    explicit LagTable(const std::vector<std::int64_t>& n_values)
    {
        for (std::int64_t n : n_values) {
            if (n < 0)
                throw Error(ErrorKind::Domain, "bad_lag", "lags must be nonnegative");
            max_lag = std::max(max_lag, n);
        }
        index.assign(static_cast<std::size_t>(max_lag) + 1, -1);
        for (std::size_t k = 0; k < n_values.size(); ++k)
            index[static_cast<std::size_t>(n_values[k])] = static_cast<int>(k);
    }
};

struct ChainSums {
    std::vector<double> prod;
    double sum_f = 0.0;
    double sum_h = 0.0;
    std::uint64_t steps = 0;
};

double start_point(const SymbolStream& omega, const CdfSampler* sampler)
{
    if (sampler)
        return (*sampler)(omega.aux_uniform(0));
    return window_start(omega, 0);
}

// Timeseries sums with the walker jumping between visits to (1/2,3/4).
ChainSums induced_chain(const MapFamily& family, const Observable& f, const Observable& h,
                        const std::vector<std::int64_t>& n_values, const LagTable& lags,
                        const SymbolStream& omega, double x0, std::uint64_t burn,
                        std::uint64_t steps)
{
    ChainSums s;
    s.prod.assign(n_values.size(), 0.0);
    s.steps = steps;
    struct Visit {
        std::uint64_t t;
        double h;
    };
    std::deque<Visit> ring;
    const std::uint64_t end = burn + steps;
    const auto max_lag = static_cast<std::uint64_t>(lags.max_lag);
    Walker w(family, omega, x0);
    while (w.advance_to_window(end)) {
        const std::uint64_t t = w.time();
        if (t >= burn) {
            const double x = w.x();
            const double fv = f(omega, t, x);
            const double hv = h(omega, t, x);
            s.sum_f += fv;
            s.sum_h += hv;
            while (!ring.empty() && t - ring.front().t > max_lag)
                ring.pop_front();
            if (fv != 0.0) {
                for (const Visit& v : ring) {
                    const int k = lags.index[static_cast<std::size_t>(t - v.t)];
                    if (k >= 0)
                        s.prod[static_cast<std::size_t>(k)] += fv * v.h;
                }
                if (lags.index[0] >= 0)
                    s.prod[static_cast<std::size_t>(lags.index[0])] += fv * hv;
            }
            if (hv != 0.0)
                ring.push_back({t, hv});
        }
        w.step();
    }
    return s;
}

// Timeseries sums stepping every iterate.
ChainSums general_chain(const MapFamily& family, const Observable& f, const Observable& h,
                        const std::vector<std::int64_t>& n_values, const LagTable& lags,
                        const SymbolStream& omega, double x0, std::uint64_t burn,
                        std::uint64_t steps)
{
    ChainSums s;
    s.prod.assign(n_values.size(), 0.0);
    s.steps = steps;
    const std::size_t span = static_cast<std::size_t>(lags.max_lag) + 1;
    std::vector<double> past(span, 0.0);
    const std::uint64_t end = burn + steps;
    Walker w(family, omega, x0);
    for (std::uint64_t t = 0; t < end; ++t) {
        if (t >= burn) {
            const double x = w.x();
            const double fv = f(omega, t, x);
            const double hv = h(omega, t, x);
            s.sum_f += fv;
            s.sum_h += hv;
            past[t % span] = hv;
            const std::uint64_t seen = t - burn;
            if (fv != 0.0) {
                for (std::size_t k = 0; k < n_values.size(); ++k) {
                    const auto n = static_cast<std::uint64_t>(n_values[k]);
                    if (n <= seen)
                        s.prod[k] += fv * past[(t - n) % span];
                }
            }
        }
        w.step();
    }
    return s;
}

double stderr_floor(double scale)
{
    return 1e-14 * scale + std::numeric_limits<double>::min();
}

void finish_series(CorrelationSeries& out, const std::vector<std::vector<double>>& per_batch,
                   const std::vector<double>& scale)
{
    const std::size_t nb = per_batch.size();
    const std::size_t nl = out.n_values.size();
    out.estimates.assign(nl, 0.0);
    out.stderrs.assign(nl, 0.0);
    for (std::size_t k = 0; k < nl; ++k) {
        double m = 0.0;
        for (const auto& b : per_batch)
            m += b[k];
        m /= static_cast<double>(nb);
        double v = 0.0;
        for (const auto& b : per_batch)
            v += (b[k] - m) * (b[k] - m);
        const double se = nb > 1 ? std::sqrt(v / static_cast<double>(nb - 1) / static_cast<double>(nb))
                                 : 0.0;
        out.estimates[k] = m;
        out.stderrs[k] = std::max(se, stderr_floor(scale[k]));
    }
    out.batch_estimates = per_batch;
}

CorrelationSeries timeseries(const MapFamily& family, const Observable& f, const Observable& h,
                             const std::vector<std::int64_t>& n_values,
                             const CorrelationOptions& opts, RngSeed seed,
                             const DensityGrid* density)
{
    const LagTable lags(n_values);
    const std::size_t nb = opts.batches;
    const std::uint64_t steps = opts.budget / nb;
    if (steps <= static_cast<std::uint64_t>(lags.max_lag))
        throw Error(ErrorKind::Domain, "budget_too_small", "budget per batch must exceed the largest lag");
    const bool induced = f.window_supported() && h.window_supported();
    std::optional<CdfSampler> sampler;
    if (density)
        sampler.emplace(*density, 0, density->grid_size);

    std::vector<ChainSums> sums(nb);
    parallel_chunks(nb, opts.workers, [&](std::size_t b) {
        const SymbolStream omega(family, seed.substream(b));
        const double x0 = start_point(omega, sampler ? &*sampler : nullptr);
        sums[b] = induced ? induced_chain(family, f, h, n_values, lags, omega, x0, opts.burn_in, steps)
                          : general_chain(family, f, h, n_values, lags, omega, x0, opts.burn_in, steps);
    });

    CorrelationSeries out;
    out.n_values = n_values;
    out.method = CorrelationMethod::Timeseries;
    out.induced = induced;
    out.budget = steps * nb;
    std::vector<std::vector<double>> per_batch(nb, std::vector<double>(n_values.size()));
    std::vector<double> scale(n_values.size(), 0.0);
    double sf = 0.0;
    double sh = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        const double T = static_cast<double>(sums[b].steps);
        const double mf = sums[b].sum_f / T;
        const double mh = sums[b].sum_h / T;
        sf += mf;
        sh += mh;
        for (std::size_t k = 0; k < n_values.size(); ++k) {
            const double pm = sums[b].prod[k] / (T - static_cast<double>(n_values[k]));
            per_batch[b][k] = pm - mf * mh;
            scale[k] = std::max(scale[k], std::abs(pm) + std::abs(mf * mh));
        }
    }
    out.mean_f = sf / static_cast<double>(nb);
    out.mean_h = sh / static_cast<double>(nb);
    finish_series(out, per_batch, scale);
    return out;
}

CorrelationSeries ensemble(const MapFamily& family, const Observable& f, const Observable& h,
                           const std::vector<std::int64_t>& n_values,
                           const CorrelationOptions& opts, RngSeed seed, const DensityGrid& density)
{
    const LagTable lags(n_values);
    const std::size_t nb = opts.batches;
    const std::uint64_t per = opts.budget / nb;
    if (per < 2)
        throw Error(ErrorKind::Domain, "budget_too_small", "need at least two samples per batch");
    const std::size_t g = density.grid_size;
    const bool induced = f.window_supported() && h.window_supported() && g % 4 == 0;
    const CdfSampler full(density, 0, g);
    std::optional<CdfSampler> window;
    double mu_y = 1.0;
    if (induced) {
        window.emplace(density, g / 2, 3 * g / 4);
        mu_y = window->total() / full.total();
    }
    const std::size_t nl = n_values.size();
    const auto max_lag = static_cast<std::uint64_t>(lags.max_lag);

    struct Sums {
        std::vector<double> fh;
        std::vector<double> fn;
        double f0 = 0.0;
        double h0 = 0.0;
    };
    std::vector<Sums> sums(nb);
    parallel_chunks(nb, opts.workers, [&](std::size_t b) {
        Sums& s = sums[b];
        s.fh.assign(nl, 0.0);
        s.fn.assign(nl, 0.0);
        for (std::uint64_t i = b * per; i < (b + 1) * per; ++i) {
            const SymbolStream omega(family, seed.substream(i));
            const double x0 = induced ? (*window)(omega.aux_uniform(0)) : full(omega.aux_uniform(0));
            const double h0 = h(omega, 0, x0);
            s.h0 += h0;
            if (induced) {
                s.f0 += f(omega, 0, x0);
                if (h0 == 0.0)
                    continue;
                Walker w(family, omega, x0);
                while (w.advance_to_window(max_lag + 1)) {
                    const std::uint64_t t = w.time();
                    const int k = lags.index[t];
                    if (k >= 0)
                        s.fh[static_cast<std::size_t>(k)] += f(omega, t, w.x()) * h0;
                    w.step();
                }
                continue;
            }
            Walker w(family, omega, x0);
            for (std::uint64_t t = 0; t <= max_lag; ++t) {
                const int k = lags.index[t];
                if (k >= 0) {
                    const double fv = f(omega, t, w.x());
                    s.fn[static_cast<std::size_t>(k)] += fv;
                    s.fh[static_cast<std::size_t>(k)] += fv * h0;
                }
                if (t < max_lag)
                    w.step();
            }
        }
    });

    CorrelationSeries out;
    out.n_values = n_values;
    out.method = CorrelationMethod::Ensemble;
    out.induced = induced;
    out.budget = per * nb;
    std::vector<std::vector<double>> per_batch(nb, std::vector<double>(nl));
    std::vector<double> scale(nl, 0.0);
    double sf = 0.0;
    double sh = 0.0;
    const double N = static_cast<double>(per);
    for (std::size_t b = 0; b < nb; ++b) {
        const Sums& s = sums[b];
        const double mh = s.h0 / N;
        double mf_stat = 0.0;
        if (induced) {
            mf_stat = mu_y * s.f0 / N;
            sf += mf_stat;
            sh += mu_y * mh;
        } else {
            sh += mh;
        }
        for (std::size_t k = 0; k < nl; ++k) {
            if (induced) {
                const double pm = mu_y * s.fh[k] / N;
                per_batch[b][k] = pm - mf_stat * mu_y * mh;
                scale[k] = std::max(scale[k], std::abs(pm) + std::abs(mf_stat * mu_y * mh));
            } else {
                const double pm = s.fh[k] / N;
                const double mf = s.fn[k] / N;
                per_batch[b][k] = pm - mf * mh;
                scale[k] = std::max(scale[k], std::abs(pm) + std::abs(mf * mh));
                if (n_values[k] == 0)
                    sf += mf;
            }
        }
    }
    out.mean_f = sf / static_cast<double>(nb);
    out.mean_h = sh / static_cast<double>(nb);
    finish_series(out, per_batch, scale);
    return out;
}

} // namespace

std::string to_string(CorrelationMethod m)
{
    return m == CorrelationMethod::Ensemble ? "ensemble" : "timeseries";
}

CorrelationMethod correlation_method_from_string(const std::string& s)
{
    if (s == "ensemble")
        return CorrelationMethod::Ensemble;
    if (s == "timeseries")
        return CorrelationMethod::Timeseries;
    throw Error(ErrorKind::Validation, "invalid_method", "method must be ensemble or timeseries");
}

std::string to_string(DecayModel m)
{
    return m == DecayModel::Poly ? "poly" : "exp";
}

CorrelationSeries correlation_series(const MapFamily& family, const Observable& f,
                                     const Observable& h, const std::vector<std::int64_t>& n_values,
                                     const CorrelationOptions& opts, RngSeed seed,
                                     const DensityGrid* density)
{
    if (n_values.empty())
        throw Error(ErrorKind::Domain, "bad_lag", "no lags requested");
    if (opts.batches < 2)
        throw Error(ErrorKind::Domain, "bad_batches", "need at least two batches");
    if (opts.method == CorrelationMethod::Ensemble) {
        if (!(family.constants().theta < 1.0))
            throw Error(ErrorKind::Regime, "no_stationary_density",
                        "ensemble sampling needs theta < 1");
        if (!density)
            throw Error(ErrorKind::Validation, "density_required", "ensemble needs a density");
        return ensemble(family, f, h, n_values, opts, seed, *density);
    }
    return timeseries(family, f, h, n_values, opts, seed, density);
}

std::vector<double> ergodic_means(const MapFamily& family, const std::vector<Observable>& obs,
                                  RngSeed seed, std::uint64_t steps, std::uint64_t burn_in,
                                  unsigned workers)
{
    const bool induced = std::all_of(obs.begin(), obs.end(),
                                     [](const Observable& o) { return o.window_supported(); });
    constexpr std::size_t nb = 32;
    const std::uint64_t per = std::max<std::uint64_t>(1, steps / nb);
    std::vector<std::vector<double>> sums(nb, std::vector<double>(obs.size(), 0.0));
    parallel_chunks(nb, workers, [&](std::size_t b) {
        const SymbolStream omega(family, seed.substream(b));
        Walker w(family, omega, window_start(omega, 0));
        const std::uint64_t end = burn_in + per;
        auto record = [&] {
            const std::uint64_t t = w.time();
            if (t < burn_in)
                return;
            const double x = w.x();
            for (std::size_t i = 0; i < obs.size(); ++i)
                sums[b][i] += obs[i](omega, t, x);
        };
        if (induced) {
            while (w.advance_to_window(end)) {
                record();
                w.step();
            }
        } else {
            while (w.time() < end) {
                record();
                w.step();
            }
        }
    });
    std::vector<double> means(obs.size(), 0.0);
    for (const auto& s : sums)
        for (std::size_t i = 0; i < obs.size(); ++i)
            means[i] += s[i];
    for (double& m : means)
        m /= static_cast<double>(per * nb);
    return means;
}

Observable center_observable(const MapFamily& family, const Observable& h,
                             const Observable& compensator, RngSeed seed, std::uint64_t steps,
                             unsigned workers)
{
    const auto m = ergodic_means(family, {h, compensator}, seed, steps, 100'000, workers);
    if (!(std::abs(m[1]) > 0.0))
        throw Error(ErrorKind::InsufficientSignal, "insufficient_signal",
                    "compensator has zero orbit average");
    return h.plus(compensator, -m[0] / m[1]);
}

DecayFit fit_decay(const CorrelationSeries& series, DecayModel model, std::int64_t n_lo,
                   std::int64_t n_hi)
{
    DecayFit fit;
    fit.model = model;
    std::vector<std::size_t> order(series.n_values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return series.n_values[a] < series.n_values[b]; });
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> ws;
    int misses = 0;
    for (std::size_t k : order) {
        const std::int64_t n = series.n_values[k];
        if (n < n_lo || n > n_hi)
            continue;
        if (model == DecayModel::Poly && n <= 0)
            continue;
        const double c = std::abs(series.estimates[k]);
        if (!(c > 2.0 * series.stderrs[k])) {
            if (++misses == 2)
                break;
            continue;
        }
        misses = 0;
        fit.used.push_back(n);
        xs.push_back(model == DecayModel::Poly ? std::log(static_cast<double>(n))
                                               : static_cast<double>(n));
        ys.push_back(std::log(c));
        ws.push_back(c * c / (series.stderrs[k] * series.stderrs[k]));
    }
    if (xs.size() < min_fit_points) {
        fit.status = "insufficient_signal";
        fit.exponent = std::numeric_limits<double>::quiet_NaN();
        fit.envelope = std::numeric_limits<double>::quiet_NaN();
        fit.aicc = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const LinearFit lf = linear_fit(xs, ys, ws);
    fit.exponent = lf.slope;
    fit.intercept = lf.intercept;
    fit.exponent_stderr = lf.slope_stderr;
    fit.rss = lf.rss;
    fit.aicc = aicc(lf.rss, lf.n, 3);
    double env = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < xs.size(); ++i)
        env = std::max(env, (ys[i] - ys[0]) / (xs[i] - xs[0]));
    fit.envelope = env;
    return fit;
}

ModelComparison compare_models(const CorrelationSeries& series, std::int64_t n_lo,
                               std::int64_t n_hi)
{
    ModelComparison c;
    c.poly = fit_decay(series, DecayModel::Poly, std::max<std::int64_t>(n_lo, 1), n_hi);
    c.exp = fit_decay(series, DecayModel::Exp, std::max<std::int64_t>(n_lo, 1), n_hi);
    if (!c.poly.ok() || !c.exp.ok())
        c.preferred = "insufficient_signal";
    else
        c.preferred = c.exp.aicc < c.poly.aicc ? "exp" : "poly";
    return c;
}

Moments sample_moments(const std::vector<double>& v)
{
    Moments m;
    const auto n = static_cast<double>(v.size());
    if (v.size() < 2)
        return m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double x : v) {
        const double d = x - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m.variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

CltReport clt_experiment(const MapFamily& family, const Observable& h, std::int64_t n,
                         std::int64_t replicas, RngSeed seed, const DensityGrid& density,
                         const CltOptions& opts)
{
    const FamilyConstants& fc = family.constants();
    if (!(fc.theta < 1.0))
        throw Error(ErrorKind::Regime, "no_stationary_density", "the CLT experiment needs theta < 1");
    if (n < 1 || replicas < 2)
        throw Error(ErrorKind::Domain, "bad_samples", "need n >= 1 and at least two replicas");
    CltReport rep;
    rep.n = n;
    const bool window = h.window_supported();
    if (window && h.thm14_compatible())
        rep.hypothesis = "window";
    else if (fc.strong_clt)
        rep.hypothesis = "general";
    else
        throw Error(ErrorKind::Regime, "clt_hypothesis",
                    "general-support observables need theta < 1/l_max");

    const CdfSampler sampler(density, 0, density.grid_size);
    const auto total = static_cast<std::uint64_t>(replicas);
    const auto un = static_cast<std::uint64_t>(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    rep.values.assign(total, 0.0);
    constexpr std::size_t chunks = 64;
    parallel_chunks(chunks, opts.workers, [&](std::size_t c) {
        const std::uint64_t lo = total * c / chunks;
        const std::uint64_t hi = total * (c + 1) / chunks;
        for (std::uint64_t r = lo; r < hi; ++r) {
            if (h.is_zero())
                continue;
            const SymbolStream omega(family, seed.substream(r));
            Walker w(family, omega, sampler(omega.aux_uniform(0)));
            double s = 0.0;
            if (window) {
                while (w.advance_to_window(un)) {
                    s += h(omega, w.time(), w.x());
                    w.step();
                }
            } else {
                for (std::uint64_t t = 0; t < un; ++t) {
                    s += h(omega, t, w.x());
                    w.step();
                }
            }
            rep.values[r] = s * scale;
        }
    });
    const Moments m = sample_moments(rep.values);
    rep.mean = m.mean;
    rep.variance = m.variance;
    rep.skewness = m.skewness;
    rep.excess_kurtosis = m.excess_kurtosis;

    std::vector<std::int64_t> lags(static_cast<std::size_t>(opts.max_lag) + 1);
    std::iota(lags.begin(), lags.end(), 0);
    CorrelationOptions co;
    co.budget = opts.series_steps;
    co.burn_in = opts.burn_in;
    co.workers = opts.workers;
    const RngSeed series_seed{seed.master_seed, seed.stream_index + (std::uint64_t{1} << 48)};
    const CorrelationSeries cs = correlation_series(family, h, h, lags, co, series_seed, &density);

    std::size_t cut = lags.size() - 1;
    for (std::size_t k = 1; k < lags.size(); ++k) {
        if (std::abs(cs.estimates[k]) < 2.0 * cs.stderrs[k]) {
            cut = k;
            break;
        }
    }
    rep.cutoff = static_cast<std::int64_t>(cut);
    auto sigma2 = [&](const std::vector<double>& c) {
        double s = c[0];
        for (std::size_t k = 1; k <= cut; ++k)
            s += 2.0 * c[k];
        return s;
    };
    rep.sigma2_series = sigma2(cs.estimates);
    for (std::size_t k = cut + 1; k < lags.size(); ++k)
        rep.remainder += 2.0 * cs.estimates[k];
    std::vector<double> per;
    for (const auto& b : cs.batch_estimates)
        per.push_back(sigma2(b));
    const Moments pm = sample_moments(per);
    rep.sigma2_stderr = std::sqrt(pm.variance / static_cast<double>(per.size()));
    return rep;
}

} // namespace critmix
