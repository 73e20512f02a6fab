#ifndef CRITMIX_STATS_HPP
#define CRITMIX_STATS_HPP

#include "critmix/maps.hpp"
#include "critmix/observable.hpp"
#include "critmix/rng.hpp"
#include "critmix/transfer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace critmix {

enum class CorrelationMethod { Ensemble, Timeseries };

std::string to_string(CorrelationMethod m);
CorrelationMethod correlation_method_from_string(const std::string& s);

struct CorrelationOptions {
    CorrelationMethod method = CorrelationMethod::Timeseries;
    /// Orbit steps (timeseries) or initial conditions (ensemble), summed over batches.
    std::uint64_t budget = 10'000'000;
    /// Discarded steps at the start of each timeseries chain.
    std::uint64_t burn_in = 100'000;
    unsigned batches = 32;
    unsigned workers = 1;
};

struct CorrelationSeries {
    std::vector<std::int64_t> n_values;
    std::vector<double> estimates;
    std::vector<double> stderrs;
    double mean_f = 0.0;
    double mean_h = 0.0;
    CorrelationMethod method = CorrelationMethod::Timeseries;
    /// Orbit jumped between visits to (1/2,3/4).
    bool induced = false;
    std::uint64_t budget = 0;
    /// Per-batch estimates, [batch][lag].
    std::vector<std::vector<double>> batch_estimates;
};

/// Cor_n(f,h) = E[f o F^n . h] - E[f] E[h] under P x mu.
/// Ensemble draws x from `density` (required) and needs theta < 1.
CorrelationSeries correlation_series(const MapFamily& family, const Observable& f,
                                     const Observable& h, const std::vector<std::int64_t>& n_values,
                                     const CorrelationOptions& opts, RngSeed seed,
                                     const DensityGrid* density = nullptr);

/// Orbit averages of several observables, batch-averaged.
std::vector<double> ergodic_means(const MapFamily& family, const std::vector<Observable>& obs,
                                  RngSeed seed, std::uint64_t steps, std::uint64_t burn_in,
                                  unsigned workers = 1);

/// h - c * compensator with c chosen so the orbit average of the result vanishes.
Observable center_observable(const MapFamily& family, const Observable& h,
                             const Observable& compensator, RngSeed seed, std::uint64_t steps,
                             unsigned workers = 1);

enum class DecayModel { Poly, Exp };
std::string to_string(DecayModel m);

struct DecayFit {
    DecayModel model = DecayModel::Poly;
    /// "ok" or "insufficient_signal".
    std::string status = "ok";
    /// Poly: exponent of n. Exp: -rate.
    double exponent = 0.0;
    double intercept = 0.0;
    double exponent_stderr = 0.0;
    double rss = 0.0;
    double aicc = 0.0;
    /// Smallest exponent whose envelope, anchored at the first usable point, covers the window.
    double envelope = 0.0;
    std::vector<std::int64_t> used;

    bool ok() const noexcept { return status == "ok"; }
};

inline constexpr std::size_t min_fit_points = 5;

/// Fit log|Cor_n| on the points of [n_lo, n_hi] lying above twice their stderr.
/// The window ends at the first two consecutive lags below that floor.
DecayFit fit_decay(const CorrelationSeries& series, DecayModel model, std::int64_t n_lo,
                   std::int64_t n_hi);

struct ModelComparison {
    DecayFit poly;
    DecayFit exp;
    /// "poly", "exp" or "insufficient_signal".
    std::string preferred;
};
ModelComparison compare_models(const CorrelationSeries& series, std::int64_t n_lo,
                               std::int64_t n_hi);

struct CltOptions {
    /// Orbit steps for the sigma^2 series.
    std::uint64_t series_steps = 200'000'000;
    std::int64_t max_lag = 2000;
    std::uint64_t burn_in = 100'000;
    unsigned workers = 1;
};

struct CltReport {
    std::int64_t n = 0;
    std::vector<double> values;
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double sigma2_series = 0.0;
    double sigma2_stderr = 0.0;
    std::int64_t cutoff = 0;
    /// Twice the correlation sum over lags (cutoff, max_lag].
    double remainder = 0.0;
    /// "window" or "general".
    std::string hypothesis;
};

/// Replicas of n^{-1/2} sum_{k<n} h o F^k from stationary starts.
CltReport clt_experiment(const MapFamily& family, const Observable& h, std::int64_t n,
                         std::int64_t replicas, RngSeed seed, const DensityGrid& density,
                         const CltOptions& opts = {});

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};
Moments sample_moments(const std::vector<double>& v);

} // namespace critmix

#endif
