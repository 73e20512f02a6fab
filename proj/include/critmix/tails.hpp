#ifndef CRITMIX_TAILS_HPP
#define CRITMIX_TAILS_HPP

#include "critmix/induced.hpp"
#include "critmix/maps.hpp"
#include "critmix/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace critmix {

inline constexpr int default_k_max = 60;

struct SeriesValue {
    double value = 0.0;
    double truncation_error = 0.0;
};

/// Lower series for P x lambda(phi > n). The value is a valid lower bound as
/// returned; truncation_error bounds the omitted nonnegative remainder.
SeriesValue tail_lower(const MapFamily& family, std::int64_t n, int k_max = default_k_max);

/// Upper series including its certified remainder. j_max < 0 selects the
/// smallest depth with s^j_max < 1e-12.
SeriesValue tail_upper(const MapFamily& family, std::int64_t n, int j_max = -1,
                       int k_max = default_k_max);

int default_j_max(const MapFamily& family);

/// 1/4 minus the measure of all cells with return time <= n.
double tail_exact(const MapFamily& family, std::int64_t n);
/// tail_exact indexed by n = 0..n_max from a single enumeration.
std::vector<double> tail_exact_table(const MapFamily& family, std::int64_t n_max);

struct TailMc {
    std::vector<std::int64_t> n_values;
    /// Survival conditioned on starting in (1/2,3/4); multiply by 1/4 for the
    /// unconditioned tail.
    std::vector<double> survival;
    std::vector<double> stderr_;
    std::int64_t samples = 0;
    std::int64_t censored = 0;
    std::int64_t boundary = 0;
    double mean_phi = 0.0;
};

TailMc tail_mc(const MapFamily& family, const std::vector<std::int64_t>& n_values,
               std::int64_t samples, RngSeed seed, unsigned workers = 1,
               std::int64_t budget = default_return_budget);

/// Return times of `samples` independent starts; -1 marks censored or boundary.
std::vector<std::int64_t> sample_return_times(const MapFamily& family, std::int64_t samples,
                                              RngSeed seed, unsigned workers = 1,
                                              std::int64_t budget = default_return_budget);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of log survival against log n over n in [lo, hi].
SlopeFit fit_tail_exponent(const std::vector<std::int64_t>& n_values,
                           const std::vector<double>& survival, std::int64_t lo, std::int64_t hi);

} // namespace critmix

#endif
