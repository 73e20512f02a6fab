#ifndef CRITMIX_FIT_HPP
#define CRITMIX_FIT_HPP

#include <cstddef>
#include <span>

namespace critmix {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double rss = 0.0;
    std::size_t n = 0;
};

/// Least squares y = intercept + slope x, weighted by w when given (rss is
/// then the weighted sum). Needs at least two distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> w = {});

/// Corrected Akaike criterion for a Gaussian residual model with k parameters.
double aicc(double rss, std::size_t n, std::size_t k);

} // namespace critmix

#endif
