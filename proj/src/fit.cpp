#include "critmix/fit.hpp"

#include "critmix/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace critmix {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> w)
{
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorKind::Domain, "degenerate_fit", "need at least two points");
    if (!w.empty() && w.size() != x.size())
        throw Error(ErrorKind::Domain, "degenerate_fit", "one weight per point");
    auto wt = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
    double sw = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(wt(i) > 0.0))
            throw Error(ErrorKind::Domain, "degenerate_fit", "weights must be positive");
        sw += wt(i);
        mx += wt(i) * x[i];
        my += wt(i) * y[i];
    }
    mx /= sw;
    my /= sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
        sxy += wt(i) * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0))
        throw Error(ErrorKind::Domain, "degenerate_fit", "abscissae are all equal");
    LinearFit f;
    f.n = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.rss += wt(i) * r * r;
    }
    const double n = static_cast<double>(x.size());
    f.slope_stderr = x.size() > 2 ? std::sqrt(f.rss / (n - 2.0) / sxx)
                                   : std::numeric_limits<double>::infinity();
    return f;
}

double aicc(double rss, std::size_t n, std::size_t k)
{
    const double dn = static_cast<double>(n);
    const double dk = static_cast<double>(k);
    if (n <= k + 1)
        return std::numeric_limits<double>::infinity();
    const double floor_rss = std::max(rss, std::numeric_limits<double>::min());
    return dn * std::log(floor_rss / dn) + 2.0 * dk + 2.0 * dk * (dk + 1.0) / (dn - dk - 1.0);
}

} // namespace critmix
