#ifndef CRITMIX_TRANSFER_HPP
#define CRITMIX_TRANSFER_HPP

#include "critmix/maps.hpp"
#include "critmix/orbit.hpp"
#include "critmix/rng.hpp"

#include <cstdint>
#include <vector>

namespace critmix {

/// Row-stochastic sparse matrix over the cells [i/n,(i+1)/n) of [0,1] (last cell closed).
struct UlamMatrix {
    std::size_t grid_size = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::uint32_t> col;
    std::vector<double> val;

    double row_sum(std::size_t i) const;
    double entry(std::size_t i, std::size_t k) const;
    /// mass^T M
    std::vector<double> push(const std::vector<double>& mass) const;
};

struct DensityGrid {
    std::size_t grid_size = 0;
    std::vector<double> masses;

    double density(std::size_t i) const { return masses[i] * static_cast<double>(grid_size); }
    double cell_lo(std::size_t i) const
    {
        return static_cast<double>(i) / static_cast<double>(grid_size);
    }
    double cell_hi(std::size_t i) const
    {
        return static_cast<double>(i + 1) / static_cast<double>(grid_size);
    }
    std::size_t cell_of(double x) const;
    /// Cell index for a point in gap/distance form, robust next to 1/2 and 1.
    std::size_t cell_of(const Point& p) const;
    /// Inverse CDF of the piecewise-constant density at u in (0,1).
    double quantile(double u) const;
    double l1_distance(const DensityGrid& o) const;
    static DensityGrid uniform(std::size_t n);
};

UlamMatrix build_ulam(const MapFamily& family, std::size_t grid_size, unsigned workers = 1);

struct StationaryResult {
    DensityGrid density;
    std::int64_t iterations = 0;
    double last_change = 0.0;
    bool converged = false;
};

/// Power iteration from the uniform density. Throws NonConvergence unless
/// allow_unconverged is set.
StationaryResult stationary_density(const UlamMatrix& m, double tol = 1e-10,
                                    std::int64_t iter_max = 100000,
                                    bool allow_unconverged = false);

/// max over cells of |sum_j p_j mu(T_j^{-1} I_k) - mu(I_k)|.
double stationarity_residual(const MapFamily& family, const DensityGrid& density);
double stationarity_residual(const UlamMatrix& m, const DensityGrid& density);

DensityGrid density_from_orbit(const MapFamily& family, RngSeed seed, std::uint64_t n_steps,
                               std::size_t grid_size, std::uint64_t burn_in,
                               unsigned workers = 1);

/// Fraction of post-burn-in time with |x - 1/2| < eps.
double time_near_half(const MapFamily& family, RngSeed seed, std::uint64_t n_steps,
                      std::uint64_t burn_in, double eps);

/// Sum the coarse masses of a grid refined by an integer factor.
DensityGrid coarsen(const DensityGrid& fine, std::size_t factor);

} // namespace critmix

#endif
