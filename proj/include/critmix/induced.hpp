#ifndef CRITMIX_INDUCED_HPP
#define CRITMIX_INDUCED_HPP

#include "critmix/maps.hpp"
#include "critmix/orbit.hpp"
#include "critmix/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace critmix {

inline constexpr std::int64_t default_return_budget = 1'000'000;

enum class ReturnStatus { Ok, Censored, Boundary };

/// Symbolic record of one first return to Y = Sigma^N x (1/2,3/4).
///
/// The return word is u v b g w with u = omega_1, v ending in a good symbol
/// (or empty), b all bad, g = omega_kappa good and w the l doubling steps.
struct ReturnDecomposition {
    Symbol u = 0;
    Word v;
    Word b;
    Symbol g = 0;
    /// Offset of w in the stream and its length; w is not materialized since
    /// it can be astronomically long.
    std::uint64_t w_offset = 0;
    std::int64_t wlen = 0;

    std::int64_t m = 0;
    std::int64_t kappa = 0;
    std::int64_t l = 0;
    std::int64_t phi = 0;

    double x_in = 0.0;
    double x_out = 0.0;
    Point out;
    /// T^m(x) and log of its gap 1 - 2 T^m(x).
    double y_at_m = 0.0;
    double log_gap_at_m = 0.0;

    /// log2 DT^phi(x) and the smallest log2 DT^(phi-j)(T^j x) over 1 <= j < phi.
    double log2_deriv = 0.0;
    double min_log2_tail_deriv = 0.0;

    ReturnStatus status = ReturnStatus::Ok;
    std::int64_t effective_steps = 0;

    bool ok() const noexcept { return status == ReturnStatus::Ok; }
    Word w(const SymbolStream& omega) const;
};

/// First return of (omega, x) for x in (1/2,3/4). Censoring and exact hits
/// of 1/2 are reported through status, not thrown.
ReturnDecomposition first_return(const MapFamily& family, const SymbolStream& omega, double x,
                                 std::int64_t budget = default_return_budget);
ReturnDecomposition first_return(const MapFamily& family, const SymbolStream& omega,
                                 const Point& x, std::int64_t budget = default_return_budget);

/// Return time and landing point only; the hot path of the samplers.
struct FastReturn {
    std::int64_t phi = 0;
    Point out;
    ReturnStatus status = ReturnStatus::Ok;
};

/// First return of (sigma^offset omega, x).
FastReturn next_return(const MapFamily& family, const SymbolStream& omega, std::uint64_t offset,
                       const Point& x, std::int64_t budget = default_return_budget);

/// l >= l_d r_g log2(1/(1-2y)) - 2 with d = omega_{m+1} ... omega_{kappa-1}.
double lower_bound_l(const MapFamily& family, const ReturnDecomposition& rd, double y_at_m);
double lower_bound_l(const MapFamily& family, const ReturnDecomposition& rd);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width = 0.0;
};

/// x-interval of the cell with return word u v b g w, |w| = wlen. u does not
/// affect the interval and is accepted for symmetry with the cell record.
Interval cell_interval(const MapFamily& family, std::optional<Symbol> u, const Word& v,
                       const Word& b, Symbol g, std::int64_t wlen);
/// Closed form for v empty: bad exponent product l_b (1 if b is empty).
Interval cell_interval_closed_form(double l_b, double r_g, std::int64_t wlen);

struct PartitionCell {
    std::optional<Symbol> u;
    Word v;
    Word b;
    Symbol g = 0;
    std::int64_t wlen = 0;
    Interval x;
    double measure = 0.0;

    std::int64_t phi() const noexcept
    {
        return 2 + static_cast<std::int64_t>(v.size() + b.size()) + wlen;
    }
};

double cell_measure(const MapFamily& family, const PartitionCell& cell);

/// All cells with return time <= phi_max. With include_u the first symbol
/// is enumerated too; otherwise it is summed out (factor 1).
std::vector<PartitionCell> enumerate_cells(const MapFamily& family, std::int64_t phi_max,
                                           bool include_u = false,
                                           std::size_t max_cells = 20'000'000);

/// Split s = v b at the last good symbol.
void split_word(const MapFamily& family, const Word& s, Word& v, Word& b);

/// Point of Y given by a symbol stream, its offset and x.
struct InducedPoint {
    SymbolStream omega;
    std::uint64_t offset = 0;
    Point x;
};

struct SeparationRecord {
    std::int64_t n = 0;
    bool capped = false;
};

/// Number of induced steps after which the two points first lie in
/// distinct partition cells, capped at n_max.
SeparationRecord separation_time(const MapFamily& family, const InducedPoint& z1,
                                 const InducedPoint& z2, std::int64_t n_max,
                                 std::int64_t budget = default_return_budget);

struct ExpansionReport {
    std::int64_t samples = 0;
    std::int64_t censored = 0;
    double min_deriv = 0.0;
    double min_tail_deriv = 0.0;
    std::int64_t pairs = 0;
    double c3_hat = 0.0;
};

ExpansionReport expansion_and_distortion_check(const MapFamily& family, std::int64_t samples,
                                               RngSeed seed, unsigned workers = 1);

/// Uniform point of (1/2,3/4) from auxiliary draw i of the stream.
double window_start(const SymbolStream& omega, std::uint64_t i = 0) noexcept;

} // namespace critmix

#endif
