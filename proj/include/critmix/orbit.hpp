#ifndef CRITMIX_ORBIT_HPP
#define CRITMIX_ORBIT_HPP

#include "critmix/maps.hpp"
#include "critmix/rng.hpp"
#include "critmix/scaled.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace critmix {

enum class Side : std::uint8_t { Left, Right };

/// A point of [0,1] stored as its distance to the nearest accumulation point:
/// the gap u = 1 - 2x on [0,1/2) and the distance d = 1 - x on [1/2,1].
struct Point {
    Side side = Side::Right;
    Scaled mag;

    static Point from_x(double x);
    double to_x() const noexcept;
    bool in_window() const noexcept;

    friend bool operator==(const Point&, const Point&) = default;
};

/// One application of T_spec in gap/distance coordinates.
Point apply_map(const MapSpec& spec, const Point& p);
/// log2 DT_spec at p.
double log2_deriv_at(const MapSpec& spec, const Point& p) noexcept;

struct Trajectory {
    Word symbols;
    std::vector<double> points;
    std::vector<Point> states;
    bool censored = false;
};

Trajectory iterate(const MapFamily& family, const SymbolStream& omega, double x0, std::uint64_t n);
Trajectory iterate(const MapFamily& family, const Word& omega, double x0, std::uint64_t n);

struct RightBlock {
    std::int64_t steps = 0;
    double x_out = 0.0;
    Point out;
    bool boundary = false;
};

/// Number of doubling steps l >= 0 taking a point at distance d from 1 to
/// 2^l d > 1/4, together with the landing point.
RightBlock fast_forward_right(const Point& p, std::int64_t budget);
RightBlock fast_forward_right(double x, std::int64_t budget);

/// Observable evaluated at (sigma^k omega, x); the stream and offset identify the tail.
using PointFunction = std::function<double(const SymbolStream&, std::uint64_t, double)>;

double birkhoff_sum(const PointFunction& h, const SymbolStream& omega, const Trajectory& traj,
                    std::uint64_t n);

/// Steps an orbit of the skew product, skipping runs of doubling steps near 1.
class Walker {
public:
    Walker(const MapFamily& family, SymbolStream omega, double x0);
    Walker(const MapFamily& family, SymbolStream omega, const Point& p0);

    std::uint64_t time() const noexcept { return t_; }
    const Point& point() const noexcept { return p_; }
    double x() const noexcept { return p_.to_x(); }
    const SymbolStream& stream() const noexcept { return omega_; }

    void step();
    /// Advance to the next time before t_limit at which the point lies in
    /// (1/2,3/4). Returns false when t_limit is reached first.
    bool advance_to_window(std::uint64_t t_limit);
    /// From a point above 3/4, jump over the doubling run (not beyond t_limit).
    void skip_doubling(std::uint64_t t_limit);

private:
    const MapFamily* family_;
    SymbolStream omega_;
    Point p_;
    std::uint64_t t_ = 0;
};

} // namespace critmix

#endif
