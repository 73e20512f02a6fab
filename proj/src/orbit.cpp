#include "critmix/orbit.hpp"

#include "critmix/error.hpp"

#include <algorithm>

namespace critmix {

Point Point::from_x(double x)
{
    if (!(x >= 0.0 && x <= 1.0))
        throw Error(ErrorKind::Domain, "out_of_domain", "x must lie in [0,1]");
    if (x < 0.5)
        return {Side::Left, Scaled::from_double(1.0 - 2.0 * x)};
    return {Side::Right, Scaled::from_double(1.0 - x)};
}

double Point::to_x() const noexcept
{
    if (side == Side::Left)
        return 0.5 - 0.5 * mag.to_double();
    return 1.0 - mag.to_double();
}

bool Point::in_window() const noexcept
{
    if (side != Side::Right)
        return false;
    const double d = mag.to_double();
    return d > 0.25 && d < 0.5;
}

Point apply_map(const MapSpec& spec, const Point& p)
{
    if (p.side == Side::Right) {
        if (p.mag <= Scaled::pow2(-2))
            return {Side::Right, p.mag.times_pow2(1)};
        return {Side::Left, Scaled::from_double(4.0 * p.mag.to_double() - 1.0)};
    }
    const Scaled v = p.mag.pow(spec.exponent);
    if (spec.is_bad())
        return {Side::Left, v};
    if (v <= Scaled::pow2(-1))
        return {Side::Right, v};
    return {Side::Left, Scaled::from_double(2.0 * v.to_double() - 1.0)};
}

double log2_deriv_at(const MapSpec& spec, const Point& p) noexcept
{
    if (p.side == Side::Right)
        return 1.0;
    return log2_left_deriv(spec, p.mag.log2());
}

Trajectory iterate(const MapFamily& family, const SymbolStream& omega, double x0, std::uint64_t n)
{
    Trajectory t;
    Point p = Point::from_x(x0);
    t.states.reserve(n + 1);
    t.points.reserve(n + 1);
    t.symbols.reserve(n);
    t.states.push_back(p);
    t.points.push_back(x0);
    for (std::uint64_t k = 0; k < n; ++k) {
        const Symbol s = omega.at(k);
        if (s >= family.size())
            throw Error(ErrorKind::Domain, "bad_symbol", "symbol outside the alphabet");
        try {
            p = apply_map(family.spec(s), p);
        }
        catch (const Error& e) {
            if (e.kind() != ErrorKind::Budget)
                throw;
            t.censored = true;
            break;
        }
        t.symbols.push_back(s);
        t.states.push_back(p);
        t.points.push_back(p.to_x());
    }
    return t;
}

Trajectory iterate(const MapFamily& family, const Word& omega, double x0, std::uint64_t n)
{
    if (n > omega.size())
        throw Error(ErrorKind::Domain, "stream_exhausted", "word shorter than the requested orbit");
    return iterate(family, SymbolStream::fixed(omega), x0, n);
}

RightBlock fast_forward_right(const Point& p, std::int64_t budget)
{
    if (p.side != Side::Right)
        throw Error(ErrorKind::Domain, "out_of_domain", "fast-forward needs x >= 1/2");
    if (p.mag.is_zero())
        throw Error(ErrorKind::Budget, "censored", "fixed point 1 never returns");
    const std::int64_t e = p.mag.exponent();
    const std::int64_t need = p.mag.mantissa() == 0.5 ? -e : -1 - e;
    RightBlock r;
    r.steps = std::max<std::int64_t>(0, need);
    if (r.steps > budget)
        throw Error(ErrorKind::Budget, "censored", "doubling run exceeds the step budget");
    r.out = {Side::Right, p.mag.times_pow2(r.steps)};
    r.boundary = r.out.mag == Scaled::pow2(-1);
    r.x_out = r.out.to_x();
    return r;
}

RightBlock fast_forward_right(double x, std::int64_t budget)
{
    if (!(x >= 0.5 && x <= 1.0))
        throw Error(ErrorKind::Domain, "out_of_domain", "fast-forward needs x in [1/2,1]");
    return fast_forward_right(Point::from_x(x), budget);
}

double birkhoff_sum(const PointFunction& h, const SymbolStream& omega, const Trajectory& traj,
                    std::uint64_t n)
{
    if (n > traj.points.size())
        throw Error(ErrorKind::Domain, "trajectory_too_short", "birkhoff sum beyond trajectory");
    double s = 0.0;
    for (std::uint64_t k = 0; k < n; ++k)
        s += h(omega, k, traj.points[k]);
    return s;
}

Walker::Walker(const MapFamily& family, SymbolStream omega, double x0)
    : Walker(family, std::move(omega), Point::from_x(x0))
{
}

Walker::Walker(const MapFamily& family, SymbolStream omega, const Point& p0)
    : family_(&family), omega_(std::move(omega)), p_(p0)
{
}

void Walker::step()
{
    p_ = apply_map(family_->spec(omega_.at(t_)), p_);
    ++t_;
}

bool Walker::advance_to_window(std::uint64_t t_limit)
{
    const Scaled quarter = Scaled::pow2(-2);
    while (true) {
        if (t_ >= t_limit)
            return false;
        if (p_.in_window())
            return true;
        if (p_.side == Side::Right && p_.mag < quarter) {
            skip_doubling(t_limit);
            continue;
        }
        step();
    }
}

void Walker::skip_doubling(std::uint64_t t_limit)
{
    if (p_.side != Side::Right || t_ >= t_limit)
        return;
    if (p_.mag.is_zero()) {
        t_ = t_limit;
        return;
    }
    const std::int64_t e = p_.mag.exponent();
    const std::int64_t need = p_.mag.mantissa() == 0.5 ? -e : -1 - e;
    if (need <= 0)
        return;
    const std::uint64_t k = std::min(static_cast<std::uint64_t>(need), t_limit - t_);
    p_.mag = p_.mag.times_pow2(static_cast<std::int64_t>(k));
    t_ += k;
}

} // namespace critmix
