#include "critmix/scaled.hpp"

#include "critmix/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace critmix {

namespace {

constexpr std::int64_t exponent_cap = std::int64_t{1} << 62;

} // namespace

Scaled Scaled::from_double(double v)
{
    if (!(v >= 0.0) || std::isinf(v))
        throw Error(ErrorKind::Domain, "invalid_scaled", "value must be finite and nonnegative");
    Scaled s;
    if (v == 0.0)
        return s;
    int e = 0;
    s.m_ = std::frexp(v, &e);
    s.e_ = e;
    return s;
}

Scaled Scaled::pow2(std::int64_t e)
{
    Scaled s;
    s.m_ = 0.5;
    s.e_ = e + 1;
    return s;
}

Scaled Scaled::from_parts(double mantissa, std::int64_t exponent)
{
    Scaled s = from_double(mantissa);
    if (!s.is_zero())
        s.e_ += exponent;
    return s;
}

double Scaled::to_double() const noexcept
{
    if (m_ == 0.0)
        return 0.0;
    if (e_ > 1100)
        return std::numeric_limits<double>::infinity();
    if (e_ < -1100)
        return 0.0;
    return std::ldexp(m_, static_cast<int>(e_));
}

double Scaled::log2() const noexcept
{
    if (m_ == 0.0)
        return -std::numeric_limits<double>::infinity();
    return static_cast<double>(e_) + std::log2(m_);
}

double Scaled::log() const noexcept
{
    if (m_ == 0.0)
        return -std::numeric_limits<double>::infinity();
    return static_cast<double>(e_) * std::numbers::ln2 + std::log(m_);
}

bool Scaled::fits_double() const noexcept
{
    return m_ == 0.0 || (e_ >= -1020 && e_ <= 1020);
}

Scaled Scaled::pow(double p) const
{
    if (m_ == 0.0)
        return *this;
    const double l2 = log2();
    if (fits_double() && std::abs(l2 * p) < 1000.0)
        return from_double(std::pow(to_double(), p));
    const long double total = static_cast<long double>(p)
        * (static_cast<long double>(e_) + std::log2(static_cast<long double>(m_)));
    if (!(std::abs(total) < static_cast<long double>(exponent_cap)))
        throw Error(ErrorKind::Budget, "exponent_overflow", "binary exponent out of range");
    const long double whole = std::floor(total);
    const long double frac = total - whole;
    Scaled s;
    s.m_ = static_cast<double>(std::exp2(frac) / 2.0L);
    s.e_ = static_cast<std::int64_t>(whole) + 1;
    if (s.m_ >= 1.0) {
        s.m_ /= 2.0;
        s.e_ += 1;
    }
    return s;
}

Scaled Scaled::times_pow2(std::int64_t k) const noexcept
{
    Scaled s = *this;
    if (s.m_ != 0.0)
        s.e_ += k;
    return s;
}

Scaled Scaled::operator*(const Scaled& o) const noexcept
{
    if (m_ == 0.0 || o.m_ == 0.0)
        return Scaled{};
    int e = 0;
    Scaled s;
    s.m_ = std::frexp(m_ * o.m_, &e);
    s.e_ = e_ + o.e_ + e;
    return s;
}

bool operator<(const Scaled& a, const Scaled& b) noexcept
{
    if (a.m_ == 0.0 || b.m_ == 0.0)
        return a.m_ < b.m_;
    if (a.e_ != b.e_)
        return a.e_ < b.e_;
    return a.m_ < b.m_;
}

} // namespace critmix
