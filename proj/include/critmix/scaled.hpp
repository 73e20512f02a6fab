#ifndef CRITMIX_SCALED_HPP
#define CRITMIX_SCALED_HPP

#include <cstdint>

namespace critmix {

/// Nonnegative real m * 2^e with m in [0.5, 1) and a 64-bit binary exponent.
///
/// Gaps to 1/2 shrink like u^(l_1 l_2 ... l_k) under bad maps, which leaves
/// the double range after a handful of steps; this keeps them exact enough
/// to count the doubling steps needed to climb back.
class Scaled {
public:
    Scaled() = default;

    static Scaled from_double(double v);
    static Scaled pow2(std::int64_t e);
    static Scaled from_parts(double mantissa, std::int64_t exponent);

    double mantissa() const noexcept { return m_; }
    std::int64_t exponent() const noexcept { return e_; }
    bool is_zero() const noexcept { return m_ == 0.0; }

    /// Value as a double; underflows to 0 and overflows to inf.
    double to_double() const noexcept;
    /// log2 of the value, -inf for zero.
    double log2() const noexcept;
    /// Natural log, -inf for zero.
    double log() const noexcept;
    /// True when the value is representable as a normal double.
    bool fits_double() const noexcept;

    /// this^p for p > 0. Throws Error(Budget, "exponent_overflow") when the
    /// binary exponent would exceed 2^62 in magnitude.
    Scaled pow(double p) const;
    Scaled times_pow2(std::int64_t k) const noexcept;
    Scaled operator*(const Scaled& o) const noexcept;

    friend bool operator==(const Scaled& a, const Scaled& b) noexcept = default;
    friend bool operator<(const Scaled& a, const Scaled& b) noexcept;
    friend bool operator<=(const Scaled& a, const Scaled& b) noexcept { return !(b < a); }
    friend bool operator>(const Scaled& a, const Scaled& b) noexcept { return b < a; }
    friend bool operator>=(const Scaled& a, const Scaled& b) noexcept { return !(a < b); }

private:
    double m_ = 0.0;
    std::int64_t e_ = 0;
};

} // namespace critmix

#endif
