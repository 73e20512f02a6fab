#include "critmix/rng.hpp"

#include "critmix/error.hpp"

namespace critmix {

namespace {

constexpr std::uint64_t aux_lane = std::uint64_t{1} << 63;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                            std::array<std::uint32_t, 2> k) noexcept
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(0xD2511F53u, c[0], hi0, lo0);
        mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

std::uint64_t CounterRng::value(std::uint64_t i) const noexcept
{
    const std::uint64_t block = i >> 1;
    const auto out = philox4x32_10(
        {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
         static_cast<std::uint32_t>(seed_.stream_index),
         static_cast<std::uint32_t>(seed_.stream_index >> 32)},
        {static_cast<std::uint32_t>(seed_.master_seed),
         static_cast<std::uint32_t>(seed_.master_seed >> 32)});
    if (i & 1)
        return (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

SymbolStream::SymbolStream(const MapFamily& family, RngSeed seed, Word prefix)
    : prefix_(std::move(prefix)), random_(true), rng_(seed)
{
    double acc = 0.0;
    for (double p : family.probs()) {
        acc += p;
        cumulative_.push_back(acc);
    }
    for (Symbol s : prefix_)
        if (s >= family.size())
            throw Error(ErrorKind::Domain, "bad_symbol", "prefix symbol outside the alphabet");
}

SymbolStream SymbolStream::fixed(Word word)
{
    SymbolStream s;
    s.prefix_ = std::move(word);
    return s;
}

std::uint64_t SymbolStream::length() const noexcept
{
    return random_ ? UINT64_MAX : prefix_.size();
}

SymbolStream SymbolStream::shifted(std::uint64_t k) const
{
    SymbolStream s = *this;
    if (k < prefix_.size()) {
        s.prefix_.erase(s.prefix_.begin(), s.prefix_.begin() + static_cast<std::ptrdiff_t>(k));
    }
    else {
        if (!random_)
            throw Error(ErrorKind::Domain, "stream_exhausted", "shift beyond a finite word");
        s.base_ += k - prefix_.size();
        s.prefix_.clear();
    }
    return s;
}

double SymbolStream::aux_uniform(std::uint64_t i) const noexcept
{
    return rng_.uniform(aux_lane | i);
}

Symbol SymbolStream::draw(std::uint64_t i) const
{
    if (!random_)
        throw Error(ErrorKind::Domain, "stream_exhausted", "finite word read past its end");
    const std::uint64_t idx = base_ + (i - prefix_.size());
    const double u = rng_.uniform(idx & ~aux_lane);
    const std::size_t n = cumulative_.size();
    for (std::size_t j = 0; j + 1 < n; ++j)
        if (u < cumulative_[j])
            return static_cast<Symbol>(j);
    // Last symbol with positive probability absorbs rounding in the cumulative sum.
    for (std::size_t j = n; j-- > 0;)
        if (j == 0 || cumulative_[j] > cumulative_[j - 1])
            return static_cast<Symbol>(j);
    return 0;
}

Word sample_symbols(const MapFamily& family, RngSeed seed, std::uint64_t n)
{
    SymbolStream s(family, seed);
    Word w(n);
    for (std::uint64_t i = 0; i < n; ++i)
        w[i] = s.at(i);
    return w;
}

} // namespace critmix
