#ifndef CRITMIX_RNG_HPP
#define CRITMIX_RNG_HPP

#include "critmix/maps.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace critmix {

/// Name echoed in every output header.
inline constexpr const char* rng_algorithm = "philox4x32-10";

struct RngSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    RngSeed substream(std::uint64_t k) const noexcept { return {master_seed, stream_index + k}; }
    friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) noexcept;

/// Random-access 64-bit stream: value(i) depends only on (seed, i).
class CounterRng {
public:
    CounterRng() = default;
    explicit CounterRng(RngSeed seed) noexcept : seed_(seed) {}

    std::uint64_t value(std::uint64_t i) const noexcept;
    /// Uniform on the open interval (0,1).
    double uniform(std::uint64_t i) const noexcept
    {
        return (static_cast<double>(value(i) >> 11) + 0.5) * 0x1.0p-53;
    }
    RngSeed seed() const noexcept { return seed_; }

private:
    RngSeed seed_;
};

/// Symbol sequence omega_1 omega_2 ... with a fixed prefix and an i.i.d. tail
/// drawn lazily from a counter-based stream. Index 0 is omega_1.
class SymbolStream {
public:
    SymbolStream() = default;
    SymbolStream(const MapFamily& family, RngSeed seed, Word prefix = {});
    /// Finite word; reading past its end throws.
    static SymbolStream fixed(Word word);

    Symbol at(std::uint64_t i) const
    {
        if (i < prefix_.size())
            return prefix_[i];
        return draw(i);
    }
    bool infinite() const noexcept { return random_; }
    std::uint64_t length() const noexcept;
    /// Same sequence shifted by k (omega_{k+1} omega_{k+2} ...).
    SymbolStream shifted(std::uint64_t k) const;

    /// Auxiliary uniforms on a separate counter lane, e.g. for start points.
    double aux_uniform(std::uint64_t i) const noexcept;

    const CounterRng& rng() const noexcept { return rng_; }

private:
    Symbol draw(std::uint64_t i) const;

    Word prefix_;
    bool random_ = false;
    CounterRng rng_;
    std::uint64_t base_ = 0;
    std::vector<double> cumulative_;
};

Word sample_symbols(const MapFamily& family, RngSeed seed, std::uint64_t n);

} // namespace critmix

#endif
