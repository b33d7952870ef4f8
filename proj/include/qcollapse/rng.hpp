#pragma once

#include <cstdint>
#include <random>

namespace qcollapse {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` under `base_seed`; distinct indices give
/// decorrelated mt19937_64 states.
constexpr std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t index) noexcept
{
    return mix64(mix64(base_seed) ^ mix64(index + 0xD1B54A32D192ED03ULL));
}

/// Uniform doubles in the open interval (0, 1), bit-reproducible across
/// platforms (the conversion does not go through std::uniform_real_distribution).
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

    double next() noexcept
    {
        // 53 random bits centred in their cell: never 0, never 1.
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace qcollapse
