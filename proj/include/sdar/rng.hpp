#pragma once

#include <cstdint>
#include <limits>

namespace sdar {

/**
 * Counter-based SplitMix64 generator.
 *
 * The k-th output is mix(key + (k + 1) * golden_gamma), so the whole stream
 * is a pure function of (key, k). Independent streams for replications or
 * sub-tasks are obtained with `derive_seed(base, stream)`, which makes every
 * result independent of thread count and scheduling order.
 *
 * Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    explicit constexpr CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return mix(key_ + counter_ * golden_gamma);
    }

    /// Value of output number `k` (0-based) without advancing the stream.
    constexpr result_type at(std::uint64_t k) const noexcept {
        return mix(key_ + (k + 1) * golden_gamma);
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Seed for sub-stream `stream` of base seed `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return CounterRng::mix(CounterRng::mix(base) ^ CounterRng::mix(stream + CounterRng::golden_gamma));
}

} // namespace sdar
