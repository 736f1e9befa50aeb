#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace stirring
{
    inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

    /// SplitMix64 finalizer. Bijective on 64-bit words.
    inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept
    {
        return mix64(a ^ mix64(b + golden_gamma));
    }

    /// Seed of the run with the given index under a master seed.
    inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
    {
        return hash_combine(master, 0x243f6a8885a308d3ULL ^ index);
    }

    /// Counter-based stream: the i-th output is mix64(key + i * gamma). Streams keyed by
    /// distinct words are independent for practical purposes, and any stream can be
    /// regenerated from its key alone, regardless of what other streams were consumed.
    class CounterStream
    {
    public:
        using result_type = std::uint64_t;

        explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

        static constexpr result_type min() noexcept { return 0; }
        static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

        constexpr result_type operator()() noexcept
        {
            ++counter_;
            return mix64(key_ + counter_ * golden_gamma);
        }

        /// Uniform on the open interval (0, 1), 53-bit resolution.
        double uniform() noexcept
        {
            return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
        }

        /// Exp(1) variate.
        double exponential() noexcept { return -std::log(uniform()); }

        bool bernoulli(double p) noexcept { return uniform() < p; }

        /// Uniform integer in [0, n).
        std::uint64_t below(std::uint64_t n) noexcept
        {
            // Lemire's multiply-shift; the bias is below 2^-64 * n and irrelevant here.
            return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
        }

        std::uint64_t key() const noexcept { return key_; }
        std::uint64_t position() const noexcept { return counter_; }

    private:
        std::uint64_t key_;
        std::uint64_t counter_ = 0;
    };
}
