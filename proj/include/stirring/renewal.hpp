#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "stats.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace stirring
{
    /// Nearest-neighbour walk on {0, 1, 2, ...}: up with probability beta/(beta+1) from positive
    /// states, forced up from 0. beta = infinity gives the deterministic staircase.
    struct BiasedWalkPath
    {
        double beta;
        std::vector<std::int64_t> values;
    };

    inline BiasedWalkPath simulate_walk(double beta, std::size_t n, std::uint64_t seed)
    {
        if (!(beta > 1))
        {
            throw DomainError("walk bias must exceed 1");
        }
        if (n == 0)
        {
            throw DomainError("walk length must be positive");
        }
        BiasedWalkPath path{beta, {}};
        path.values.reserve(n);
        const double up = std::isinf(beta) ? 1.0 : beta / (beta + 1);
        CounterStream rng(seed);
        std::int64_t z = 0;
        path.values.push_back(z);
        while (path.values.size() < n)
        {
            z += (z == 0 || rng.uniform() < up) ? 1 : -1;
            path.values.push_back(z);
        }
        return path;
    }

    namespace detail
    {
        inline std::vector<std::uint32_t> level_counts(const std::vector<std::int64_t> &values)
        {
            std::int64_t top = 0;
            for (auto z : values)
            {
                if (z < 0)
                {
                    throw DomainError("walk values must be non-negative");
                }
                top = std::max(top, z);
            }
            std::vector<std::uint32_t> counts(static_cast<std::size_t>(top) + 2, 0);
            for (auto z : values)
            {
                ++counts[static_cast<std::size_t>(z)];
            }
            return counts;
        }
    }

    /// Indices n such that the values at n and n+1 are each taken exactly once along the path.
    /// The last index is never included because its successor is not part of the path.
    inline std::vector<std::size_t> strong_renewal_points(const BiasedWalkPath &path)
    {
        const auto &z = path.values;
        auto counts = detail::level_counts(z);
        std::vector<std::size_t> out;
        for (std::size_t n = 0; n + 1 < z.size(); ++n)
        {
            if (counts[static_cast<std::size_t>(z[n])] == 1 && counts[static_cast<std::size_t>(z[n + 1])] == 1)
            {
                out.push_back(n);
            }
        }
        return out;
    }

    inline double srg_level_density(double beta) { return beta * (beta - 1) / ((beta + 1) * (beta + 1)); }

    /// Expected strong renewal points per step: the per-level density times the walk's speed.
    inline double srg_step_density(double beta) { return srg_level_density(beta) * (beta - 1) / (beta + 1); }

    enum class SrgNormalization
    {
        PerLevel,  ///< strong renewal points whose value lies in [1, L], divided by L
        PerStep,   ///< strong renewal points with index in [1, n], divided by n
    };

    struct DensityEstimate
    {
        double mean = 0;
        double se = 0;
        Interval ci99{0, 0};
        std::vector<double> replicas;
    };

    /// Mean over replicas of the strong-renewal density of a walk of n steps. Per level, values
    /// within a safety margin of the final height are left out: whether they are ever revisited is
    /// not decided by a finite path (the chance is below 1e-40 outside the margin).
    inline DensityEstimate srg_density_estimate(double beta, std::size_t n, std::size_t replicas, std::uint64_t seed,
                                                SrgNormalization norm = SrgNormalization::PerLevel)
    {
        if (n < 1000)
        {
            throw DomainError("density estimates need at least 1000 steps");
        }
        if (replicas == 0)
        {
            throw DomainError("need at least one replica");
        }
        DensityEstimate est;
        const double margin = std::isinf(beta) ? 1.0 : std::ceil(40 * std::log(10.0) / std::log(beta)) + 1;
        for (std::size_t r = 0; r < replicas; ++r)
        {
            auto path = simulate_walk(beta, n + 1, derive_seed(seed, r));
            auto points = strong_renewal_points(path);
            double density = 0;
            if (norm == SrgNormalization::PerStep)
            {
                std::size_t count = 0;
                for (auto i : points)
                {
                    count += i >= 1 && i <= n;
                }
                density = static_cast<double>(count) / static_cast<double>(n);
            }
            else
            {
                const double top = static_cast<double>(path.values.back()) - margin;
                if (top < 1)
                {
                    throw DomainError("walk too short to estimate a per-level density");
                }
                std::size_t count = 0;
                for (auto i : points)
                {
                    const auto z = static_cast<double>(path.values[i]);
                    count += z >= 1 && z <= top;
                }
                density = static_cast<double>(count) / std::floor(top);
            }
            est.replicas.push_back(density);
        }
        auto m = mean_estimate(est.replicas);
        est.mean = m.mean;
        est.se = m.se;
        est.ci99 = m.interval(z99);
        return est;
    }

    /// Distance from the root of continuous-time random walk on the tree with d offspring per
    /// vertex, recorded at its jumps. Each incident edge carries its own Exp(1) clock.
    inline std::vector<std::int64_t> tree_walk_jump_chain(std::uint32_t d, std::size_t steps, std::uint64_t seed)
    {
        CounterStream rng(seed);
        std::vector<std::int64_t> out{0};
        std::int64_t dist = 0;
        while (out.size() < steps)
        {
            double best = std::numeric_limits<double>::infinity();
            bool towards_root = false;
            const std::uint32_t edges = dist == 0 ? d : d + 1;
            for (std::uint32_t i = 0; i < edges; ++i)
            {
                double clock = rng.exponential();
                if (clock < best)
                {
                    best = clock;
                    towards_root = dist > 0 && i == d;
                }
            }
            dist += towards_root ? -1 : 1;
            out.push_back(dist);
        }
        return out;
    }
}
