#pragma once

#include "errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace stirring
{
    /// Two-sided 99% normal quantile.
    inline constexpr double z99 = 2.5758293035489004;

    struct Interval
    {
        double lo;
        double hi;

        bool contains(double x) const noexcept { return lo <= x && x <= hi; }
        bool operator==(const Interval &) const = default;
    };

    inline Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = z99)
    {
        if (n == 0)
        {
            return {0.0, 1.0};
        }
        const double nn = static_cast<double>(n);
        const double p = static_cast<double>(successes) / nn;
        const double z2 = z * z;
        const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
        const double half = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
        return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
    }

    struct MeanEstimate
    {
        double mean = 0;
        double se = 0;
        std::size_t n = 0;

        Interval interval(double z = z99) const { return {mean - z * se, mean + z * se}; }
    };

    inline MeanEstimate mean_estimate(const std::vector<double> &xs)
    {
        MeanEstimate m;
        m.n = xs.size();
        if (xs.empty())
        {
            return m;
        }
        double sum = 0;
        for (double x : xs)
        {
            sum += x;
        }
        m.mean = sum / static_cast<double>(xs.size());
        if (xs.size() > 1)
        {
            double ss = 0;
            for (double x : xs)
            {
                ss += (x - m.mean) * (x - m.mean);
            }
            m.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
        }
        return m;
    }

    /// Asymptotic Kolmogorov tail with Stephens' small-sample correction.
    inline double kolmogorov_pvalue(double d, std::size_t n)
    {
        const double sn = std::sqrt(static_cast<double>(n));
        const double lambda = (sn + 0.12 + 0.11 / sn) * d;
        if (lambda < 0.2)
        {
            return 1.0;
        }
        double sum = 0;
        for (int k = 1; k <= 100; ++k)
        {
            double term = std::exp(-2.0 * k * k * lambda * lambda);
            sum += (k % 2 ? 2.0 : -2.0) * term;
            if (term < 1e-16)
            {
                break;
            }
        }
        return std::clamp(sum, 0.0, 1.0);
    }

    /// Kolmogorov-Smirnov test of samples against Uniform[0, 1).
    inline double ks_uniform_pvalue(std::vector<double> xs)
    {
        if (xs.empty())
        {
            throw DomainError("KS test needs samples");
        }
        std::sort(xs.begin(), xs.end());
        const double n = static_cast<double>(xs.size());
        double d = 0;
        for (std::size_t i = 0; i < xs.size(); ++i)
        {
            d = std::max({d, (i + 1) / n - xs[i], xs[i] - i / n});
        }
        return kolmogorov_pvalue(d, xs.size());
    }

    inline double chi_squared_pvalue(double statistic, double dof)
    {
        if (dof <= 0)
        {
            return 1.0;
        }
        return boost::math::gamma_q(dof / 2, statistic / 2);
    }

    struct IndependenceTest
    {
        double statistic = 0;
        double dof = 0;
        double p_value = 1;
        std::size_t pairs = 0;
        std::size_t bins = 0;
    };

    /// Chi-squared test of independence between consecutive values, on disjoint pairs
    /// (x0,x1), (x2,x3), ... Values are grouped into bins of consecutive distinct values, each
    /// holding at least `min_count` pair members in the pooled marginal.
    inline IndependenceTest lag_one_independence(const std::vector<double> &xs, std::size_t min_count = 25)
    {
        IndependenceTest out;
        const std::size_t pairs = xs.size() / 2;
        out.pairs = pairs;
        if (pairs < 2)
        {
            return out;
        }
        std::map<double, std::size_t> freq;
        for (std::size_t i = 0; i < 2 * pairs; ++i)
        {
            ++freq[xs[i]];
        }
        // Cut points: a new bin starts once the running bin holds min_count values.
        std::vector<double> upper;
        std::size_t running = 0;
        for (auto [value, count] : freq)
        {
            running += count;
            if (running >= min_count)
            {
                upper.push_back(value);
                running = 0;
            }
        }
        if (upper.empty())
        {
            return out;
        }
        if (running > 0)
        {
            upper.back() = freq.rbegin()->first;
        }
        const std::size_t b = upper.size();
        out.bins = b;
        if (b < 2)
        {
            return out;
        }
        auto bin_of = [&](double v)
        { return static_cast<std::size_t>(std::lower_bound(upper.begin(), upper.end(), v) - upper.begin()); };
        std::vector<double> table(b * b, 0), rows(b, 0), cols(b, 0);
        for (std::size_t i = 0; i < pairs; ++i)
        {
            auto r = bin_of(xs[2 * i]), c = bin_of(xs[2 * i + 1]);
            table[r * b + c] += 1;
            rows[r] += 1;
            cols[c] += 1;
        }
        const double n = static_cast<double>(pairs);
        std::size_t live_rows = 0, live_cols = 0;
        for (std::size_t i = 0; i < b; ++i)
        {
            live_rows += rows[i] > 0;
            live_cols += cols[i] > 0;
        }
        for (std::size_t r = 0; r < b; ++r)
        {
            for (std::size_t c = 0; c < b; ++c)
            {
                double expected = rows[r] * cols[c] / n;
                if (expected > 0)
                {
                    double diff = table[r * b + c] - expected;
                    out.statistic += diff * diff / expected;
                }
            }
        }
        out.dof = static_cast<double>((live_rows - 1) * (live_cols - 1));
        out.p_value = chi_squared_pvalue(out.statistic, out.dof);
        return out;
    }
}
