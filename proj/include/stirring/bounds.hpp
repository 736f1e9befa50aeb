#pragma once

#include "errors.hpp"
#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace stirring
{
    namespace detail
    {
        inline void require_degree(double d, double least, const char *what)
        {
            if (!(d >= least))
            {
                throw DomainError(std::string(what) + " below its minimum");
            }
        }
        inline void require_positive_T(double T)
        {
            if (!(T > 0))
            {
                throw DomainError("T must be positive");
            }
        }
    }

    /// Rapid-advance rate: useful bars gained per unit time with good probability.
    inline double c1(double d, double T)
    {
        detail::require_degree(d, 2, "d");
        detail::require_positive_T(T);
        return d * d * (d - 1) / (2 * (d + 1) * (d + 1)) * -std::expm1(-(d + 1) * T / 2);
    }

    /// Lower bound on the probability that a return to a useful bar is good.
    inline double c2(double d, double T)
    {
        detail::require_degree(d, 2, "d");
        detail::require_positive_T(T);
        return (d - 1) / (4 * (d + 1)) * -std::expm1(-(d - 1) * T / 2);
    }

    inline double c1_star(double d)
    {
        detail::require_degree(d, 2, "d");
        return d / 18;
    }

    inline double c2_star(double d, double T)
    {
        detail::require_degree(d, 2, "d");
        if (T < 0)
        {
            throw DomainError("T must be non-negative");
        }
        return 3 * (d - 1) / (4 * (d + 1)) * -std::expm1(-(d - 1) * T / 2);
    }

    /// c2 c1 T - 2 (1 - c2); a positive value is the drift condition behind transience.
    inline double drift_condition(double d, double T, bool starred)
    {
        const double a = starred ? c1_star(d) : c1(d, T);
        const double b = starred ? c2_star(d, T) : c2(d, T);
        detail::require_positive_T(T);
        return b * a * T - 2 * (1 - b);
    }

    /// Right end of the interval of T below which bars on a tree with branching number d fail to
    /// percolate: -log(1 - 1/d).
    inline double percolation_exclusion(double d)
    {
        detail::require_degree(d, 2, "d");
        return -std::log1p(-1 / d);
    }

    inline double lemcomp_f(double gamma)
    {
        if (!(gamma > 13.0 / 6))
        {
            throw DomainError("f is defined for gamma > 13/6");
        }
        return (31 * gamma / 6 + 395.0 / 36) / (gamma - 13.0 / 6);
    }

    /// log of e^{-a} + e^{-(T-a)} - e^{-T}, accurate when the sum is close to one.
    inline double angel_log_base(double a, double T)
    {
        return std::log1p(std::expm1(-a) + std::expm1(-(T - a)) - std::expm1(-T));
    }

    /// The integrand of the criterion together with its prefactor (d0-1) e^{-T}, so that the
    /// integral over [0, T] is the criterion value.
    inline double angel_integrand(double a, double d0, double T)
    {
        return std::exp(std::log(d0 - 1) - T + (d0 - 2) * angel_log_base(a, T));
    }

    inline QuadResult angel_criterion_detail(double d0, double T, double quad_tol = 1e-9)
    {
        detail::require_degree(d0, 3, "d0");
        detail::require_positive_T(T);
        if (!(quad_tol > 0))
        {
            throw DomainError("quadrature tolerance must be positive");
        }
        // Panels double in width away from each endpoint, starting at the boundary-layer scale.
        std::vector<double> left{0.0};
        for (double w = std::min(T / 2, 10 / d0); w < T / 2; w *= 2)
        {
            left.push_back(w);
        }
        std::vector<double> cuts = left;
        cuts.push_back(T / 2);
        for (auto it = left.rbegin(); it != left.rend(); ++it)
        {
            cuts.push_back(T - *it);
        }
        auto f = [&](double a) { return angel_integrand(a, d0, T); };
        return integrate_adaptive(f, cuts, quad_tol);
    }

    /// (d0-1) e^{-T} \int_0^T (e^{-a} + e^{-(T-a)} - e^{-T})^{d0-2} da. A value above one
    /// certifies infinite cycles on the regular tree of degree d0.
    inline double angel_criterion(double d0, double T, double quad_tol = 1e-9)
    {
        return angel_criterion_detail(d0, T, quad_tol).value;
    }

    enum class TVerdict
    {
        ProvedInfiniteCycles,
        ProvedExcluded,
        Unresolved,
    };

    inline const char *verdict_name(TVerdict v)
    {
        switch (v)
        {
        case TVerdict::ProvedInfiniteCycles:
            return "ProvedInfiniteCycles";
        case TVerdict::ProvedExcluded:
            return "ProvedExcluded";
        case TVerdict::Unresolved:
            return "Unresolved";
        }
        return "?";
    }

    struct TClassification
    {
        TVerdict verdict = TVerdict::Unresolved;
        std::string clause;
        double percolation_bound = 0;
        double expr_value = 0;
        /// A certificate whose proof rests on expr > 1 was issued but the numeric value is not above one.
        bool expr_discrepancy = false;
    };

    /// Sorts T for the regular tree of degree d0 (every vertex but the root has d0 neighbours, so
    /// the branching number is d0 - 1) into proved infinite cycles, proved excluded, or unresolved.
    inline TClassification classify_T(double d0, double T, double quad_tol = 1e-9)
    {
        detail::require_degree(d0, 2, "d0");
        detail::require_positive_T(T);
        TClassification out;
        out.percolation_bound = d0 >= 3 ? percolation_exclusion(d0 - 1) : std::numeric_limits<double>::infinity();
        out.expr_value = d0 >= 3 ? angel_criterion(d0, T, quad_tol) : 0;
        if (T < out.percolation_bound)
        {
            out.verdict = TVerdict::ProvedExcluded;
            out.clause = "PercolationExclusion";
            return out;
        }
        bool via_expr = true;
        if (d0 >= 40 && T >= 1 / d0 + 3 / (d0 * d0) && T <= 2 / d0)
        {
            out.clause = "LemmaB2(1)";
        }
        else if (d0 >= 1287 && T >= 2 / d0 && T <= 429 / d0)
        {
            out.clause = "LemmaB2(2)";
        }
        else if (d0 >= 40 && T >= 429 / d0)
        {
            out.clause = "LemmaB2(3)";
            via_expr = false;
        }
        else if (d0 >= 2544 && T >= 2 / d0 && T <= 0.14)
        {
            out.clause = "HighDegreeLemma";
        }
        else if (out.expr_value - 10 * quad_tol > 1)
        {
            out.clause = "ExprNumeric";
        }
        if (out.clause.empty())
        {
            return out;
        }
        out.verdict = TVerdict::ProvedInfiniteCycles;
        out.expr_discrepancy = via_expr && !(out.expr_value > 1);
        return out;
    }
}
