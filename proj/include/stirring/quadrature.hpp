#pragma once

#include "errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

namespace stirring
{
    struct QuadResult
    {
        double value = 0;
        double error = 0;
        std::size_t evaluations = 0;
        std::size_t panels = 0;
    };

    namespace detail
    {
        // 15-point Kronrod abscissae on [-1, 1] (non-negative half) with Kronrod and embedded
        // 7-point Gauss weights.
        inline constexpr std::array<double, 8> gk_nodes{
            0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
        inline constexpr std::array<double, 8> gk_kronrod{
            0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
        inline constexpr std::array<double, 4> gk_gauss{
            0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

        struct Panel
        {
            double a, b, value, error;
            bool operator<(const Panel &o) const { return error < o.error; }
        };

        template <class F>
        Panel gk15(F &f, double a, double b)
        {
            const double c = 0.5 * (a + b), h = 0.5 * (b - a);
            const double fc = f(c);
            double kronrod = fc * gk_kronrod[7];
            double gauss = fc * gk_gauss[3];
            for (int j = 0; j < 7; ++j)
            {
                const double x = h * gk_nodes[j];
                const double s = f(c - x) + f(c + x);
                kronrod += gk_kronrod[j] * s;
                if (j % 2 == 1)
                {
                    gauss += gk_gauss[j / 2] * s;
                }
            }
            return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
        }
    }

    /// Globally adaptive Gauss-Kronrod integration over breakpoints[0] .. breakpoints.back(),
    /// always bisecting the panel with the largest error estimate. Stops when the summed error
    /// estimate is below abs_tol; throws ToleranceNotMet if the panel budget runs out or panels
    /// shrink to rounding level first.
    template <class F>
    QuadResult integrate_adaptive(F &&f, const std::vector<double> &breakpoints, double abs_tol,
                                  std::size_t max_panels = 200000)
    {
        if (breakpoints.size() < 2 || !(abs_tol > 0))
        {
            throw DomainError("integration needs two breakpoints and a positive tolerance");
        }
        std::priority_queue<detail::Panel> heap;
        QuadResult out;
        double value = 0, error = 0;
        for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        {
            if (!(breakpoints[i] < breakpoints[i + 1]))
            {
                continue;
            }
            auto p = detail::gk15(f, breakpoints[i], breakpoints[i + 1]);
            out.evaluations += 15;
            value += p.value;
            error += p.error;
            heap.push(p);
        }
        while (error > abs_tol)
        {
            if (heap.size() >= max_panels)
            {
                throw ToleranceNotMet("quadrature panel budget exhausted; error estimate " + std::to_string(error));
            }
            auto worst = heap.top();
            const double mid = 0.5 * (worst.a + worst.b);
            if (!(worst.a < mid && mid < worst.b))
            {
                throw ToleranceNotMet("quadrature panels reached rounding level; error estimate " +
                                      std::to_string(error));
            }
            heap.pop();
            auto left = detail::gk15(f, worst.a, mid);
            auto right = detail::gk15(f, mid, worst.b);
            out.evaluations += 30;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
        }
        // Re-sum to shed the drift of the running totals.
        value = 0;
        error = 0;
        out.panels = heap.size();
        while (!heap.empty())
        {
            value += heap.top().value;
            error += heap.top().error;
            heap.pop();
        }
        out.value = value;
        out.error = error;
        return out;
    }
}
