#ifndef DVFSOPT_TESTS_ORACLE_HPP
#define DVFSOPT_TESTS_ORACLE_HPP

// Independent reference evaluators used by the unit and acceptance tests.
// They share no code with the library: each formula is spelled out directly
// in long double, term by term.

#include "dvfsopt/power_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

struct Term {
    long double u;
    long double n;
};

inline long double leakage_power(const dvfsopt::ServerSpec& s, long double v, const std::vector<double>& t_cpu,
                                 long double t_mem)
{
    long double p = 0.0L;
    for (std::size_t k = 0; k < t_cpu.size(); ++k) {
        const long double t = t_cpu[k];
        p += static_cast<long double>(s.b[k]) * t * t * v;
        p += static_cast<long double>(s.c[k]) * t * v * v;
        p += static_cast<long double>(s.g[k]) * t_mem * t_mem;
        p += static_cast<long double>(s.h[k]) * t_mem;
    }
    p += static_cast<long double>(s.d) * v * v * v;
    p += static_cast<long double>(s.e);
    return p;
}

inline long double dynamic_power(const dvfsopt::ServerSpec& s, long double v, long double f, long double u)
{
    return static_cast<long double>(s.a) * v * v * f * u;
}

inline long double dynamic_energy(const dvfsopt::ServerSpec& s, long double v, const std::vector<Term>& terms,
                                  bool as_written)
{
    long double sum = 0.0L;
    for (const auto& t : terms) sum += as_written ? t.u * t.n : t.n;
    return static_cast<long double>(s.a) * v * v * static_cast<long double>(s.cpi) * sum;
}

inline long double leakage_energy(long double p_leak, long double cpi, long double f, long double n)
{
    const long double busy_time = cpi * n / f;
    return p_leak * busy_time;
}

inline double rel_err(long double got, long double want)
{
    const long double scale = std::max(std::fabs(want), 1e-300L);
    return static_cast<double>(std::fabs(got - want) / scale);
}

/// Control task for the period grid search: WCET c, deadline d.
struct PeriodTask {
    double c;
    double d;
};

struct GridOptimum {
    std::vector<double> periods;
    double max_normalized; ///< max_i T_i / D_i
};

/// Exhaustive search over T_i in {k * step} within [C_i, D_i] for three
/// tasks, minimizing max T_i/D_i subject to sum C_i/T_i <= p. Cheap enough
/// for deadlines up to roughly 0.15 s at step 1e-3.
inline std::optional<GridOptimum> grid_periods3(const std::vector<PeriodTask>& t, double p, double step = 1e-3)
{
    auto grid = [step](const PeriodTask& x) {
        std::vector<double> g;
        for (long k = static_cast<long>(std::ceil(x.c / step - 1e-9)); k * step <= x.d + 1e-12; ++k) {
            g.push_back(static_cast<double>(k) * step);
        }
        return g;
    };
    const auto g0 = grid(t[0]);
    const auto g1 = grid(t[1]);
    const auto g2 = grid(t[2]);
    std::optional<GridOptimum> best;
    for (double a : g0) {
        for (double b : g1) {
            for (double c : g2) {
                const double load = t[0].c / a + t[1].c / b + t[2].c / c;
                if (load > p) continue;
                const double m = std::max({a / t[0].d, b / t[1].d, c / t[2].d});
                if (!best || m < best->max_normalized) best = GridOptimum{{a, b, c}, m};
            }
        }
    }
    return best;
}

} // namespace oracle

#endif
