#include "dvfsopt/task_model.hpp"

#include "dvfsopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dvfsopt {

auto to_string(TaskClass c) -> std::string_view
{
    switch (c) {
    case TaskClass::hard: return "hard";
    case TaskClass::soft: return "soft";
    case TaskClass::control: return "control";
    }
    return "?";
}

auto to_string(ConstraintKind k) -> std::string_view
{
    switch (k) {
    case ConstraintKind::hard_deadline: return "hard_deadline";
    case ConstraintKind::control_miss_fraction: return "control_miss_fraction";
    case ConstraintKind::control_skip_distance: return "control_skip_distance";
    case ConstraintKind::soft_lateness: return "soft_lateness";
    }
    return "?";
}

namespace {

[[noreturn]] void bad_task(int id, const char* what)
{
    std::ostringstream os;
    os << "task " << id << ": " << what;
    throw InvalidArgument(os.str());
}

} // namespace

void HardTaskSpec::validate() const
{
    if (!(wcet_s > 0.0)) bad_task(id, "WCET must be > 0");
    if (!(wcet_s <= deadline_s && deadline_s <= period_s)) bad_task(id, "requires C <= D <= T");
    if (release_s < 0.0) bad_task(id, "release must be >= 0");
    if (n_instructions < 0.0 || n_jobs < 0) bad_task(id, "negative instruction or job count");
}

void SoftTaskSpec::validate() const
{
    if (!(lambda > 0.0) || !(mu > 0.0)) bad_task(id, "lambda and mu must be > 0");
    if (d_max_s < 0.0) bad_task(id, "deadline bound must be >= 0");
    if (n_instructions < 0.0 || n_jobs < 0) bad_task(id, "negative instruction or job count");
}

void ControlTaskSpec::validate() const
{
    if (!(wcet_s > 0.0)) bad_task(id, "WCET must be > 0");
    if (period_s != deadline_s) bad_task(id, "control tasks require T = D");
    if (wcet_s > deadline_s) bad_task(id, "requires C <= D");
    if (skip && *skip < 2) bad_task(id, "skip parameter must be >= 2 or infinite");
    if (release_s < 0.0) bad_task(id, "release must be >= 0");
    if (n_instructions < 0.0 || n_jobs < 0) bad_task(id, "negative instruction or job count");
}

void LatenessConstraint::validate() const
{
    if (x_s < 0.0) throw InvalidArgument("lateness constraint: x must be >= 0");
    if (beta < 0.0 || beta > 1.0) throw InvalidArgument("lateness constraint: beta must lie in [0, 1]");
}

auto hard_constraint() -> LatenessConstraint { return {0.0, 0.0}; }

auto control_constraint(std::optional<int> skip) -> LatenessConstraint
{
    if (!skip) return hard_constraint();
    const double s = *skip;
    return {0.0, (s - 1.0) / s};
}

auto utilization(const HardTaskSpec& t) -> double
{
    t.validate();
    return t.wcet_s / t.period_s;
}

auto utilization(const ControlTaskSpec& t) -> double
{
    t.validate();
    return t.wcet_s / t.period_s;
}

auto avg_utilization(const SoftTaskSpec& t, SoftUtilForm form) -> double
{
    t.validate();
    return form == SoftUtilForm::as_written ? t.mu / t.lambda : t.lambda / t.mu;
}

auto lateness_fraction(std::span<const double> overruns, double x_s) -> double
{
    if (overruns.empty()) throw EmptySample("lateness_fraction: no jobs");
    const auto late = std::count_if(overruns.begin(), overruns.end(), [x_s](double o) { return o > x_s; });
    return static_cast<double>(late) / static_cast<double>(overruns.size());
}

auto ConstraintReport::all_passed() const -> bool
{
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.passed; });
}

auto ConstraintReport::violations() const -> std::size_t
{
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.passed; }));
}

auto ConstraintReport::violations(ConstraintKind kind) const -> std::size_t
{
    return static_cast<std::size_t>(std::count_if(
        outcomes.begin(), outcomes.end(), [kind](const auto& o) { return !o.passed && o.kind == kind; }));
}

auto skip_distance_ok(const std::vector<bool>& missed, int skip) -> bool
{
    // hits since the previous miss; "infinite" before the first miss
    std::int64_t hits_since_miss = -1;
    for (bool m : missed) {
        if (m) {
            if (hits_since_miss >= 0 && hits_since_miss < skip - 1) return false;
            hits_since_miss = 0;
        } else if (hits_since_miss >= 0) {
            ++hits_since_miss;
        }
    }
    return true;
}

auto check_constraints(std::span<const TaskStatistics> stats, std::span<const int> declared_task_ids)
    -> ConstraintReport
{
    std::set<int> seen;
    for (const auto& s : stats) seen.insert(s.task_id);
    for (int id : declared_task_ids) {
        if (!seen.contains(id)) {
            std::ostringstream os;
            os << "check_constraints: no statistics for declared task " << id;
            throw IncompleteEvaluation(os.str());
        }
    }

    ConstraintReport report;
    for (const auto& s : stats) {
        if (s.overruns_s.empty()) {
            // A task without jobs cannot violate anything.
            continue;
        }
        switch (s.task_class) {
        case TaskClass::hard: {
            const auto bound = hard_constraint();
            const double alpha = lateness_fraction(s.overruns_s, bound.x_s);
            report.outcomes.push_back({s.task_id, ConstraintKind::hard_deadline, bound, alpha, alpha <= bound.beta});
            break;
        }
        case TaskClass::control: {
            const auto bound = control_constraint(s.skip);
            const double alpha = lateness_fraction(s.overruns_s, bound.x_s);
            const auto kind = s.skip ? ConstraintKind::control_miss_fraction : ConstraintKind::hard_deadline;
            report.outcomes.push_back({s.task_id, kind, bound, alpha, alpha <= bound.beta});
            if (s.skip) {
                std::vector<bool> missed;
                missed.reserve(s.overruns_s.size());
                for (double o : s.overruns_s) missed.push_back(o > 0.0);
                const bool ok = skip_distance_ok(missed, *s.skip);
                report.outcomes.push_back(
                    {s.task_id, ConstraintKind::control_skip_distance, bound, ok ? 0.0 : 1.0, ok});
            }
            break;
        }
        case TaskClass::soft:
            for (const auto& bound : s.soft_constraints) {
                const double alpha = lateness_fraction(s.overruns_s, bound.x_s);
                report.outcomes.push_back({s.task_id, ConstraintKind::soft_lateness, bound, alpha, alpha <= bound.beta});
            }
            break;
        }
    }
    return report;
}

auto choose_control_periods(std::span<const ControlTaskSpec> tasks, double p) -> std::vector<double>
{
    if (!(p > 0.0 && p < 1.0)) throw DomainError("choose_control_periods: p must lie in (0, 1)");
    if (tasks.empty()) return {};

    double min_demand = 0.0;
    for (const auto& t : tasks) {
        if (!(t.wcet_s > 0.0) || t.wcet_s > t.deadline_s) {
            std::ostringstream os;
            os << "choose_control_periods: task " << t.id << " needs 0 < C <= D";
            throw InvalidArgument(os.str());
        }
        min_demand += t.wcet_s / t.deadline_s;
    }
    if (min_demand > p) {
        std::ostringstream os;
        os << "choose_control_periods: sum C/D = " << min_demand << " exceeds p = " << p;
        throw InfeasibleError(os.str());
    }

    auto periods_at = [&](double s) {
        std::vector<double> out;
        out.reserve(tasks.size());
        for (const auto& t : tasks) out.push_back(std::clamp(s * t.deadline_s, t.wcet_s, t.deadline_s));
        return out;
    };
    auto load_at = [&](double s) {
        double u = 0.0;
        const auto periods = periods_at(s);
        for (std::size_t i = 0; i < tasks.size(); ++i) u += tasks[i].wcet_s / periods[i];
        return u;
    };

    // Proportional start: with T_i = C_i / (p w_i) the bound is tight unless a clamp binds.
    double hi = min_demand / p;
    if (load_at(hi) > p) hi = 1.0;
    double lo = 0.0; // load_at(0) = n > p
    // Bisection on the common scale; load_at is non-increasing in s.
    while (hi - lo > 1e-9 * hi) {
        const double mid = 0.5 * (lo + hi);
        (load_at(mid) <= p ? hi : lo) = mid;
    }
    while (load_at(hi) > p && hi < 1.0) {
        hi = std::nextafter(hi, 2.0);
    }
    return periods_at(hi);
}

} // namespace dvfsopt
