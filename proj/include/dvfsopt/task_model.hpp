#ifndef DVFSOPT_TASK_MODEL_HPP
#define DVFSOPT_TASK_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvfsopt {

enum class TaskClass { hard, soft, control };

auto to_string(TaskClass c) -> std::string_view;

/// Periodic task with an inviolable deadline: (R, C, T, D).
struct HardTaskSpec {
    int id{0};
    double release_s{0.0};
    double wcet_s{0.0};
    double period_s{0.0};
    double deadline_s{0.0};
    double n_instructions{0.0};
    std::int64_t n_jobs{0};

    void validate() const;
};

/// Stochastic task: exponential inter-arrivals (rate lambda) and service (rate mu).
struct SoftTaskSpec {
    int id{0};
    double lambda{0.0};
    double mu{0.0};
    double d_max_s{0.0};
    double n_instructions{0.0};
    std::int64_t n_jobs{0};

    void validate() const;
};

/// Firm periodic control task. `skip == std::nullopt` means S = infinity.
struct ControlTaskSpec {
    int id{0};
    double release_s{0.0};
    double wcet_s{0.0};
    double period_s{0.0};
    double deadline_s{0.0};
    std::optional<int> skip{2};
    double n_instructions{0.0};
    std::int64_t n_jobs{0};

    void validate() const;
};

/// alpha(x) <= beta: at most a fraction beta of jobs may overrun by more than x seconds.
struct LatenessConstraint {
    double x_s{0.0};
    double beta{0.0};

    void validate() const;
    friend auto operator==(const LatenessConstraint&, const LatenessConstraint&) -> bool = default;
};

auto hard_constraint() -> LatenessConstraint;
/// (0, (S-1)/S); S = infinity collapses to the hard constraint.
auto control_constraint(std::optional<int> skip) -> LatenessConstraint;

auto utilization(const HardTaskSpec& t) -> double;
auto utilization(const ControlTaskSpec& t) -> double;

enum class SoftUtilForm {
    as_written,   ///< mu / lambda
    conventional, ///< lambda / mu
};

auto avg_utilization(const SoftTaskSpec& t, SoftUtilForm form = SoftUtilForm::as_written) -> double;

/// Fraction of overruns strictly greater than x. Throws EmptySample on an empty list.
auto lateness_fraction(std::span<const double> overruns, double x_s) -> double;

/// Per-task miss record produced by the simulator, in job order.
struct TaskStatistics {
    int task_id{0};
    TaskClass task_class{TaskClass::hard};
    std::vector<double> overruns_s;
    std::optional<int> skip;                           ///< control tasks only
    std::vector<LatenessConstraint> soft_constraints;  ///< soft tasks only
};

enum class ConstraintKind {
    hard_deadline,
    control_miss_fraction,
    control_skip_distance,
    soft_lateness,
};

auto to_string(ConstraintKind k) -> std::string_view;

struct ConstraintOutcome {
    int task_id{0};
    ConstraintKind kind{ConstraintKind::hard_deadline};
    LatenessConstraint bound{};
    double observed{0.0};
    bool passed{true};
};

struct ConstraintReport {
    std::vector<ConstraintOutcome> outcomes;

    [[nodiscard]] auto all_passed() const -> bool;
    [[nodiscard]] auto violations() const -> std::size_t;
    [[nodiscard]] auto violations(ConstraintKind kind) const -> std::size_t;
};

/// True when every pair of misses is separated by at least skip-1 hits.
auto skip_distance_ok(const std::vector<bool>& missed, int skip) -> bool;

/**
 * Evaluates the lateness constraints of every task in `stats`.
 * Every id in `declared_task_ids` must have a statistics entry, otherwise
 * IncompleteEvaluation is thrown.
 */
auto check_constraints(std::span<const TaskStatistics> stats, std::span<const int> declared_task_ids)
    -> ConstraintReport;

/**
 * Picks control periods T_i in [C_i, D_i] with sum(C_i / T_i) <= p.
 *
 * Periods follow T_i(s) = clamp(s * D_i, C_i, D_i): the base period of each
 * task is C_i / (p * w_i) with demand weights w_i = (C_i/D_i) / sum(C_j/D_j),
 * which is proportional to D_i. The smallest common scale s meeting the
 * utilization bound is found by bisection (relative tolerance 1e-9), i.e. the
 * result minimizes the largest normalized period T_i / D_i.
 * Throws InfeasibleError when sum(C_i / D_i) > p.
 */
auto choose_control_periods(std::span<const ControlTaskSpec> tasks, double p) -> std::vector<double>;

} // namespace dvfsopt

#endif
