#ifndef DVFSOPT_SIMULATOR_HPP
#define DVFSOPT_SIMULATOR_HPP

#include "dvfsopt/power_model.hpp"
#include "dvfsopt/task_model.hpp"
#include "dvfsopt/workload.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace dvfsopt {

inline constexpr std::int64_t hard_miss_weight = 1'000'000;
inline constexpr double default_energy_unit_j = 95'600.0;

struct ClusterNode {
    ServerSpec spec;
    ThermalState thermal;
};

using Cluster = std::vector<ClusterNode>;

/// Mode per server plus an N x M matrix of integer share percentages (rows follow profile order).
struct Allocation {
    std::vector<int> dvfs;
    std::vector<std::vector<int>> shares;

    friend auto operator==(const Allocation&, const Allocation&) -> bool = default;
};

struct SimOptions {
    DynEnergyForm energy_form{DynEnergyForm::as_written};
    std::int64_t miss_weight{hard_miss_weight};
    double energy_unit_j{default_energy_unit_j};
    std::optional<int> control_skip{2};
    /// Constraints for every soft task unless overridden per task id.
    std::vector<LatenessConstraint> soft_constraints{{0.0, 0.1}};
    std::map<int, std::vector<LatenessConstraint>> soft_overrides;
    /// Fill EvaluationResult::per_job. The optimizer turns this off.
    bool record_jobs{true};
};

struct JobRecord {
    int task_id{0};
    std::int64_t job_index{0};
    std::vector<int> servers;
    double start_s{0.0};
    double completion_s{0.0};
    double overrun_s{0.0};
    bool missed{false};
    bool aborted{false};
};

struct ServerRecord {
    int server_id{0};
    int mode_index{1};
    double busy_time_s{0.0};
    double utilization_sum{0.0};
    double dynamic_j{0.0};
    double leakage_j{0.0};
    double executed_instructions{0.0};
};

struct EvaluationResult {
    std::int64_t lambda{0};
    double energy_j{0.0};
    double energy_units{0.0};
    std::int64_t hard_misses{0};
    std::int64_t control_aborts{0};
    std::int64_t soft_violations{0};
    double executed_instructions{0.0};
    double discarded_instructions{0.0};
    std::vector<JobRecord> per_job;
    std::vector<ServerRecord> per_server;
    ConstraintReport report;
};

/**
 * Static proportional-share evaluator.
 *
 * Task i with total trace work W_i routes s_im percent of it to server m, so
 * n_im = s_im/100 * W_i and u_im = n_im / sum_j n_jm. A job of work w runs its
 * subtask on m for CPI_m * (s_im/100 * w) / (f_m * u_im) seconds; the job ends
 * with its slowest subtask, and a task's jobs run strictly FIFO. A missed
 * control job is aborted at its deadline and its unexecuted work discarded.
 *
 * Construction validates the cluster and indexes the trace once, so repeated
 * evaluate() calls only pay for the allocation itself.
 */
class Evaluator {
  public:
    Evaluator(Cluster cluster, std::vector<TaskProfile> profiles, const JobTrace& trace, SimOptions options = {});

    [[nodiscard]] auto evaluate(const Allocation& alloc) const -> EvaluationResult;

    [[nodiscard]] auto cluster() const -> const Cluster& { return cluster_; }
    [[nodiscard]] auto profiles() const -> const std::vector<TaskProfile>& { return profiles_; }
    [[nodiscard]] auto options() const -> const SimOptions& { return options_; }
    /// Total trace work of the task in profile row `row`.
    [[nodiscard]] auto task_work(std::size_t row) const -> double { return task_work_[row]; }
    [[nodiscard]] auto total_work() const -> double;

    /// Throws InvalidArgument / DimensionError when `alloc` does not fit this cluster and workload.
    void validate(const Allocation& alloc) const;

  private:
    friend auto edf_schedule(const Evaluator& ev, std::optional<int> mode_index,
                             std::optional<std::vector<int>> partition) -> EvaluationResult;

    Cluster cluster_;
    std::vector<TaskProfile> profiles_;
    SimOptions options_;
    std::vector<std::vector<Job>> jobs_; ///< per profile row, FIFO
    std::vector<double> task_work_;
};

auto evaluate_allocation(const Cluster& cluster, std::span<const TaskProfile> profiles, const JobTrace& trace,
                         const Allocation& alloc, const SimOptions& options = {}) -> EvaluationResult;

/// Worst-fit decreasing on utilization at each host's given mode; ties broken by task id, then host id.
auto worst_fit_partition(const Cluster& cluster, std::span<const TaskProfile> profiles, const std::vector<int>& dvfs)
    -> std::vector<int>;

/**
 * Preemptive EDF on every host at `mode_index` (default: each host's max
 * mode). Tasks are pinned to hosts by worst_fit_partition unless an explicit
 * partition (host per profile row) is given. Energy is accounted with the
 * same per-server formulas as evaluate_allocation, using the whole-task
 * allocation the partition implies.
 */
auto edf_schedule(const Evaluator& ev, std::optional<int> mode_index = std::nullopt,
                  std::optional<std::vector<int>> partition = std::nullopt) -> EvaluationResult;

auto edf_schedule(const Cluster& cluster, std::span<const TaskProfile> profiles, const JobTrace& trace,
                  const SimOptions& options = {}) -> EvaluationResult;

/// Allocation that pins each task wholly to partition[row] with every host at its mode in `dvfs`.
auto partition_allocation(const std::vector<int>& partition, const std::vector<int>& dvfs, std::size_t n_servers)
    -> Allocation;

inline constexpr std::string_view job_report_header =
    "task_id,job_index,server_set,start_s,completion_s,overrun_s,missed,aborted";

/// Per-job CSV; server_set is a ';'-separated list of server ids.
void write_job_report(std::ostream& out, const EvaluationResult& result);

} // namespace dvfsopt

#endif
