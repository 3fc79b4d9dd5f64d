#ifndef DVFSOPT_WORKLOAD_HPP
#define DVFSOPT_WORKLOAD_HPP

#include "dvfsopt/task_model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvfsopt {

enum class TaskType { real, ctrl, soft };

auto to_string(TaskType t) -> std::string_view;
auto task_class_of(TaskType t) -> TaskClass;

/// One row of a task-profile table.
struct TaskProfile {
    int task_id{0};
    TaskType type{TaskType::real};
    double n_instructions{0.0};
    double period_s{0.0};
    double deadline_s{0.0};
    std::int64_t n_jobs{0};

    /// Instructions over all jobs of the task.
    [[nodiscard]] auto total_instructions() const -> double { return n_instructions * static_cast<double>(n_jobs); }

    friend auto operator==(const TaskProfile&, const TaskProfile&) -> bool = default;
};

inline constexpr std::string_view workload_csv_header = "task_id,type,n_ins,period_s,deadline_s,n_jobs";

auto parse_workload(std::istream& in, std::string_view source = "<stream>") -> std::vector<TaskProfile>;
auto parse_workload(const std::filesystem::path& path) -> std::vector<TaskProfile>;
void write_workload(std::ostream& out, std::span<const TaskProfile> profiles);

struct Job {
    int task_id{0};
    std::int64_t job_index{0};
    double arrival_s{0.0};
    double deadline_s{0.0}; ///< absolute
    double work{0.0};       ///< instructions

    friend auto operator==(const Job&, const Job&) -> bool = default;
};

struct JobTrace {
    std::vector<Job> jobs; ///< grouped by task in profile order, FIFO within a task
    std::uint64_t seed{0};
    std::string generator{"mt19937_64"};
    double horizon_s{0.0};

    friend auto operator==(const JobTrace&, const JobTrace&) -> bool = default;
};

enum class PhasePolicy { zero, uniform_random };
enum class SoftDeadline { fixed, uniform };

struct GenerateOptions {
    PhasePolicy phase{PhasePolicy::zero};
    SoftDeadline soft_deadline{SoftDeadline::fixed};
};

/**
 * Expands profiles into concrete jobs.
 *
 * REAL/CTRL: job j arrives at R + j*T with the profile work and deadline.
 * SOFT: a renewal process starting at R with Exp(mean = period) gaps; work is
 * Exp(mean = n_ins) rounded up to at least one instruction; the relative
 * deadline is the profile deadline (or uniform on [0, D] with
 * SoftDeadline::uniform).
 *
 * Random draws are consumed task by task in profile order: the phase (if
 * uniform_random, U[0, T)), then per job the gap, the work, and the uniform
 * deadline when enabled.
 */
auto generate_jobs(std::span<const TaskProfile> profiles, std::uint64_t seed, const GenerateOptions& options = {})
    -> JobTrace;

/// max over tasks of (n_jobs * period + deadline), zero phase.
auto hyperperiod_horizon(std::span<const TaskProfile> profiles) -> double;

inline constexpr std::string_view trace_csv_header = "task_id,job_index,arrival_s,deadline_s,work_instructions";

void write_trace(std::ostream& out, const JobTrace& trace);
auto parse_trace(std::istream& in, std::string_view source = "<stream>") -> JobTrace;

/// Hard-task view of a REAL profile; WCET = cpi * n_ins / f_ref.
auto to_hard_spec(const TaskProfile& p, double cpi, double f_ref_hz) -> HardTaskSpec;
/// Control-task view of a CTRL profile with skip S; T = D = profile deadline, WCET = cpi * n_ins / f_ref.
auto to_control_spec(const TaskProfile& p, double cpi, double f_ref_hz, std::optional<int> skip) -> ControlTaskSpec;
/// Soft-task view: lambda = 1/period, mu = f_ref / (cpi * n_ins).
auto to_soft_spec(const TaskProfile& p, double cpi, double f_ref_hz) -> SoftTaskSpec;

} // namespace dvfsopt

#endif
