#include "dvfsopt/simulator.hpp"

#include "dvfsopt/error.hpp"
#include "dvfsopt/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace dvfsopt {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

using Matrix = std::vector<std::vector<double>>;

/// Per-row timing outcome shared by both schedulers.
struct RowOutcome {
    std::vector<double> overruns;
    std::int64_t misses{0};
    std::int64_t aborts{0};
};

struct EnergyAccount {
    std::vector<ServerRecord> servers;
    double energy_j{0.0};
};

/// Per-server energy of executed instructions n_exec[row][m] under the allocation's shares.
auto account_energy(const Cluster& cluster, const Allocation& alloc, const std::vector<double>& task_work,
                    const Matrix& n_exec, DynEnergyForm form) -> EnergyAccount
{
    const std::size_t m_count = cluster.size();
    const std::size_t n_rows = alloc.shares.size();
    EnergyAccount acc;
    acc.servers.resize(m_count);
    std::vector<EnergyTerm> terms;
    for (std::size_t m = 0; m < m_count; ++m) {
        const auto& node = cluster[m];
        const auto& mode = node.spec.mode(alloc.dvfs[m]);
        auto& rec = acc.servers[m];
        rec.server_id = static_cast<int>(m);
        rec.mode_index = mode.index;

        double load = 0.0;
        for (std::size_t i = 0; i < n_rows; ++i) load += alloc.shares[i][m] / 100.0 * task_work[i];
        if (!(load > 0.0)) continue;

        terms.clear();
        double executed = 0.0;
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (alloc.shares[i][m] == 0 || task_work[i] == 0.0) continue;
            const double u = alloc.shares[i][m] / 100.0 * task_work[i] / load;
            terms.push_back({u, n_exec[i][m]});
            rec.utilization_sum += u;
            executed += n_exec[i][m];
        }
        rec.executed_instructions = executed;
        rec.busy_time_s = node.spec.cpi * executed / mode.frequency_hz;
        rec.dynamic_j = dynamic_energy(node.spec, mode, terms, form);
        rec.leakage_j = leakage_energy(node.spec, mode, node.thermal, executed);
        acc.energy_j += rec.dynamic_j + rec.leakage_j;
    }
    return acc;
}

auto soft_bounds(const SimOptions& o, int task_id) -> const std::vector<LatenessConstraint>&
{
    const auto it = o.soft_overrides.find(task_id);
    return it == o.soft_overrides.end() ? o.soft_constraints : it->second;
}

/// Fills lambda, counters and the constraint report from per-row outcomes.
void finalize(EvaluationResult& r, const std::vector<TaskProfile>& profiles, std::vector<RowOutcome>& rows,
              const SimOptions& o)
{
    std::vector<TaskStatistics> stats;
    std::vector<int> ids;
    stats.reserve(profiles.size());
    ids.reserve(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        TaskStatistics s;
        s.task_id = p.task_id;
        s.task_class = task_class_of(p.type);
        s.overruns_s = std::move(rows[i].overruns);
        switch (p.type) {
        case TaskType::real: r.hard_misses += rows[i].misses; break;
        case TaskType::ctrl:
            s.skip = o.control_skip;
            r.control_aborts += rows[i].aborts;
            break;
        case TaskType::soft: s.soft_constraints = soft_bounds(o, p.task_id); break;
        }
        ids.push_back(p.task_id);
        stats.push_back(std::move(s));
    }
    r.report = check_constraints(stats, ids);
    r.soft_violations = static_cast<std::int64_t>(r.report.violations(ConstraintKind::soft_lateness));
    r.lambda = r.soft_violations + r.control_aborts + o.miss_weight * r.hard_misses;
}

} // namespace

Evaluator::Evaluator(Cluster cluster, std::vector<TaskProfile> profiles, const JobTrace& trace, SimOptions options)
    : cluster_(std::move(cluster)), profiles_(std::move(profiles)), options_(std::move(options))
{
    if (cluster_.empty()) throw ConfigError("evaluator: empty cluster");
    if (profiles_.empty()) throw ConfigError("evaluator: empty workload");
    for (const auto& node : cluster_) {
        node.spec.validate();
        node.thermal.validate();
        if (static_cast<int>(node.thermal.t_cpu_k.size()) != node.spec.n_sockets) {
            throw InvalidArgument("evaluator: thermal state of server '" + node.spec.label +
                                  "' does not match its socket count");
        }
    }
    for (const auto& c : options_.soft_constraints) c.validate();
    for (const auto& [id, list] : options_.soft_overrides) {
        for (const auto& c : list) c.validate();
    }

    std::unordered_map<int, std::size_t> row_of;
    for (std::size_t i = 0; i < profiles_.size(); ++i) row_of.emplace(profiles_[i].task_id, i);
    jobs_.resize(profiles_.size());
    task_work_.assign(profiles_.size(), 0.0);
    for (const auto& j : trace.jobs) {
        const auto it = row_of.find(j.task_id);
        if (it == row_of.end()) {
            throw DimensionError("evaluator: trace references task " + std::to_string(j.task_id) +
                                 " which is not in the workload");
        }
        jobs_[it->second].push_back(j);
    }
    for (std::size_t i = 0; i < jobs_.size(); ++i) {
        auto& js = jobs_[i];
        std::stable_sort(js.begin(), js.end(), [](const Job& a, const Job& b) {
            return std::tie(a.arrival_s, a.job_index) < std::tie(b.arrival_s, b.job_index);
        });
        for (const auto& j : js) task_work_[i] += j.work;
    }
}

auto Evaluator::total_work() const -> double
{
    return std::accumulate(task_work_.begin(), task_work_.end(), 0.0);
}

void Evaluator::validate(const Allocation& alloc) const
{
    const std::size_t m_count = cluster_.size();
    if (alloc.dvfs.size() != m_count) {
        throw DimensionError("allocation has " + std::to_string(alloc.dvfs.size()) + " DVFS entries for " +
                             std::to_string(m_count) + " servers");
    }
    for (std::size_t m = 0; m < m_count; ++m) {
        const int k = alloc.dvfs[m];
        if (k < 1 || k > cluster_[m].spec.mode_count()) {
            throw InvalidArgument("allocation: mode " + std::to_string(k) + " out of range for server " +
                                  std::to_string(m));
        }
    }
    if (alloc.shares.size() != profiles_.size()) {
        throw DimensionError("allocation has " + std::to_string(alloc.shares.size()) + " share rows for " +
                             std::to_string(profiles_.size()) + " tasks");
    }
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        const auto& row = alloc.shares[i];
        if (row.size() != m_count) {
            throw DimensionError("allocation row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                                 " entries for " + std::to_string(m_count) + " servers");
        }
        int sum = 0;
        int nonzero = 0;
        for (int s : row) {
            if (s < 0 || s > 100) throw InvalidArgument("allocation: share outside [0, 100] in row " + std::to_string(i));
            sum += s;
            nonzero += s > 0 ? 1 : 0;
        }
        if (sum != 100) throw InvalidArgument("allocation: row " + std::to_string(i) + " sums to " + std::to_string(sum));
        if (profiles_[i].type == TaskType::real && nonzero != 1) {
            throw InvalidArgument("allocation: REAL task " + std::to_string(profiles_[i].task_id) +
                                  " must run on exactly one server");
        }
    }
}

auto Evaluator::evaluate(const Allocation& alloc) const -> EvaluationResult
{
    validate(alloc);
    const std::size_t m_count = cluster_.size();
    const std::size_t n_rows = profiles_.size();

    std::vector<double> load(m_count, 0.0);
    std::vector<double> seconds_per_load(m_count, 0.0); // CPI_m / f_m
    for (std::size_t m = 0; m < m_count; ++m) {
        for (std::size_t i = 0; i < n_rows; ++i) load[m] += alloc.shares[i][m] / 100.0 * task_work_[i];
        seconds_per_load[m] = cluster_[m].spec.cpi / cluster_[m].spec.mode(alloc.dvfs[m]).frequency_hz;
    }

    EvaluationResult r;
    std::vector<RowOutcome> rows(n_rows);
    Matrix n_exec(n_rows, std::vector<double>(m_count, 0.0));
    std::vector<double> coeff(m_count);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto& js = jobs_[i];
        if (js.empty()) continue;
        const auto& row = alloc.shares[i];
        const bool is_control = profiles_[i].type == TaskType::ctrl;

        // Seconds per instruction of job work on each server: CPI*L_m / (f_m * W_i),
        // independent of the task's own share.
        double tau = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            coeff[m] = row[m] > 0 ? seconds_per_load[m] * load[m] / task_work_[i] : 0.0;
            tau = std::max(tau, coeff[m]);
        }

        auto& out = rows[i];
        out.overruns.reserve(js.size());
        double prev_end = -inf;
        for (const auto& j : js) {
            const double start = std::max(j.arrival_s, prev_end);
            const double natural = start + j.work * tau;
            const double overrun = natural - j.deadline_s;
            const bool missed = overrun > 0.0;
            const bool aborted = missed && is_control;
            double end = natural;
            if (aborted) {
                end = std::max(start, j.deadline_s);
                const double available = end - start;
                for (std::size_t m = 0; m < m_count; ++m) {
                    if (row[m] == 0) continue;
                    const double part = row[m] / 100.0 * j.work;
                    const double need = j.work * coeff[m];
                    const double done = need <= available ? part : part * (available / need);
                    n_exec[i][m] += done;
                    r.discarded_instructions += part - done;
                }
                ++out.aborts;
            } else {
                for (std::size_t m = 0; m < m_count; ++m) {
                    if (row[m] != 0) n_exec[i][m] += row[m] / 100.0 * j.work;
                }
            }
            out.misses += missed ? 1 : 0;
            out.overruns.push_back(overrun);
            prev_end = end;

            if (options_.record_jobs) {
                JobRecord rec;
                rec.task_id = j.task_id;
                rec.job_index = j.job_index;
                for (std::size_t m = 0; m < m_count; ++m) {
                    if (row[m] != 0) rec.servers.push_back(static_cast<int>(m));
                }
                rec.start_s = start;
                rec.completion_s = end;
                rec.overrun_s = overrun;
                rec.missed = missed;
                rec.aborted = aborted;
                r.per_job.push_back(std::move(rec));
            }
        }
    }

    auto acc = account_energy(cluster_, alloc, task_work_, n_exec, options_.energy_form);
    r.per_server = std::move(acc.servers);
    r.energy_j = acc.energy_j;
    r.energy_units = r.energy_j / options_.energy_unit_j;
    for (const auto& s : r.per_server) r.executed_instructions += s.executed_instructions;
    finalize(r, profiles_, rows, options_);
    return r;
}

auto evaluate_allocation(const Cluster& cluster, std::span<const TaskProfile> profiles, const JobTrace& trace,
                         const Allocation& alloc, const SimOptions& options) -> EvaluationResult
{
    const Evaluator ev(cluster, {profiles.begin(), profiles.end()}, trace, options);
    return ev.evaluate(alloc);
}

auto worst_fit_partition(const Cluster& cluster, std::span<const TaskProfile> profiles, const std::vector<int>& dvfs)
    -> std::vector<int>
{
    if (cluster.empty()) throw ConfigError("worst_fit_partition: empty cluster");
    if (dvfs.size() != cluster.size()) throw DimensionError("worst_fit_partition: one mode per server required");
    auto util = [&](std::size_t i, std::size_t m) {
        const auto& p = profiles[i];
        return cluster[m].spec.cpi * p.n_instructions / (cluster[m].spec.mode(dvfs[m]).frequency_hz * p.period_s);
    };
    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ua = util(a, 0);
        const double ub = util(b, 0);
        if (ua != ub) return ua > ub;
        return profiles[a].task_id < profiles[b].task_id;
    });
    std::vector<double> load(cluster.size(), 0.0);
    std::vector<int> host(profiles.size(), 0);
    for (std::size_t i : order) {
        std::size_t best = 0;
        for (std::size_t m = 1; m < cluster.size(); ++m) {
            if (load[m] < load[best]) best = m;
        }
        host[i] = static_cast<int>(best);
        load[best] += util(i, best);
    }
    return host;
}

auto partition_allocation(const std::vector<int>& partition, const std::vector<int>& dvfs, std::size_t n_servers)
    -> Allocation
{
    Allocation a;
    a.dvfs = dvfs;
    a.shares.assign(partition.size(), std::vector<int>(n_servers, 0));
    for (std::size_t i = 0; i < partition.size(); ++i) {
        const int h = partition[i];
        if (h < 0 || static_cast<std::size_t>(h) >= n_servers) {
            throw DimensionError("partition: host " + std::to_string(h) + " out of range");
        }
        a.shares[i][static_cast<std::size_t>(h)] = 100;
    }
    return a;
}

auto edf_schedule(const Evaluator& ev, std::optional<int> mode_index, std::optional<std::vector<int>> partition)
    -> EvaluationResult
{
    const auto& cluster = ev.cluster_;
    const auto& profiles = ev.profiles_;
    const std::size_t m_count = cluster.size();
    const std::size_t n_rows = profiles.size();

    std::vector<int> dvfs(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        dvfs[m] = mode_index ? *mode_index : cluster[m].spec.max_mode().index;
        (void)cluster[m].spec.mode(dvfs[m]); // range check
    }
    const auto hosts = partition ? *partition : worst_fit_partition(cluster, profiles, dvfs);
    if (hosts.size() != n_rows) throw DimensionError("edf_schedule: partition needs one host per task");
    const auto alloc = partition_allocation(hosts, dvfs, m_count);

    EvaluationResult r;
    std::vector<RowOutcome> rows(n_rows);
    Matrix n_exec(n_rows, std::vector<double>(m_count, 0.0));

    struct Live {
        std::size_t row;
        std::size_t pos; ///< index into ev.jobs_[row]
        double remaining_s;
        double start_s;
    };

    for (std::size_t h = 0; h < m_count; ++h) {
        const double spi = cluster[h].spec.cpi / cluster[h].spec.mode(dvfs[h]).frequency_hz;
        // Arrivals on this host, ordered by (time, task id, job index).
        std::vector<std::pair<std::size_t, std::size_t>> arrivals;
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (hosts[i] != static_cast<int>(h)) continue;
            for (std::size_t k = 0; k < ev.jobs_[i].size(); ++k) arrivals.emplace_back(i, k);
        }
        std::sort(arrivals.begin(), arrivals.end(), [&](const auto& a, const auto& b) {
            const auto& ja = ev.jobs_[a.first][a.second];
            const auto& jb = ev.jobs_[b.first][b.second];
            return std::tie(ja.arrival_s, ja.task_id, ja.job_index) < std::tie(jb.arrival_s, jb.task_id, jb.job_index);
        });

        // FIFO per task: only the oldest pending job of a task competes.
        std::vector<std::vector<std::size_t>> pending(n_rows);
        std::vector<std::size_t> pending_head(n_rows, 0);
        std::vector<std::optional<Live>> head(n_rows);
        auto job_of = [&](const Live& l) -> const Job& { return ev.jobs_[l.row][l.pos]; };
        auto promote = [&](std::size_t row) {
            if (head[row] || pending_head[row] >= pending[row].size()) return;
            const std::size_t pos = pending[row][pending_head[row]++];
            head[row] = Live{row, pos, ev.jobs_[row][pos].work * spi, -1.0};
        };
        auto pick = [&]() -> std::optional<std::size_t> {
            std::optional<std::size_t> best;
            for (std::size_t i = 0; i < n_rows; ++i) {
                if (!head[i]) continue;
                if (!best) {
                    best = i;
                    continue;
                }
                const auto& a = job_of(*head[i]);
                const auto& b = job_of(*head[*best]);
                if (std::tie(a.deadline_s, a.arrival_s, a.task_id) < std::tie(b.deadline_s, b.arrival_s, b.task_id)) {
                    best = i;
                }
            }
            return best;
        };
        auto finish = [&](std::size_t row, double t, bool aborted) {
            const Live live = *head[row];
            const auto& j = job_of(live);
            const double done_s = std::max(0.0, j.work * spi - live.remaining_s);
            const double done = aborted ? std::min(j.work, done_s / spi) : j.work;
            n_exec[row][h] += done;
            r.discarded_instructions += j.work - done;
            const double overrun = aborted ? (t - j.deadline_s) + live.remaining_s : t - j.deadline_s;
            auto& out = rows[row];
            const bool missed = overrun > 0.0;
            out.misses += missed ? 1 : 0;
            out.aborts += aborted ? 1 : 0;
            out.overruns.push_back(overrun);
            if (ev.options_.record_jobs) {
                JobRecord rec;
                rec.task_id = j.task_id;
                rec.job_index = j.job_index;
                rec.servers = {static_cast<int>(h)};
                rec.start_s = live.start_s < 0.0 ? t : live.start_s;
                rec.completion_s = t;
                rec.overrun_s = overrun;
                rec.missed = missed;
                rec.aborted = aborted;
                r.per_job.push_back(std::move(rec));
            }
            head[row].reset();
            promote(row);
        };

        std::size_t next = 0;
        double t = 0.0;
        auto admit = [&](double now) {
            while (next < arrivals.size() && ev.jobs_[arrivals[next].first][arrivals[next].second].arrival_s <= now) {
                pending[arrivals[next].first].push_back(arrivals[next].second);
                promote(arrivals[next].first);
                ++next;
            }
        };
        while (true) {
            admit(t);
            auto cur = pick();
            if (!cur) {
                if (next >= arrivals.size()) break;
                t = std::max(t, ev.jobs_[arrivals[next].first][arrivals[next].second].arrival_s);
                continue;
            }
            auto& live = *head[*cur];
            const auto& j = job_of(live);
            const bool is_control = profiles[*cur].type == TaskType::ctrl;
            if (is_control && t >= j.deadline_s && live.remaining_s > 0.0) {
                finish(*cur, t, true);
                continue;
            }
            if (live.start_s < 0.0) live.start_s = t;
            const double next_arrival =
                next < arrivals.size() ? ev.jobs_[arrivals[next].first][arrivals[next].second].arrival_s : inf;
            const double done_at = t + live.remaining_s;
            double until = std::min(done_at, next_arrival);
            if (is_control) until = std::min(until, j.deadline_s);
            if (until >= done_at) {
                live.remaining_s = 0.0;
                t = done_at;
                finish(*cur, t, false);
            } else {
                live.remaining_s -= until - t;
                t = until;
            }
        }
    }

    auto acc = account_energy(cluster, alloc, ev.task_work_, n_exec, ev.options_.energy_form);
    r.per_server = std::move(acc.servers);
    r.energy_j = acc.energy_j;
    r.energy_units = r.energy_j / ev.options_.energy_unit_j;
    for (const auto& s : r.per_server) r.executed_instructions += s.executed_instructions;
    if (ev.options_.record_jobs) {
        std::sort(r.per_job.begin(), r.per_job.end(), [](const JobRecord& a, const JobRecord& b) {
            return std::tie(a.task_id, a.job_index) < std::tie(b.task_id, b.job_index);
        });
    }
    // finalize() expects overruns in job order; EDF finishes each task's jobs FIFO already.
    finalize(r, profiles, rows, ev.options_);
    return r;
}

auto edf_schedule(const Cluster& cluster, std::span<const TaskProfile> profiles, const JobTrace& trace,
                  const SimOptions& options) -> EvaluationResult
{
    const Evaluator ev(cluster, {profiles.begin(), profiles.end()}, trace, options);
    return edf_schedule(ev);
}

void write_job_report(std::ostream& out, const EvaluationResult& result)
{
    out << job_report_header << '\n';
    for (const auto& j : result.per_job) {
        out << j.task_id << ',' << j.job_index << ',';
        for (std::size_t k = 0; k < j.servers.size(); ++k) out << (k ? ";" : "") << j.servers[k];
        out << ',' << text::format_double(j.start_s) << ',' << text::format_double(j.completion_s) << ','
            << text::format_double(j.overrun_s) << ',' << (j.missed ? 1 : 0) << ',' << (j.aborted ? 1 : 0) << '\n';
    }
}

} // namespace dvfsopt
