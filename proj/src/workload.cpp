#include "dvfsopt/workload.hpp"

#include "dvfsopt/error.hpp"
#include "dvfsopt/rng.hpp"
#include "dvfsopt/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace dvfsopt {

auto to_string(TaskType t) -> std::string_view
{
    switch (t) {
    case TaskType::real: return "REAL";
    case TaskType::ctrl: return "CTRL";
    case TaskType::soft: return "SOFT";
    }
    return "?";
}

auto task_class_of(TaskType t) -> TaskClass
{
    switch (t) {
    case TaskType::real: return TaskClass::hard;
    case TaskType::ctrl: return TaskClass::control;
    case TaskType::soft: return TaskClass::soft;
    }
    return TaskClass::hard;
}

namespace {

auto parse_type(std::string_view s) -> std::optional<TaskType>
{
    for (auto t : {TaskType::real, TaskType::ctrl, TaskType::soft}) {
        if (s == to_string(t)) return t;
    }
    return std::nullopt;
}

[[noreturn]] void row_error(std::string_view source, std::size_t line, const std::string& what)
{
    std::ostringstream os;
    os << source << ":" << line << ": " << what;
    throw ParseError(os.str());
}

} // namespace

auto parse_workload(std::istream& in, std::string_view source) -> std::vector<TaskProfile>
{
    std::vector<TaskProfile> out;
    std::set<int> ids;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!header_seen) {
            if (body != workload_csv_header) {
                row_error(source, lineno, "expected header '" + std::string(workload_csv_header) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto f = text::split(body);
        if (f.size() != 6) row_error(source, lineno, "expected 6 fields, got " + std::to_string(f.size()));
        try {
            TaskProfile p;
            p.task_id = static_cast<int>(text::parse_int(f[0], "task_id"));
            const auto type = parse_type(f[1]);
            if (!type) row_error(source, lineno, "unknown task type '" + std::string(f[1]) + "'");
            p.type = *type;
            p.n_instructions = text::parse_double(f[2], "n_ins");
            p.period_s = text::parse_double(f[3], "period_s");
            p.deadline_s = text::parse_double(f[4], "deadline_s");
            p.n_jobs = text::parse_int(f[5], "n_jobs");
            if (!(p.n_instructions > 0.0)) row_error(source, lineno, "n_ins must be > 0");
            if (!(p.period_s > 0.0)) row_error(source, lineno, "period_s must be > 0");
            if (!(p.deadline_s > 0.0)) row_error(source, lineno, "deadline_s must be > 0");
            if (p.n_jobs <= 0) row_error(source, lineno, "n_jobs must be > 0");
            if (!ids.insert(p.task_id).second) {
                row_error(source, lineno, "duplicate task_id " + std::to_string(p.task_id));
            }
            out.push_back(p);
        } catch (const ParseError& e) {
            const std::string msg = e.what();
            if (msg.starts_with(source)) throw;
            row_error(source, lineno, msg);
        }
    }
    if (!header_seen) throw ParseError(std::string(source) + ": empty workload file");
    return out;
}

auto parse_workload(const std::filesystem::path& path) -> std::vector<TaskProfile>
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open workload file " + path.string());
    return parse_workload(in, path.string());
}

void write_workload(std::ostream& out, std::span<const TaskProfile> profiles)
{
    out << workload_csv_header << '\n';
    for (const auto& p : profiles) {
        out << p.task_id << ',' << to_string(p.type) << ',' << text::format_double(p.n_instructions) << ','
            << text::format_double(p.period_s) << ',' << text::format_double(p.deadline_s) << ',' << p.n_jobs
            << '\n';
    }
}

auto hyperperiod_horizon(std::span<const TaskProfile> profiles) -> double
{
    double h = 0.0;
    for (const auto& p : profiles) {
        h = std::max(h, static_cast<double>(p.n_jobs) * p.period_s + p.deadline_s);
    }
    return h;
}

auto generate_jobs(std::span<const TaskProfile> profiles, std::uint64_t seed, const GenerateOptions& options)
    -> JobTrace
{
    Rng rng(seed);
    JobTrace trace;
    trace.seed = seed;
    trace.generator = Rng::name;
    trace.horizon_s = hyperperiod_horizon(profiles);

    for (const auto& p : profiles) {
        const double phase = options.phase == PhasePolicy::uniform_random ? rng.uniform01() * p.period_s : 0.0;
        double arrival = phase;
        for (std::int64_t j = 0; j < p.n_jobs; ++j) {
            Job job;
            job.task_id = p.task_id;
            job.job_index = j;
            if (p.type == TaskType::soft) {
                arrival += rng.exponential(p.period_s);
                job.arrival_s = arrival;
                job.work = std::max(1.0, std::ceil(rng.exponential(p.n_instructions)));
                const double rel = options.soft_deadline == SoftDeadline::uniform ? rng.uniform01() * p.deadline_s
                                                                                  : p.deadline_s;
                job.deadline_s = job.arrival_s + rel;
            } else {
                job.arrival_s = phase + static_cast<double>(j) * p.period_s;
                job.work = p.n_instructions;
                job.deadline_s = job.arrival_s + p.deadline_s;
            }
            trace.horizon_s = std::max(trace.horizon_s, job.deadline_s);
            trace.jobs.push_back(job);
        }
    }
    return trace;
}

void write_trace(std::ostream& out, const JobTrace& trace)
{
    out << "# seed=" << trace.seed << " generator=" << trace.generator
        << " horizon_s=" << text::format_double(trace.horizon_s) << '\n';
    out << trace_csv_header << '\n';
    for (const auto& j : trace.jobs) {
        out << j.task_id << ',' << j.job_index << ',' << text::format_double(j.arrival_s) << ','
            << text::format_double(j.deadline_s) << ',' << text::format_double(j.work) << '\n';
    }
}

auto parse_trace(std::istream& in, std::string_view source) -> JobTrace
{
    JobTrace trace;
    std::string line;
    std::size_t lineno = 0;
    bool meta_seen = false;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty()) continue;
        if (body.front() == '#') {
            // key=value pairs; unknown keys are ignored
            std::istringstream kv{std::string(body.substr(1))};
            std::string tok;
            while (kv >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string_view key(tok.data(), eq);
                const std::string_view val(tok.data() + eq + 1, tok.size() - eq - 1);
                try {
                    if (key == "seed") {
                        trace.seed = text::parse_u64(val, "seed");
                        meta_seen = true;
                    } else if (key == "generator") {
                        trace.generator = std::string(val);
                    } else if (key == "horizon_s") {
                        trace.horizon_s = text::parse_double(val, "horizon_s");
                    }
                } catch (const ParseError& e) {
                    row_error(source, lineno, e.what());
                }
            }
            continue;
        }
        if (!header_seen) {
            if (body != trace_csv_header) {
                row_error(source, lineno, "expected header '" + std::string(trace_csv_header) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto f = text::split(body);
        if (f.size() != 5) row_error(source, lineno, "expected 5 fields, got " + std::to_string(f.size()));
        try {
            Job j;
            j.task_id = static_cast<int>(text::parse_int(f[0], "task_id"));
            j.job_index = text::parse_int(f[1], "job_index");
            j.arrival_s = text::parse_double(f[2], "arrival_s");
            j.deadline_s = text::parse_double(f[3], "deadline_s");
            j.work = text::parse_double(f[4], "work_instructions");
            if (j.work < 0.0) row_error(source, lineno, "work_instructions must be >= 0");
            trace.jobs.push_back(j);
        } catch (const ParseError& e) {
            const std::string msg = e.what();
            if (msg.starts_with(source)) throw;
            row_error(source, lineno, msg);
        }
    }
    if (!header_seen) throw ParseError(std::string(source) + ": missing trace header");
    if (!meta_seen) throw ParseError(std::string(source) + ": missing '# seed=' metadata line");
    return trace;
}

auto to_hard_spec(const TaskProfile& p, double cpi, double f_ref_hz) -> HardTaskSpec
{
    HardTaskSpec t;
    t.id = p.task_id;
    t.wcet_s = cpi * p.n_instructions / f_ref_hz;
    t.period_s = p.period_s;
    t.deadline_s = p.deadline_s;
    t.n_instructions = p.n_instructions;
    t.n_jobs = p.n_jobs;
    return t;
}

auto to_control_spec(const TaskProfile& p, double cpi, double f_ref_hz, std::optional<int> skip) -> ControlTaskSpec
{
    ControlTaskSpec t;
    t.id = p.task_id;
    t.wcet_s = cpi * p.n_instructions / f_ref_hz;
    // Control tasks require T = D; the profile period only spaces the arrivals.
    t.period_s = p.deadline_s;
    t.deadline_s = p.deadline_s;
    t.skip = skip;
    t.n_instructions = p.n_instructions;
    t.n_jobs = p.n_jobs;
    return t;
}

auto to_soft_spec(const TaskProfile& p, double cpi, double f_ref_hz) -> SoftTaskSpec
{
    SoftTaskSpec t;
    t.id = p.task_id;
    t.lambda = 1.0 / p.period_s;
    t.mu = f_ref_hz / (cpi * p.n_instructions);
    t.d_max_s = p.deadline_s;
    t.n_instructions = p.n_instructions;
    t.n_jobs = p.n_jobs;
    return t;
}

} // namespace dvfsopt
