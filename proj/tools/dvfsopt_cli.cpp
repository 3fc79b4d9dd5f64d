// dvfsopt: command-line front end.
//
//   dvfsopt fit      --telemetry t.csv --template spec.json --out dir
//   dvfsopt generate --scenario s.json --out dir            (job trace)
//   dvfsopt generate --synthetic-telemetry spec.json --out dir
//   dvfsopt optimize --scenario s.json --out dir
//   dvfsopt simulate --scenario s.json --allocation a.json --out dir
//   dvfsopt baseline --scenario s.json --out dir

#include "dvfsopt/config.hpp"
#include "dvfsopt/error.hpp"
#include "dvfsopt/optimizer.hpp"
#include "dvfsopt/power_model.hpp"
#include "dvfsopt/simulator.hpp"
#include "dvfsopt/text.hpp"
#include "dvfsopt/workload.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace dvfsopt;
using nlohmann::json;

namespace {

struct Common {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> policy;
    std::string out;
    std::optional<int> max_mode_index;
    std::optional<std::size_t> generations;
    std::optional<std::size_t> population;
};

auto open_out(const fs::path& dir, const std::string& name) -> std::ofstream
{
    fs::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
}

auto provenance(const ScenarioConfig& cfg, std::uint64_t seed) -> std::string
{
    return "# scenario=" + cfg.name + " digest=" + cfg.digest() + " seed=" + std::to_string(seed);
}

/// Scenario with command-line overrides applied.
auto load(const Common& c) -> ScenarioConfig
{
    if (c.scenario.empty()) throw ConfigError("--scenario is required");
    auto cfg = load_scenario(c.scenario);
    if (c.policy) cfg.optimizer.policy = parse_policy(*c.policy);
    if (c.max_mode_index) cfg.optimizer.max_mode_index = *c.max_mode_index;
    if (c.generations) cfg.optimizer.generations = *c.generations;
    if (c.population) cfg.optimizer.population = *c.population;
    if (!c.out.empty()) cfg.output_dir = c.out;
    return cfg;
}

struct Loaded {
    Cluster cluster;
    std::vector<TaskProfile> profiles;
    JobTrace trace;
};

auto materialize(const ScenarioConfig& cfg) -> Loaded
{
    Loaded l;
    l.cluster = build_cluster(cfg);
    l.profiles = parse_workload(cfg.workload_path);
    l.trace = generate_jobs(l.profiles, cfg.trace_seed, cfg.trace_options);
    return l;
}

auto allocation_json(const Allocation& a, std::span<const TaskProfile> profiles) -> json
{
    json ids = json::array();
    for (const auto& p : profiles) ids.push_back(p.task_id);
    return {{"dvfs", a.dvfs}, {"shares", a.shares}, {"task_ids", ids}};
}

auto summary_json(const ScenarioConfig& cfg, std::uint64_t seed, const EvaluationResult& r) -> json
{
    json servers = json::array();
    for (const auto& s : r.per_server) {
        servers.push_back({{"server", s.server_id},
                           {"mode", s.mode_index},
                           {"busy_time_s", s.busy_time_s},
                           {"utilization_sum", s.utilization_sum},
                           {"dynamic_J", s.dynamic_j},
                           {"leakage_J", s.leakage_j}});
    }
    json constraints = json::array();
    for (const auto& o : r.report.outcomes) {
        constraints.push_back({{"task_id", o.task_id},
                               {"kind", std::string(to_string(o.kind))},
                               {"x_s", o.bound.x_s},
                               {"beta", o.bound.beta},
                               {"observed", o.observed},
                               {"passed", o.passed}});
    }
    return {{"scenario", cfg.name},
            {"digest", cfg.digest()},
            {"seed", seed},
            {"lambda", r.lambda},
            {"energy_J", r.energy_j},
            {"energy_units", r.energy_units},
            {"hard_misses", r.hard_misses},
            {"control_aborts", r.control_aborts},
            {"soft_violations", r.soft_violations},
            {"servers", servers},
            {"constraints", constraints}};
}

void write_evaluation(const ScenarioConfig& cfg, std::uint64_t seed, const EvaluationResult& r)
{
    {
        auto f = open_out(cfg.output_dir, "jobs.csv");
        f << provenance(cfg, seed) << '\n';
        write_job_report(f, r);
    }
    auto f = open_out(cfg.output_dir, "summary.json");
    f << summary_json(cfg, seed, r).dump(2) << '\n';
    std::cout << "lambda=" << r.lambda << " energy_J=" << text::format_double(r.energy_j)
              << " energy_units=" << text::format_double(r.energy_units) << '\n';
}

/// Per-server modes in a two-row table, one column per CPU.
void write_mode_table(std::ostream& out, const Cluster& cluster, const Allocation& a)
{
    out << std::left << std::setw(10) << "";
    for (std::size_t m = 0; m < cluster.size(); ++m) out << std::setw(8) << ("CPU " + std::to_string(m + 1));
    out << "\n" << std::setw(10) << "DVFS mode";
    for (int k : a.dvfs) out << std::setw(8) << k;
    out << "\n" << std::setw(10) << "f (GHz)";
    for (std::size_t m = 0; m < cluster.size(); ++m) {
        std::ostringstream f;
        f << std::fixed << std::setprecision(2) << cluster[m].spec.mode(a.dvfs[m]).frequency_hz / 1e9;
        out << std::setw(8) << f.str();
    }
    out << "\n";
}

int cmd_fit(const std::string& telemetry, const std::string& tmpl, const std::string& out, double split)
{
    const auto samples = load_telemetry(telemetry);
    const auto spec = load_server_spec(tmpl);
    const auto r = fit_constants(samples, spec, FitOptions{split, 1e-10});
    const fs::path dir = out.empty() ? fs::path("out") : fs::path(out);
    {
        auto f = open_out(dir, "fitted_spec.json");
        f << server_spec_to_json(r.spec);
    }
    auto f = open_out(dir, "fit_report.txt");
    std::ostringstream rep;
    rep << "telemetry: " << telemetry << "\n"
        << "fit_samples: " << r.fit_samples << "\n"
        << "validation_samples: " << r.validation_samples << "\n"
        << "validation_mape_percent: " << text::format_double(r.validation_mape_percent) << "\n";
    f << rep.str();
    std::cout << rep.str();
    return 0;
}

int cmd_generate(const Common& c, const std::string& synthetic_spec, double noise)
{
    if (!synthetic_spec.empty()) {
        const auto spec = load_server_spec(synthetic_spec);
        auto plan = default_telemetry_plan();
        plan.noise_sigma = noise;
        plan.seed = c.seed.value_or(1);
        const auto samples = synthesize_telemetry(spec, plan);
        auto f = open_out(c.out.empty() ? fs::path("out") : fs::path(c.out), "telemetry.csv");
        f << "# spec=" << spec.label << " noise=" << text::format_double(noise) << " seed=" << plan.seed << '\n';
        write_telemetry(f, samples);
        std::cout << samples.size() << " telemetry samples\n";
        return 0;
    }
    auto cfg = load(c);
    if (c.seed) cfg.trace_seed = *c.seed;
    const auto l = materialize(cfg);
    auto f = open_out(cfg.output_dir, "trace.csv");
    f << provenance(cfg, cfg.trace_seed) << '\n';
    write_trace(f, l.trace);
    std::cout << l.trace.jobs.size() << " jobs, horizon " << text::format_double(l.trace.horizon_s) << " s\n";
    return 0;
}

int cmd_optimize(const Common& c)
{
    auto cfg = load(c);
    if (c.seed) cfg.optimizer.seed = *c.seed;
    const auto l = materialize(cfg);
    auto sim = cfg.sim;
    sim.record_jobs = false;
    const Evaluator ev(l.cluster, l.profiles, l.trace, sim);
    const auto result = evolve(ev, cfg.optimizer);
    const auto seed = cfg.optimizer.seed;
    const auto header = provenance(cfg, seed) + " policy=" + std::string(to_string(cfg.optimizer.policy));
    {
        auto f = open_out(cfg.output_dir, "front.csv");
        f << header << '\n';
        write_front(f, result, cfg.sim.energy_unit_j);
    }
    {
        auto f = open_out(cfg.output_dir, "convergence.csv");
        f << header << '\n';
        write_convergence(f, result);
    }
    const auto& best = result.front.front();
    {
        auto f = open_out(cfg.output_dir, "best_allocation.json");
        auto doc = allocation_json(best.allocation, l.profiles);
        doc["digest"] = cfg.digest();
        doc["seed"] = seed;
        doc["policy"] = std::string(to_string(cfg.optimizer.policy));
        doc["lambda"] = best.lambda;
        doc["energy_J"] = best.energy_j;
        f << doc.dump(2) << '\n';
    }
    std::ostringstream rep;
    rep << header << "\n"
        << "generations: " << result.generations_run << "\n"
        << "front size: " << result.front.size() << "\n"
        << "best: lambda=" << best.lambda << " energy_J=" << text::format_double(best.energy_j)
        << " energy_units=" << text::format_double(best.energy_j / cfg.sim.energy_unit_j) << "\n\n";
    write_mode_table(rep, l.cluster, best.allocation);
    auto f = open_out(cfg.output_dir, "best_allocation.txt");
    f << rep.str();
    std::cout << rep.str();
    return 0;
}

auto load_allocation(const fs::path& path, std::size_t n_tasks, std::size_t n_servers) -> Allocation
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open allocation " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    Allocation a;
    try {
        a.dvfs = doc.at("dvfs").get<std::vector<int>>();
        a.shares = doc.at("shares").get<std::vector<std::vector<int>>>();
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (a.dvfs.size() != n_servers || a.shares.size() != n_tasks) {
        throw DimensionError(path.string() + ": allocation is " + std::to_string(a.shares.size()) + "x" +
                             std::to_string(a.dvfs.size()) + ", scenario needs " + std::to_string(n_tasks) + "x" +
                             std::to_string(n_servers));
    }
    return a;
}

int cmd_simulate(const Common& c, const std::string& allocation)
{
    const auto cfg = load(c);
    const auto l = materialize(cfg);
    const auto alloc = load_allocation(allocation, l.profiles.size(), l.cluster.size());
    const Evaluator ev(l.cluster, l.profiles, l.trace, cfg.sim);
    write_evaluation(cfg, cfg.trace_seed, ev.evaluate(alloc));
    return 0;
}

int cmd_baseline(const Common& c)
{
    const auto cfg = load(c);
    const auto l = materialize(cfg);
    const Evaluator ev(l.cluster, l.profiles, l.trace, cfg.sim);
    write_evaluation(cfg, cfg.trace_seed, edf_schedule(ev));
    return 0;
}

void add_common(CLI::App* sub, Common& c, bool with_optimizer)
{
    sub->add_option("--scenario", c.scenario, "Scenario JSON file");
    sub->add_option("--seed", c.seed, "Seed override");
    sub->add_option("--out", c.out, "Output directory");
    if (with_optimizer) {
        sub->add_option("--policy", c.policy, "DVFS policy: min, max or var");
        sub->add_option("--max-mode-index", c.max_mode_index, "Highest DVFS mode the optimizer may pick");
        sub->add_option("--generations", c.generations, "Maximum generations");
        sub->add_option("--population", c.population, "Population size");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"DVFS and task-allocation optimizer"};
    app.require_subcommand(1);

    Common common;
    std::string telemetry, tmpl, allocation, synthetic;
    double split = 0.65;
    double noise = 0.0;

    auto* fit = app.add_subcommand("fit", "Fit power-model constants to telemetry");
    fit->add_option("--telemetry", telemetry, "Telemetry CSV")->required();
    fit->add_option("--template", tmpl, "Server spec JSON supplying modes and socket count")->required();
    fit->add_option("--split", split, "Fraction of utilization levels used for fitting");
    fit->add_option("--out", common.out, "Output directory");

    auto* gen = app.add_subcommand("generate", "Expand a scenario workload into a job trace");
    add_common(gen, common, false);
    gen->add_option("--synthetic-telemetry", synthetic, "Emit synthetic telemetry for this server spec instead");
    gen->add_option("--noise", noise, "Multiplicative noise sigma for synthetic telemetry");

    auto* opt = app.add_subcommand("optimize", "Run NSGA-II on a scenario");
    add_common(opt, common, true);

    auto* sim = app.add_subcommand("simulate", "Replay an allocation");
    add_common(sim, common, false);
    sim->add_option("--allocation", allocation, "Allocation JSON (as written by optimize)")->required();

    auto* base = app.add_subcommand("baseline", "EDF at maximum DVFS mode");
    add_common(base, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        if (fit->parsed()) return cmd_fit(telemetry, tmpl, common.out, split);
        if (gen->parsed()) return cmd_generate(common, synthetic, noise);
        if (opt->parsed()) return cmd_optimize(common);
        if (sim->parsed()) return cmd_simulate(common, allocation);
        if (base->parsed()) return cmd_baseline(common);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::io);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::internal);
    }
    return static_cast<int>(ExitCode::usage);
}
