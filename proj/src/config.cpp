#include "dvfsopt/config.hpp"

#include "dvfsopt/error.hpp"
#include "dvfsopt/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dvfsopt {

using nlohmann::json;

namespace {

auto read_file(const std::filesystem::path& path) -> std::string
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

auto parse_json(std::string_view text, std::string_view source) -> json
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
}

/// Runs `f`, turning JSON type/key errors into ConfigError with the source name.
template <typename F>
auto with_context(std::string_view source, F&& f)
{
    try {
        return f();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(source) + ": " + e.what());
    }
}

auto number_list(const json& j) -> std::vector<double>
{
    if (j.is_number()) return {j.get<double>()};
    return j.get<std::vector<double>>();
}

auto resolve(const std::filesystem::path& base, const std::string& p) -> std::filesystem::path
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

auto parse_server_spec(std::string_view json_text, std::string_view source) -> ServerSpec
{
    const auto doc = parse_json(json_text, source);
    auto spec = with_context(source, [&] {
        ServerSpec s;
        s.id = doc.value("id", 0);
        s.label = doc.value("label", std::string{});
        s.n_sockets = doc.value("n_sockets", 1);
        s.cpi = doc.value("cpi", 1.0);
        const auto& k = doc.at("constants");
        s.a = k.at("A").get<double>();
        s.b = number_list(k.at("B"));
        s.c = number_list(k.at("C"));
        s.d = k.at("D").get<double>();
        s.e = k.at("E").get<double>();
        s.f_unused = k.value("F", 0.0);
        s.g = number_list(k.at("G"));
        s.h = number_list(k.at("H"));
        for (const auto& m : doc.at("modes")) {
            s.modes.push_back({m.at("index").get<int>(), m.at("frequency_hz").get<double>(), m.at("voltage_v").get<double>()});
        }
        return s;
    });
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string(source) + ": " + e.what());
    }
    return spec;
}

auto load_server_spec(const std::filesystem::path& path) -> ServerSpec
{
    return parse_server_spec(read_file(path), path.string());
}

auto server_spec_to_json(const ServerSpec& spec) -> std::string
{
    json doc;
    doc["id"] = spec.id;
    doc["label"] = spec.label;
    doc["n_sockets"] = spec.n_sockets;
    doc["cpi"] = spec.cpi;
    doc["constants"] = {{"A", spec.a}, {"B", spec.b}, {"C", spec.c}, {"D", spec.d}, {"E", spec.e},
                        {"F", spec.f_unused}, {"G", spec.g}, {"H", spec.h}};
    json modes = json::array();
    for (const auto& m : spec.modes) {
        modes.push_back({{"index", m.index}, {"frequency_hz", m.frequency_hz}, {"voltage_v", m.voltage_v}});
    }
    doc["modes"] = modes;
    return doc.dump(2) + "\n";
}

auto parse_telemetry(std::istream& in, std::string_view source) -> std::vector<TelemetrySample>
{
    static constexpr std::array<std::string_view, 5> columns{"utilization", "t_cpu_k", "t_mem_k", "mode_index",
                                                             "power_w"};
    std::array<std::size_t, 5> pos{};
    std::vector<TelemetrySample> out;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto f = text::split(body);
        auto where = [&] { return std::string(source) + ":" + std::to_string(lineno) + ": "; };
        if (!header_seen) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                const auto it = std::find(f.begin(), f.end(), columns[c]);
                if (it == f.end()) throw ParseError(where() + "missing column '" + std::string(columns[c]) + "'");
                pos[c] = static_cast<std::size_t>(it - f.begin());
            }
            width = f.size();
            header_seen = true;
            continue;
        }
        if (f.size() != width) throw ParseError(where() + "expected " + std::to_string(width) + " fields");
        try {
            TelemetrySample s;
            s.utilization = text::parse_double(f[pos[0]], columns[0]);
            s.t_cpu_k = text::parse_double(f[pos[1]], columns[1]);
            s.t_mem_k = text::parse_double(f[pos[2]], columns[2]);
            s.mode_index = static_cast<int>(text::parse_int(f[pos[3]], columns[3]));
            s.power_w = text::parse_double(f[pos[4]], columns[4]);
            out.push_back(s);
        } catch (const ParseError& e) {
            throw ParseError(where() + e.what());
        }
    }
    if (!header_seen) throw ParseError(std::string(source) + ": empty telemetry file");
    return out;
}

auto load_telemetry(const std::filesystem::path& path) -> std::vector<TelemetrySample>
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open telemetry file " + path.string());
    return parse_telemetry(in, path.string());
}

void write_telemetry(std::ostream& out, std::span<const TelemetrySample> samples)
{
    out << telemetry_csv_header << '\n';
    for (const auto& s : samples) {
        out << text::format_double(s.utilization) << ',' << text::format_double(s.t_cpu_k) << ','
            << text::format_double(s.t_mem_k) << ',' << s.mode_index << ',' << text::format_double(s.power_w) << '\n';
    }
}

auto ScenarioConfig::digest() const -> std::string { return text::hex64(text::fnv1a64(raw)); }

auto load_scenario(const std::filesystem::path& path) -> ScenarioConfig
{
    ScenarioConfig cfg;
    cfg.source = path;
    cfg.raw = read_file(path);
    const auto src = path.string();
    const auto doc = parse_json(cfg.raw, src);
    const auto base = path.parent_path();

    with_context(src, [&] {
        cfg.name = doc.value("name", path.stem().string());
        cfg.default_temperature_k = doc.value("temperature_k", 300.0);
        for (const auto& g : doc.at("servers")) {
            ServerGroup group;
            group.spec_path = resolve(base, g.at("spec").get<std::string>());
            group.count = g.value("count", 1);
            if (g.contains("t_cpu_k")) group.t_cpu_k = number_list(g.at("t_cpu_k"));
            if (g.contains("t_mem_k")) group.t_mem_k = g.at("t_mem_k").get<double>();
            if (group.count < 1) throw ConfigError(src + ": server group count must be >= 1");
            cfg.servers.push_back(group);
        }
        cfg.workload_path = resolve(base, doc.at("workload").get<std::string>());

        if (doc.contains("trace")) {
            const auto& t = doc.at("trace");
            cfg.trace_seed = t.value("seed", cfg.trace_seed);
            const auto phase = t.value("phase", std::string{"zero"});
            if (phase == "zero") {
                cfg.trace_options.phase = PhasePolicy::zero;
            } else if (phase == "uniform-random") {
                cfg.trace_options.phase = PhasePolicy::uniform_random;
            } else {
                throw ConfigError(src + ": trace.phase must be 'zero' or 'uniform-random'");
            }
            const auto dl = t.value("soft_deadline", std::string{"fixed"});
            if (dl == "fixed") {
                cfg.trace_options.soft_deadline = SoftDeadline::fixed;
            } else if (dl == "uniform") {
                cfg.trace_options.soft_deadline = SoftDeadline::uniform;
            } else {
                throw ConfigError(src + ": trace.soft_deadline must be 'fixed' or 'uniform'");
            }
        }

        if (doc.contains("simulation")) {
            const auto& s = doc.at("simulation");
            const auto form = s.value("dyn_energy_form", std::string{"as-written"});
            if (form == "as-written") {
                cfg.sim.energy_form = DynEnergyForm::as_written;
            } else if (form == "dimensional") {
                cfg.sim.energy_form = DynEnergyForm::dimensional;
            } else {
                throw ConfigError(src + ": simulation.dyn_energy_form must be 'as-written' or 'dimensional'");
            }
            cfg.sim.energy_unit_j = s.value("energy_unit_j", cfg.sim.energy_unit_j);
            if (s.contains("control_skip")) {
                const auto& k = s.at("control_skip");
                if (k.is_null()) {
                    cfg.sim.control_skip = std::nullopt;
                } else {
                    cfg.sim.control_skip = k.get<int>();
                }
            }
            auto constraints = [](const json& list) {
                std::vector<LatenessConstraint> out;
                for (const auto& c : list) out.push_back({c.at("x_s").get<double>(), c.at("beta").get<double>()});
                return out;
            };
            if (s.contains("soft_constraints")) cfg.sim.soft_constraints = constraints(s.at("soft_constraints"));
            if (s.contains("soft_overrides")) {
                for (const auto& [id, list] : s.at("soft_overrides").items()) {
                    cfg.sim.soft_overrides[std::stoi(id)] = constraints(list);
                }
            }
        }

        if (doc.contains("optimizer")) {
            const auto& o = doc.at("optimizer");
            auto& oc = cfg.optimizer;
            oc.population = o.value("population", oc.population);
            oc.generations = o.value("generations", oc.generations);
            oc.seed = o.value("seed", oc.seed);
            if (o.contains("policy")) oc.policy = parse_policy(o.at("policy").get<std::string>());
            if (o.contains("stop_window")) {
                const auto& w = o.at("stop_window");
                oc.stop_window = w.is_null() ? std::nullopt : std::optional<std::size_t>(w.get<std::size_t>());
            }
            if (o.contains("max_mode_index") && !o.at("max_mode_index").is_null()) {
                oc.max_mode_index = o.at("max_mode_index").get<int>();
            }
            oc.share_step = o.value("share_step", oc.share_step);
        }
        if (doc.contains("output")) cfg.output_dir = resolve(base, doc.at("output").get<std::string>());
        return 0;
    });
    if (cfg.servers.empty()) throw ConfigError(src + ": no servers");
    if (!doc.contains("trace") || !doc.at("trace").contains("seed")) {
        throw ConfigError(src + ": trace.seed is required");
    }
    return cfg;
}

auto build_cluster(const ScenarioConfig& config) -> Cluster
{
    Cluster cluster;
    for (const auto& g : config.servers) {
        const auto spec = load_server_spec(g.spec_path);
        ThermalState th = ThermalState::uniform(config.default_temperature_k, spec.n_sockets);
        if (g.t_cpu_k) {
            if (g.t_cpu_k->size() == 1) {
                th.t_cpu_k.assign(static_cast<std::size_t>(spec.n_sockets), g.t_cpu_k->front());
            } else if (static_cast<int>(g.t_cpu_k->size()) == spec.n_sockets) {
                th.t_cpu_k = *g.t_cpu_k;
            } else {
                throw ConfigError(config.source.string() + ": t_cpu_k for " + g.spec_path.string() +
                                  " must give one value or one per socket");
            }
        }
        if (g.t_mem_k) th.t_mem_k = *g.t_mem_k;
        for (int k = 0; k < g.count; ++k) cluster.push_back({spec, th});
    }
    return cluster;
}

} // namespace dvfsopt
