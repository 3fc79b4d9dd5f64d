#ifndef DVFSOPT_CONFIG_HPP
#define DVFSOPT_CONFIG_HPP

// File formats: server specs (JSON), telemetry (CSV) and scenarios (JSON).

#include "dvfsopt/optimizer.hpp"
#include "dvfsopt/power_model.hpp"
#include "dvfsopt/simulator.hpp"
#include "dvfsopt/workload.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvfsopt {

auto parse_server_spec(std::string_view json_text, std::string_view source = "<string>") -> ServerSpec;
auto load_server_spec(const std::filesystem::path& path) -> ServerSpec;
/// Pretty-printed JSON document, numbers in shortest round-trip form.
auto server_spec_to_json(const ServerSpec& spec) -> std::string;

inline constexpr std::string_view telemetry_csv_header = "utilization,t_cpu_k,t_mem_k,mode_index,power_w";

/// Columns are matched by name and may appear in any order; a missing column is a ParseError naming it.
auto parse_telemetry(std::istream& in, std::string_view source = "<stream>") -> std::vector<TelemetrySample>;
auto load_telemetry(const std::filesystem::path& path) -> std::vector<TelemetrySample>;
void write_telemetry(std::ostream& out, std::span<const TelemetrySample> samples);

struct ServerGroup {
    std::filesystem::path spec_path;
    int count{1};
    std::optional<std::vector<double>> t_cpu_k; ///< per socket; default: scenario thermal default
    std::optional<double> t_mem_k;
};

struct ScenarioConfig {
    std::string name;
    std::filesystem::path source; ///< the scenario file itself
    std::vector<ServerGroup> servers;
    std::filesystem::path workload_path;
    std::uint64_t trace_seed{1};
    GenerateOptions trace_options;
    double default_temperature_k{300.0};
    SimOptions sim;
    OptimizerConfig optimizer;
    std::filesystem::path output_dir{"out"};
    /// Raw document text, hashed into output headers.
    std::string raw;

    [[nodiscard]] auto digest() const -> std::string;
};

/// Relative paths inside the document are resolved against the scenario file's directory.
auto load_scenario(const std::filesystem::path& path) -> ScenarioConfig;

auto build_cluster(const ScenarioConfig& config) -> Cluster;

} // namespace dvfsopt

#endif
