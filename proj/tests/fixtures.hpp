#ifndef DVFSOPT_TESTS_FIXTURES_HPP
#define DVFSOPT_TESTS_FIXTURES_HPP

#include "dvfsopt/config.hpp"
#include "dvfsopt/power_model.hpp"
#include "dvfsopt/workload.hpp"

#include <filesystem>
#include <string>

#ifndef DVFSOPT_DATA_DIR
#error "DVFSOPT_DATA_DIR must point at the bundled data directory"
#endif

namespace fixtures {

inline auto data_path(const std::string& rel) -> std::filesystem::path
{
    return std::filesystem::path(DVFSOPT_DATA_DIR) / rel;
}

inline auto intel() -> dvfsopt::ServerSpec { return dvfsopt::load_server_spec(data_path("servers/intel_xeon_e5620.json")); }
inline auto amd() -> dvfsopt::ServerSpec { return dvfsopt::load_server_spec(data_path("servers/amd_opteron_270.json")); }
inline auto reference_tasks() -> std::vector<dvfsopt::TaskProfile> { return dvfsopt::parse_workload(data_path("workloads/reference_tasks.csv")); }

/// Single-socket server whose terms all contribute comparable power, so every
/// coefficient is identifiable in double precision.
inline auto balanced() -> dvfsopt::ServerSpec
{
    dvfsopt::ServerSpec s;
    s.id = 99;
    s.label = "balanced";
    s.a = 2e-8;
    s.b = {0.001};
    s.c = {0.05};
    s.d = 10.0;
    s.e = 50.0;
    s.g = {0.0005};
    s.h = {0.1};
    s.modes = {{1, 1.0e9, 0.9}, {2, 1.6e9, 1.05}, {3, 2.2e9, 1.2}};
    return s;
}

/// One-mode server with only dynamic power; handy for hand-checked timing.
inline auto simple(double f_hz = 1e9, double v = 1.0) -> dvfsopt::ServerSpec
{
    dvfsopt::ServerSpec s;
    s.id = 7;
    s.label = "simple";
    s.a = 1e-9;
    s.b = {0.0};
    s.c = {0.0};
    s.g = {0.0};
    s.h = {0.0};
    s.d = 0.0;
    s.e = 10.0;
    s.modes = {{1, f_hz, v}};
    return s;
}

} // namespace fixtures

#endif
