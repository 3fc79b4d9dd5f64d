#ifndef DVFSOPT_POWER_MODEL_HPP
#define DVFSOPT_POWER_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dvfsopt {

/// One DVFS operating point. `index` is the 1-based ordinal within its server.
struct DvfsMode {
    int index{1};
    double frequency_hz{0.0};
    double voltage_v{0.0};

    friend auto operator==(const DvfsMode&, const DvfsMode&) -> bool = default;
};

/**
 * Technological constants of one physical machine plus its DVFS table.
 *
 * Leakage coefficients b, c, g, h hold one entry per CPU socket. `f_unused`
 * is the F column of the published fitting table; it is parsed and carried
 * around but no power equation refers to it.
 */
struct ServerSpec {
    int id{0};
    std::string label;
    double a{0.0};
    std::vector<double> b;
    std::vector<double> c;
    double d{0.0};
    double e{0.0};
    double f_unused{0.0};
    std::vector<double> g;
    std::vector<double> h;
    std::vector<DvfsMode> modes;
    double cpi{1.0};
    int n_sockets{1};

    /// Throws InvalidArgument when any structural invariant is broken.
    void validate() const;

    /// Mode by 1-based index; throws InvalidArgument when out of range.
    [[nodiscard]] auto mode(int index) const -> const DvfsMode&;
    [[nodiscard]] auto min_mode() const -> const DvfsMode& { return modes.front(); }
    [[nodiscard]] auto max_mode() const -> const DvfsMode& { return modes.back(); }
    [[nodiscard]] auto mode_count() const -> int { return static_cast<int>(modes.size()); }

    friend auto operator==(const ServerSpec&, const ServerSpec&) -> bool = default;
};

struct TemperatureBand {
    double min_k{250.0};
    double max_k{400.0};
};

/// Fixed operating temperatures of one server; `t_cpu_k` has one entry per socket.
struct ThermalState {
    std::vector<double> t_cpu_k;
    double t_mem_k{300.0};

    void validate(const TemperatureBand& band = {}) const;
    /// Same temperature on every socket.
    static auto uniform(double t_k, int n_sockets) -> ThermalState;
};

struct TelemetrySample {
    double utilization{0.0};
    double t_cpu_k{300.0};
    double t_mem_k{300.0};
    int mode_index{1};
    double power_w{0.0};
};

/// How the dynamic energy sum is formed.
enum class DynEnergyForm {
    as_written,  ///< A * V^2 * CPI * sum(u_i * n_i)
    dimensional, ///< A * V^2 * CPI * sum(n_i), i.e. dynamic power integrated over busy time
};

struct EnergyTerm {
    double utilization{0.0};
    double instructions{0.0};
};

namespace physics {
inline constexpr double boltzmann = 1.380649e-23;        // J/K
inline constexpr double elementary_charge = 1.602176634e-19; // C
} // namespace physics

/// Subthreshold leakage current B * t^2 * exp((Vgs - Vth) / (n k t / q)).
auto leakage_current(double b, double t_k, double vgs_minus_vth, double n_slope) -> double;

auto leakage_power(const ServerSpec& spec, const DvfsMode& mode, const ThermalState& thermal) -> double;
auto dynamic_power(const ServerSpec& spec, const DvfsMode& mode, double total_utilization) -> double;
auto total_power(const ServerSpec& spec, const DvfsMode& mode, const ThermalState& thermal,
                 double total_utilization) -> double;

auto dynamic_energy(const ServerSpec& spec, const DvfsMode& mode, std::span<const EnergyTerm> terms,
                    DynEnergyForm form = DynEnergyForm::as_written) -> double;
auto leakage_energy(const ServerSpec& spec, const DvfsMode& mode, const ThermalState& thermal,
                    double total_instructions) -> double;

/// Per (server, mode) energy contribution of one evaluated schedule.
struct EnergyDigestEntry {
    int server_id{0};
    int mode_index{1};
    double dynamic_j{0.0};
    double leakage_j{0.0};
};

auto total_energy(std::span<const EnergyDigestEntry> digest) -> double;

struct FitOptions {
    double split{0.65};
    /// Singular values below rank_tolerance * sigma_max count as zero.
    double rank_tolerance{1e-10};
};

struct FitResult {
    ServerSpec spec;
    double validation_mape_percent{0.0};
    std::size_t fit_samples{0};
    std::size_t validation_samples{0};
};

/// Grid of operating points for synthetic telemetry; every combination is emitted once per mode.
struct TelemetryPlan {
    std::vector<double> utilizations;
    std::vector<double> t_cpu_k;
    std::vector<double> t_mem_k;
    /// Multiplicative Gaussian noise: power * (1 + sigma * N(0, 1)).
    double noise_sigma{0.0};
    std::uint64_t seed{1};
};

/// Default plan: 20 utilization levels in [0.05, 1], three CPU and three memory temperatures in [293, 309] K.
auto default_telemetry_plan() -> TelemetryPlan;

/// Samples total_power of `spec` (all sockets at the sample's CPU temperature) over the plan grid.
auto synthesize_telemetry(const ServerSpec& spec, const TelemetryPlan& plan) -> std::vector<TelemetrySample>;

/// Names of the free coefficients for a template, in design-matrix column order.
auto coefficient_names(const ServerSpec& spec_template) -> std::vector<std::string>;

/**
 * Least-squares fit of A, B_s, C_s, D, E, G_s, H_s from telemetry.
 *
 * Every socket is assumed to sit at the sample's CPU temperature. Samples are
 * split by distinct utilization level: levels are sorted and a share `split`
 * of them, spread evenly over the range, forms the fitting set; the rest is
 * held out and scored by mean absolute percentage error.
 */
auto fit_constants(std::span<const TelemetrySample> samples, const ServerSpec& spec_template,
                   const FitOptions& options = {}) -> FitResult;

} // namespace dvfsopt

#endif
