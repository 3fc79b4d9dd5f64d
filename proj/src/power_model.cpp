#include "dvfsopt/power_model.hpp"

#include "dvfsopt/error.hpp"
#include "dvfsopt/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace dvfsopt {

namespace {

auto socket_list_ok(const std::vector<double>& v, int n) -> bool { return static_cast<int>(v.size()) == n; }

} // namespace

void ServerSpec::validate() const
{
    std::ostringstream why;
    if (modes.empty()) {
        why << "server " << id << ": no DVFS modes";
    } else if (!(cpi > 0.0)) {
        why << "server " << id << ": cpi must be > 0";
    } else if (n_sockets < 1) {
        why << "server " << id << ": n_sockets must be >= 1";
    } else if (!socket_list_ok(b, n_sockets) || !socket_list_ok(c, n_sockets) || !socket_list_ok(g, n_sockets) ||
               !socket_list_ok(h, n_sockets)) {
        why << "server " << id << ": B, C, G and H lists must hold n_sockets=" << n_sockets << " entries";
    } else {
        for (std::size_t k = 0; k < modes.size(); ++k) {
            const auto& m = modes[k];
            if (m.index != static_cast<int>(k) + 1) {
                why << "server " << id << ": mode " << k + 1 << " carries index " << m.index;
                break;
            }
            if (!(m.frequency_hz > 0.0) || !(m.voltage_v > 0.0)) {
                why << "server " << id << ": mode " << m.index << " needs positive frequency and voltage";
                break;
            }
            if (k > 0 && !(m.frequency_hz > modes[k - 1].frequency_hz)) {
                why << "server " << id << ": mode frequencies must be strictly increasing";
                break;
            }
            if (k > 0 && m.voltage_v < modes[k - 1].voltage_v) {
                why << "server " << id << ": mode voltages must be non-decreasing";
                break;
            }
        }
    }
    if (!why.str().empty()) {
        throw InvalidArgument(why.str());
    }
}

auto ServerSpec::mode(int index) const -> const DvfsMode&
{
    if (index < 1 || index > mode_count()) {
        std::ostringstream os;
        os << "server " << id << " has no DVFS mode " << index << " (valid 1.." << mode_count() << ")";
        throw InvalidArgument(os.str());
    }
    return modes[static_cast<std::size_t>(index - 1)];
}

void ThermalState::validate(const TemperatureBand& band) const
{
    auto in_band = [&](double t) { return t >= band.min_k && t <= band.max_k; };
    if (t_cpu_k.empty()) {
        throw DomainError("thermal state has no CPU temperature");
    }
    for (double t : t_cpu_k) {
        if (!in_band(t)) {
            std::ostringstream os;
            os << "CPU temperature " << t << " K outside [" << band.min_k << ", " << band.max_k << "] K";
            throw DomainError(os.str());
        }
    }
    if (!in_band(t_mem_k)) {
        std::ostringstream os;
        os << "memory temperature " << t_mem_k << " K outside [" << band.min_k << ", " << band.max_k << "] K";
        throw DomainError(os.str());
    }
}

auto ThermalState::uniform(double t_k, int n_sockets) -> ThermalState
{
    return ThermalState{std::vector<double>(static_cast<std::size_t>(std::max(n_sockets, 1)), t_k), t_k};
}

auto leakage_current(double b, double t_k, double vgs_minus_vth, double n_slope) -> double
{
    if (!(t_k > 0.0)) {
        throw DomainError("leakage_current: temperature must be > 0 K");
    }
    if (!(b > 0.0)) {
        throw DomainError("leakage_current: technology constant B must be > 0");
    }
    const double thermal_voltage = physics::boltzmann * t_k / physics::elementary_charge;
    return b * t_k * t_k * std::exp(vgs_minus_vth / (n_slope * thermal_voltage));
}

namespace {

// Requires `mode` to be one of spec.modes (by value).
void require_mode(const ServerSpec& spec, const DvfsMode& mode)
{
    const auto& m = spec.mode(mode.index);
    if (!(m == mode)) {
        std::ostringstream os;
        os << "mode " << mode.index << " does not belong to server " << spec.id;
        throw InvalidArgument(os.str());
    }
}

void require_sockets(const ServerSpec& spec, const ThermalState& thermal)
{
    if (static_cast<int>(thermal.t_cpu_k.size()) != spec.n_sockets) {
        std::ostringstream os;
        os << "thermal state has " << thermal.t_cpu_k.size() << " CPU temperatures, server " << spec.id << " has "
           << spec.n_sockets << " sockets";
        throw InvalidArgument(os.str());
    }
}

} // namespace

auto leakage_power(const ServerSpec& spec, const DvfsMode& mode, const ThermalState& thermal) -> double
{
    require_mode(spec, mode);
    require_sockets(spec, thermal);
    thermal.validate();

    const double v = mode.voltage_v;
    const double tm = thermal.t_mem_k;
    double p = 0.0;
    for (std::size_t s = 0; s < thermal.t_cpu_k.size(); ++s) {
        const double t = thermal.t_cpu_k[s];
        p += spec.b[s] * t * t * v + spec.c[s] * t * v * v;
    }
    p += spec.d * v * v * v + spec.e;
    for (std::size_t s = 0; s < spec.g.size(); ++s) {
        p += spec.g[s] * tm * tm + spec.h[s] * tm;
    }
    return p;
}

auto dynamic_power(const ServerSpec& spec, const DvfsMode& mode, double total_utilization) -> double
{
    require_mode(spec, mode);
    if (!(total_utilization >= 0.0)) {
        throw DomainError("dynamic_power: utilization must be >= 0");
    }
    return spec.a * mode.voltage_v * mode.voltage_v * mode.frequency_hz * total_utilization;
}

auto total_power(const ServerSpec& spec, const DvfsMode& mode, const ThermalState& thermal,
                 double total_utilization) -> double
{
    return dynamic_power(spec, mode, total_utilization) + leakage_power(spec, mode, thermal);
}

auto dynamic_energy(const ServerSpec& spec, const DvfsMode& mode, std::span<const EnergyTerm> terms,
                    DynEnergyForm form) -> double
{
    require_mode(spec, mode);
    double sum = 0.0;
    for (const auto& term : terms) {
        if (!(term.instructions >= 0.0)) {
            throw DomainError("dynamic_energy: instruction count must be >= 0");
        }
        if (!(term.utilization >= 0.0) || term.utilization > 1.0) {
            throw DomainError("dynamic_energy: utilization must lie in [0, 1]");
        }
        if (term.utilization == 0.0 && term.instructions > 0.0) {
            throw InfeasibleError("dynamic_energy: instructions assigned with zero utilization");
        }
        sum += form == DynEnergyForm::as_written ? term.utilization * term.instructions : term.instructions;
    }
    return spec.a * mode.voltage_v * mode.voltage_v * spec.cpi * sum;
}

auto leakage_energy(const ServerSpec& spec, const DvfsMode& mode, const ThermalState& thermal,
                    double total_instructions) -> double
{
    if (!(total_instructions >= 0.0)) {
        throw DomainError("leakage_energy: instruction count must be >= 0");
    }
    const double busy_s = spec.cpi / mode.frequency_hz * total_instructions;
    return leakage_power(spec, mode, thermal) * busy_s;
}

auto total_energy(std::span<const EnergyDigestEntry> digest) -> double
{
    double sum = 0.0;
    for (const auto& entry : digest) {
        sum += entry.dynamic_j + entry.leakage_j;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

auto default_telemetry_plan() -> TelemetryPlan
{
    TelemetryPlan plan;
    for (int k = 1; k <= 20; ++k) plan.utilizations.push_back(0.05 * k);
    plan.t_cpu_k = {293.0, 301.0, 309.0};
    plan.t_mem_k = {294.0, 300.0, 307.0};
    return plan;
}

auto synthesize_telemetry(const ServerSpec& spec, const TelemetryPlan& plan) -> std::vector<TelemetrySample>
{
    spec.validate();
    if (plan.noise_sigma < 0.0) throw DomainError("synthesize_telemetry: noise sigma must be >= 0");
    Rng rng(plan.seed);
    std::vector<TelemetrySample> out;
    for (const auto& mode : spec.modes) {
        for (double u : plan.utilizations) {
            for (double tc : plan.t_cpu_k) {
                for (double tm : plan.t_mem_k) {
                    ThermalState th = ThermalState::uniform(tc, spec.n_sockets);
                    th.t_mem_k = tm;
                    double p = total_power(spec, mode, th, u);
                    if (plan.noise_sigma > 0.0) p *= 1.0 + plan.noise_sigma * rng.normal();
                    out.push_back({u, tc, tm, mode.index, p});
                }
            }
        }
    }
    return out;
}

auto coefficient_names(const ServerSpec& spec_template) -> std::vector<std::string>
{
    const int n = spec_template.n_sockets;
    auto per_socket = [n](const char* base) {
        std::vector<std::string> out;
        for (int s = 1; s <= n; ++s) {
            out.push_back(n == 1 ? std::string(base) + "1" : std::string(base) + std::to_string(s));
        }
        return out;
    };
    std::vector<std::string> names{"A"};
    for (auto& s : per_socket("B")) names.push_back(s);
    for (auto& s : per_socket("C")) names.push_back(s);
    names.emplace_back("D");
    names.emplace_back("E");
    for (auto& s : per_socket("G")) names.push_back(s);
    for (auto& s : per_socket("H")) names.push_back(s);
    return names;
}

namespace {

auto design_row(const ServerSpec& tmpl, const TelemetrySample& s) -> Eigen::RowVectorXd
{
    const auto& m = tmpl.mode(s.mode_index);
    const int n = tmpl.n_sockets;
    const double v = m.voltage_v;
    const double t = s.t_cpu_k;
    const double tm = s.t_mem_k;
    Eigen::RowVectorXd row(4 * n + 3);
    int col = 0;
    row(col++) = v * v * m.frequency_hz * s.utilization;
    for (int k = 0; k < n; ++k) row(col++) = t * t * v;
    for (int k = 0; k < n; ++k) row(col++) = t * v * v;
    row(col++) = v * v * v;
    row(col++) = 1.0;
    for (int k = 0; k < n; ++k) row(col++) = tm * tm;
    for (int k = 0; k < n; ++k) row(col++) = tm;
    return row;
}

auto unpack(const ServerSpec& tmpl, const Eigen::VectorXd& x) -> ServerSpec
{
    ServerSpec out = tmpl;
    const auto n = static_cast<std::size_t>(tmpl.n_sockets);
    std::size_t col = 0;
    out.a = x(static_cast<Eigen::Index>(col++));
    for (std::size_t k = 0; k < n; ++k) out.b[k] = x(static_cast<Eigen::Index>(col++));
    for (std::size_t k = 0; k < n; ++k) out.c[k] = x(static_cast<Eigen::Index>(col++));
    out.d = x(static_cast<Eigen::Index>(col++));
    out.e = x(static_cast<Eigen::Index>(col++));
    for (std::size_t k = 0; k < n; ++k) out.g[k] = x(static_cast<Eigen::Index>(col++));
    for (std::size_t k = 0; k < n; ++k) out.h[k] = x(static_cast<Eigen::Index>(col++));
    return out;
}

// Indices of samples used for fitting; the complement is held out.
auto fitting_mask(std::span<const TelemetrySample> samples, double split) -> std::vector<bool>
{
    std::vector<double> levels;
    levels.reserve(samples.size());
    for (const auto& s : samples) levels.push_back(s.utilization);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    const double hold = 1.0 - split;
    auto held_out = [hold](std::size_t rank) {
        return std::floor(static_cast<double>(rank + 1) * hold) > std::floor(static_cast<double>(rank) * hold);
    };

    std::vector<bool> fit(samples.size(), true);
    if (levels.size() >= 3) {
        std::map<double, std::size_t> rank_of;
        for (std::size_t r = 0; r < levels.size(); ++r) rank_of[levels[r]] = r;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            fit[i] = !held_out(rank_of[samples[i].utilization]);
        }
    } else {
        // Too few distinct levels to split by level: interleave by sample order.
        for (std::size_t i = 0; i < samples.size(); ++i) fit[i] = !held_out(i);
    }
    return fit;
}

} // namespace

auto fit_constants(std::span<const TelemetrySample> samples, const ServerSpec& spec_template,
                   const FitOptions& options) -> FitResult
{
    spec_template.validate();
    if (!(options.split > 0.0 && options.split < 1.0)) {
        throw DomainError("fit_constants: split must lie in (0, 1)");
    }
    const auto names = coefficient_names(spec_template);
    const auto p = static_cast<Eigen::Index>(names.size());
    if (samples.size() < 2 * names.size()) {
        std::ostringstream os;
        os << "fit_constants: " << samples.size() << " samples, need at least " << 2 * names.size() << " for "
           << names.size() << " coefficients";
        throw InvalidArgument(os.str());
    }
    for (const auto& s : samples) {
        if (s.utilization < 0.0 || s.utilization > 1.0) throw DomainError("telemetry utilization outside [0, 1]");
        if (s.power_w < 0.0) throw DomainError("telemetry power must be >= 0");
        (void)spec_template.mode(s.mode_index);
    }

    const auto mask = fitting_mask(samples, options.split);
    std::vector<std::size_t> fit_idx;
    std::vector<std::size_t> val_idx;
    for (std::size_t i = 0; i < samples.size(); ++i) (mask[i] ? fit_idx : val_idx).push_back(i);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(fit_idx.size()), p);
    Eigen::VectorXd y(static_cast<Eigen::Index>(fit_idx.size()));
    for (std::size_t r = 0; r < fit_idx.size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = design_row(spec_template, samples[fit_idx[r]]);
        y(static_cast<Eigen::Index>(r)) = samples[fit_idx[r]].power_w;
    }

    // Column equilibration: raw features span ~20 orders of magnitude.
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double norm = x.col(j).norm();
        scale(j) = norm > 0.0 ? norm : 1.0;
    }
    const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    const double cutoff = options.rank_tolerance * sigma(0);
    std::vector<std::string> unidentifiable;
    for (Eigen::Index k = 0; k < sigma.size(); ++k) {
        if (sigma(k) > cutoff) continue;
        const auto null_dir = svd.matrixV().col(k);
        for (Eigen::Index j = 0; j < p; ++j) {
            if (std::abs(null_dir(j)) > 1e-6) {
                const auto& nm = names[static_cast<std::size_t>(j)];
                if (std::find(unidentifiable.begin(), unidentifiable.end(), nm) == unidentifiable.end()) {
                    unidentifiable.push_back(nm);
                }
            }
        }
    }
    if (x.rows() < p) {
        unidentifiable = names;
    }
    if (!unidentifiable.empty()) {
        std::ostringstream os;
        os << "fit_constants: design matrix is rank deficient; unidentifiable coefficients:";
        for (const auto& nm : unidentifiable) os << ' ' << nm;
        throw UnderdeterminedFit(os.str());
    }

    // Normal equations while the squared condition number leaves enough digits,
    // pseudo-inverse otherwise.
    const double condition = sigma(0) / sigma(sigma.size() - 1);
    Eigen::VectorXd coef_scaled;
    bool solved = false;
    if (condition < 1e4) {
        const Eigen::MatrixXd gram = xs.transpose() * xs;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() == Eigen::Success) {
            coef_scaled = llt.solve(xs.transpose() * y);
            solved = true;
        }
    }
    if (!solved) {
        coef_scaled = svd.solve(y);
    }
    const Eigen::VectorXd coef = coef_scaled.cwiseQuotient(scale);

    FitResult result;
    result.spec = unpack(spec_template, coef);
    result.fit_samples = fit_idx.size();
    result.validation_samples = val_idx.size();

    double ape_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i : val_idx) {
        const auto& s = samples[i];
        const double predicted = design_row(spec_template, s).dot(coef);
        if (s.power_w > 0.0) {
            ape_sum += std::abs(predicted - s.power_w) / s.power_w;
            ++counted;
        }
    }
    result.validation_mape_percent =
        counted > 0 ? 100.0 * ape_sum / static_cast<double>(counted) : std::numeric_limits<double>::quiet_NaN();
    return result;
}

} // namespace dvfsopt
