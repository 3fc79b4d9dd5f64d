#ifndef DVFSOPT_OPTIMIZER_HPP
#define DVFSOPT_OPTIMIZER_HPP

#include "dvfsopt/rng.hpp"
#include "dvfsopt/simulator.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace dvfsopt {

enum class DvfsPolicy { min, max, var };

auto to_string(DvfsPolicy p) -> std::string_view;
auto parse_policy(std::string_view s) -> DvfsPolicy;

/// Genes: M DVFS mode indices followed by N*M share genes in row-major (task, server) order.
using Chromosome = std::vector<int>;

struct GeneBounds {
    int lo{0};
    int hi{0};
};

struct ObjectiveVector {
    double lambda{0.0};
    double scaled_energy{0.0};

    friend auto operator==(const ObjectiveVector&, const ObjectiveVector&) -> bool = default;
};

/// Pareto dominance for minimization of both objectives.
auto dominates(const ObjectiveVector& a, const ObjectiveVector& b) -> bool;

/// Rank per point; rank 0 is the non-dominated set.
auto nondominated_sort(std::span<const ObjectiveVector> points) -> std::vector<int>;

/// Crowding distance within one front. A dimension with zero spread contributes nothing.
auto crowding_distance(std::span<const ObjectiveVector> front) -> std::vector<double>;

/// Binary tournament on (rank ascending, crowding descending); the first contestant wins ties.
auto tournament_select(Rng& rng, std::span<const int> rank, std::span<const double> crowding) -> std::size_t;

/// Swaps the tails of `a` and `b` from gene `cut` on.
void crossover_at(Chromosome& a, Chromosome& b, std::size_t cut);

/// With probability `p`, crosses at a cut drawn uniformly from the interior gene boundaries.
void single_point_crossover(Rng& rng, Chromosome& a, Chromosome& b, double p);

/// Re-draws each gene uniformly within its bounds with probability `p`. Returns the number of re-draws.
auto integer_flip_mutation(Rng& rng, Chromosome& genes, std::span<const GeneBounds> bounds, double p) -> std::size_t;

struct OptimizerConfig {
    std::size_t population{100};
    std::size_t generations{25000};
    /// Stop after an archive λ=0 point has existed this many generations; nullopt disables.
    std::optional<std::size_t> stop_window{500};
    std::uint64_t seed{1};
    DvfsPolicy policy{DvfsPolicy::var};
    std::optional<int> max_mode_index;
    /// Share genes take values 0..100/share_step and are multiplied by share_step on decode.
    int share_step{1};
    double crossover_probability{0.9};
    /// Defaults to 1 / (number of free genes).
    std::optional<double> mutation_probability;
};

/// Bounds per gene for a cluster, workload size and policy.
auto gene_bounds(const Cluster& cluster, std::size_t n_tasks, const OptimizerConfig& config) -> std::vector<GeneBounds>;

/**
 * Chromosome to Allocation. Rows are scaled by share_step and normalized to
 * sum to 100 with largest-remainder rounding (ties go to the lower server
 * index). An all-zero row sends everything to server 0; a REAL row keeps only
 * its largest entry (lowest index on ties).
 */
auto decode(const Chromosome& genes, std::span<const TaskProfile> profiles, std::size_t n_servers,
            int share_step = 1) -> Allocation;

/// Instructions routed to each server for a task of `total` instructions in allocation row `row`.
auto routed_instructions(const Allocation& alloc, std::size_t row, double total) -> std::vector<double>;

struct FrontMember {
    Chromosome genes;
    ObjectiveVector objectives;
    std::int64_t lambda{0};
    double energy_j{0.0};
    Allocation allocation;
};

struct ConvergenceRow {
    std::size_t generation{0};
    std::int64_t best_lambda{0};
    double best_energy_j{0.0};
};

struct EvolveResult {
    std::vector<FrontMember> front; ///< sorted by (lambda, energy)
    std::vector<ConvergenceRow> convergence;
    std::size_t generations_run{0};
    std::size_t evaluations{0};
};

/// Non-dominated archive; equal objective vectors keep the lexicographically smallest genes.
class ParetoArchive {
  public:
    /// Returns true when the archive changed.
    auto insert(const FrontMember& m) -> bool;
    [[nodiscard]] auto members() const -> const std::vector<FrontMember>& { return members_; }
    [[nodiscard]] auto has_feasible() const -> bool;

  private:
    std::vector<FrontMember> members_;
};

auto evolve(const Evaluator& evaluator, const OptimizerConfig& config) -> EvolveResult;

inline constexpr std::string_view front_csv_header = "lambda,energy_J,energy_units,dvfs_modes,shares_flat";
inline constexpr std::string_view convergence_csv_header = "generation,best_lambda,best_energy_J";

/// dvfs_modes and shares_flat are ';'-separated; shares are row-major (task, server).
void write_front(std::ostream& out, const EvolveResult& result, double energy_unit_j);
void write_convergence(std::ostream& out, const EvolveResult& result);

} // namespace dvfsopt

#endif
