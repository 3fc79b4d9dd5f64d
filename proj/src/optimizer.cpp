#include "dvfsopt/optimizer.hpp"

#include "dvfsopt/error.hpp"
#include "dvfsopt/text.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>

namespace dvfsopt {

auto to_string(DvfsPolicy p) -> std::string_view
{
    switch (p) {
    case DvfsPolicy::min: return "min";
    case DvfsPolicy::max: return "max";
    case DvfsPolicy::var: return "var";
    }
    return "?";
}

auto parse_policy(std::string_view s) -> DvfsPolicy
{
    for (auto p : {DvfsPolicy::min, DvfsPolicy::max, DvfsPolicy::var}) {
        if (s == to_string(p)) return p;
    }
    throw ConfigError("unknown DVFS policy '" + std::string(s) + "' (expected min, max or var)");
}

auto dominates(const ObjectiveVector& a, const ObjectiveVector& b) -> bool
{
    return a.lambda <= b.lambda && a.scaled_energy <= b.scaled_energy &&
           (a.lambda < b.lambda || a.scaled_energy < b.scaled_energy);
}

auto nondominated_sort(std::span<const ObjectiveVector> points) -> std::vector<int>
{
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dom_count(n, 0);
    std::vector<int> rank(n, 0);
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(points[p], points[q])) {
                dominated[p].push_back(q);
            } else if (dominates(points[q], points[p])) {
                ++dom_count[p];
            }
        }
        if (dom_count[p] == 0) current.push_back(p);
    }
    int r = 0;
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : current) {
            rank[p] = r;
            for (std::size_t q : dominated[p]) {
                if (--dom_count[q] == 0) next.push_back(q);
            }
        }
        current = std::move(next);
        ++r;
    }
    return rank;
}

auto crowding_distance(std::span<const ObjectiveVector> front) -> std::vector<double>
{
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    auto objective = [&](std::size_t i, int k) { return k == 0 ? front[i].lambda : front[i].scaled_energy; };
    std::vector<std::size_t> order(n);
    for (int k = 0; k < 2; ++k) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return objective(a, k) < objective(b, k); });
        const double lo = objective(order.front(), k);
        const double hi = objective(order.back(), k);
        const double span = hi - lo;
        if (!(span > 0.0)) continue;
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j + 1 < n; ++j) {
            dist[order[j]] += (objective(order[j + 1], k) - objective(order[j - 1], k)) / span;
        }
    }
    return dist;
}

auto tournament_select(Rng& rng, std::span<const int> rank, std::span<const double> crowding) -> std::size_t
{
    const std::size_t a = rng.below(rank.size());
    const std::size_t b = rng.below(rank.size());
    if (rank[b] < rank[a]) return b;
    if (rank[b] == rank[a] && crowding[b] > crowding[a]) return b;
    return a;
}

void crossover_at(Chromosome& a, Chromosome& b, std::size_t cut)
{
    for (std::size_t i = cut; i < a.size() && i < b.size(); ++i) std::swap(a[i], b[i]);
}

void single_point_crossover(Rng& rng, Chromosome& a, Chromosome& b, double p)
{
    if (a.size() < 2 || !rng.bernoulli(p)) return;
    const auto cut = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(a.size()) - 1));
    crossover_at(a, b, cut);
}

auto integer_flip_mutation(Rng& rng, Chromosome& genes, std::span<const GeneBounds> bounds, double p) -> std::size_t
{
    std::size_t redraws = 0;
    for (std::size_t i = 0; i < genes.size(); ++i) {
        if (!rng.bernoulli(p)) continue;
        genes[i] = static_cast<int>(rng.between(bounds[i].lo, bounds[i].hi));
        ++redraws;
    }
    return redraws;
}

auto gene_bounds(const Cluster& cluster, std::size_t n_tasks, const OptimizerConfig& config) -> std::vector<GeneBounds>
{
    if (cluster.empty()) throw ConfigError("optimizer: empty cluster");
    if (n_tasks == 0) throw ConfigError("optimizer: empty workload");
    if (config.share_step < 1 || 100 % config.share_step != 0) {
        throw ConfigError("optimizer: share_step must divide 100");
    }
    if (config.max_mode_index && *config.max_mode_index < 1) throw ConfigError("optimizer: max_mode_index must be >= 1");
    std::vector<GeneBounds> b;
    b.reserve(cluster.size() * (n_tasks + 1));
    for (const auto& node : cluster) {
        int top = node.spec.mode_count();
        if (config.max_mode_index) top = std::min(top, *config.max_mode_index);
        switch (config.policy) {
        case DvfsPolicy::min: b.push_back({1, 1}); break;
        case DvfsPolicy::max: b.push_back({top, top}); break;
        case DvfsPolicy::var: b.push_back({1, top}); break;
        }
    }
    const int share_hi = 100 / config.share_step;
    for (std::size_t i = 0; i < n_tasks * cluster.size(); ++i) b.push_back({0, share_hi});
    return b;
}

auto decode(const Chromosome& genes, std::span<const TaskProfile> profiles, std::size_t n_servers, int share_step)
    -> Allocation
{
    const std::size_t n = profiles.size();
    if (genes.size() != n_servers * (n + 1)) throw DimensionError("decode: chromosome length does not match the problem");
    Allocation a;
    a.dvfs.assign(genes.begin(), genes.begin() + static_cast<std::ptrdiff_t>(n_servers));
    a.shares.assign(n, std::vector<int>(n_servers, 0));
    std::vector<std::int64_t> raw(n_servers);
    std::vector<std::int64_t> rem(n_servers);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = a.shares[i];
        std::int64_t sum = 0;
        for (std::size_t m = 0; m < n_servers; ++m) {
            raw[m] = static_cast<std::int64_t>(genes[n_servers + i * n_servers + m]) * share_step;
            sum += raw[m];
        }
        if (sum == 0) {
            row[0] = 100;
            continue;
        }
        if (profiles[i].type == TaskType::real) {
            const auto best = std::max_element(raw.begin(), raw.end()) - raw.begin();
            row[static_cast<std::size_t>(best)] = 100;
            continue;
        }
        int assigned = 0;
        for (std::size_t m = 0; m < n_servers; ++m) {
            row[m] = static_cast<int>(raw[m] * 100 / sum);
            rem[m] = raw[m] * 100 % sum;
            assigned += row[m];
        }
        // Largest remainder; stable order keeps lower indices first on ties.
        std::vector<std::size_t> order(n_servers);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return rem[x] > rem[y]; });
        for (std::size_t k = 0; assigned < 100; ++k, ++assigned) ++row[order[k]];
    }
    return a;
}

auto routed_instructions(const Allocation& alloc, std::size_t row, double total) -> std::vector<double>
{
    std::vector<double> out;
    out.reserve(alloc.shares.at(row).size());
    for (int s : alloc.shares[row]) out.push_back(s / 100.0 * total);
    return out;
}

auto ParetoArchive::insert(const FrontMember& m) -> bool
{
    for (auto& e : members_) {
        if (e.objectives == m.objectives) {
            if (m.genes < e.genes) {
                e = m;
                return true;
            }
            return false;
        }
        if (dominates(e.objectives, m.objectives)) return false;
    }
    std::erase_if(members_, [&](const FrontMember& e) { return dominates(m.objectives, e.objectives); });
    members_.push_back(m);
    return true;
}

auto ParetoArchive::has_feasible() const -> bool
{
    return std::any_of(members_.begin(), members_.end(), [](const FrontMember& e) { return e.lambda == 0; });
}

namespace {

struct Individual {
    Chromosome genes;
    ObjectiveVector obj;
    std::int64_t lambda{0};
    double energy_j{0.0};
};

auto objectives_of(const EvaluationResult& r) -> ObjectiveVector
{
    const double lambda = static_cast<double>(r.lambda);
    return {lambda, (1.0 + lambda) * r.energy_j};
}

/// Rank and crowding for a whole population.
void rank_and_crowd(const std::vector<Individual>& pop, std::vector<int>& rank, std::vector<double>& crowd)
{
    std::vector<ObjectiveVector> objs;
    objs.reserve(pop.size());
    for (const auto& ind : pop) objs.push_back(ind.obj);
    rank = nondominated_sort(objs);
    crowd.assign(pop.size(), 0.0);
    const int max_rank = rank.empty() ? -1 : *std::max_element(rank.begin(), rank.end());
    for (int r = 0; r <= max_rank; ++r) {
        std::vector<std::size_t> idx;
        std::vector<ObjectiveVector> front;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (rank[i] == r) {
                idx.push_back(i);
                front.push_back(objs[i]);
            }
        }
        const auto d = crowding_distance(front);
        for (std::size_t k = 0; k < idx.size(); ++k) crowd[idx[k]] = d[k];
    }
}

} // namespace

auto evolve(const Evaluator& evaluator, const OptimizerConfig& config) -> EvolveResult
{
    const auto& cluster = evaluator.cluster();
    const auto& profiles = evaluator.profiles();
    const auto bounds = gene_bounds(cluster, profiles.size(), config);
    if (config.population < 2) throw ConfigError("optimizer: population must be >= 2");

    std::size_t free_genes = 0;
    for (const auto& b : bounds) free_genes += b.hi > b.lo ? 1 : 0;
    const double p_mut = config.mutation_probability.value_or(free_genes ? 1.0 / static_cast<double>(free_genes) : 0.0);

    Rng rng(config.seed);
    EvolveResult result;
    ParetoArchive archive;

    auto evaluate = [&](Chromosome genes) {
        const auto alloc = decode(genes, profiles, cluster.size(), config.share_step);
        const auto r = evaluator.evaluate(alloc);
        ++result.evaluations;
        Individual ind{std::move(genes), objectives_of(r), r.lambda, r.energy_j};
        archive.insert({ind.genes, ind.obj, ind.lambda, ind.energy_j, alloc});
        return ind;
    };

    std::vector<Individual> pop;
    pop.reserve(config.population);
    for (std::size_t k = 0; k < config.population; ++k) {
        Chromosome g(bounds.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<int>(rng.between(bounds[i].lo, bounds[i].hi));
        pop.push_back(evaluate(std::move(g)));
    }

    auto log_generation = [&](std::size_t gen) {
        const auto best = std::min_element(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) {
            return std::tie(a.lambda, a.energy_j) < std::tie(b.lambda, b.energy_j);
        });
        result.convergence.push_back({gen, best->lambda, best->energy_j});
    };
    log_generation(0);

    std::vector<int> rank;
    std::vector<double> crowd;
    rank_and_crowd(pop, rank, crowd);

    std::size_t feasible_for = archive.has_feasible() ? 1 : 0;
    std::size_t gen = 0;
    while (gen < config.generations) {
        if (config.stop_window && feasible_for >= *config.stop_window) break;
        ++gen;

        std::vector<Individual> merged = pop;
        merged.reserve(2 * config.population);
        while (merged.size() < 2 * config.population) {
            Chromosome a = pop[tournament_select(rng, rank, crowd)].genes;
            Chromosome b = pop[tournament_select(rng, rank, crowd)].genes;
            single_point_crossover(rng, a, b, config.crossover_probability);
            integer_flip_mutation(rng, a, bounds, p_mut);
            integer_flip_mutation(rng, b, bounds, p_mut);
            merged.push_back(evaluate(std::move(a)));
            if (merged.size() < 2 * config.population) merged.push_back(evaluate(std::move(b)));
        }

        // Elitist truncation: whole fronts first, the split front by crowding.
        std::vector<int> mrank;
        std::vector<double> mcrowd;
        rank_and_crowd(merged, mrank, mcrowd);
        std::vector<std::size_t> order(merged.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (mrank[x] != mrank[y]) return mrank[x] < mrank[y];
            return mcrowd[x] > mcrowd[y];
        });
        std::vector<Individual> next;
        next.reserve(config.population);
        for (std::size_t k = 0; k < config.population; ++k) next.push_back(std::move(merged[order[k]]));
        pop = std::move(next);
        rank_and_crowd(pop, rank, crowd);

        log_generation(gen);
        feasible_for = archive.has_feasible() ? feasible_for + 1 : 0;
#ifndef NDEBUG
        for (const auto& x : archive.members()) {
            for (const auto& y : archive.members()) assert(!dominates(x.objectives, y.objectives));
        }
#endif
    }
    result.generations_run = gen;

    result.front = archive.members();
    std::sort(result.front.begin(), result.front.end(), [](const FrontMember& a, const FrontMember& b) {
        return std::tie(a.lambda, a.energy_j, a.genes) < std::tie(b.lambda, b.energy_j, b.genes);
    });
    return result;
}

void write_front(std::ostream& out, const EvolveResult& result, double energy_unit_j)
{
    out << front_csv_header << '\n';
    for (const auto& m : result.front) {
        out << m.lambda << ',' << text::format_double(m.energy_j) << ','
            << text::format_double(m.energy_j / energy_unit_j) << ',';
        for (std::size_t k = 0; k < m.allocation.dvfs.size(); ++k) out << (k ? ";" : "") << m.allocation.dvfs[k];
        out << ',';
        bool first = true;
        for (const auto& row : m.allocation.shares) {
            for (int s : row) {
                out << (first ? "" : ";") << s;
                first = false;
            }
        }
        out << '\n';
    }
}

void write_convergence(std::ostream& out, const EvolveResult& result)
{
    out << convergence_csv_header << '\n';
    for (const auto& c : result.convergence) {
        out << c.generation << ',' << c.best_lambda << ',' << text::format_double(c.best_energy_j) << '\n';
    }
}

} // namespace dvfsopt
