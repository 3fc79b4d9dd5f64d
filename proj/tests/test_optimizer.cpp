#include "fixtures.hpp"

#include "dvfsopt/error.hpp"
#include "dvfsopt/optimizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

using namespace dvfsopt;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

auto node(const ServerSpec& s) -> ClusterNode { return {s, ThermalState::uniform(300.0, s.n_sockets)}; }

auto soft(int id) -> TaskProfile { return {id, TaskType::soft, 1e6, 1.0, 1.0, 1}; }
auto real(int id) -> TaskProfile { return {id, TaskType::real, 1e6, 1.0, 1.0, 1}; }

/// O(n^2) reference: a point's rank is the length of the longest chain of points dominating it.
auto brute_force_ranks(const std::vector<ObjectiveVector>& pts) -> std::vector<int>
{
    std::vector<int> rank(pts.size(), -1);
    std::vector<bool> placed(pts.size(), false);
    std::size_t done = 0;
    for (int r = 0; done < pts.size(); ++r) {
        std::vector<std::size_t> layer;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (placed[i]) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < pts.size(); ++j) {
                if (!placed[j] && j != i && pts[j].lambda <= pts[i].lambda &&
                    pts[j].scaled_energy <= pts[i].scaled_energy &&
                    (pts[j].lambda < pts[i].lambda || pts[j].scaled_energy < pts[i].scaled_energy)) {
                    dominated = true;
                }
            }
            if (!dominated) layer.push_back(i);
        }
        for (auto i : layer) {
            rank[i] = r;
            placed[i] = true;
            ++done;
        }
    }
    return rank;
}

/// Two-mode server whose fastest mode costs more energy, so the search has a real trade-off.
auto two_mode_server() -> ServerSpec
{
    auto s = fixtures::simple();
    s.modes = {{1, 1.0e9, 0.6}, {2, 2.0e9, 1.3}};
    s.e = 0.1;
    return s;
}

} // namespace

TEST(Decode, ExamplesFromTheShareRules)
{
    const std::vector<TaskProfile> p{soft(0), soft(1), real(2)};
    const Chromosome g{1, 2, 50, 50, 30, 90, 40, 60};
    const auto a = decode(g, p, 2);
    EXPECT_EQ(a.dvfs, (std::vector<int>{1, 2}));
    EXPECT_EQ(a.shares[0], (std::vector<int>{50, 50}));
    EXPECT_EQ(a.shares[1], (std::vector<int>{25, 75}));
    EXPECT_EQ(a.shares[2], (std::vector<int>{0, 100}));
    EXPECT_EQ(routed_instructions(a, 0, 1e6), (std::vector<double>{5e5, 5e5}));
}

TEST(Decode, ZeroRowsLargestRemainderAndTies)
{
    const std::vector<TaskProfile> p{soft(0), soft(1), real(2)};
    const Chromosome g{1, 1, 1, 0, 0, 0, 1, 1, 1, 7, 7, 7};
    const auto a = decode(g, p, 3);
    EXPECT_EQ(a.shares[0], (std::vector<int>{100, 0, 0}));
    // 100/3 each; the leftover unit goes to the lowest index.
    EXPECT_EQ(a.shares[1], (std::vector<int>{34, 33, 33}));
    EXPECT_EQ(a.shares[2], (std::vector<int>{100, 0, 0}));
    EXPECT_THROW((void)decode(Chromosome{1}, p, 3), DimensionError);
}

TEST(Decode, ShareStepScalesGenes)
{
    const std::vector<TaskProfile> p{soft(0)};
    EXPECT_EQ(decode(Chromosome{1, 1, 1, 2}, p, 2, 50).shares[0], (std::vector<int>{33, 67}));
    EXPECT_EQ(decode(Chromosome{1, 1, 1, 1}, p, 2, 50).shares[0], (std::vector<int>{50, 50}));
}

TEST(Decode, RowsAlwaysSumToHundred)
{
    Rng rng(1);
    const std::vector<TaskProfile> p{soft(0), real(1), soft(2)};
    for (int k = 0; k < 2000; ++k) {
        Chromosome g{1, 1, 1, 1};
        for (int i = 0; i < 12; ++i) g.push_back(static_cast<int>(rng.between(0, 100)));
        const auto a = decode(g, p, 4);
        for (std::size_t i = 0; i < 3; ++i) {
            int sum = 0;
            int nonzero = 0;
            for (int s : a.shares[i]) {
                sum += s;
                nonzero += s > 0;
            }
            EXPECT_EQ(sum, 100);
            if (p[i].type == TaskType::real) {
                EXPECT_EQ(nonzero, 1);
            }
        }
    }
}

TEST(NondominatedSort, Examples)
{
    const std::vector<ObjectiveVector> pts{{0, 5}, {0, 3}, {1, 1}};
    EXPECT_EQ(nondominated_sort(pts), (std::vector<int>{1, 0, 0}));
    const std::vector<ObjectiveVector> same{{2, 2}, {2, 2}, {2, 2}};
    EXPECT_EQ(nondominated_sort(same), (std::vector<int>{0, 0, 0}));
    EXPECT_TRUE(nondominated_sort({}).empty());
}

TEST(NondominatedSort, MatchesBruteForceOnRandomSets)
{
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ObjectiveVector> pts;
        const auto n = rng.between(1, 50);
        for (std::int64_t k = 0; k < n; ++k) {
            // Coarse grid so ties and duplicates show up.
            pts.push_back({static_cast<double>(rng.below(6)), static_cast<double>(rng.below(12))});
        }
        EXPECT_EQ(nondominated_sort(pts), brute_force_ranks(pts));
    }
}

TEST(Crowding, SmallFrontsAreInfinite)
{
    const std::vector<ObjectiveVector> two{{0, 1}, {1, 0}};
    EXPECT_EQ(crowding_distance(two), (std::vector<double>{inf, inf}));
    const std::vector<ObjectiveVector> one{{3, 3}};
    EXPECT_EQ(crowding_distance(one), (std::vector<double>{inf}));
}

TEST(Crowding, EvenlySpacedMiddlePoint)
{
    const std::vector<ObjectiveVector> three{{0, 2}, {1, 1}, {2, 0}};
    const auto d = crowding_distance(three);
    EXPECT_EQ(d[0], inf);
    EXPECT_EQ(d[2], inf);
    EXPECT_NEAR(d[1], 2.0, 1e-12);
}

TEST(Crowding, HandFormulaOnUnevenFront)
{
    // lambda spans 4, energy spans 10. Sorted by lambda: 0,1,3,4.
    const std::vector<ObjectiveVector> f{{3, 2}, {0, 10}, {4, 0}, {1, 6}};
    const auto d = crowding_distance(f);
    EXPECT_EQ(d[1], inf);
    EXPECT_EQ(d[2], inf);
    EXPECT_NEAR(d[3], (3.0 - 0.0) / 4.0 + (10.0 - 2.0) / 10.0, 1e-12);
    EXPECT_NEAR(d[0], (4.0 - 1.0) / 4.0 + (6.0 - 0.0) / 10.0, 1e-12);
}

TEST(Crowding, DegenerateDimensionContributesNothing)
{
    const std::vector<ObjectiveVector> f{{0, 1}, {0, 2}, {0, 4}};
    const auto d = crowding_distance(f);
    EXPECT_EQ(d[0], inf);
    EXPECT_EQ(d[2], inf);
    EXPECT_NEAR(d[1], 1.0, 1e-12);
    const std::vector<ObjectiveVector> flat{{1, 1}, {1, 1}, {1, 1}};
    for (double x : crowding_distance(flat)) EXPECT_EQ(x, 0.0);
}

TEST(Tournament, FirstContestantWinsTies)
{
    const std::vector<int> rank(10, 0);
    const std::vector<double> crowd(10, 1.0);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        Rng twin(seed);
        EXPECT_EQ(tournament_select(rng, rank, crowd), twin.below(10));
    }
}

TEST(Tournament, PrefersLowerRankThenLargerCrowding)
{
    const std::vector<int> rank{0, 1};
    const std::vector<double> crowd{0.0, inf};
    const std::vector<int> tied{0, 0};
    const std::vector<double> spread{0.5, 2.0};
    Rng rng(4);
    for (int k = 0; k < 200; ++k) {
        Rng twin = rng;
        const auto a = twin.below(2);
        const auto b = twin.below(2);
        EXPECT_EQ(tournament_select(rng, rank, crowd), std::min(a, b));
        twin = rng;
        const auto c = twin.below(2);
        const auto e = twin.below(2);
        EXPECT_EQ(tournament_select(rng, tied, spread), std::max(c, e));
    }
}

TEST(Crossover, DegenerateCutsKeepParents)
{
    const Chromosome pa{1, 2, 3, 4};
    const Chromosome pb{5, 6, 7, 8};
    auto a = pa;
    auto b = pb;
    crossover_at(a, b, 0);
    EXPECT_EQ(a, pb);
    EXPECT_EQ(b, pa);
    a = pa;
    b = pb;
    crossover_at(a, b, 4);
    EXPECT_EQ(a, pa);
    EXPECT_EQ(b, pb);
    crossover_at(a, b, 2);
    EXPECT_EQ(a, (Chromosome{1, 2, 7, 8}));
    EXPECT_EQ(b, (Chromosome{5, 6, 3, 4}));
}

TEST(Crossover, ProbabilityZeroAndInteriorCut)
{
    Rng rng(5);
    const Chromosome pa{1, 1, 1, 1, 1};
    const Chromosome pb{2, 2, 2, 2, 2};
    auto a = pa;
    auto b = pb;
    single_point_crossover(rng, a, b, 0.0);
    EXPECT_EQ(a, pa);
    for (int k = 0; k < 500; ++k) {
        a = pa;
        b = pb;
        single_point_crossover(rng, a, b, 1.0);
        // The cut is interior: heads from one parent, tails from the other.
        EXPECT_EQ(a.front(), 1);
        EXPECT_EQ(a.back(), 2);
    }
}

TEST(Mutation, ZeroProbabilityIsIdentity)
{
    Rng rng(6);
    Chromosome g{1, 2, 3};
    const std::vector<GeneBounds> b(3, GeneBounds{0, 9});
    EXPECT_EQ(integer_flip_mutation(rng, g, b, 0.0), 0u);
    EXPECT_EQ(g, (Chromosome{1, 2, 3}));
}

TEST(Mutation, RedrawRateMatchesOneOverGeneCount)
{
    Rng rng(7);
    const std::size_t n = 20;
    const std::vector<GeneBounds> b(n, GeneBounds{0, 100});
    Chromosome g(n, 0);
    std::size_t redraws = 0;
    std::size_t first_gene = 0;
    const int trials = 100000;
    for (int k = 0; k < trials; ++k) {
        Chromosome before = g;
        redraws += integer_flip_mutation(rng, g, b, 1.0 / n);
        // A redraw may land on the old value; count gene 0 redraws by bound-respecting change or not.
        first_gene += g[0] != before[0];
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GE(g[i], 0);
            EXPECT_LE(g[i], 100);
        }
    }
    const double rate = static_cast<double>(redraws) / (trials * static_cast<double>(n));
    EXPECT_NEAR(rate, 1.0 / n, 0.05 / n);
    // Gene 0 changes whenever a redraw lands elsewhere: p * 100/101.
    EXPECT_NEAR(first_gene / static_cast<double>(trials), 1.0 / n * 100.0 / 101.0, 0.05 / n);
}

TEST(GeneBounds, PoliciesAndModeCap)
{
    const auto intel = fixtures::intel();
    const Cluster c{node(intel), node(intel)};
    OptimizerConfig cfg;
    cfg.policy = DvfsPolicy::min;
    auto b = gene_bounds(c, 3, cfg);
    ASSERT_EQ(b.size(), 2u + 6u);
    EXPECT_EQ(b[0].lo, 1);
    EXPECT_EQ(b[0].hi, 1);
    EXPECT_EQ(b[2].hi, 100);
    cfg.policy = DvfsPolicy::max;
    EXPECT_EQ(gene_bounds(c, 3, cfg)[1].lo, 6);
    cfg.policy = DvfsPolicy::var;
    cfg.max_mode_index = 5;
    cfg.share_step = 25;
    b = gene_bounds(c, 3, cfg);
    EXPECT_EQ(b[0].hi, 5);
    EXPECT_EQ(b[7].hi, 4);
    cfg.share_step = 30;
    EXPECT_THROW(gene_bounds(c, 3, cfg), ConfigError);
    EXPECT_THROW(gene_bounds({}, 3, OptimizerConfig{}), ConfigError);
    EXPECT_THROW(gene_bounds(c, 0, OptimizerConfig{}), ConfigError);
    EXPECT_EQ(parse_policy("max"), DvfsPolicy::max);
    EXPECT_THROW(parse_policy("fast"), ConfigError);
}

TEST(Archive, KeepsNonDominatedAndSmallestGenes)
{
    ParetoArchive a;
    EXPECT_TRUE(a.insert({{3, 3}, {1, 10}, 1, 5.0, {}}));
    EXPECT_FALSE(a.insert({{4}, {1, 12}, 1, 6.0, {}}));
    EXPECT_TRUE(a.insert({{2}, {1, 10}, 1, 5.0, {}}));
    EXPECT_FALSE(a.insert({{9}, {1, 10}, 1, 5.0, {}}));
    EXPECT_TRUE(a.insert({{1}, {0, 20}, 0, 20.0, {}}));
    EXPECT_TRUE(a.insert({{0}, {0, 9}, 0, 9.0, {}}));
    ASSERT_EQ(a.members().size(), 1u);
    EXPECT_TRUE(a.has_feasible());
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

TEST(Evolve, TrivialInstanceReachesLambdaZero)
{
    const auto s = fixtures::simple();
    const std::vector<TaskProfile> p{{0, TaskType::real, 1e8, 1.0, 0.5, 5}};
    const Evaluator ev({node(s)}, p, generate_jobs(p, 1));
    OptimizerConfig cfg;
    cfg.population = 10;
    cfg.generations = 50;
    const auto r = evolve(ev, cfg);
    ASSERT_FALSE(r.front.empty());
    EXPECT_EQ(r.front.front().lambda, 0);
}

TEST(Evolve, EmptyInputsAreConfigurationErrors)
{
    const auto s = fixtures::simple();
    const std::vector<TaskProfile> p{soft(0)};
    const Evaluator ev({node(s)}, p, generate_jobs(p, 1));
    OptimizerConfig cfg;
    cfg.population = 1;
    EXPECT_THROW(evolve(ev, cfg), ConfigError);
}

namespace {

auto small_instance() -> Evaluator
{
    // One soft and one control task sharing two two-mode servers.
    const auto s = two_mode_server();
    const std::vector<TaskProfile> p{{0, TaskType::soft, 6e8, 1.0, 0.5, 30}, {1, TaskType::ctrl, 5e8, 1.0, 0.55, 30}};
    SimOptions o;
    o.soft_constraints = {{0.0, 0.5}};
    return Evaluator({node(s), node(s)}, p, generate_jobs(p, 3), o);
}

auto objective_set(const std::vector<FrontMember>& front) -> std::set<std::pair<double, double>>
{
    std::set<std::pair<double, double>> out;
    for (const auto& m : front) out.insert({m.objectives.lambda, m.objectives.scaled_energy});
    return out;
}

} // namespace

TEST(Evolve, SmallInstanceFrontEqualsEnumeration)
{
    const auto ev = small_instance();
    OptimizerConfig cfg;
    cfg.population = 20;
    cfg.generations = 150;
    cfg.stop_window.reset();
    cfg.share_step = 50;
    const auto bounds = gene_bounds(ev.cluster(), 2, cfg);

    ParetoArchive exhaustive;
    Chromosome g(bounds.size());
    std::function<void(std::size_t)> walk = [&](std::size_t i) {
        if (i == g.size()) {
            const auto alloc = decode(g, ev.profiles(), 2, cfg.share_step);
            const auto r = ev.evaluate(alloc);
            const double lambda = static_cast<double>(r.lambda);
            exhaustive.insert({g, {lambda, (1 + lambda) * r.energy_j}, r.lambda, r.energy_j, alloc});
            return;
        }
        for (int v = bounds[i].lo; v <= bounds[i].hi; ++v) {
            g[i] = v;
            walk(i + 1);
        }
    };
    walk(0);
    ASSERT_GE(exhaustive.members().size(), 2u) << "instance should have a trade-off";

    const auto r = evolve(ev, cfg);
    EXPECT_EQ(objective_set(r.front), objective_set(exhaustive.members()));
}

TEST(Evolve, SeedDeterminismElitismAndObjectiveCoupling)
{
    const auto ev = small_instance();
    OptimizerConfig cfg;
    cfg.population = 16;
    cfg.generations = 60;
    cfg.stop_window.reset();
    cfg.seed = 11;
    const auto a = evolve(ev, cfg);
    const auto b = evolve(ev, cfg);
    ASSERT_EQ(a.front.size(), b.front.size());
    for (std::size_t k = 0; k < a.front.size(); ++k) {
        EXPECT_EQ(a.front[k].genes, b.front[k].genes);
        EXPECT_EQ(a.front[k].objectives, b.front[k].objectives);
    }
    std::ostringstream ca;
    std::ostringstream cb;
    write_convergence(ca, a);
    write_convergence(cb, b);
    EXPECT_EQ(ca.str(), cb.str());

    ASSERT_EQ(a.convergence.size(), 61u);
    for (std::size_t k = 1; k < a.convergence.size(); ++k) {
        const auto& prev = a.convergence[k - 1];
        const auto& cur = a.convergence[k];
        EXPECT_LE(cur.best_lambda, prev.best_lambda);
        if (cur.best_lambda == prev.best_lambda) {
            EXPECT_LE(cur.best_energy_j, prev.best_energy_j);
        }
    }

    for (const auto& m : a.front) {
        const auto r = ev.evaluate(m.allocation);
        EXPECT_EQ(m.lambda, r.lambda);
        EXPECT_EQ(m.energy_j, r.energy_j);
        EXPECT_EQ(m.objectives.scaled_energy, (1.0 + static_cast<double>(r.lambda)) * r.energy_j);
    }
    for (const auto& x : a.front) {
        for (const auto& y : a.front) EXPECT_FALSE(dominates(x.objectives, y.objectives));
    }
}

TEST(Evolve, StopWindowEndsTheRunEarly)
{
    const auto s = fixtures::simple();
    const std::vector<TaskProfile> p{{0, TaskType::real, 1e8, 1.0, 0.5, 5}};
    const Evaluator ev({node(s)}, p, generate_jobs(p, 1));
    OptimizerConfig cfg;
    cfg.population = 10;
    cfg.generations = 1000;
    cfg.stop_window = 5;
    const auto r = evolve(ev, cfg);
    EXPECT_LT(r.generations_run, 20u);
    EXPECT_EQ(r.evaluations, cfg.population * (1 + r.generations_run));
}

TEST(FrontCsv, HeaderAndFlatShares)
{
    EvolveResult r;
    r.front.push_back({{}, {0, 191.2}, 0, 191.2, Allocation{{1, 2}, {{50, 50}, {0, 100}}}});
    std::ostringstream out;
    write_front(out, r, 95.6);
    EXPECT_EQ(out.str(), std::string(front_csv_header) + "\n0,191.2,2,1;2,50;50;0;100\n");
}
