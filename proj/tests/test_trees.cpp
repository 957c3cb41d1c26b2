#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "efce/games/grid_game.hpp"
#include "efce/games/indian_poker.hpp"
#include "efce/games/job_market.hpp"
#include "efce/oracle.hpp"
#include "efce/rng.hpp"
#include "efce/trees.hpp"

using namespace efce;
using games::GridGame;
using games::GridGameSpec;
using games::IndianPokerGame;
using games::IndianPokerSpec;
using games::JobMarketGame;

namespace {

using JM = JobMarketGame;

// Fully explicit profile over an enumerable game, seeded.
LazyProfile random_full_profile(const oracle::GameCensus& census, SeedStream& rng) {
    LazyProfile::Entries fixed;
    for (auto& [id, cs] : census.sets) {
        if (!cs.owner.is_regular()) continue;
        fixed.push_back({id, 1 + int(rng.below(uint64_t(cs.actions)))});
    }
    return LazyProfile(std::move(fixed), 0);
}

std::vector<double> random_weights(std::size_t count, SeedStream& rng) {
    std::vector<double> w(count);
    double total = 0.0;
    for (double& v : w) {
        v = 0.05 + rng.uniform01();
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

// Compares the forest DP against the brute-force oracle on random weighted
// samples of explicit profiles.
void check_oracle_equivalence(const Game& game, int cases, int draws_per_case,
                              uint64_t seed) {
    const oracle::GameCensus census = oracle::build_census(game);
    const ScenarioSample scenarios = *exhaustive_scenarios(game, 1000);
    SeedStream rng(seed);
    for (int c = 0; c < cases; ++c) {
        std::vector<LazyProfile> draws;
        for (int k = 0; k < draws_per_case; ++k)
            draws.push_back(random_full_profile(census, rng));
        const std::vector<double> weights = random_weights(draws.size(), rng);

        DeviationForest forest(game, draws, weights, scenarios);
        const BestDeviationResult best = forest.best_deviation();

        const oracle::ExplicitDistribution dist =
            oracle::empirical_distribution(game, census, draws, weights);
        const oracle::VerificationReport exact =
            oracle::exact_best_deviation(game, census, dist);

        CHECK(std::abs(best.empirical_regret - exact.max_regret) <= 1e-9);
    }
}

}  // namespace

TEST_CASE("forest on a grid point mass: structure counts match the hand build") {
    GridGame game(GridGameSpec{2, 11, {}});
    LazyProfile::Entries fixed{{InfoSetId{0}, 1}, {InfoSetId{1}, 2}, {InfoSetId{2}, 3},
                               {InfoSetId{3}, 1}};
    DeviationForest forest(game, {LazyProfile(fixed, 0)}, {1.0},
                           *exhaustive_scenarios(game, 10));
    // One simulated play of 4 decisions plus the leaf.
    CHECK(forest.stats().pair_count == 1);
    CHECK(forest.stats().sim_node_count == 5);
    const BestDeviationResult best = forest.best_deviation();
    // One trigger per decision node; the deviation region rooted at depth p
    // holds 1 choice node plus 3 branches of (3 - p) co-decisions and a leaf.
    CHECK(best.trigger_table.size() == 4);
    CHECK(forest.stats().dp_node_count == 13 + 10 + 7 + 4);
    // The DP touches each expanded node at most twice.
    CHECK(forest.stats().dp_visits <= 2 * forest.stats().dp_node_count);
}

TEST_CASE("best deviation on the cooperative job market point mass is the +1 skip") {
    JobMarketGame game;
    LazyProfile::Entries fixed{{InfoSetId{JM::kStudySet}, JM::kStudy},
                               {InfoSetId{JM::kAnswerAfterStudy}, JM::kYes},
                               {InfoSetId{JM::kAnswerAfterSkip}, JM::kNo},
                               {InfoSetId{JM::kEmployerHeardYes}, JM::kHire},
                               {InfoSetId{JM::kEmployerHeardNo}, JM::kPass}};
    DeviationForest forest(game, {LazyProfile(fixed, 0)}, {1.0},
                           *exhaustive_scenarios(game, 10));
    const BestDeviationResult best = forest.best_deviation();
    CHECK(best.empirical_regret == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(!best.deviation.is_identity());
    CHECK(best.deviation.trigger().player == PlayerId::regular(0));
    CHECK(best.deviation.trigger().info_set == InfoSetId{JM::kStudySet});
    CHECK(best.deviation.trigger().action == JM::kStudy);
    CHECK(best.deviation.dev_action(InfoSetId{JM::kStudySet}) == JM::kSkip);
    CHECK(best.deviation.dev_action(InfoSetId{JM::kAnswerAfterSkip}) == JM::kYes);
}

TEST_CASE("point mass on a strict equilibrium yields the identity deviation") {
    // Dominant matrices make action 1 strictly best for everyone.
    GridGameSpec spec{2, 0, {}};
    spec.explicit_matrices.assign(4, {});
    for (int n = 0; n < 4; ++n) {
        spec.explicit_matrices[n].assign(2, std::array<double, 9>{});
        for (int s = 0; s < 2; ++s)
            for (int theirs = 0; theirs < 3; ++theirs)
                spec.explicit_matrices[n][s][0 * 3 + theirs] = 1.0;
    }
    GridGame game(spec);
    LazyProfile::Entries fixed{{InfoSetId{0}, 1}, {InfoSetId{1}, 1}, {InfoSetId{2}, 1},
                               {InfoSetId{3}, 1}};
    DeviationForest forest(game, {LazyProfile(fixed, 0)}, {1.0},
                           *exhaustive_scenarios(game, 10));
    const BestDeviationResult best = forest.best_deviation();
    CHECK(best.deviation.is_identity());
    CHECK(best.empirical_regret == 0.0);
}

TEST_CASE("forest r* equals the exact oracle on random job market samples") {
    check_oracle_equivalence(JobMarketGame{}, 40, 6, 2024);
}

TEST_CASE("forest r* equals the exact oracle on random grid samples") {
    check_oracle_equivalence(GridGame{GridGameSpec{2, 77, {}}}, 25, 5, 515);
}

TEST_CASE("forest r* equals the exact oracle on random poker samples with chance") {
    check_oracle_equivalence(IndianPokerGame{IndianPokerSpec{3}}, 8, 4, 99);
}

TEST_CASE("evaluate_regrets agrees with the direct regret computation") {
    SeedStream rng(4242);
    const auto run_game = [&](const Game& game, int cases) {
        const oracle::GameCensus census = oracle::build_census(game);
        const ScenarioSample scenarios = *exhaustive_scenarios(game, 1000);
        std::vector<CausalDeviation> pool;
        for (int n = 0; n < game.num_players(); ++n) {
            const auto devs = oracle::enumerate_deviations(census, n, 5000);
            pool.insert(pool.end(), devs.begin(), devs.end());
        }
        for (int c = 0; c < cases; ++c) {
            DeviationSet psi;
            const int count = 1 + int(rng.below(5));
            for (int d = 0; d < count; ++d) psi.add(pool[rng.below(pool.size())]);
            const LazyProfile profile = random_full_profile(census, rng);
            const RegretVector via_tree = evaluate_regrets(game, profile, psi, scenarios);
            REQUIRE(via_tree.size() == psi.size());
            CHECK(via_tree[0] == 0.0);
            for (std::size_t phi = 1; phi < psi.size(); ++phi) {
                const double direct = regret(game, psi[phi], profile, scenarios);
                CHECK(std::abs(via_tree[phi] - direct) <= 1e-12);
            }
        }
    };
    run_game(JobMarketGame{}, 400);
    run_game(GridGame{GridGameSpec{2, 5, {}}}, 300);
    run_game(IndianPokerGame{IndianPokerSpec{3}}, 300);
}

TEST_CASE("simulation tree dump: golden output and weight conservation") {
    JobMarketGame game;
    LazyProfile::Entries coop{{InfoSetId{JM::kStudySet}, JM::kStudy},
                              {InfoSetId{JM::kAnswerAfterStudy}, JM::kYes},
                              {InfoSetId{JM::kAnswerAfterSkip}, JM::kNo},
                              {InfoSetId{JM::kEmployerHeardYes}, JM::kHire},
                              {InfoSetId{JM::kEmployerHeardNo}, JM::kPass}};
    LazyProfile::Entries home{{InfoSetId{JM::kStudySet}, JM::kSkip},
                              {InfoSetId{JM::kAnswerAfterStudy}, JM::kYes},
                              {InfoSetId{JM::kAnswerAfterSkip}, JM::kNo},
                              {InfoSetId{JM::kEmployerHeardYes}, JM::kHire},
                              {InfoSetId{JM::kEmployerHeardNo}, JM::kPass}};
    std::ostringstream dump;
    dump_simulation_tree(game, {LazyProfile(coop, 0), LazyProfile(home, 0)}, {0.75, 0.25},
                         *exhaustive_scenarios(game, 10), dump);
    CHECK(dump.str() ==
          "0 -1 infoset:1 1\n"
          "1 0 infoset:2 0.75\n"
          "2 1 infoset:4 0.75\n"
          "3 2 leaf 0.75\n"
          "4 0 infoset:3 0.25\n"
          "5 4 infoset:5 0.25\n"
          "6 5 leaf 0.25\n");

    // Weight conservation on a larger random sample: children sum to parent.
    const oracle::GameCensus census = oracle::build_census(game);
    SeedStream rng(5);
    std::vector<LazyProfile> draws;
    for (int k = 0; k < 8; ++k) draws.push_back(random_full_profile(census, rng));
    std::ostringstream big;
    dump_simulation_tree(game, draws, random_weights(draws.size(), rng),
                         *exhaustive_scenarios(game, 10), big);
    std::istringstream in(big.str());
    std::vector<double> weight;
    std::vector<int> parent;
    std::vector<double> child_sum;
    long id, par;
    std::string label;
    double w;
    while (in >> id >> par >> label >> w) {
        weight.push_back(w);
        parent.push_back(int(par));
        child_sum.push_back(0.0);
    }
    for (std::size_t i = 1; i < weight.size(); ++i) child_sum[parent[i]] += weight[i];
    for (std::size_t i = 0; i < weight.size(); ++i) {
        if (child_sum[i] > 0.0)
            CHECK(child_sum[i] == doctest::Approx(weight[i]).epsilon(1e-12));
    }
}

TEST_CASE("best-response complexity: hand counts and the Lambda <= d Gamma bound") {
    {
        JobMarketGame game;
        LazyProfile::Entries fixed{{InfoSetId{JM::kStudySet}, JM::kStudy},
                                   {InfoSetId{JM::kAnswerAfterStudy}, JM::kYes},
                                   {InfoSetId{JM::kAnswerAfterSkip}, JM::kNo},
                                   {InfoSetId{JM::kEmployerHeardYes}, JM::kHire},
                                   {InfoSetId{JM::kEmployerHeardNo}, JM::kPass}};
        const LazyProfile profile(fixed, 0);
        // Student free: root + 2 * (answer node + 2 * (employer node + leaf)).
        CHECK(best_response_tree_size(game, PlayerId::regular(0), profile, Scenario{}) == 11);
        // Employer free: a single path with one 2-way branch at the end.
        CHECK(best_response_tree_size(game, PlayerId::regular(1), profile, Scenario{}) == 5);
        std::vector<std::pair<LazyProfile, Scenario>> probes{{profile, Scenario{}}};
        const std::size_t lambda = best_response_complexity(game, probes);
        CHECK(lambda == 11);
        CHECK(double(lambda) <= 3.0 * game.type().gamma);
    }
    {
        GridGame game(GridGameSpec{2, 3, {}});
        LazyProfile::Entries fixed{{InfoSetId{0}, 1}, {InfoSetId{1}, 1}, {InfoSetId{2}, 1},
                                   {InfoSetId{3}, 1}};
        const LazyProfile profile(fixed, 0);
        // First mover free: root + 3 branches of three fixed moves + leaf.
        CHECK(best_response_tree_size(game, PlayerId::regular(0), profile, Scenario{}) == 13);
        // Last mover free: three fixed moves + choice + 3 leaves.
        CHECK(best_response_tree_size(game, PlayerId::regular(3), profile, Scenario{}) == 7);
        std::vector<std::pair<LazyProfile, Scenario>> probes{{profile, Scenario{}}};
        CHECK(best_response_complexity(game, probes) == 13);
    }
}

TEST_CASE("the forest node budget trips as SizeExceeded") {
    GridGame game(GridGameSpec{3, 1, {}});
    const oracle::GameCensus census = oracle::build_census(game);
    SeedStream rng(8);
    std::vector<LazyProfile> draws;
    for (int k = 0; k < 4; ++k) draws.push_back(random_full_profile(census, rng));
    CHECK_THROWS_AS(DeviationForest(game, draws, random_weights(4, rng),
                                    *exhaustive_scenarios(game, 10), /*node_budget=*/8),
                    SizeExceeded);
}

TEST_CASE("player filter restricts the search") {
    JobMarketGame game;
    LazyProfile::Entries fixed{{InfoSetId{JM::kStudySet}, JM::kStudy},
                               {InfoSetId{JM::kAnswerAfterStudy}, JM::kYes},
                               {InfoSetId{JM::kAnswerAfterSkip}, JM::kNo},
                               {InfoSetId{JM::kEmployerHeardYes}, JM::kHire},
                               {InfoSetId{JM::kEmployerHeardNo}, JM::kPass}};
    DeviationForest forest(game, {LazyProfile(fixed, 0)}, {1.0},
                           *exhaustive_scenarios(game, 10));
    const BestDeviationResult student_only = forest.best_deviation(0);
    CHECK(student_only.empirical_regret == doctest::Approx(1.0));
    const BestDeviationResult employer_only = forest.best_deviation(1);
    // The employer is already best-responding on this point mass.
    CHECK(employer_only.empirical_regret == 0.0);
}
