#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "efce/games/grid_game.hpp"
#include "efce/games/indian_poker.hpp"
#include "efce/games/job_market.hpp"
#include "efce/oracle.hpp"
#include "efce/solver.hpp"

using namespace efce;
using namespace efce::oracle;
using games::GridGame;
using games::GridGameSpec;
using games::IndianPokerGame;
using games::IndianPokerSpec;
using games::JobMarketGame;

namespace {

using JM = JobMarketGame;

// The noncooperative point: the student never studies, the employer never
// hires; completed arbitrarily on the don't-care coordinates.
ExplicitDistribution noncooperative_point(const Game& game, const GameCensus& census) {
    ReducedProfile profile;
    profile.players.resize(2);
    profile.players[0].owner = PlayerId::regular(0);
    profile.players[0].actions[InfoSetId{JM::kStudySet}] = JM::kSkip;
    profile.players[0].actions[InfoSetId{JM::kAnswerAfterSkip}] = JM::kYes;
    profile.players[1].owner = PlayerId::regular(1);
    profile.players[1].actions[InfoSetId{JM::kEmployerHeardYes}] = JM::kPass;
    profile.players[1].actions[InfoSetId{JM::kEmployerHeardNo}] = JM::kPass;
    ExplicitDistribution dist;
    dist.support.push_back(profile);
    dist.probability.push_back(1.0);
    dist.multiplicity.push_back(class_multiplicity(census, profile));
    dist.expected_utilities = expected_utility(game, profile,
                                               *exhaustive_scenarios(game, 10));
    return dist;
}

}  // namespace

TEST_CASE("reduced profile enumeration: 16 for job market, 81 for grid L=2") {
    JobMarketGame jm;
    CHECK(enumerate_reduced_profiles(jm, 1000).size() == 16);
    GridGame grid(GridGameSpec{2, 4, {}});
    CHECK(enumerate_reduced_profiles(grid, 1000).size() == 81);
}

TEST_CASE("poker C=8 enumeration is refused as TooLarge") {
    IndianPokerGame game(IndianPokerSpec{8});
    CHECK_THROWS_AS(enumerate_reduced_profiles(game, 1000000), TooLarge);
}

TEST_CASE("exact_distribution: zero exponent is uniform over reduced classes") {
    JobMarketGame game;
    const GameCensus census = build_census(game);
    DeviationSet psi;
    const ExplicitDistribution dist =
        exact_distribution(game, census, {0.0}, psi, {0.0, 0.0});
    REQUIRE(dist.support.size() == 16);
    double total = 0.0;
    for (double p : dist.probability) {
        // Every class of this game covers two pure profiles, so the pure
        // uniform law is also uniform over the classes.
        CHECK(p == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist.z == doctest::Approx(32.0).epsilon(1e-12));  // 32 pure profiles
}

TEST_CASE("exact_distribution: one-coordinate tilt matches the hand computation") {
    JobMarketGame game;
    const GameCensus census = build_census(game);
    const auto scenarios = *exhaustive_scenarios(game, 10);
    DeviationSet psi;
    psi.add(CausalDeviation::triggered(
        Trigger{PlayerId::regular(0), InfoSetId{JM::kStudySet}, JM::kStudy},
        {{InfoSetId{JM::kStudySet}, JM::kSkip},
         {InfoSetId{JM::kAnswerAfterSkip}, JM::kYes}}));
    const double lam = 0.9;
    const ExplicitDistribution dist =
        exact_distribution(game, census, {0.0, lam}, psi, {0.0, 0.0});
    double z = 0.0;
    std::vector<double> expect(dist.support.size());
    for (std::size_t s = 0; s < dist.support.size(); ++s) {
        const double r = regret(game, psi[1], dist.support[s], scenarios);
        expect[s] = dist.multiplicity[s] * std::exp(-lam * r);
        z += expect[s];
    }
    for (std::size_t s = 0; s < dist.support.size(); ++s)
        CHECK(dist.probability[s] == doctest::Approx(expect[s] / z).epsilon(1e-12));
}

TEST_CASE("the partition function decreases after one exact update") {
    JobMarketGame game;
    const GameCensus census = build_census(game);
    DeviationSet psi;
    const ExplicitDistribution before =
        exact_distribution(game, census, {0.0}, psi, {0.0, 0.0});
    const VerificationReport best = exact_best_deviation(game, census, before);
    REQUIRE(best.max_regret > 0.0);
    const double r_max = game.type().r_max;
    const double delta =
        -0.5 / r_max * std::log((r_max - best.max_regret) / (r_max + best.max_regret));
    DeviationSet grown;
    grown.add(best.worst_deviation);
    const ExplicitDistribution after =
        exact_distribution(game, census, {0.0, delta}, grown, {0.0, 0.0});
    CHECK(after.z < before.z);
}

TEST_CASE("exact_best_deviation: the noncooperative point has zero regret") {
    JobMarketGame game;
    const GameCensus census = build_census(game);
    const ExplicitDistribution point = noncooperative_point(game, census);
    const VerificationReport report = exact_best_deviation(game, census, point);
    CHECK(report.max_regret == 0.0);
    CHECK(report.worst_deviation.is_identity());
    CHECK(report.deviations_checked > 20);  // triggers x region strategies
}

TEST_CASE("exact_best_deviation: uniform play is profitably deviated") {
    JobMarketGame game;
    const GameCensus census = build_census(game);
    DeviationSet psi;
    const ExplicitDistribution uniform =
        exact_distribution(game, census, {0.0}, psi, {0.0, 0.0});
    const VerificationReport report = exact_best_deviation(game, census, uniform);
    // Hand derivation: the best deviation is the student's trigger on the
    // "study" suggestion, switching to skip-then-yes. Under the uniform law
    // the employer hires with probability 1/2 after either answer, so the
    // switch gains (2.5 - 1.5) on the half of the mass that studies: 0.5.
    CHECK(report.max_regret > 0.0);
    CHECK(report.max_regret == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(verify_efce(game, census, uniform, 0.0).is_epsilon_efce == false);
    // Any distribution is a (2 r_max)-EFCE.
    CHECK(verify_efce(game, census, uniform, 2.0 * game.type().r_max).is_epsilon_efce);
}

TEST_CASE("verify_efce accepts the noncooperative equilibrium at epsilon zero") {
    JobMarketGame game;
    const GameCensus census = build_census(game);
    const VerificationReport report =
        verify_efce(game, census, noncooperative_point(game, census), 0.0);
    CHECK(report.is_epsilon_efce);
    CHECK(report.epsilon == 0.0);
}

TEST_CASE("exact_boost: stops immediately when epsilon exceeds the initial regret") {
    JobMarketGame game;
    const ExactBoostResult result = exact_boost(game, {0.0, 0.0}, 10.0, 100);
    CHECK(result.update_rounds == 0);
    CHECK(result.trajectory.size() == 1);
}

TEST_CASE("exact_boost honors the iteration bound and Z never increases") {
    JobMarketGame game;
    const double r_max = game.type().r_max;
    for (double eps_factor : {0.1, 0.01}) {
        const double eps = eps_factor * r_max;
        const ExactBoostResult result = exact_boost(game, {0.0, 0.0}, eps, 1000000);
        REQUIRE(!result.trajectory.empty());
        CHECK(result.trajectory.back().max_regret <= eps);
        const IterationBound bound = iteration_bound(eps, r_max, std::log(16.0));
        CHECK(result.update_rounds <= bound.rounds);
        for (std::size_t t = 1; t < result.trajectory.size(); ++t)
            CHECK(result.trajectory[t].z <= result.trajectory[t - 1].z + 1e-9);
    }
}

TEST_CASE("exact_boost with welfare weights lands on the cooperative outcome") {
    JobMarketGame game;
    const ExactBoostResult result = exact_boost(game, {1.0, 1.0}, 1e-6, 100000);
    REQUIRE(!result.trajectory.empty());
    CHECK(result.trajectory.back().max_regret <= 1e-6);
    CHECK(result.distribution.expected_utilities[0] == doctest::Approx(4.0).epsilon(1e-3));
    CHECK(result.distribution.expected_utilities[1] == doctest::Approx(5.0).epsilon(1e-3));
}

TEST_CASE("exact max-entropy equilibrium payoffs sit in the documented ranges") {
    JobMarketGame game;
    const ExactBoostResult result = exact_boost(game, {0.0, 0.0}, 1e-7, 2000000);
    REQUIRE(!result.trajectory.empty());
    REQUIRE(result.trajectory.back().max_regret <= 1e-7);
    const double student = result.distribution.expected_utilities[0];
    const double employer = result.distribution.expected_utilities[1];
    CHECK(student >= 1.8);
    CHECK(student <= 3.0);
    CHECK(employer >= 0.0);
    CHECK(employer <= 0.7);
    // Cooperation probability: studied and hired.
    const auto scenarios = *exhaustive_scenarios(game, 10);
    double coop = 0.0;
    for (std::size_t s = 0; s < result.distribution.support.size(); ++s) {
        const UtilityVector u =
            expected_utility(game, result.distribution.support[s], scenarios);
        if (u[0] == 4.0 && u[1] == 5.0) coop += result.distribution.probability[s];
    }
    CHECK(coop >= 0.20);
    CHECK(coop <= 0.45);
}

TEST_CASE("grid L=2 best deviation agrees between boost fixed point and verification") {
    GridGame game(GridGameSpec{2, 13, {}});
    const double eps = 0.01 * game.type().r_max;
    const ExactBoostResult result = exact_boost(game, {}, eps, 400000);
    REQUIRE(!result.trajectory.empty());
    CHECK(result.trajectory.back().max_regret <= eps);
    const GameCensus census = build_census(game);
    const VerificationReport report = verify_efce(game, census, result.distribution, eps);
    CHECK(report.is_epsilon_efce);
    const IterationBound bound = iteration_bound(eps, game.type().r_max, std::log(81.0));
    CHECK(result.update_rounds <= bound.rounds);
}
