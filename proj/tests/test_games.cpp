#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "efce/games/grid_game.hpp"
#include "efce/games/indian_poker.hpp"
#include "efce/games/job_market.hpp"
#include "efce/oracle.hpp"
#include "efce/rng.hpp"
#include "efce/scenario.hpp"
#include "efce/strategy.hpp"

using namespace efce;
using games::GridGame;
using games::GridGameSpec;
using games::IndianPokerGame;
using games::IndianPokerSpec;
using games::JobMarketGame;

namespace {

// Independent showdown oracle: recomputes poker utilities from the rules,
// sharing nothing with the game implementation.
UtilityVector showdown(const int cards[3], const std::vector<int>& bets) {
    bool bettor[3] = {false, false, false};
    for (std::size_t d = 0; d < bets.size(); ++d)
        if (bets[d] == IndianPokerGame::kBet) bettor[d % 3] = true;
    const int num_bettors = bettor[0] + bettor[1] + bettor[2];
    if (num_bettors == 0) return {0.0, 0.0, 0.0};
    const int pot = 2 * num_bettors + (3 - num_bettors);
    int winner = -1;
    for (int n = 0; n < 3; ++n)
        if (bettor[n] && (winner < 0 || cards[n] > cards[winner])) winner = n;
    UtilityVector u(3);
    for (int n = 0; n < 3; ++n)
        u[n] = n == winner ? pot - 2.0 : (bettor[n] ? -2.0 : -1.0);
    return u;
}

// Every terminal betting sequence of the poker game.
std::vector<std::vector<int>> all_betting_lines() {
    std::vector<std::vector<int>> lines;
    const int kB = IndianPokerGame::kBet, kP = IndianPokerGame::kPass;
    for (int b1 : {kB, kP}) {
        for (int b2 : {kB, kP}) {
            for (int b3 : {kB, kP}) {
                std::vector<int> line{b1, b2, b3};
                const int first = b1 == kB ? 0 : b2 == kB ? 1 : b3 == kB ? 2 : -1;
                if (first <= 0) {
                    lines.push_back(line);
                    continue;
                }
                for (int b4 : {kB, kP}) {
                    if (first == 1) {
                        line.push_back(b4);
                        lines.push_back(line);
                        line.pop_back();
                        continue;
                    }
                    for (int b5 : {kB, kP}) {
                        line.push_back(b4);
                        line.push_back(b5);
                        lines.push_back(line);
                        line.pop_back();
                        line.pop_back();
                    }
                }
            }
        }
    }
    return lines;
}

}  // namespace

TEST_CASE("job market leaves: cooperation pays (4,5), staying home pays (0,0)") {
    JobMarketGame game;
    UtilityVector u;
    for (int answer : {JobMarketGame::kYes, JobMarketGame::kNo}) {
        game.utilities(Node{{JobMarketGame::kStudy, answer, JobMarketGame::kHire}}, u);
        CHECK(u == UtilityVector{4.0, 5.0});
        game.utilities(Node{{JobMarketGame::kSkip, answer, JobMarketGame::kPass}}, u);
        CHECK(u == UtilityVector{0.0, 0.0});
    }
    // Hiring a student who skipped studying costs the employer.
    game.utilities(Node{{JobMarketGame::kSkip, JobMarketGame::kYes, JobMarketGame::kHire}}, u);
    CHECK(u == UtilityVector{5.0, -5.0});
}

TEST_CASE("job market has exactly 16 reduced strategy profiles") {
    JobMarketGame game;
    const auto profiles = oracle::enumerate_reduced_profiles(game, 100);
    CHECK(profiles.size() == 16);
}

TEST_CASE("poker sequence complexity: gamma = 24 C (C-1), 1344 at C=8") {
    CHECK(IndianPokerGame(IndianPokerSpec{8}).type().gamma == 1344.0);
    CHECK(IndianPokerGame(IndianPokerSpec{4}).type().gamma == 288.0);
    CHECK_THROWS_AS(IndianPokerGame(IndianPokerSpec{2}), InvalidSpec);
}

TEST_CASE("poker showdown example: deal (7,2,5), players 1 and 3 bet") {
    IndianPokerGame game(IndianPokerSpec{8});
    // Encode deal (7,2,5): a1=7; remaining {1..8}\{7}: card 2 is 2nd;
    // remaining {1,3,4,6,8}: card 5 is 4th.
    Node leaf;
    leaf.hist = {7, 2, 4, IndianPokerGame::kBet, IndianPokerGame::kPass,
                 IndianPokerGame::kBet};
    int cards[3];
    game.decode_deal(leaf, cards);
    REQUIRE(cards[0] == 7);
    REQUIRE(cards[1] == 2);
    REQUIRE(cards[2] == 5);
    UtilityVector u;
    game.utilities(leaf, u);
    CHECK(u == UtilityVector{3.0, -1.0, -2.0});
}

TEST_CASE("poker utilities match the independent showdown oracle everywhere") {
    IndianPokerGame game(IndianPokerSpec{5});
    const auto lines = all_betting_lines();
    const std::set<double> allowed{-2.0, -1.0, 0.0, 2.0, 3.0, 4.0};
    for (int c1 = 1; c1 <= 5; ++c1) {
        for (int c2 = 1; c2 <= 5; ++c2) {
            if (c2 == c1) continue;
            for (int c3 = 1; c3 <= 5; ++c3) {
                if (c3 == c1 || c3 == c2) continue;
                const int lo = std::min(c1, c2), hi = std::max(c1, c2);
                Node base;
                base.hist = {c1, c2 - (c2 > c1 ? 1 : 0),
                             c3 - (c3 > lo ? 1 : 0) - (c3 > hi ? 1 : 0)};
                int cards[3];
                game.decode_deal(base, cards);
                REQUIRE(cards[0] == c1);
                REQUIRE(cards[1] == c2);
                REQUIRE(cards[2] == c3);
                for (const auto& line : lines) {
                    Node leaf = base;
                    for (int b : line) leaf.hist.push_back(b);
                    UtilityVector u;
                    game.utilities(leaf, u);
                    const UtilityVector expected = showdown(cards, line);
                    CHECK(u == expected);
                    // Zero-sum at every leaf, values within the documented set.
                    CHECK(u[0] + u[1] + u[2] == 0.0);
                    for (double v : u) CHECK(allowed.count(v) == 1);
                }
            }
        }
    }
}

TEST_CASE("poker betting structure: decision counts and actor order") {
    IndianPokerGame game(IndianPokerSpec{4});
    Node node;
    node.hist = {1, 1, 1};
    // All-pass line has exactly three decisions.
    Node all_pass = node;
    for (int d = 0; d < 3; ++d) {
        auto set = game.info_set(all_pass);
        REQUIRE(set.has_value());
        CHECK(game.owner(*set) == PlayerId::regular(d));
        all_pass.hist.push_back(IndianPokerGame::kPass);
    }
    CHECK(!game.info_set(all_pass).has_value());
    // First bet at seat 3 leads to five decisions: seats 1,2,3 then 1,2.
    Node line = node;
    line.hist.push_back(IndianPokerGame::kPass);
    line.hist.push_back(IndianPokerGame::kPass);
    line.hist.push_back(IndianPokerGame::kBet);
    auto fourth = game.info_set(line);
    REQUIRE(fourth.has_value());
    CHECK(game.owner(*fourth) == PlayerId::regular(0));
    line.hist.push_back(IndianPokerGame::kBet);
    auto fifth = game.info_set(line);
    REQUIRE(fifth.has_value());
    CHECK(game.owner(*fifth) == PlayerId::regular(1));
    line.hist.push_back(IndianPokerGame::kPass);
    CHECK(!game.info_set(line).has_value());
    // First bet at seat 1: seats 2 and 3 match or fold and play ends.
    Node early = node;
    early.hist.push_back(IndianPokerGame::kBet);
    early.hist.push_back(IndianPokerGame::kBet);
    early.hist.push_back(IndianPokerGame::kPass);
    CHECK(!game.info_set(early).has_value());
}

TEST_CASE("poker information sets hide the own card and satisfy perfect recall") {
    IndianPokerGame game(IndianPokerSpec{4});
    Node a, b;
    a.hist = {1, 1, 1};  // deal (1,2,3)
    b.hist = {4, 2, 2};  // deal (4,2,3)
    int cards_a[3], cards_b[3];
    game.decode_deal(a, cards_a);
    game.decode_deal(b, cards_b);
    REQUIRE(cards_a[1] == cards_b[1]);
    REQUIRE(cards_a[2] == cards_b[2]);
    REQUIRE(cards_a[0] != cards_b[0]);
    CHECK(*game.info_set(a) == *game.info_set(b));
    // Different observed cards: different information set.
    Node c;
    c.hist = {1, 2, 1};
    CHECK(*game.info_set(c) != *game.info_set(a));
    // The census validates perfect recall and single nature visits per path.
    CHECK_NOTHROW(oracle::build_census(game));
}

TEST_CASE("poker reduced strategy counts match 9/10/16 per observed pair") {
    for (int cards : {3, 4}) {
        IndianPokerGame game(IndianPokerSpec{cards});
        const oracle::GameCensus census = oracle::build_census(game);
        const double pairs = cards * (cards - 1);
        CHECK(double(oracle::count_reduced_strategies(census, 0)) ==
              doctest::Approx(std::pow(9.0, pairs)));
        CHECK(double(oracle::count_reduced_strategies(census, 1)) ==
              doctest::Approx(std::pow(10.0, pairs)));
        CHECK(double(oracle::count_reduced_strategies(census, 2)) ==
              doctest::Approx(std::pow(16.0, pairs)));
    }
}

TEST_CASE("grid game: gamma, zero matrices, corner payoffs, reproducibility") {
    CHECK(GridGame(GridGameSpec{5, 0, {}}).type().gamma == 75.0);
    CHECK_THROWS_AS(GridGame(GridGameSpec{1, 0, {}}), InvalidSpec);

    // Zero matrices force all-zero utilities.
    GridGameSpec zero_spec{2, 0, {}};
    zero_spec.explicit_matrices.assign(
        4, std::vector<std::array<double, 9>>(2, std::array<double, 9>{}));
    GridGame zeroed(zero_spec);
    UtilityVector u;
    zeroed.utilities(Node{{1, 2, 3, 1}}, u);
    CHECK(u == UtilityVector{0.0, 0.0, 0.0, 0.0});

    // Corner players sum exactly their two neighbor entries.
    GridGame game(GridGameSpec{3, 123, {}});
    Node leaf;
    leaf.hist = {1, 2, 3, 2, 1, 3, 3, 2, 1};
    game.utilities(leaf, u);
    const auto& corner_neighbors = game.neighbors(0);
    REQUIRE(corner_neighbors.size() == 2);
    const double expected = game.payoff_entry(0, 0, 1, leaf.hist[corner_neighbors[0]]) +
                            game.payoff_entry(0, 1, 1, leaf.hist[corner_neighbors[1]]);
    CHECK(u[0] == doctest::Approx(expected).epsilon(1e-12));

    // Same payoff seed, same matrices; different seed, different matrices.
    GridGame again(GridGameSpec{3, 123, {}});
    GridGame other(GridGameSpec{3, 124, {}});
    CHECK(game.payoff_entry(4, 2, 2, 3) == again.payoff_entry(4, 2, 2, 3));
    CHECK(game.payoff_entry(4, 2, 2, 3) != other.payoff_entry(4, 2, 2, 3));
    for (int cell = 0; cell < 9; ++cell) {
        const double v = game.payoff_entry(4, 0, cell / 3 + 1, cell % 3 + 1);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("grid utilities ignore non-neighbor actions") {
    GridGame game(GridGameSpec{3, 9, {}});
    SeedStream rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        Node leaf;
        for (int n = 0; n < 9; ++n) leaf.hist.push_back(1 + int(rng.below(3)));
        UtilityVector before;
        game.utilities(leaf, before);
        for (int other = 1; other < 9; ++other) {
            const auto& neigh = game.neighbors(0);
            if (std::find(neigh.begin(), neigh.end(), other) != neigh.end()) continue;
            Node changed = leaf;
            changed.hist[other] = 1 + int(rng.below(3));
            UtilityVector after;
            game.utilities(changed, after);
            CHECK(after[0] == before[0]);
        }
    }
}

TEST_CASE("poker expected utility over all 336 deals is exact at C=8") {
    IndianPokerGame game(IndianPokerSpec{8});
    auto scenarios = exhaustive_scenarios(game, 1000);
    REQUIRE(scenarios.has_value());
    struct AlwaysBet {
        int action_at(const Game&, InfoSetId) const { return IndianPokerGame::kBet; }
    } bet;
    const UtilityVector u = expected_utility(game, bet, *scenarios);
    CHECK(u[0] + u[1] + u[2] == doctest::Approx(0.0).epsilon(1e-12));
    // Under all-bet each player wins the pot of 6 (net +4) with probability
    // 1/3 and otherwise loses 2.
    for (int n = 0; n < 3; ++n)
        CHECK(u[n] == doctest::Approx(4.0 / 3.0 - 2.0 * 2.0 / 3.0).epsilon(1e-12));
}
