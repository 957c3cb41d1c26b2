#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/deviation.hpp"
#include "efce/game.hpp"
#include "efce/scenario.hpp"
#include "efce/strategy.hpp"

namespace efce::oracle {

// Brute-force ground truth for small games. Everything here enumerates the
// full tree and the full strategy and deviation spaces directly; it shares no
// code with the sampled solver path it cross-checks.

inline constexpr uint64_t kCountSaturated = uint64_t(1) << 62;

// ---------------------------------------------------------------------------
// Census: one exhaustive walk collecting every information set, the
// own-history structure needed for strategy enumeration, and the perfect
// recall checks.
// ---------------------------------------------------------------------------

struct CensusSet {
    InfoSetId id;
    PlayerId owner;
    int actions = 0;
    // The owner's previous (set, action) on every path reaching this set;
    // empty when the set is an entry point. Unique by perfect recall.
    std::optional<std::pair<InfoSetId, int>> parent_edge;
    std::vector<std::pair<InfoSetId, int>> own_history;
};

struct GameCensus {
    std::map<InfoSetId, CensusSet> sets;
    std::vector<std::vector<InfoSetId>> entry_sets;  // per player, sorted
    // (set, action) -> owner's next sets, sorted.
    std::map<std::pair<uint64_t, int>, std::vector<InfoSetId>> successors;
    std::vector<InfoSetId> nature_sets;
    double sum_action_counts = 0.0;  // over regular players: the exact Gamma
    std::size_t leaf_count = 0;
    std::size_t node_count = 0;

    const CensusSet& at(InfoSetId i) const { return sets.at(i); }

    std::vector<InfoSetId> player_sets(int player) const {
        std::vector<InfoSetId> out;
        for (auto& [id, cs] : sets) {
            if (cs.owner == PlayerId::regular(player)) out.push_back(id);
        }
        return out;
    }
};

namespace detail {

struct CensusWalker {
    const Game& game;
    GameCensus& census;
    std::size_t cap;
    std::vector<std::vector<std::pair<InfoSetId, int>>> own_hist;  // per player
    std::set<uint64_t> nature_on_path;

    void dfs(Node& pos) {
        if (++census.node_count > cap) throw TooLarge("census walk exceeded its node cap");
        std::optional<InfoSetId> set = game.info_set(pos);
        if (!set.has_value()) {
            ++census.leaf_count;
            return;
        }
        const PlayerId who = game.owner(*set);
        const int actions = game.num_actions(*set);
        if (who.is_regular() && actions < 2)
            throw MalformedGame("player information sets need at least two actions");
        if (actions < 1) throw MalformedGame("information sets need at least one action");

        auto it = census.sets.find(*set);
        if (it == census.sets.end()) {
            CensusSet cs;
            cs.id = *set;
            cs.owner = who;
            cs.actions = actions;
            if (who.is_regular()) {
                cs.own_history = own_hist[who.index];
                if (!cs.own_history.empty()) {
                    cs.parent_edge = cs.own_history.back();
                    census.successors[{cs.parent_edge->first.v, cs.parent_edge->second}]
                        .push_back(*set);
                }
                census.sum_action_counts += actions;
            } else {
                census.nature_sets.push_back(*set);
                double total = 0.0;
                for (int a = 1; a <= actions; ++a) {
                    const double p = game.nature_prob(*set, a);
                    if (p < 0.0) throw MalformedGame("negative nature probability");
                    total += p;
                }
                if (std::abs(total - 1.0) > 1e-9)
                    throw MalformedGame("nature probabilities do not sum to one");
            }
            census.sets.emplace(*set, std::move(cs));
        } else {
            const CensusSet& cs = it->second;
            if (cs.owner != who || cs.actions != actions)
                throw MalformedGame("inconsistent information set metadata");
            if (who.is_regular() && cs.own_history != own_hist[who.index])
                throw MalformedGame("perfect recall violated: divergent own histories");
        }
        if (who.is_nature()) {
            if (!nature_on_path.insert(set->v).second)
                throw MalformedGame("nature information set repeated on a path");
        }
        for (int a = 1; a <= actions; ++a) {
            if (who.is_regular()) own_hist[who.index].push_back({*set, a});
            pos.hist.push_back(a);
            dfs(pos);
            pos.hist.pop_back();
            if (who.is_regular()) own_hist[who.index].pop_back();
        }
        if (who.is_nature()) nature_on_path.erase(set->v);
    }
};

}  // namespace detail

inline GameCensus build_census(const Game& game, std::size_t node_cap = (std::size_t{1} << 24)) {
    GameCensus census;
    census.entry_sets.resize(game.num_players());
    detail::CensusWalker walker{game, census, node_cap, {}, {}};
    walker.own_hist.resize(game.num_players());
    Node pos;
    walker.dfs(pos);
    for (auto& [id, cs] : census.sets) {
        if (cs.owner.is_regular() && !cs.parent_edge.has_value())
            census.entry_sets[cs.owner.index].push_back(id);
    }
    for (auto& [edge, next] : census.successors) {
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
    }
    return census;
}

// ---------------------------------------------------------------------------
// Reduced strategy enumeration: assignments over the sets reachable given the
// player's own earlier choices, walked frontier by frontier.
// ---------------------------------------------------------------------------

namespace detail {

inline uint64_t saturating_mul(uint64_t a, uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > kCountSaturated / b) return kCountSaturated;
    return a * b;
}

inline uint64_t saturating_add(uint64_t a, uint64_t b) {
    return a > kCountSaturated - b ? kCountSaturated : a + b;
}

inline uint64_t count_from(const GameCensus& census, InfoSetId set,
                           std::map<uint64_t, uint64_t>& memo) {
    auto it = memo.find(set.v);
    if (it != memo.end()) return it->second;
    const CensusSet& cs = census.at(set);
    uint64_t total = 0;
    for (int a = 1; a <= cs.actions; ++a) {
        uint64_t branch = 1;
        auto next = census.successors.find({set.v, a});
        if (next != census.successors.end()) {
            for (InfoSetId child : next->second)
                branch = saturating_mul(branch, count_from(census, child, memo));
        }
        total = saturating_add(total, branch);
    }
    memo[set.v] = total;
    return total;
}

template <typename EmitFn>
void enumerate_from(const GameCensus& census, std::vector<InfoSetId>& frontier,
                    std::map<InfoSetId, int>& assignment, const EmitFn& emit) {
    if (frontier.empty()) {
        emit(assignment);
        return;
    }
    const InfoSetId set = frontier.back();
    frontier.pop_back();
    const CensusSet& cs = census.at(set);
    for (int a = 1; a <= cs.actions; ++a) {
        assignment[set] = a;
        std::size_t pushed = 0;
        auto next = census.successors.find({set.v, a});
        if (next != census.successors.end()) {
            for (InfoSetId child : next->second) {
                frontier.push_back(child);
                ++pushed;
            }
        }
        enumerate_from(census, frontier, assignment, emit);
        frontier.resize(frontier.size() - pushed);
    }
    assignment.erase(set);
    frontier.push_back(set);
}

}  // namespace detail

// |S*_n| with saturation.
inline uint64_t count_reduced_strategies(const GameCensus& census, int player) {
    std::map<uint64_t, uint64_t> memo;
    uint64_t total = 1;
    for (InfoSetId root : census.entry_sets[player])
        total = detail::saturating_mul(total, detail::count_from(census, root, memo));
    return total;
}

inline std::vector<ReducedStrategy> enumerate_reduced_strategies(const GameCensus& census,
                                                                 int player, std::size_t cap) {
    if (count_reduced_strategies(census, player) > cap)
        throw TooLarge("player has more reduced strategies than the cap");
    std::vector<ReducedStrategy> out;
    std::vector<InfoSetId> frontier = census.entry_sets[player];
    std::map<InfoSetId, int> assignment;
    detail::enumerate_from(census, frontier, assignment, [&](const std::map<InfoSetId, int>& a) {
        ReducedStrategy rs;
        rs.owner = PlayerId::regular(player);
        rs.actions = a;
        out.push_back(std::move(rs));
    });
    return out;
}

// All reduced profiles, each a distinct equivalence class of pure profiles.
inline std::vector<ReducedProfile> enumerate_reduced_profiles(const Game& game,
                                                              const GameCensus& census,
                                                              std::size_t cap) {
    uint64_t total = 1;
    for (int n = 0; n < game.num_players(); ++n)
        total = detail::saturating_mul(total, count_reduced_strategies(census, n));
    if (total > cap) throw TooLarge("more reduced profiles than the cap");

    std::vector<std::vector<ReducedStrategy>> per_player;
    per_player.reserve(game.num_players());
    for (int n = 0; n < game.num_players(); ++n)
        per_player.push_back(enumerate_reduced_strategies(census, n, cap));

    std::vector<ReducedProfile> out;
    out.reserve(total);
    ReducedProfile current;
    current.players.resize(game.num_players());
    const auto rec = [&](auto&& self, int player) -> void {
        if (player == game.num_players()) {
            out.push_back(current);
            return;
        }
        for (const ReducedStrategy& rs : per_player[player]) {
            current.players[player] = rs;
            self(self, player + 1);
        }
    };
    rec(rec, 0);
    return out;
}

inline std::vector<ReducedProfile> enumerate_reduced_profiles(const Game& game,
                                                              std::size_t cap = 1000000) {
    const GameCensus census = build_census(game);
    return enumerate_reduced_profiles(game, census, cap);
}

// Full pure profiles represented by one reduced class: the product of action
// counts over its don't-care sets.
inline double class_multiplicity(const GameCensus& census, const ReducedProfile& profile) {
    double mult = 1.0;
    for (auto& [id, cs] : census.sets) {
        if (!cs.owner.is_regular()) continue;
        const auto& actions = profile.players[cs.owner.index].actions;
        if (actions.find(id) == actions.end()) mult *= cs.actions;
    }
    return mult;
}

// ---------------------------------------------------------------------------
// Exact distributions and verification.
// ---------------------------------------------------------------------------

struct ExplicitDistribution {
    std::vector<ReducedProfile> support;
    std::vector<double> probability;    // sums to one
    std::vector<double> multiplicity;   // pure profiles per class
    UtilityVector expected_utilities;
    double z = 0.0;  // partition function over pure profiles
};

// q_lambda(s) ∝ e^{w·u(s) − λ·r(s)} over pure profiles, folded onto reduced
// classes via their multiplicities; exact utilities and regrets.
inline ExplicitDistribution exact_distribution(const Game& game, const GameCensus& census,
                                               const std::vector<double>& lambda,
                                               const DeviationSet& psi,
                                               const std::vector<double>& w,
                                               std::size_t profile_cap = 1000000,
                                               std::size_t scenario_cap = 100000) {
    auto scenarios = exhaustive_scenarios(game, scenario_cap);
    if (!scenarios) throw TooLarge("exact distribution needs exhaustive scenarios");
    ExplicitDistribution out;
    out.support = enumerate_reduced_profiles(game, census, profile_cap);
    out.probability.resize(out.support.size());
    out.multiplicity.resize(out.support.size());
    out.expected_utilities.assign(game.num_players(), 0.0);

    std::vector<UtilityVector> utils(out.support.size());
    double top = -1e300;
    std::vector<double> exponent(out.support.size());
    for (std::size_t s = 0; s < out.support.size(); ++s) {
        utils[s] = expected_utility(game, out.support[s], *scenarios);
        double e = 0.0;
        for (std::size_t n = 0; n < w.size() && n < utils[s].size(); ++n)
            e += w[n] * utils[s][n];
        for (std::size_t phi = 1; phi < psi.size() && phi < lambda.size(); ++phi) {
            if (lambda[phi] != 0.0)
                e -= lambda[phi] * regret(game, psi[phi], out.support[s], *scenarios);
        }
        exponent[s] = e;
        out.multiplicity[s] = class_multiplicity(census, out.support[s]);
        top = std::max(top, e);
    }
    double total = 0.0;
    for (std::size_t s = 0; s < out.support.size(); ++s) {
        const double mass = out.multiplicity[s] * std::exp(exponent[s] - top);
        out.probability[s] = mass;
        total += mass;
        out.z += out.multiplicity[s] * std::exp(exponent[s]);
    }
    for (std::size_t s = 0; s < out.support.size(); ++s) {
        out.probability[s] /= total;
        for (std::size_t n = 0; n < out.expected_utilities.size(); ++n)
            out.expected_utilities[n] += out.probability[s] * utils[s][n];
    }
    return out;
}

struct VerificationReport {
    double max_regret = 0.0;
    CausalDeviation worst_deviation;  // identity when max_regret <= 0
    std::size_t deviations_checked = 0;
    bool is_epsilon_efce = false;
    double epsilon = 0.0;
};

// All causal deviations of one player: triggers × reduced deviation
// strategies over the sets reachable from the trigger through the deviation's
// own choices.
inline std::vector<CausalDeviation> enumerate_deviations(const GameCensus& census, int player,
                                                         std::size_t cap) {
    std::vector<CausalDeviation> out;
    for (auto& [id, cs] : census.sets) {
        if (cs.owner != PlayerId::regular(player)) continue;
        for (int trig_action = 1; trig_action <= cs.actions; ++trig_action) {
            std::vector<InfoSetId> frontier{id};
            std::map<InfoSetId, int> assignment;
            detail::enumerate_from(census, frontier, assignment,
                                   [&](const std::map<InfoSetId, int>& a) {
                                       CausalDeviation::DevEntries dev(a.begin(), a.end());
                                       out.push_back(CausalDeviation::triggered(
                                           Trigger{cs.owner, id, trig_action}, std::move(dev)));
                                       if (out.size() > cap)
                                           throw TooLarge("deviation enumeration exceeded cap");
                                   });
        }
    }
    return out;
}

// Exact max over all causal deviations of the expected regret under an
// explicit distribution.
inline VerificationReport exact_best_deviation(const Game& game, const GameCensus& census,
                                               const ExplicitDistribution& dist,
                                               std::size_t deviation_cap = 10000000,
                                               std::size_t scenario_cap = 100000) {
    auto scenarios = exhaustive_scenarios(game, scenario_cap);
    if (!scenarios) throw TooLarge("exact verification needs exhaustive scenarios");
    VerificationReport report;
    report.worst_deviation = CausalDeviation::identity();
    report.max_regret = 0.0;  // identity is always a candidate
    report.deviations_checked = 1;
    for (int n = 0; n < game.num_players(); ++n) {
        const std::vector<CausalDeviation> devs = enumerate_deviations(census, n, deviation_cap);
        for (const CausalDeviation& phi : devs) {
            double expected = 0.0;
            for (std::size_t s = 0; s < dist.support.size(); ++s) {
                if (dist.probability[s] == 0.0) continue;
                expected +=
                    dist.probability[s] * regret(game, phi, dist.support[s], *scenarios);
            }
            ++report.deviations_checked;
            if (expected > report.max_regret) {
                report.max_regret = expected;
                report.worst_deviation = phi;
            }
        }
    }
    return report;
}

inline VerificationReport verify_efce(const Game& game, const GameCensus& census,
                                      const ExplicitDistribution& dist, double epsilon,
                                      std::size_t deviation_cap = 10000000,
                                      std::size_t scenario_cap = 100000) {
    VerificationReport report = exact_best_deviation(game, census, dist, deviation_cap,
                                                     scenario_cap);
    report.epsilon = epsilon;
    report.is_epsilon_efce = report.max_regret <= epsilon;
    return report;
}

// Builds the explicit empirical distribution of a weighted set of profiles,
// folding draws onto their reduced classes.
template <typename ProfileLike>
ExplicitDistribution empirical_distribution(const Game& game, const GameCensus& census,
                                            const std::vector<ProfileLike>& profiles,
                                            const std::vector<double>& weights,
                                            std::size_t scenario_cap = 100000) {
    auto scenarios = exhaustive_scenarios(game, scenario_cap);
    if (!scenarios) throw TooLarge("empirical distribution needs exhaustive scenarios");
    std::map<std::vector<std::pair<uint64_t, int>>, std::pair<ReducedProfile, double>> classes;
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        ReducedProfile reduced = reduce_profile(game, profiles[k]);
        std::vector<std::pair<uint64_t, int>> key;
        for (const ReducedStrategy& rs : reduced.players)
            for (auto& [id, a] : rs.actions) key.push_back({id.v, a});
        auto [it, inserted] = classes.try_emplace(std::move(key), reduced, 0.0);
        it->second.second += weights[k];
    }
    ExplicitDistribution out;
    out.expected_utilities.assign(game.num_players(), 0.0);
    for (auto& [key, entry] : classes) {
        out.support.push_back(entry.first);
        out.probability.push_back(entry.second);
        out.multiplicity.push_back(class_multiplicity(census, entry.first));
        const UtilityVector u = expected_utility(game, entry.first, *scenarios);
        for (std::size_t n = 0; n < u.size(); ++n)
            out.expected_utilities[n] += entry.second * u[n];
    }
    return out;
}

// ---------------------------------------------------------------------------
// The idealized algorithm: exact expectations, exact best deviation, and the
// multiplicative update on the true regret. Reference for the sampled solver
// and for the iteration bound.
// ---------------------------------------------------------------------------

struct ExactBoostRound {
    long long round = 0;
    double max_regret = 0.0;
    double z = 0.0;
};

struct ExactBoostResult {
    ExplicitDistribution distribution;
    std::vector<ExactBoostRound> trajectory;
    long long update_rounds = 0;  // rounds that performed an update
};

inline ExactBoostResult exact_boost(const Game& game, const std::vector<double>& w,
                                    double epsilon, long long max_rounds,
                                    std::size_t profile_cap = 1000000,
                                    std::size_t deviation_cap = 10000000,
                                    std::size_t scenario_cap = 100000) {
    const GameCensus census = build_census(game);
    auto scenarios = exhaustive_scenarios(game, scenario_cap);
    if (!scenarios) throw TooLarge("exact boost needs exhaustive scenarios");
    const double r_max = game.type().r_max;

    const std::vector<ReducedProfile> support =
        enumerate_reduced_profiles(game, census, profile_cap);
    std::vector<CausalDeviation> deviations;
    for (int n = 0; n < game.num_players(); ++n) {
        auto per_player = enumerate_deviations(census, n, deviation_cap);
        deviations.insert(deviations.end(), per_player.begin(), per_player.end());
    }

    // Precompute utilities, multiplicities, and the full regret matrix.
    const std::size_t s_count = support.size();
    const std::size_t d_count = deviations.size();
    std::vector<double> mult(s_count), tilt(s_count);
    std::vector<UtilityVector> utils(s_count);
    for (std::size_t s = 0; s < s_count; ++s) {
        mult[s] = class_multiplicity(census, support[s]);
        utils[s] = expected_utility(game, support[s], *scenarios);
        tilt[s] = 0.0;
        for (std::size_t n = 0; n < w.size() && n < utils[s].size(); ++n)
            tilt[s] += w[n] * utils[s][n];
    }
    std::vector<std::vector<double>> regrets(d_count, std::vector<double>(s_count));
    for (std::size_t d = 0; d < d_count; ++d) {
        for (std::size_t s = 0; s < s_count; ++s)
            regrets[d][s] = regret(game, deviations[d], support[s], *scenarios);
    }

    std::vector<double> lambda(d_count, 0.0);
    ExactBoostResult result;
    std::vector<double> weight(s_count);
    for (long long t = 1; t <= max_rounds; ++t) {
        double top = -1e300;
        for (std::size_t s = 0; s < s_count; ++s) {
            double e = tilt[s];
            for (std::size_t d = 0; d < d_count; ++d) {
                if (lambda[d] != 0.0) e -= lambda[d] * regrets[d][s];
            }
            weight[s] = e;
            top = std::max(top, e);
        }
        double z = 0.0, z_scaled = 0.0;
        for (std::size_t s = 0; s < s_count; ++s) {
            z += mult[s] * std::exp(weight[s]);
            weight[s] = mult[s] * std::exp(weight[s] - top);
            z_scaled += weight[s];
        }
        for (std::size_t s = 0; s < s_count; ++s) weight[s] /= z_scaled;

        std::size_t best = 0;
        double best_regret = -1e300;
        for (std::size_t d = 0; d < d_count; ++d) {
            double expected = 0.0;
            for (std::size_t s = 0; s < s_count; ++s) expected += weight[s] * regrets[d][s];
            if (expected > best_regret) {
                best_regret = expected;
                best = d;
            }
        }
        const double max_regret = std::max(0.0, best_regret);
        result.trajectory.push_back({t, max_regret, z});
        if (max_regret <= epsilon) break;
        lambda[best] +=
            -0.5 / r_max * std::log((r_max - best_regret) / (r_max + best_regret));
        ++result.update_rounds;
    }

    ExplicitDistribution dist;
    dist.support = support;
    dist.probability = weight;
    dist.multiplicity = mult;
    dist.expected_utilities.assign(game.num_players(), 0.0);
    for (std::size_t s = 0; s < s_count; ++s) {
        for (std::size_t n = 0; n < dist.expected_utilities.size(); ++n)
            dist.expected_utilities[n] += weight[s] * utils[s][n];
    }
    dist.z = result.trajectory.empty() ? 0.0 : result.trajectory.back().z;
    result.distribution = std::move(dist);
    return result;
}

}  // namespace efce::oracle
