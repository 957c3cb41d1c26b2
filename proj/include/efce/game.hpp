#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/rng.hpp"

namespace efce {

class Game;

// A tree position is its action history from the root. Games decode whatever
// they need (whose turn, information set, leaf payoffs) from the history, so
// the tree is never materialized.
struct Node {
    std::vector<int32_t> hist;

    std::size_t depth() const { return hist.size(); }
};

// Nature's pure strategy. An entry per nature information set, realized
// lazily: explicit entries (used by exhaustive enumeration) take precedence,
// anything else is drawn by seeded hash with the marginal law p_i. Repeated
// queries of one set inside one scenario agree by construction, and the
// number of nature sets never matters for storage.
class Scenario {
   public:
    using FixedEntries = std::vector<std::pair<InfoSetId, int>>;  // sorted by id

    Scenario() = default;
    explicit Scenario(uint64_t seed) : seed_(seed) {}
    Scenario(std::shared_ptr<const FixedEntries> fixed, uint64_t seed)
        : fixed_(std::move(fixed)), seed_(seed) {}

    int action_at(const Game& game, InfoSetId i) const;

    uint64_t seed() const { return seed_; }
    const FixedEntries* fixed() const { return fixed_.get(); }

   private:
    std::shared_ptr<const FixedEntries> fixed_;
    uint64_t seed_ = 0;
};

struct WeightedScenario {
    Scenario scenario;
    double weight = 1.0;
};

// The succinct extensive-form game interface. Implementations answer local
// queries about a position; all algorithms in this library touch games only
// through these calls plus Node histories.
class Game {
   public:
    virtual ~Game() = default;

    virtual std::string name() const = 0;
    virtual int num_players() const = 0;
    virtual GameType type() const = 0;

    Node root() const { return Node{}; }

    // Information set acting at h, or nullopt when h is a leaf.
    virtual std::optional<InfoSetId> info_set(const Node& h) const = 0;
    virtual PlayerId owner(InfoSetId i) const = 0;
    virtual int num_actions(InfoSetId i) const = 0;

    // Only defined when owner(i) is nature.
    virtual double nature_prob(InfoSetId i, int action) const = 0;

    // Utility vector of a leaf, resized to num_players().
    virtual void utilities(const Node& leaf, UtilityVector& out) const = 0;

    virtual bool has_chance() const { return false; }

    // True iff some play visits a node of i_from strictly before a node of
    // i_to. Callers only ask about sets of one regular player; benchmark
    // games override with closed forms, the default walks the full tree.
    virtual bool reachable(InfoSetId i_from, InfoSetId i_to) const;

    // Exact scenario enumeration with p_nat weights, when the game supports
    // it at the given cap. Chance-free games enumerate the single empty
    // scenario; games with chance opt in by overriding.
    virtual std::optional<std::vector<WeightedScenario>> enumerate_scenarios(
        std::size_t cap) const {
        (void)cap;
        if (has_chance()) return std::nullopt;
        return std::vector<WeightedScenario>{WeightedScenario{Scenario{}, 1.0}};
    }

    Node next(const Node& h, int action) const {
        Node out = h;
        out.hist.push_back(static_cast<int32_t>(action));
        return out;
    }
};

inline int Scenario::action_at(const Game& game, InfoSetId i) const {
    if (fixed_) {
        auto it = std::lower_bound(fixed_->begin(), fixed_->end(), i,
                                   [](const auto& e, InfoSetId key) { return e.first < key; });
        if (it != fixed_->end() && it->first == i) return it->second;
    }
    const int count = game.num_actions(i);
    const double u = u01(hash_mix(seed_, i.v));
    double acc = 0.0;
    for (int a = 1; a <= count; ++a) {
        acc += game.nature_prob(i, a);
        if (u < acc) return a;
    }
    return count;
}

// ---------------------------------------------------------------------------
// Tree walks.

// Walks from the root, asking pick(i) for an action at every decision node.
// pick sees nature sets too. Returns the leaf. Trips MalformedGame when the
// walk exceeds depth_cap, which signals a broken game implementation.
template <typename PickFn>
Node walk_game(const Game& game, PickFn&& pick, std::size_t depth_cap = kDefaultDepthCap) {
    Node h;
    for (std::size_t steps = 0;; ++steps) {
        if (steps > depth_cap)
            throw MalformedGame("walk exceeded depth cap in game " + game.name());
        std::optional<InfoSetId> i = game.info_set(h);
        if (!i.has_value()) return h;
        const int a = pick(*i);
        h.hist.push_back(static_cast<int32_t>(a));
    }
}

// Plays profile actions at player nodes and scenario actions at nature nodes;
// writes the leaf utility vector. Deterministic in its inputs.
template <typename ProfileLike>
Node play_into(const Game& game, const ProfileLike& profile, const Scenario& scenario,
               UtilityVector& out, std::size_t depth_cap = kDefaultDepthCap) {
    Node leaf = walk_game(
        game,
        [&](InfoSetId i) {
            if (game.owner(i).is_nature()) return scenario.action_at(game, i);
            return profile.action_at(game, i);
        },
        depth_cap);
    game.utilities(leaf, out);
    return leaf;
}

template <typename ProfileLike>
UtilityVector play(const Game& game, const ProfileLike& profile, const Scenario& scenario,
                   std::size_t depth_cap = kDefaultDepthCap) {
    UtilityVector out;
    play_into(game, profile, scenario, out, depth_cap);
    return out;
}

// ---------------------------------------------------------------------------
// Default structural reachability: exhaustive depth-first enumeration with
// memoized "visited before" pairs. Only suitable for enumerable games; the
// benchmark games all override.

namespace detail {

struct ReachWalker {
    const Game& game;
    std::set<std::pair<uint64_t, uint64_t>> before;  // (i_from, i_to) pairs seen
    std::vector<InfoSetId> stack;
    std::size_t nodes = 0;
    std::size_t cap;

    explicit ReachWalker(const Game& g, std::size_t node_cap) : game(g), cap(node_cap) {}

    void dfs(Node& h) {
        if (++nodes > cap) throw TooLarge("reachability walk exceeded node cap");
        std::optional<InfoSetId> i = game.info_set(h);
        if (!i.has_value()) return;
        for (const InfoSetId& prev : stack) {
            if (prev != *i) before.insert({prev.v, i->v});
        }
        stack.push_back(*i);
        const int count = game.num_actions(*i);
        for (int a = 1; a <= count; ++a) {
            h.hist.push_back(a);
            dfs(h);
            h.hist.pop_back();
        }
        stack.pop_back();
    }
};

}  // namespace detail

inline bool Game::reachable(InfoSetId i_from, InfoSetId i_to) const {
    // Memoized per game instance would need mutable state; the default is for
    // small test games where a fresh walk is cheap enough.
    detail::ReachWalker walker(*this, 1u << 22);
    Node h;
    walker.dfs(h);
    return walker.before.count({i_from.v, i_to.v}) > 0;
}

}  // namespace efce
