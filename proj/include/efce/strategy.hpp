#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/game.hpp"
#include "efce/rng.hpp"

namespace efce {

namespace detail {

inline std::string describe_set(InfoSetId i) { return "info set " + std::to_string(i.v); }

}  // namespace detail

// Complete deterministic behavior of one player: an action per information
// set the player may be asked about. Missing entries are an error at play
// time.
struct PureStrategy {
    PlayerId owner;
    std::map<InfoSetId, int> actions;

    int action_at(const Game& game, InfoSetId i) const {
        (void)game;
        auto it = actions.find(i);
        if (it == actions.end())
            throw MissingAction("pure strategy lacks an entry for " + detail::describe_set(i));
        return it->second;
    }
};

// Pure strategy with unreachable entries dropped; absent means "don't care".
struct ReducedStrategy {
    PlayerId owner;
    std::map<InfoSetId, int> actions;

    friend bool operator==(const ReducedStrategy& a, const ReducedStrategy& b) {
        return a.owner == b.owner && a.actions == b.actions;
    }
    friend bool operator<(const ReducedStrategy& a, const ReducedStrategy& b) {
        if (a.owner != b.owner) return a.owner < b.owner;
        return a.actions < b.actions;
    }
};

// One pure strategy per regular player.
struct StrategyProfile {
    std::vector<PureStrategy> players;

    int action_at(const Game& game, InfoSetId i) const {
        PlayerId who = game.owner(i);
        if (!who.is_regular() || who.index >= static_cast<int32_t>(players.size()))
            throw MissingAction("profile has no strategy for the owner of " +
                                detail::describe_set(i));
        return players[who.index].action_at(game, i);
    }
};

// One reduced strategy per player; reading a "don't care" coordinate is an
// error, which the oracle uses to assert plays never consult them.
struct ReducedProfile {
    std::vector<ReducedStrategy> players;

    int action_at(const Game& game, InfoSetId i) const {
        PlayerId who = game.owner(i);
        if (!who.is_regular() || who.index >= static_cast<int32_t>(players.size()))
            throw MissingAction("reduced profile has no strategy for the owner of " +
                                detail::describe_set(i));
        auto& acts = players[who.index].actions;
        auto it = acts.find(i);
        if (it == acts.end())
            throw MissingAction("reduced profile consulted a don't-care entry at " +
                                detail::describe_set(i));
        return it->second;
    }
};

// Full strategy profile stored as a sparse overlay over a seeded uniform
// fill. Coordinates outside the explicit support are defined but never
// materialized; this is what makes profiles over superpolynomially many
// information sets workable. Value semantics, cheap to copy at the support
// sizes that occur in practice.
class LazyProfile {
   public:
    using Entries = std::vector<std::pair<InfoSetId, int>>;  // sorted by id

    LazyProfile() = default;
    explicit LazyProfile(uint64_t slice_seed) : slice_seed_(slice_seed) {}
    LazyProfile(Entries fixed, uint64_t slice_seed)
        : fixed_(std::move(fixed)), slice_seed_(slice_seed) {}

    int action_at(const Game& game, InfoSetId i) const {
        auto it = std::lower_bound(fixed_.begin(), fixed_.end(), i,
                                   [](const auto& e, InfoSetId key) { return e.first < key; });
        if (it != fixed_.end() && it->first == i) return it->second;
        const int count = game.num_actions(i);
        return 1 + static_cast<int>(hash_mix(slice_seed_, i.v) % static_cast<uint64_t>(count));
    }

    const Entries& fixed() const { return fixed_; }
    uint64_t slice_seed() const { return slice_seed_; }

    void set_slice_seed(uint64_t s) { slice_seed_ = s; }

    void set_fixed(InfoSetId i, int action) {
        auto it = std::lower_bound(fixed_.begin(), fixed_.end(), i,
                                   [](const auto& e, InfoSetId key) { return e.first < key; });
        if (it != fixed_.end() && it->first == i) {
            it->second = action;
        } else {
            fixed_.insert(it, {i, action});
        }
    }

    void erase_fixed(InfoSetId i) {
        auto it = std::lower_bound(fixed_.begin(), fixed_.end(), i,
                                   [](const auto& e, InfoSetId key) { return e.first < key; });
        if (it != fixed_.end() && it->first == i) fixed_.erase(it);
    }

   private:
    Entries fixed_;
    uint64_t slice_seed_ = 0;
};

// ---------------------------------------------------------------------------
// Reduction: entries for information sets the player cannot reach given his
// own earlier choices become don't-cares. Computed by walking the tree with
// the player's actions pinned and everyone else (including nature) ranging
// over all actions.

namespace detail {

template <typename OwnActions>
void reduce_dfs(const Game& game, PlayerId player, const OwnActions& own, Node& h,
                std::map<InfoSetId, int>& kept, std::size_t& nodes, std::size_t cap) {
    if (++nodes > cap) throw TooLarge("reduction walk exceeded node cap");
    std::optional<InfoSetId> i = game.info_set(h);
    if (!i.has_value()) return;
    if (game.owner(*i) == player) {
        const int a = own(*i);
        kept.emplace(*i, a);
        h.hist.push_back(a);
        reduce_dfs(game, player, own, h, kept, nodes, cap);
        h.hist.pop_back();
        return;
    }
    const int count = game.num_actions(*i);
    for (int a = 1; a <= count; ++a) {
        h.hist.push_back(a);
        reduce_dfs(game, player, own, h, kept, nodes, cap);
        h.hist.pop_back();
    }
}

}  // namespace detail

inline ReducedStrategy reduce(const Game& game, const PureStrategy& strategy,
                              std::size_t node_cap = (std::size_t{1} << 24)) {
    ReducedStrategy out;
    out.owner = strategy.owner;
    Node h;
    std::size_t nodes = 0;
    detail::reduce_dfs(
        game, strategy.owner,
        [&](InfoSetId i) { return strategy.action_at(game, i); }, h, out.actions, nodes,
        node_cap);
    return out;
}

// Reduction of one player's coordinates of a lazily stored profile.
inline ReducedStrategy reduce_player(const Game& game, const LazyProfile& profile,
                                     PlayerId player,
                                     std::size_t node_cap = (std::size_t{1} << 24)) {
    ReducedStrategy out;
    out.owner = player;
    Node h;
    std::size_t nodes = 0;
    detail::reduce_dfs(
        game, player, [&](InfoSetId i) { return profile.action_at(game, i); }, h, out.actions,
        nodes, node_cap);
    return out;
}

inline ReducedProfile reduce_profile(const Game& game, const LazyProfile& profile,
                                     std::size_t node_cap = (std::size_t{1} << 24)) {
    ReducedProfile out;
    out.players.reserve(game.num_players());
    for (int n = 0; n < game.num_players(); ++n) {
        out.players.push_back(reduce_player(game, profile, PlayerId::regular(n), node_cap));
    }
    return out;
}

}  // namespace efce
