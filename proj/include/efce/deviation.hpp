#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/game.hpp"
#include "efce/scenario.hpp"
#include "efce/strategy.hpp"

namespace efce {

// Trigger of a causal deviation: the player starts deviating upon receiving
// suggestion `action` in `info_set`.
struct Trigger {
    PlayerId player;
    InfoSetId info_set;
    int action = 0;

    friend bool operator==(const Trigger& a, const Trigger& b) {
        return a.player == b.player && a.info_set == b.info_set && a.action == b.action;
    }
};

// A causal deviation: identity, or a trigger plus a partial deviation
// strategy on information sets at or below the trigger. Entries the deviated
// play never consults may be omitted; they are filled from the original
// strategy when needed.
class CausalDeviation {
   public:
    using DevEntries = std::vector<std::pair<InfoSetId, int>>;  // sorted by id

    static CausalDeviation identity() { return CausalDeviation{}; }

    static CausalDeviation triggered(Trigger trig, DevEntries dev) {
        CausalDeviation out;
        out.trigger_ = trig;
        std::sort(dev.begin(), dev.end());
        out.dev_ = std::move(dev);
        return out;
    }

    bool is_identity() const { return !trigger_.has_value(); }
    const Trigger& trigger() const { return *trigger_; }
    const DevEntries& dev() const { return dev_; }

    std::optional<int> dev_action(InfoSetId i) const {
        auto it = std::lower_bound(dev_.begin(), dev_.end(), i,
                                   [](const auto& e, InfoSetId key) { return e.first < key; });
        if (it != dev_.end() && it->first == i) return it->second;
        return std::nullopt;
    }

    // Dedup / ordering key: (player, trigger set, trigger action, dev entries).
    using Key = std::tuple<int32_t, uint64_t, int, DevEntries>;
    Key key() const {
        if (is_identity()) return Key{-2, 0, 0, {}};
        return Key{trigger_->player.index, trigger_->info_set.v, trigger_->action, dev_};
    }

    friend bool operator==(const CausalDeviation& a, const CausalDeviation& b) {
        return a.key() == b.key();
    }

   private:
    std::optional<Trigger> trigger_;
    DevEntries dev_;
};

// Ordered collection of discovered deviations; index 0 is always identity and
// indices define the lambda coordinates.
class DeviationSet {
   public:
    DeviationSet() { devs_.push_back(CausalDeviation::identity()); }

    // Appends when new; returns the index either way.
    int add(const CausalDeviation& d) {
        auto key = d.key();
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        int idx = static_cast<int>(devs_.size());
        devs_.push_back(d);
        index_.emplace(std::move(key), idx);
        return idx;
    }

    std::optional<int> find(const CausalDeviation& d) const {
        auto it = index_.find(d.key());
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const CausalDeviation& operator[](std::size_t idx) const { return devs_[idx]; }
    std::size_t size() const { return devs_.size(); }

    auto begin() const { return devs_.begin(); }
    auto end() const { return devs_.end(); }

   private:
    std::vector<CausalDeviation> devs_;
    std::map<CausalDeviation::Key, int> index_;
};

// Per-deviation regret values for one fixed profile, aligned with a
// DeviationSet. Entry 0 (identity) is exactly zero.
using RegretVector = std::vector<double>;

// ---------------------------------------------------------------------------
// The deviation map phi: s_n -> s'_n of the equivalent EFCE definition:
// s'_i = dev_i when s at the trigger set equals the trigger action and i is
// the trigger set or reachable from it, s_i otherwise.

inline PureStrategy apply(const Game& game, const CausalDeviation& phi, const PureStrategy& s_n) {
    if (phi.is_identity()) return s_n;
    const Trigger& trig = phi.trigger();
    PureStrategy out = s_n;
    auto suggested = s_n.actions.find(trig.info_set);
    if (suggested == s_n.actions.end() || suggested->second != trig.action) return out;
    for (auto& [i, a] : out.actions) {
        if (i == trig.info_set || game.reachable(trig.info_set, i)) {
            if (auto dev = phi.dev_action(i)) a = *dev;
        }
    }
    return out;
}

// Optional per-step observer for deviated walks.
struct DeviatedVisit {
    InfoSetId info_set;
    int profile_action;  // the profile's value at the set, even when overridden
    int played_action;
    bool deviating;
};

struct NullDeviatedVisitor {
    void operator()(const DeviatedVisit&) const {}
};

// Plays (s_{-n}, phi(s_n)) against one scenario without materializing the
// mapped strategy: once the walk passes the trigger set while the profile
// suggests the trigger action, the deviator's later sets (all reachable from
// the trigger by perfect recall) read the deviation entries. Without an
// observer the profile is never consulted at overridden sets, so reduced
// profiles play without touching their don't-care entries.
template <typename ProfileLike, typename VisitFn>
Node play_deviated_into(const Game& game, const ProfileLike& profile, const CausalDeviation& phi,
                        const Scenario& scenario, UtilityVector& out, VisitFn&& visit,
                        std::size_t depth_cap = kDefaultDepthCap) {
    constexpr bool kObserve = !std::is_same_v<std::decay_t<VisitFn>, NullDeviatedVisitor>;
    bool deviating = false;
    Node leaf = walk_game(
        game,
        [&](InfoSetId i) {
            if (game.owner(i).is_nature()) return scenario.action_at(game, i);
            int suggested = 0;
            int played = 0;
            const bool deviator_owned =
                !phi.is_identity() && game.owner(i) == phi.trigger().player;
            if (deviator_owned && deviating) {
                if (auto dev = phi.dev_action(i)) {
                    played = *dev;
                    if constexpr (kObserve) suggested = profile.action_at(game, i);
                } else {
                    suggested = profile.action_at(game, i);
                    played = suggested;
                }
            } else {
                suggested = profile.action_at(game, i);
                played = suggested;
                if (deviator_owned && i == phi.trigger().info_set &&
                    suggested == phi.trigger().action) {
                    deviating = true;
                    if (auto dev = phi.dev_action(i)) played = *dev;
                }
            }
            if constexpr (kObserve) visit(DeviatedVisit{i, suggested, played, deviating});
            return played;
        },
        depth_cap);
    game.utilities(leaf, out);
    return leaf;
}

template <typename ProfileLike>
Node play_deviated_into(const Game& game, const ProfileLike& profile, const CausalDeviation& phi,
                        const Scenario& scenario, UtilityVector& out,
                        std::size_t depth_cap = kDefaultDepthCap) {
    return play_deviated_into(game, profile, phi, scenario, out, NullDeviatedVisitor{},
                              depth_cap);
}

// Empirical regret r̃_phi(s): the deviating player's utility gain from
// applying phi, averaged over the scenario sample.
template <typename ProfileLike>
double regret(const Game& game, const CausalDeviation& phi, const ProfileLike& profile,
              const ScenarioSample& sample, std::size_t depth_cap = kDefaultDepthCap) {
    if (sample.size() == 0) throw DomainError("regret over an empty scenario sample");
    if (phi.is_identity()) return 0.0;
    const int n = phi.trigger().player.index;
    double total = 0.0;
    UtilityVector base, dev;
    for (std::size_t m = 0; m < sample.size(); ++m) {
        play_into(game, profile, sample.scenarios[m], base, depth_cap);
        play_deviated_into(game, profile, phi, sample.scenarios[m], dev, depth_cap);
        total += sample.weights[m] * (dev[n] - base[n]);
    }
    return total;
}

// Structural reachability between two information sets of one player.
inline bool reachable(const Game& game, InfoSetId i_from, InfoSetId i_to) {
    if (game.owner(i_from) != game.owner(i_to))
        throw DomainError("reachable() expects info sets of the same player");
    if (i_from == i_to) return false;  // info sets never repeat on a path
    return game.reachable(i_from, i_to);
}

}  // namespace efce
