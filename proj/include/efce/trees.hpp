#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/deviation.hpp"
#include "efce/game.hpp"
#include "efce/scenario.hpp"
#include "efce/strategy.hpp"

namespace efce {

inline constexpr std::size_t kDefaultNodeBudget = 50000000;

// ===========================================================================
// ProfileEvaluator: the simulation tree of one strategy profile against the
// scenario sample, augmented with the deviated plays of every deviation in
// Psi. Stored as one play path per (deviation, scenario) pair. A Markov-chain
// step flips a single profile coordinate, which touches only the paths
// passing through that information set (plus deviations triggered there), so
// those paths are recomputed locally and everything else is reused.
// ===========================================================================

class ProfileEvaluator {
   public:
    struct Tilt {
        double w_dot_u = 0.0;
        double lambda_dot_r = 0.0;

        double exponent() const { return w_dot_u - lambda_dot_r; }
    };

    ProfileEvaluator(const Game& game, ScenarioSample scenarios,
                     std::size_t depth_cap = kDefaultDepthCap)
        : game_(game), scenarios_(std::move(scenarios)), depth_cap_(depth_cap) {
        if (scenarios_.size() == 0)
            throw DomainError("ProfileEvaluator needs a nonempty scenario sample");
        util_.assign(game_.num_players(), 0.0);
    }

    const Game& game() const { return game_; }
    const ScenarioSample& scenarios() const { return scenarios_; }
    const DeviationSet& deviations() const { return psi_; }

    // Fixes the tilt objective w·ũ − λ·r̃ the chain samples against.
    void set_objective(std::vector<double> w, std::vector<double> lambda) {
        w_ = std::move(w);
        lambda_ = std::move(lambda);
        refresh_tilt();
    }

    // -- deviation management ------------------------------------------------

    int add_deviation(const CausalDeviation& d) {
        if (auto existing = psi_.find(d)) return *existing;
        const int idx = psi_.add(d);
        if (idx >= 1) {
            trigger_phis_[d.trigger().info_set.v].push_back(idx);
            dev_paths_.resize(std::size_t(idx) * scenarios_.size());
            if (has_profile_) {
                for (std::size_t m = 0; m < scenarios_.size(); ++m) {
                    rebuild_dev_path(idx, m);
                    index_insert(dev_path_index(idx, m));
                    if (dev_paths_[std::size_t(idx - 1) * scenarios_.size() + m].active)
                        active_by_scenario_[m].insert(idx);
                }
                refresh_aggregates();
            }
        }
        return idx;
    }

    // -- profile management --------------------------------------------------

    void reset_profile(const LazyProfile& p) {
        profile_ = p;
        support_.clear();
        paths_at_.clear();
        id_paths_.assign(scenarios_.size(), PathData{});
        dev_paths_.assign((psi_.size() - 1) * scenarios_.size(), PathData{});
        active_by_scenario_.assign(scenarios_.size(), {});
        has_profile_ = true;
        for (std::size_t m = 0; m < scenarios_.size(); ++m) {
            rebuild_identity_path(m);
            index_insert(static_cast<int64_t>(m));
        }
        for (std::size_t phi = 1; phi < psi_.size(); ++phi) {
            for (std::size_t m = 0; m < scenarios_.size(); ++m) {
                rebuild_dev_path(static_cast<int>(phi), m);
                index_insert(dev_path_index(static_cast<int>(phi), m));
                if (dev_paths_[(phi - 1) * scenarios_.size() + m].active)
                    active_by_scenario_[m].insert(static_cast<int>(phi));
            }
        }
        // The stored profile keeps exactly the skeleton coordinates explicit.
        LazyProfile::Entries fixed;
        fixed.reserve(support_.size());
        for (auto& [set, entry] : support_) fixed.push_back({set, entry.action});
        profile_ = LazyProfile(std::move(fixed), p.slice_seed());
        refresh_aggregates();
    }

    bool has_profile() const { return has_profile_; }
    const LazyProfile& profile() const { return profile_; }

    // Slice move: re-seeds the uniform fill of every non-skeleton coordinate.
    // No path reads those coordinates, so cached plays stay valid.
    void set_slice_seed(uint64_t seed) { profile_.set_slice_seed(seed); }

    // -- aggregates ------------------------------------------------------------

    const UtilityVector& expected_utilities() const { return util_; }
    const std::vector<double>& regrets() const { return regrets_; }

    RegretVector regret_vector() const { return regrets_; }

    std::size_t skeleton_size() const { return support_.size(); }

    std::vector<std::pair<InfoSetId, int>> skeleton() const {
        std::vector<std::pair<InfoSetId, int>> out;
        out.reserve(support_.size());
        for (auto& [set, entry] : support_) out.push_back({set, entry.action});
        return out;
    }

    std::pair<InfoSetId, int> skeleton_entry(std::size_t idx) const {
        auto it = support_.begin();
        std::advance(it, idx);
        return {it->first, it->second.action};
    }

    Tilt current_tilt() const { return tilt_; }

    // -- candidate flips -------------------------------------------------------

    // Tilt of (s_{-i}, a). Walks only the paths the flip can touch; the
    // scratch is kept so the chosen action can be staged without re-walking.
    Tilt candidate_tilt(InfoSetId set, int action) {
        Scratch& sc = scratch_for(set, action);
        Tilt t = tilt_;
        if (has_w_) {
            for (auto& [m, pd] : sc.id_changes) {
                for (std::size_t n = 0; n < util_.size() && n < w_.size(); ++n) {
                    if (w_[n] == 0.0) continue;
                    t.w_dot_u += w_[n] * scenarios_.weights[m] *
                                 (pd.leaf[n] - id_paths_[m].leaf[n]);
                }
            }
        }
        for (int phi : sc.touched_phi) {
            if (std::size_t(phi) >= lambda_.size() || lambda_[phi] == 0.0) continue;
            t.lambda_dot_r += lambda_[phi] * (scratch_regret(sc, phi) - regrets_[phi]);
        }
        return t;
    }

    // Skeleton size of (s_{-i}, a), from the kept scratch.
    std::size_t staged_skeleton_size(InfoSetId set, int action) {
        Scratch& sc = scratch_for(set, action);
        std::map<InfoSetId, int> delta;
        auto count_path = [&](int64_t path, int sign) {
            const PathData& pd = path_ref(path);
            if (!pd.active) return;
            for (auto& [s, v] : pd.visited) delta[s] += sign;
        };
        for (auto& [m, pd] : sc.id_changes) {
            count_path(static_cast<int64_t>(m), -1);
            if (pd.active)
                for (auto& [s, v] : pd.visited) delta[s] += 1;
        }
        for (auto& [idx, pd] : sc.dev_changes) {
            count_path(idx, -1);
            if (pd.active)
                for (auto& [s, v] : pd.visited) delta[s] += 1;
        }
        std::size_t size = support_.size();
        for (auto& [s, d] : delta) {
            if (d == 0) continue;
            auto it = support_.find(s);
            const int old_count = it == support_.end() ? 0 : it->second.count;
            const int new_count = old_count + d;
            if (old_count > 0 && new_count <= 0) --size;
            if (old_count == 0 && new_count > 0) ++size;
        }
        return size;
    }

    // Commits the scratch of (set, action) as the new state.
    void apply_candidate(InfoSetId set, int action) {
        Scratch& sc = scratch_for(set, action);
        for (auto& [m, pd] : sc.id_changes) swap_path(static_cast<int64_t>(m), pd);
        for (auto& [idx, pd] : sc.dev_changes) swap_path(idx, pd);
        // The flipped coordinate keeps its support entry but changes value.
        auto it = support_.find(set);
        if (it != support_.end()) {
            it->second.action = action;
            profile_.set_fixed(set, action);
        }
        scratch_.clear();
        refresh_aggregates();
    }

    void drop_candidates() { scratch_.clear(); }

    // -- verification ----------------------------------------------------------

    // Full rebuild from the current profile; throws if the incremental state
    // drifted. Used by tests and debug runs.
    void check_consistency() const {
        ProfileEvaluator fresh(game_, scenarios_, depth_cap_);
        for (std::size_t phi = 1; phi < psi_.size(); ++phi) fresh.add_deviation(psi_[phi]);
        fresh.reset_profile(profile_);
        if (fresh.support_.size() != support_.size())
            throw EfceError("evaluator drift: skeleton size");
        for (auto& [s, e] : support_) {
            auto it = fresh.support_.find(s);
            if (it == fresh.support_.end() || it->second.count != e.count ||
                it->second.action != e.action)
                throw EfceError("evaluator drift: skeleton entry");
        }
        for (std::size_t n = 0; n < util_.size(); ++n)
            if (fresh.util_[n] != util_[n]) throw EfceError("evaluator drift: utilities");
        for (std::size_t phi = 0; phi < regrets_.size(); ++phi)
            if (fresh.regrets_[phi] != regrets_[phi]) throw EfceError("evaluator drift: regrets");
    }

   private:
    struct PathData {
        bool active = false;  // identity paths: always true once built;
                              // deviation paths: the trigger fired
        std::vector<std::pair<InfoSetId, int>> visited;  // (set, profile value)
        std::vector<uint32_t> index_pos;  // slot positions inside paths_at_
        double dev_util = 0.0;       // deviator's leaf utility (deviation paths)
        UtilityVector leaf;          // leaf utilities (identity paths)
    };

    struct IndexEntry {
        int64_t path;
        uint32_t slot;
    };

    struct SupportEntry {
        int count = 0;
        int action = 0;
    };

    struct Scratch {
        InfoSetId set;
        int action = 0;
        bool valid = false;
        std::vector<std::pair<int, PathData>> id_changes;       // scenario -> new path
        std::vector<std::pair<int64_t, PathData>> dev_changes;  // path idx -> new path
        std::set<int> touched_phi;
        std::unordered_map<int, const PathData*> id_overlay;    // views into id_changes
        std::unordered_map<int64_t, const PathData*> dev_overlay;
    };

    // Identity paths live at [0, M); deviation phi >= 1 at M + (phi-1)*M + m.
    int64_t dev_path_index(int phi, std::size_t m) const {
        return static_cast<int64_t>(scenarios_.size()) +
               static_cast<int64_t>(phi - 1) * static_cast<int64_t>(scenarios_.size()) +
               static_cast<int64_t>(m);
    }

    PathData& path_ref(int64_t idx) {
        const int64_t m_count = static_cast<int64_t>(scenarios_.size());
        return idx < m_count ? id_paths_[idx] : dev_paths_[idx - m_count];
    }
    const PathData& path_ref(int64_t idx) const {
        const int64_t m_count = static_cast<int64_t>(scenarios_.size());
        return idx < m_count ? id_paths_[idx] : dev_paths_[idx - m_count];
    }

    // ---- walking -------------------------------------------------------------

    template <typename Resolver>
    void walk_identity(std::size_t m, const Resolver& resolve, PathData& out) const {
        out.active = true;
        out.visited.clear();
        Node leaf = walk_game(
            game_,
            [&](InfoSetId i) {
                if (game_.owner(i).is_nature())
                    return scenarios_.scenarios[m].action_at(game_, i);
                const int v = resolve(i);
                out.visited.push_back({i, v});
                return v;
            },
            depth_cap_);
        game_.utilities(leaf, out.leaf);
        out.dev_util = 0.0;
    }

    // Walks the deviated play of psi_[phi] against scenario m. `id_visited`
    // is the identity path of m under the same resolver; the trigger can only
    // fire when the identity play reaches the trigger set.
    template <typename Resolver>
    void walk_deviation(int phi, std::size_t m, const Resolver& resolve,
                        const PathData& identity, PathData& out) const {
        const CausalDeviation& d = psi_[phi];
        const Trigger& trig = d.trigger();
        out.visited.clear();
        out.leaf.clear();
        bool may_fire = false;
        for (auto& [s, v] : identity.visited) {
            if (s == trig.info_set) {
                may_fire = v == trig.action;
                break;
            }
        }
        if (!may_fire) {
            out.active = false;
            out.dev_util = 0.0;
            return;
        }
        out.active = true;
        bool deviating = false;
        UtilityVector leaf_util;
        Node leaf = walk_game(
            game_,
            [&](InfoSetId i) {
                if (game_.owner(i).is_nature())
                    return scenarios_.scenarios[m].action_at(game_, i);
                const int suggested = resolve(i);
                out.visited.push_back({i, suggested});
                int played = suggested;
                if (game_.owner(i) == trig.player) {
                    if (!deviating && i == trig.info_set && suggested == trig.action)
                        deviating = true;
                    if (deviating) {
                        if (auto dev = d.dev_action(i)) played = *dev;
                    }
                }
                return played;
            },
            depth_cap_);
        game_.utilities(leaf, leaf_util);
        out.dev_util = leaf_util[trig.player.index];
    }

    void rebuild_identity_path(std::size_t m) {
        walk_identity(m, [&](InfoSetId i) { return profile_.action_at(game_, i); },
                      id_paths_[m]);
    }

    void rebuild_dev_path(int phi, std::size_t m) {
        walk_deviation(phi, m, [&](InfoSetId i) { return profile_.action_at(game_, i); },
                       id_paths_[m], dev_paths_[dev_path_index(phi, m) - scenarios_.size()]);
    }

    // ---- support / index maintenance ------------------------------------------

    void index_insert(int64_t path) {
        PathData& pd = path_ref(path);
        if (!pd.active) return;
        pd.index_pos.resize(pd.visited.size());
        for (uint32_t slot = 0; slot < pd.visited.size(); ++slot) {
            auto& [s, v] = pd.visited[slot];
            auto& vec = paths_at_[s.v];
            pd.index_pos[slot] = static_cast<uint32_t>(vec.size());
            vec.push_back({path, slot});
            auto& entry = support_[s];
            if (entry.count == 0) {
                entry.action = v;
                profile_.set_fixed(s, v);
            }
            ++entry.count;
        }
    }

    void index_erase(int64_t path) {
        PathData& pd = path_ref(path);
        if (!pd.active) return;
        for (uint32_t slot = 0; slot < pd.visited.size(); ++slot) {
            auto& [s, v] = pd.visited[slot];
            auto& vec = paths_at_[s.v];
            const uint32_t pos = pd.index_pos[slot];
            const IndexEntry moved = vec.back();
            vec[pos] = moved;
            if (moved.path != path || moved.slot != slot)
                path_ref(moved.path).index_pos[moved.slot] = pos;
            vec.pop_back();
            auto it = support_.find(s);
            if (--it->second.count == 0) {
                support_.erase(it);
                profile_.erase_fixed(s);
            }
        }
    }

    void swap_path(int64_t idx, PathData& incoming) {
        index_erase(idx);
        path_ref(idx) = std::move(incoming);
        index_insert(idx);
        const int64_t m_count = static_cast<int64_t>(scenarios_.size());
        if (idx >= m_count) {
            const int phi = static_cast<int>((idx - m_count) / m_count) + 1;
            const std::size_t m = static_cast<std::size_t>((idx - m_count) % m_count);
            if (path_ref(idx).active) {
                active_by_scenario_[m].insert(phi);
            } else {
                active_by_scenario_[m].erase(phi);
            }
        }
    }

    void refresh_aggregates() {
        const int players = game_.num_players();
        util_.assign(players, 0.0);
        for (std::size_t m = 0; m < scenarios_.size(); ++m) {
            for (int n = 0; n < players; ++n)
                util_[n] += scenarios_.weights[m] * id_paths_[m].leaf[n];
        }
        regrets_.assign(psi_.size(), 0.0);
        for (std::size_t phi = 1; phi < psi_.size(); ++phi) {
            const int n = psi_[phi].trigger().player.index;
            double total = 0.0;
            for (std::size_t m = 0; m < scenarios_.size(); ++m) {
                const PathData& pd = dev_paths_[dev_path_index(phi, m) - scenarios_.size()];
                if (pd.active)
                    total += scenarios_.weights[m] * (pd.dev_util - id_paths_[m].leaf[n]);
            }
            regrets_[phi] = total;
        }
        refresh_tilt();
    }

    void refresh_tilt() {
        tilt_ = Tilt{};
        has_w_ = false;
        for (std::size_t n = 0; n < util_.size() && n < w_.size(); ++n) {
            if (w_[n] != 0.0) has_w_ = true;
            tilt_.w_dot_u += w_[n] * util_[n];
        }
        for (std::size_t phi = 0; phi < regrets_.size() && phi < lambda_.size(); ++phi)
            tilt_.lambda_dot_r += lambda_[phi] * regrets_[phi];
    }

    // ---- scratch construction --------------------------------------------------

    Scratch& scratch_for(InfoSetId set, int action) {
        for (auto& sc : scratch_) {
            if (sc.set == set && sc.action == action && sc.valid) return sc;
        }
        scratch_.emplace_back();
        Scratch& sc = scratch_.back();
        sc.set = set;
        sc.action = action;
        build_scratch(sc);
        sc.valid = true;
        return sc;
    }

    void build_scratch(Scratch& sc) const {
        const InfoSetId flip = sc.set;
        const int action = sc.action;
        auto resolve = [&](InfoSetId i) {
            return i == flip ? action : profile_.action_at(game_, i);
        };
        const int64_t m_count = static_cast<int64_t>(scenarios_.size());

        std::vector<int64_t> dev_to_walk;
        auto hit = paths_at_.find(flip.v);
        if (hit != paths_at_.end()) {
            for (const IndexEntry& e : hit->second) {
                if (e.path < m_count) {
                    sc.id_changes.push_back({static_cast<int>(e.path), PathData{}});
                } else {
                    dev_to_walk.push_back(e.path);
                }
            }
        }
        // Rewalk touched identity paths; their visited-set changes can arm or
        // disarm deviations triggered on sets entering or leaving the path.
        std::vector<char> scen_changed(scenarios_.size(), 0);
        for (auto& [m, pd] : sc.id_changes) {
            walk_identity(static_cast<std::size_t>(m), resolve, pd);
            scen_changed[m] = 1;
            sc.id_overlay[m] = &pd;
        }
        for (auto& [m, pd] : sc.id_changes) {
            std::unordered_set<uint64_t> on_path;
            for (auto& [s, v] : id_paths_[m].visited) on_path.insert(s.v);
            for (auto& [s, v] : pd.visited) on_path.insert(s.v);
            on_path.insert(flip.v);
            for (uint64_t set : on_path) {
                auto triggered = trigger_phis_.find(set);
                if (triggered == trigger_phis_.end()) continue;
                for (int32_t phi : triggered->second)
                    dev_to_walk.push_back(dev_path_index(phi, m));
            }
        }
        std::sort(dev_to_walk.begin(), dev_to_walk.end());
        dev_to_walk.erase(std::unique(dev_to_walk.begin(), dev_to_walk.end()),
                          dev_to_walk.end());
        for (int64_t path : dev_to_walk) {
            const int64_t rel = path - m_count;
            const int phi = static_cast<int>(rel / m_count) + 1;
            const std::size_t m = static_cast<std::size_t>(rel % m_count);
            sc.dev_changes.push_back({path, PathData{}});
            PathData& pd = sc.dev_changes.back().second;
            const PathData* identity =
                scen_changed[m] ? sc.id_overlay.at(static_cast<int>(m)) : &id_paths_[m];
            walk_deviation(phi, m, resolve, *identity, pd);
            sc.touched_phi.insert(phi);
        }
        for (auto& [path, pd] : sc.dev_changes) sc.dev_overlay[path] = &pd;
        // Deviations whose paths did not move still change regret when the
        // identity leaf under some scenario moved.
        for (auto& [m, pd] : sc.id_changes) {
            for (int32_t phi : active_by_scenario_[m]) sc.touched_phi.insert(phi);
        }
    }

    const UtilityVector& leaf_util(const Scratch& sc, std::size_t m) const {
        auto it = sc.id_overlay.find(static_cast<int>(m));
        return it == sc.id_overlay.end() ? id_paths_[m].leaf : it->second->leaf;
    }

    double scratch_regret(const Scratch& sc, int phi) const {
        const int n = psi_[phi].trigger().player.index;
        double total = 0.0;
        for (std::size_t m = 0; m < scenarios_.size(); ++m) {
            const int64_t idx = dev_path_index(phi, m);
            auto it = sc.dev_overlay.find(idx);
            const PathData& pd = it == sc.dev_overlay.end()
                                     ? dev_paths_[idx - scenarios_.size()]
                                     : *it->second;
            if (pd.active) total += scenarios_.weights[m] * (pd.dev_util - leaf_util(sc, m)[n]);
        }
        return total;
    }

    const Game& game_;
    ScenarioSample scenarios_;
    std::size_t depth_cap_;
    DeviationSet psi_;

    bool has_profile_ = false;
    LazyProfile profile_;
    std::vector<double> w_;
    std::vector<double> lambda_;
    bool has_w_ = false;
    Tilt tilt_;
    std::vector<PathData> id_paths_;
    std::vector<PathData> dev_paths_;
    std::vector<std::set<int32_t>> active_by_scenario_;
    std::map<InfoSetId, SupportEntry> support_;
    std::unordered_map<uint64_t, std::vector<IndexEntry>> paths_at_;
    std::unordered_map<uint64_t, std::vector<int32_t>> trigger_phis_;
    UtilityVector util_;
    std::vector<double> regrets_;
    std::vector<Scratch> scratch_;
};

// Reads the per-deviation regrets of one profile off the simulation tree.
inline RegretVector evaluate_regrets(const Game& game, const LazyProfile& profile,
                                     const DeviationSet& psi, const ScenarioSample& scenarios,
                                     std::size_t depth_cap = kDefaultDepthCap) {
    ProfileEvaluator ev(game, scenarios, depth_cap);
    for (std::size_t phi = 1; phi < psi.size(); ++phi) ev.add_deviation(psi[phi]);
    ev.reset_profile(profile);
    return ev.regret_vector();
}

// ===========================================================================
// DeviationForest: the deviation tree over a weighted profile sample. Every
// (draw, scenario) pair contributes its simulated play; at each simulated
// decision the acting player may leave simulation into a best-response
// subtree. The best causal deviation is found by dynamic programming over
// deviator information sets, deepest first (well defined by perfect recall).
// ===========================================================================

struct BestDeviationResult {
    CausalDeviation deviation;      // identity when nothing gains
    double empirical_regret = 0.0;  // r* >= 0
    struct TriggerRegret {
        Trigger trigger;
        double regret;
    };
    std::vector<TriggerRegret> trigger_table;
};

struct ForestStats {
    std::size_t pair_count = 0;
    std::size_t sim_node_count = 0;   // nodes on simulated plays, summed per pair
    std::size_t dp_node_count = 0;    // expanded deviation-region nodes (last search)
    std::size_t dp_visits = 0;        // value resolutions (last search)
};

class DeviationForest {
   public:
    DeviationForest(const Game& game, std::vector<LazyProfile> draws,
                    std::vector<double> draw_weights, ScenarioSample scenarios,
                    std::size_t node_budget = kDefaultNodeBudget,
                    std::size_t depth_cap = kDefaultDepthCap)
        : game_(game),
          draws_(std::move(draws)),
          draw_weights_(std::move(draw_weights)),
          scenarios_(std::move(scenarios)),
          node_budget_(node_budget),
          depth_cap_(depth_cap) {
        if (draws_.empty()) throw DomainError("deviation forest needs at least one profile");
        if (draws_.size() != draw_weights_.size())
            throw DomainError("draw/weight size mismatch");
        build();
    }

    // Weights may change between rounds (reweighted samples) without
    // rebuilding the simulated plays.
    void set_draw_weights(std::vector<double> w) {
        if (w.size() != draws_.size()) throw DomainError("draw/weight size mismatch");
        draw_weights_ = std::move(w);
    }

    BestDeviationResult best_deviation(std::optional<int> player_filter = std::nullopt) const;

    const ForestStats& stats() const { return stats_; }
    const ScenarioSample& scenarios() const { return scenarios_; }

   private:
    struct PairPlay {
        int draw = 0;
        int scenario = 0;
        std::vector<int32_t> hist;   // full action sequence of the simulated play
        UtilityVector leaf;          // leaf utilities
    };

    struct TriggerHit {
        int pair = 0;
        int depth = 0;  // prefix length at the decision node
    };

    using TriggerKey = std::tuple<int32_t, uint64_t, int>;  // player, set, action

    void build() {
        const std::size_t m_count = scenarios_.size();
        pairs_.reserve(draws_.size() * m_count);
        for (std::size_t k = 0; k < draws_.size(); ++k) {
            for (std::size_t m = 0; m < m_count; ++m) {
                PairPlay pp;
                pp.draw = static_cast<int>(k);
                pp.scenario = static_cast<int>(m);
                int depth = 0;
                Node leaf = walk_game(
                    game_,
                    [&](InfoSetId i) {
                        int a;
                        if (game_.owner(i).is_nature()) {
                            a = scenarios_.scenarios[m].action_at(game_, i);
                        } else {
                            a = draws_[k].action_at(game_, i);
                            hits_[TriggerKey{game_.owner(i).index, i.v, a}].push_back(
                                TriggerHit{static_cast<int>(pairs_.size()), depth});
                        }
                        ++depth;
                        return a;
                    },
                    depth_cap_);
                game_.utilities(leaf, pp.leaf);
                pp.hist = std::move(leaf.hist);
                stats_.sim_node_count += pp.hist.size() + 1;
                if (stats_.sim_node_count > node_budget_)
                    throw SizeExceeded("deviation forest exceeded its node budget");
                pairs_.push_back(std::move(pp));
            }
        }
        stats_.pair_count = pairs_.size();
    }

    double pair_weight(int pair) const {
        return draw_weights_[pairs_[pair].draw] * scenarios_.weights[pairs_[pair].scenario];
    }

    // ---- per-trigger best-response DP ----------------------------------------

    struct DpNode {
        enum Kind : uint8_t { kLeaf, kChain, kChoice } kind = kLeaf;
        double value = 0.0;
        bool resolved = false;
        int first_child = 0;
        int child_count = 0;
        uint64_t set = 0;     // choice nodes
        int own_depth = 0;    // choice nodes
    };

    struct DpScratch {
        std::vector<DpNode> nodes;
        std::vector<int> children;
        // (own_depth, set) -> choice node indices
        std::map<std::pair<int, uint64_t>, std::vector<int>> buckets;
        std::size_t budget_used = 0;
        mutable std::size_t visits = 0;
    };

    int expand(DpScratch& dp, Node& pos, std::vector<int>& pair_set, PlayerId deviator,
               int own_depth) const {
        if (++dp.budget_used > node_budget_)
            throw SizeExceeded("deviation forest exceeded its node budget");
        std::optional<InfoSetId> set = game_.info_set(pos);
        if (!set.has_value()) {
            UtilityVector leaf;
            game_.utilities(pos, leaf);
            double total = 0.0;
            for (int p : pair_set) total += pair_weight(p);
            DpNode node;
            node.kind = DpNode::kLeaf;
            node.value = total * leaf[deviator.index];
            node.resolved = true;
            dp.nodes.push_back(node);
            return static_cast<int>(dp.nodes.size()) - 1;
        }
        const int actions = game_.num_actions(*set);
        std::vector<int> child_idx;
        if (game_.owner(*set) == deviator) {
            // Free node of the deviating player: all actions stay open.
            child_idx.reserve(actions);
            for (int a = 1; a <= actions; ++a) {
                pos.hist.push_back(a);
                child_idx.push_back(expand(dp, pos, pair_set, deviator, own_depth + 1));
                pos.hist.pop_back();
            }
            DpNode node;
            node.kind = DpNode::kChoice;
            node.set = set->v;
            node.own_depth = own_depth;
            node.first_child = static_cast<int>(dp.children.size());
            node.child_count = actions;
            dp.children.insert(dp.children.end(), child_idx.begin(), child_idx.end());
            dp.nodes.push_back(node);
            const int idx = static_cast<int>(dp.nodes.size()) - 1;
            dp.buckets[{own_depth, set->v}].push_back(idx);
            return idx;
        }
        // Nature or co-player: pairs split by their simulated action.
        std::map<int, std::vector<int>> groups;
        for (int p : pair_set) {
            int a;
            if (game_.owner(*set).is_nature()) {
                a = scenarios_.scenarios[pairs_[p].scenario].action_at(game_, *set);
            } else {
                a = draws_[pairs_[p].draw].action_at(game_, *set);
            }
            groups[a].push_back(p);
        }
        for (auto& [a, group] : groups) {
            pos.hist.push_back(a);
            child_idx.push_back(expand(dp, pos, group, deviator, own_depth));
            pos.hist.pop_back();
        }
        DpNode node;
        node.kind = DpNode::kChain;
        node.first_child = static_cast<int>(dp.children.size());
        node.child_count = static_cast<int>(child_idx.size());
        dp.children.insert(dp.children.end(), child_idx.begin(), child_idx.end());
        dp.nodes.push_back(node);
        return static_cast<int>(dp.nodes.size()) - 1;
    }

    double resolve(DpScratch& dp, int idx) const {
        ++dp.visits;
        DpNode& node = dp.nodes[idx];
        if (node.resolved) return node.value;
        if (node.kind == DpNode::kChoice)
            throw EfceError("deviation DP resolved a choice node out of order");
        double total = 0.0;
        for (int c = 0; c < node.child_count; ++c)
            total += resolve(dp, dp.children[node.first_child + c]);
        node.value = total;
        node.resolved = true;
        return total;
    }

   public:
    // Best deviation for one trigger; exposed for tests. Returns the gain and
    // fills the deviation strategy entries.
    double trigger_gain(PlayerId player, InfoSetId set, int action,
                        CausalDeviation::DevEntries* dev_out = nullptr,
                        ForestStats* stats_out = nullptr) const {
        auto it = hits_.find(TriggerKey{player.index, set.v, action});
        if (it == hits_.end()) return 0.0;
        const std::vector<TriggerHit>& hits = it->second;

        DpScratch dp;
        std::vector<int> roots;
        double original = 0.0;
        {
            // Group hits by prefix so shared nodes expand once.
            std::map<std::vector<int32_t>, std::vector<int>> by_prefix;
            for (const TriggerHit& h : hits) {
                std::vector<int32_t> prefix(pairs_[h.pair].hist.begin(),
                                            pairs_[h.pair].hist.begin() + h.depth);
                by_prefix[std::move(prefix)].push_back(h.pair);
                original += pair_weight(h.pair) * pairs_[h.pair].leaf[player.index];
            }
            for (auto& [prefix, pair_set] : by_prefix) {
                Node pos;
                pos.hist = prefix;
                std::vector<int> ps = pair_set;
                roots.push_back(expand(dp, pos, ps, player, 0));
            }
        }
        // Resolve deviator choices deepest first; choices within one
        // information set are shared across all its nodes.
        std::map<uint64_t, int> choices;
        for (auto bucket = dp.buckets.rbegin(); bucket != dp.buckets.rend(); ++bucket) {
            const uint64_t set_v = bucket->first.second;
            const std::vector<int>& nodes = bucket->second;
            const int actions = game_.num_actions(InfoSetId{set_v});
            int best_action = 1;
            double best_value = 0.0;
            for (int a = 1; a <= actions; ++a) {
                double total = 0.0;
                for (int idx : nodes) {
                    const DpNode& node = dp.nodes[idx];
                    total += resolve(dp, dp.children[node.first_child + (a - 1)]);
                }
                if (a == 1 || total > best_value) {
                    best_value = total;
                    best_action = a;
                }
            }
            choices[set_v] = best_action;
            for (int idx : nodes) {
                DpNode& node = dp.nodes[idx];
                node.value = resolve(dp, dp.children[node.first_child + (best_action - 1)]);
                node.resolved = true;
            }
        }
        double deviated = 0.0;
        for (int r : roots) deviated += resolve(dp, r);
        if (dev_out) {
            dev_out->clear();
            for (auto& [set_v, a] : choices) dev_out->push_back({InfoSetId{set_v}, a});
        }
        if (stats_out) {
            stats_out->dp_node_count += dp.nodes.size();
            stats_out->dp_visits += dp.visits;
        }
        return deviated - original;
    }

   private:
    const Game& game_;
    std::vector<LazyProfile> draws_;
    std::vector<double> draw_weights_;
    ScenarioSample scenarios_;
    std::size_t node_budget_;
    std::size_t depth_cap_;

    std::vector<PairPlay> pairs_;
    std::map<TriggerKey, std::vector<TriggerHit>> hits_;
    mutable ForestStats stats_;
};

inline BestDeviationResult DeviationForest::best_deviation(
    std::optional<int> player_filter) const {
    stats_.dp_node_count = 0;
    stats_.dp_visits = 0;
    BestDeviationResult out;
    out.deviation = CausalDeviation::identity();
    out.empirical_regret = 0.0;
    CausalDeviation::DevEntries dev;
    for (auto& [key, hit_list] : hits_) {
        const auto& [player, set_v, action] = key;
        if (player_filter.has_value() && player != *player_filter) continue;
        const double gain =
            trigger_gain(PlayerId::regular(player), InfoSetId{set_v}, action, &dev, &stats_);
        Trigger trig{PlayerId::regular(player), InfoSetId{set_v}, action};
        out.trigger_table.push_back({trig, gain});
        if (gain > out.empirical_regret) {
            out.empirical_regret = gain;
            out.deviation = CausalDeviation::triggered(trig, dev);
        }
    }
    return out;
}

// ===========================================================================
// Best-response complexity: the largest best-response tree size over probed
// (profile, scenario) pairs, maximized over players. Exact on enumerable
// games when every pair is probed.
// ===========================================================================

template <typename ProfileLike>
std::size_t best_response_tree_size(const Game& game, PlayerId player,
                                    const ProfileLike& profile, const Scenario& scenario,
                                    std::size_t depth_cap = kDefaultDepthCap) {
    std::size_t count = 0;
    // Iterative DFS over the responder's free actions.
    struct Frame {
        Node pos;
        int next_action;
    };
    std::vector<Frame> stack;
    stack.push_back({Node{}, 0});
    while (!stack.empty()) {
        Frame frame = std::move(stack.back());
        stack.pop_back();
        Node pos = std::move(frame.pos);
        for (;;) {
            ++count;
            if (count > depth_cap * 1000000)
                throw SizeExceeded("best-response tree exceeded its node cap");
            std::optional<InfoSetId> set = game.info_set(pos);
            if (!set.has_value()) break;
            if (game.owner(*set) == player) {
                const int actions = game.num_actions(*set);
                for (int a = actions; a >= 2; --a) {
                    Node branch = pos;
                    branch.hist.push_back(a);
                    stack.push_back({std::move(branch), 0});
                }
                pos.hist.push_back(1);
                continue;
            }
            const int a = game.owner(*set).is_nature() ? scenario.action_at(game, *set)
                                                       : profile.action_at(game, *set);
            pos.hist.push_back(a);
        }
    }
    return count;
}

template <typename ProfileLike>
std::size_t best_response_complexity(
    const Game& game, const std::vector<std::pair<ProfileLike, Scenario>>& probe_pairs,
    std::size_t depth_cap = kDefaultDepthCap) {
    if (probe_pairs.empty()) throw DomainError("best_response_complexity needs probe pairs");
    std::size_t best = 0;
    for (auto& [profile, scenario] : probe_pairs) {
        for (int n = 0; n < game.num_players(); ++n) {
            best = std::max(best, best_response_tree_size(game, PlayerId::regular(n), profile,
                                                          scenario, depth_cap));
        }
    }
    return best;
}

// ===========================================================================
// Debug dump of the merged simulation tree: one line per node with id,
// parent, label, and reach weight. Children weights sum to their parent's.
// ===========================================================================

inline void dump_simulation_tree(const Game& game, const std::vector<LazyProfile>& draws,
                                 const std::vector<double>& draw_weights,
                                 const ScenarioSample& scenarios, std::ostream& os,
                                 std::size_t depth_cap = kDefaultDepthCap) {
    struct TrieNode {
        int parent = -1;
        double weight = 0.0;
        std::string label;
        std::map<int, int> children;
    };
    std::vector<TrieNode> trie(1);
    trie[0].label = "root";
    for (std::size_t k = 0; k < draws.size(); ++k) {
        for (std::size_t m = 0; m < scenarios.size(); ++m) {
            const double w = draw_weights[k] * scenarios.weights[m];
            int at = 0;
            trie[0].weight += w;
            Node leaf = walk_game(
                game,
                [&](InfoSetId i) {
                    const int a = game.owner(i).is_nature()
                                      ? scenarios.scenarios[m].action_at(game, i)
                                      : draws[k].action_at(game, i);
                    trie[at].label = "infoset:" + std::to_string(i.v);
                    auto [it, inserted] = trie[at].children.emplace(a, 0);
                    if (inserted) {
                        it->second = static_cast<int>(trie.size());
                        trie.push_back(TrieNode{});
                        trie[it->second].parent = at;
                    }
                    at = it->second;
                    trie[at].weight += w;
                    return a;
                },
                depth_cap);
            if (trie[at].label.empty()) trie[at].label = "leaf";
        }
    }
    const auto flags = os.flags();
    const auto precision = os.precision();
    os.precision(17);
    for (std::size_t id = 0; id < trie.size(); ++id) {
        os << id << ' ' << trie[id].parent << ' ' << trie[id].label << ' ' << trie[id].weight
           << '\n';
    }
    os.flags(flags);
    os.precision(precision);
}

}  // namespace efce
