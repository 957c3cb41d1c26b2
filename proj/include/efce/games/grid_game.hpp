#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "efce/game.hpp"
#include "efce/rng.hpp"

namespace efce::games {

// One-shot graphical game on an L-by-L grid, encoded as an EFG where the L^2
// players act in row-major order, each owning a single three-action
// information set that reveals nothing about earlier moves. A player's payoff
// is the sum, over grid neighbors, of an independent 3x3 matrix entry indexed
// by (own action, neighbor action). Matrices are generated counter-based from
// payoff_seed with entries uniform in [0, 1], so games reproduce across
// platforms; explicit matrices can be injected for tests.
struct GridGameSpec {
    int side = 5;  // L >= 2
    uint64_t payoff_seed = 0;
    // Optional override: matrices[player][neighbor slot][own*3 + theirs].
    std::vector<std::vector<std::array<double, 9>>> explicit_matrices;
};

class GridGame final : public Game {
   public:
    explicit GridGame(GridGameSpec spec) : l_(spec.side) {
        if (l_ < 2) throw InvalidSpec("grid game needs side length >= 2");
        const int players = l_ * l_;
        neighbors_.resize(players);
        for (int n = 0; n < players; ++n) {
            const int row = n / l_, col = n % l_;
            if (row > 0) neighbors_[n].push_back(n - l_);
            if (col > 0) neighbors_[n].push_back(n - 1);
            if (col + 1 < l_) neighbors_[n].push_back(n + 1);
            if (row + 1 < l_) neighbors_[n].push_back(n + l_);
        }
        matrices_.resize(players);
        for (int n = 0; n < players; ++n) {
            matrices_[n].resize(neighbors_[n].size());
            for (std::size_t s = 0; s < neighbors_[n].size(); ++s) {
                for (int cell = 0; cell < 9; ++cell) {
                    matrices_[n][s][cell] = u01(hash_mix(spec.payoff_seed, uint64_t(n),
                                                         uint64_t(neighbors_[n][s]),
                                                         uint64_t(cell)));
                }
            }
        }
        if (!spec.explicit_matrices.empty()) {
            if (spec.explicit_matrices.size() != matrices_.size())
                throw InvalidSpec("explicit grid matrices must cover every player");
            for (int n = 0; n < players; ++n) {
                if (spec.explicit_matrices[n].size() != neighbors_[n].size())
                    throw InvalidSpec("explicit grid matrices must cover every neighbor");
            }
            matrices_ = spec.explicit_matrices;
        }
    }

    std::string name() const override { return "grid(L=" + std::to_string(l_) + ")"; }
    int num_players() const override { return l_ * l_; }

    GameType type() const override {
        const double max_degree = l_ >= 3 ? 4.0 : 2.0;
        return GameType{3.0 * l_ * l_, max_degree};
    }

    std::optional<InfoSetId> info_set(const Node& h) const override {
        if (h.hist.size() >= static_cast<std::size_t>(l_ * l_)) return std::nullopt;
        return InfoSetId{h.hist.size()};
    }

    PlayerId owner(InfoSetId i) const override {
        return PlayerId::regular(static_cast<int32_t>(i.v));
    }

    int num_actions(InfoSetId) const override { return 3; }

    double nature_prob(InfoSetId, int) const override {
        throw MalformedGame("grid game has no chance moves");
    }

    void utilities(const Node& leaf, UtilityVector& out) const override {
        const int players = l_ * l_;
        out.assign(players, 0.0);
        for (int n = 0; n < players; ++n) {
            const int own = leaf.hist[n] - 1;
            double total = 0.0;
            for (std::size_t s = 0; s < neighbors_[n].size(); ++s) {
                const int theirs = leaf.hist[neighbors_[n][s]] - 1;
                total += matrices_[n][s][own * 3 + theirs];
            }
            out[n] = total;
        }
    }

    bool reachable(InfoSetId, InfoSetId) const override { return false; }

    int side() const { return l_; }
    const std::vector<int>& neighbors(int player) const { return neighbors_[player]; }
    double payoff_entry(int player, std::size_t neighbor_slot, int own_action,
                        int neighbor_action) const {
        return matrices_[player][neighbor_slot][(own_action - 1) * 3 + (neighbor_action - 1)];
    }

   private:
    int l_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::vector<std::array<double, 9>>> matrices_;
};

}  // namespace efce::games
