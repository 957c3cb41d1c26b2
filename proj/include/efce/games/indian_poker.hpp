#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "efce/game.hpp"

namespace efce::games {

// Three-player Indian poker with a C-card deck. Players see the other two
// cards but not their own. Everyone antes $1; seats act in order 1,2,3 and
// may bet $1 or pass. After the first bet at seat k, play continues
// cyclically with each remaining player deciding once more, ending just
// before k (at most five decisions). All-pass returns the antes. Otherwise
// the highest card among the bettors wins the pot.
struct IndianPokerSpec {
    int cards = 8;  // C >= 3; ante and bet are fixed at $1
};

class IndianPokerGame final : public Game {
   public:
    static constexpr int kBet = 1, kPass = 2;

    explicit IndianPokerGame(IndianPokerSpec spec) : c_(spec.cards) {
        if (c_ < 3) throw InvalidSpec("Indian poker needs at least 3 cards");
        if (c_ > 62) throw InvalidSpec("Indian poker id packing supports at most 62 cards");
    }

    std::string name() const override { return "poker(C=" + std::to_string(c_) + ")"; }
    int num_players() const override { return 3; }

    GameType type() const override {
        // Early termination and distinct cards give Gamma = 24 C (C-1);
        // utilities range over [-2, 4].
        return GameType{24.0 * c_ * (c_ - 1), 6.0};
    }

    bool has_chance() const override { return true; }

    std::optional<InfoSetId> info_set(const Node& h) const override {
        const std::size_t d = h.hist.size();
        if (d == 0) return InfoSetId{pack_nature(1, 0, 0)};
        if (d == 1) return InfoSetId{pack_nature(2, h.hist[0], 0)};
        if (d == 2) return InfoSetId{pack_nature(3, h.hist[0], h.hist[1])};

        int cards[3];
        decode_deal(h, cards);
        const std::size_t bets = d - 3;
        int first_bet = -1;
        for (std::size_t k = 0; k < bets; ++k) {
            if (h.hist[3 + k] == kBet) {
                first_bet = static_cast<int>(k);
                break;
            }
        }
        const std::size_t total = first_bet < 0 ? 3 : 3 + static_cast<std::size_t>(first_bet);
        if (first_bet < 0 && bets == 3) return std::nullopt;
        if (first_bet >= 0 && bets == total) return std::nullopt;

        const int actor = static_cast<int>(bets % 3);
        uint32_t hist_bits = 0;
        for (std::size_t k = 0; k < bets; ++k) {
            if (h.hist[3 + k] == kBet) hist_bits |= (1u << k);
        }
        const int left = cards[(actor + 1) % 3];
        const int right = cards[(actor + 2) % 3];
        return InfoSetId{pack_player(actor, left, right, static_cast<int>(bets), hist_bits)};
    }

    PlayerId owner(InfoSetId i) const override {
        return (i.v & 3) == 0 ? PlayerId::regular(static_cast<int32_t>((i.v >> 2) & 3))
                              : PlayerId::nature();
    }

    int num_actions(InfoSetId i) const override {
        switch (i.v & 3) {
            case 0: return 2;
            case 1: return c_;
            case 2: return c_ - 1;
            default: return c_ - 2;
        }
    }

    double nature_prob(InfoSetId i, int) const override { return 1.0 / num_actions(i); }

    void utilities(const Node& leaf, UtilityVector& out) const override {
        out.assign(3, 0.0);
        int cards[3];
        decode_deal(leaf, cards);
        const std::size_t bets = leaf.hist.size() - 3;
        bool bettor[3] = {false, false, false};
        int num_bettors = 0;
        for (std::size_t k = 0; k < bets; ++k) {
            if (leaf.hist[3 + k] == kBet && !bettor[k % 3]) {
                bettor[k % 3] = true;
                ++num_bettors;
            }
        }
        if (num_bettors == 0) return;  // all pass: antes returned
        const int pot = 2 * num_bettors + (3 - num_bettors);
        int winner = -1;
        for (int n = 0; n < 3; ++n) {
            if (bettor[n] && (winner < 0 || cards[n] > cards[winner])) winner = n;
        }
        for (int n = 0; n < 3; ++n) {
            out[n] = n == winner ? pot - 2.0 : (bettor[n] ? -2.0 : -1.0);
        }
    }

    bool reachable(InfoSetId i_from, InfoSetId i_to) const override {
        if ((i_from.v & 3) != 0 || (i_to.v & 3) != 0) return false;
        // Same seat, same observed cards, and the earlier betting history a
        // proper prefix of the later one.
        if (((i_from.v ^ i_to.v) & 0xffffu) != 0) return false;
        const uint64_t len_from = (i_from.v >> 16) & 7, len_to = (i_to.v >> 16) & 7;
        if (len_from >= len_to) return false;
        const uint64_t bits_from = i_from.v >> 19, bits_to = i_to.v >> 19;
        return (bits_to & ((uint64_t{1} << len_from) - 1)) == bits_from;
    }

    std::optional<std::vector<WeightedScenario>> enumerate_scenarios(
        std::size_t cap) const override {
        const std::size_t deals =
            std::size_t(c_) * std::size_t(c_ - 1) * std::size_t(c_ - 2);
        if (deals > cap) return std::nullopt;
        std::vector<WeightedScenario> out;
        out.reserve(deals);
        const double w = 1.0 / double(deals);
        for (int c1 = 1; c1 <= c_; ++c1) {
            for (int c2 = 1; c2 <= c_; ++c2) {
                if (c2 == c1) continue;
                for (int c3 = 1; c3 <= c_; ++c3) {
                    if (c3 == c1 || c3 == c2) continue;
                    const int lo = std::min(c1, c2), hi = std::max(c1, c2);
                    auto fixed = std::make_shared<Scenario::FixedEntries>();
                    fixed->push_back({InfoSetId{pack_nature(1, 0, 0)}, c1});
                    fixed->push_back({InfoSetId{pack_nature(2, c1, 0)}, c2 - (c2 > c1 ? 1 : 0)});
                    fixed->push_back({InfoSetId{pack_nature(3, c1, c2 - (c2 > c1 ? 1 : 0))},
                                      c3 - (c3 > lo ? 1 : 0) - (c3 > hi ? 1 : 0)});
                    std::sort(fixed->begin(), fixed->end());
                    out.push_back({Scenario{std::move(fixed), 0}, w});
                }
            }
        }
        return out;
    }

    int cards() const { return c_; }

    // Deal from the nature prefix: actions index into the sorted remaining
    // deck, so every deal is an ordered triple of distinct cards.
    void decode_deal(const Node& h, int out[3]) const {
        const int c1 = h.hist[0];
        int c2 = h.hist[1];
        if (c2 >= c1) ++c2;
        int c3 = h.hist[2];
        const int lo = std::min(c1, c2), hi = std::max(c1, c2);
        if (c3 >= lo) ++c3;
        if (c3 >= hi) ++c3;
        out[0] = c1;
        out[1] = c2;
        out[2] = c3;
    }

   private:
    // Regular ids: tag(2) | seat(2) | left card(6) | right card(6) |
    // history length(3) | history bet bits(5). Nature ids: tag(2) | c1(6) |
    // c2-index(6).
    static uint64_t pack_player(int seat, int left, int right, int hist_len,
                                uint32_t hist_bits) {
        return 0 | (uint64_t(seat) << 2) | (uint64_t(left) << 4) | (uint64_t(right) << 10) |
               (uint64_t(hist_len) << 16) | (uint64_t(hist_bits) << 19);
    }

    static uint64_t pack_nature(int stage, int c1, int c2_index) {
        return uint64_t(stage) | (uint64_t(c1) << 2) | (uint64_t(c2_index) << 8);
    }

    int c_;
};

}  // namespace efce::games
