#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/deviation.hpp"
#include "efce/game.hpp"
#include "efce/rng.hpp"
#include "efce/scenario.hpp"
#include "efce/strategy.hpp"
#include "efce/trees.hpp"

namespace efce {

// ---------------------------------------------------------------------------
// Skeletons: the minimum portion of a strategy profile needed to evaluate
// ũ(s) and r̃_Psi(s) against the scenario sample, i.e. the coordinates
// reachable under some (deviation, scenario) combination applied to s.
// ---------------------------------------------------------------------------

struct Skeleton {
    std::vector<std::pair<InfoSetId, int>> entries;  // sorted by id

    std::size_t support_size() const { return entries.size(); }
};

template <typename ProfileLike>
Skeleton skeleton_of(const Game& game, const ProfileLike& profile, const DeviationSet& psi,
                     const ScenarioSample& sample, std::size_t depth_cap = kDefaultDepthCap) {
    std::set<std::pair<InfoSetId, int>> seen;
    UtilityVector scratch;
    for (std::size_t phi = 0; phi < psi.size(); ++phi) {
        for (std::size_t m = 0; m < sample.size(); ++m) {
            play_deviated_into(
                game, profile, psi[phi], sample.scenarios[m], scratch,
                [&](const DeviatedVisit& v) { seen.insert({v.info_set, v.profile_action}); },
                depth_cap);
        }
    }
    Skeleton out;
    out.entries.assign(seen.begin(), seen.end());
    return out;
}

// ---------------------------------------------------------------------------
// Weighted profile sample with importance reweighting and an effective sample
// size measured as exp of the weight entropy.
// ---------------------------------------------------------------------------

struct Draw {
    LazyProfile profile;
    RegretVector regrets;  // aligned with Psi at snapshot time, extended later
};

struct WeightedSample {
    std::vector<Draw> draws;
    std::vector<double> weights;          // normalized to sum 1
    std::vector<double> origin_lambda;    // lambda the draws were sampled at
    std::vector<double> current_lambda;   // lambda the weights represent
    double ess = 0.0;

    std::size_t size() const { return draws.size(); }
};

inline double effective_sample_size(const std::vector<double>& weights) {
    double entropy = 0.0;
    for (double w : weights) {
        if (w > 0.0) entropy -= w * std::log(w);
    }
    return std::exp(entropy);
}

// ---------------------------------------------------------------------------
// Slice Metropolis-Hastings chain over full strategy profiles. The state is a
// skeleton plus a slice seed defining the uniform fill of every non-skeleton
// coordinate. One step: pick a skeleton set uniformly, resample its action
// from the conditional of q̃ ∝ e^{w·ũ(s) − λ·r̃(s)} along that coordinate,
// accept with min(1, |s_skel| / |s'_skel|), then re-seed the slice.
// ---------------------------------------------------------------------------

struct SamplerConfig {
    double burnin_mult = 20.0;  // burn-in steps per skeleton coordinate
    double thin_mult = 2.0;     // steps between retained draws per coordinate
    double ess_gate = 1.0;      // resample once ln(ESS) < ln(M) - ess_gate
    int chains = 1;
    // Optional cap on how many rounds a reweighted sample may serve; zero
    // means reuse is gated by the effective sample size alone.
    int max_reuse_rounds = 0;
};

class MarkovChain {
   public:
    MarkovChain(const Game& game, ScenarioSample scenarios, const DeviationSet& psi,
                std::vector<double> lambda, std::vector<double> w, uint64_t seed,
                std::size_t depth_cap = kDefaultDepthCap)
        : evaluator_(game, std::move(scenarios), depth_cap), rng_(seed) {
        for (std::size_t phi = 1; phi < psi.size(); ++phi) evaluator_.add_deviation(psi[phi]);
        evaluator_.set_objective(std::move(w), std::move(lambda));
        evaluator_.reset_profile(LazyProfile(rng_.next()));
    }

    const ProfileEvaluator& evaluator() const { return evaluator_; }
    ProfileEvaluator& evaluator() { return evaluator_; }

    std::size_t skeleton_size() const { return evaluator_.skeleton_size(); }

    bool step() {
        const Game& game = evaluator_.game();
        const std::size_t support = evaluator_.skeleton_size();
        if (support == 0) {
            evaluator_.set_slice_seed(rng_.next());
            return true;
        }
        const auto [set, current] =
            evaluator_.skeleton_entry(static_cast<std::size_t>(rng_.below(support)));
        const int actions = game.num_actions(set);

        exponents_.assign(actions, 0.0);
        for (int a = 1; a <= actions; ++a) {
            exponents_[a - 1] = a == current ? evaluator_.current_tilt().exponent()
                                             : evaluator_.candidate_tilt(set, a).exponent();
        }
        double top = exponents_[0];
        for (double e : exponents_) top = std::max(top, e);
        double z = 0.0;
        for (double& e : exponents_) {
            e = std::exp(e - top);
            z += e;
        }
        const double u = rng_.uniform01() * z;
        int chosen = actions;
        double acc = 0.0;
        for (int a = 1; a <= actions; ++a) {
            acc += exponents_[a - 1];
            if (u < acc) {
                chosen = a;
                break;
            }
        }

        bool accepted = true;
        const double accept_u = rng_.uniform01();
        if (chosen != current) {
            const std::size_t proposed = evaluator_.staged_skeleton_size(set, chosen);
            const double ratio = double(support) / double(proposed);
            if (accept_u < ratio) {
                evaluator_.apply_candidate(set, chosen);
            } else {
                accepted = false;
                evaluator_.drop_candidates();
            }
        } else {
            evaluator_.drop_candidates();
        }
        evaluator_.set_slice_seed(rng_.next());
        return accepted;
    }

    Draw snapshot() const { return Draw{evaluator_.profile(), evaluator_.regret_vector()}; }

   private:
    ProfileEvaluator evaluator_;
    SeedStream rng_;
    std::vector<double> exponents_;
};

inline bool mh_step(MarkovChain& chain) { return chain.step(); }

// M draws from q̃ ∝ e^{w·ũ − λ·r̃} collected after burn-in with thinning
// proportional to the skeleton size. Weights are uniform and ESS = M.
inline WeightedSample draw_sample(const Game& game, const std::vector<double>& lambda,
                                  const std::vector<double>& w, const DeviationSet& psi,
                                  int m, const ScenarioSample& scenarios,
                                  const SamplerConfig& config, uint64_t seed,
                                  std::size_t depth_cap = kDefaultDepthCap) {
    if (m < 1) throw DomainError("draw_sample requires M >= 1");
    WeightedSample out;
    out.draws.reserve(m);
    const int chains = std::max(1, config.chains);
    for (int c = 0; c < chains; ++c) {
        const int quota = m / chains + (c < m % chains ? 1 : 0);
        if (quota == 0) continue;
        MarkovChain chain(game, scenarios, psi, lambda, w, hash_mix(seed, 0xc4a1u, uint64_t(c)),
                          depth_cap);
        const auto burnin =
            static_cast<std::size_t>(std::ceil(config.burnin_mult * chain.skeleton_size()));
        for (std::size_t i = 0; i < burnin; ++i) chain.step();
        // The thinning interval is frozen after burn-in: a state-dependent
        // interval would bias retained draws toward small-skeleton states.
        const auto thin = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(config.thin_mult * chain.skeleton_size())));
        for (int k = 0; k < quota; ++k) {
            for (std::size_t i = 0; i < thin; ++i) chain.step();
            out.draws.push_back(chain.snapshot());
        }
    }
    out.weights.assign(out.draws.size(), 1.0 / double(out.draws.size()));
    out.origin_lambda = lambda;
    out.current_lambda = lambda;
    out.ess = double(out.draws.size());
    return out;
}

// Importance reweighting toward a new lambda: weight_k picks up the factor
// e^{-(λ_new - λ_cur)·r̃(s_k)} read from the stored regret caches. Requires a
// cached regret for every moved coordinate.
inline void reweight(WeightedSample& sample, const std::vector<double>& lambda_new) {
    std::vector<double> log_w(sample.size());
    for (std::size_t k = 0; k < sample.size(); ++k) {
        log_w[k] = sample.weights[k] > 0.0 ? std::log(sample.weights[k]) : -1e300;
    }
    const std::size_t coords = std::max(lambda_new.size(), sample.current_lambda.size());
    for (std::size_t j = 0; j < coords; ++j) {
        const double next = j < lambda_new.size() ? lambda_new[j] : 0.0;
        const double cur = j < sample.current_lambda.size() ? sample.current_lambda[j] : 0.0;
        if (next == cur) continue;
        for (std::size_t k = 0; k < sample.size(); ++k) {
            if (j >= sample.draws[k].regrets.size())
                throw SkeletonInsufficient(
                    "reweight needs a cached regret for a moved lambda coordinate");
            log_w[k] -= (next - cur) * sample.draws[k].regrets[j];
        }
    }
    double top = log_w[0];
    for (double lw : log_w) top = std::max(top, lw);
    double z = 0.0;
    for (double lw : log_w) z += std::exp(lw - top);
    for (std::size_t k = 0; k < sample.size(); ++k)
        sample.weights[k] = std::exp(log_w[k] - top) / z;
    sample.current_lambda = lambda_new;
    sample.ess = effective_sample_size(sample.weights);
}

// Extends every draw's regret cache with deviations appended to Psi after the
// sample was taken; evaluates them against the stored lazy profiles.
inline void extend_regret_caches(WeightedSample& sample, const Game& game,
                                 const DeviationSet& psi, const ScenarioSample& scenarios,
                                 std::size_t depth_cap = kDefaultDepthCap) {
    for (Draw& draw : sample.draws) {
        for (std::size_t phi = draw.regrets.size(); phi < psi.size(); ++phi) {
            draw.regrets.push_back(
                regret(game, psi[phi], draw.profile, scenarios, depth_cap));
        }
    }
}

}  // namespace efce
