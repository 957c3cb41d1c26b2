#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/deviation.hpp"
#include "efce/game.hpp"
#include "efce/sampler.hpp"
#include "efce/scenario.hpp"
#include "efce/trees.hpp"

namespace efce {

// ---------------------------------------------------------------------------
// Update rules and bounds.
// ---------------------------------------------------------------------------

// Coordinate increment Δ = (1 / 2r̃_max) ln((r̃_max + r*) / (r̃_max − r*)),
// the multiplicative-weights step for a nonnegative lower bound r* on the
// expected regret of the chosen deviation.
inline double basic_update(double r_star, double r_tilde_max) {
    if (!(r_star >= 0.0)) throw DomainError("basic_update needs r* >= 0");
    if (!(r_star < r_tilde_max)) throw DomainError("basic_update needs r* < r̃_max");
    return 0.5 / r_tilde_max * std::log((r_tilde_max + r_star) / (r_tilde_max - r_star));
}

// Line search over the empirical dual: minimizes sum_k w_k e^{-Δ r_k} over
// Δ in [0, cap_factor × basic], never returning less than the basic update
// and stopping where the reweighted effective sample size would cross
// ess_floor × M. Falls back to the basic update when the constraints bind
// there.
inline double line_search_update(const std::vector<double>& weights,
                                 const std::vector<double>& regrets, double r_tilde_max,
                                 double cap_factor, double ess_floor) {
    if (weights.size() != regrets.size() || weights.empty())
        throw DomainError("line search needs matched nonempty weights and regrets");
    double r_star = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) r_star += weights[k] * regrets[k];
    if (!(r_star > 0.0)) throw DomainError("line search needs positive empirical regret");
    const double base = basic_update(std::min(r_star, r_tilde_max * (1.0 - 1e-12)), r_tilde_max);
    const double hi = cap_factor * base;

    const auto dual = [&](double d) {
        double total = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k)
            total += weights[k] * std::exp(-d * regrets[k]);
        return total;
    };
    const auto ess_at = [&](double d) {
        double top = -1e300;
        std::vector<double> lw(weights.size());
        for (std::size_t k = 0; k < weights.size(); ++k) {
            lw[k] = (weights[k] > 0.0 ? std::log(weights[k]) : -1e300) - d * regrets[k];
            top = std::max(top, lw[k]);
        }
        double z = 0.0;
        for (double v : lw) z += std::exp(v - top);
        double entropy = 0.0;
        for (double v : lw) {
            const double w = std::exp(v - top) / z;
            if (w > 0.0) entropy -= w * std::log(w);
        }
        return std::exp(entropy);
    };

    // Golden-section minimization of the convex dual on [0, hi].
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = dual(c), fd = dual(d);
    while (b - a > 1e-10 * std::max(1.0, hi) && b - a > 1e-15) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = dual(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = dual(d);
        }
    }
    double minimizer = 0.5 * (a + b);
    if (dual(hi) <= dual(minimizer)) minimizer = hi;  // monotone tail: take the cap
    if (minimizer <= base) return base;

    const double floor = ess_floor * double(weights.size());
    if (ess_at(minimizer) >= floor) return minimizer;
    if (ess_at(base) < floor) return base;
    double lo = base, up = minimizer;
    for (int it = 0; it < 200 && up - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + up);
        (ess_at(mid) >= floor ? lo : up) = mid;
    }
    return lo;
}

struct IterationBound {
    long long rounds = 0;   // ceil(D / (-1/2 ln(1 - eps^2 / r̃_max^2)))
    double loose = 0.0;     // 2 r̃_max^2 D / eps^2
};

inline IterationBound iteration_bound(double epsilon, double r_tilde_max, double d_bound) {
    if (!(epsilon > 0.0) || !(epsilon < r_tilde_max))
        throw DomainError("iteration_bound needs 0 < epsilon < r̃_max");
    if (d_bound < 0.0) throw DomainError("iteration_bound needs D >= 0");
    IterationBound out;
    const double denom = -0.5 * std::log1p(-(epsilon / r_tilde_max) * (epsilon / r_tilde_max));
    const double ratio = d_bound / denom;
    // Absorb float noise sitting just above an integer before rounding up.
    out.rounds = static_cast<long long>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
    out.loose = 2.0 * r_tilde_max * r_tilde_max * d_bound / (epsilon * epsilon);
    return out;
}

struct SampleBounds {
    long long m = 0;
    long long m_nat = 0;
    double ln_profiles = 0.0;   // surrogate ln|S| = Gamma
    double ln_deviations = 0.0; // surrogate ln|Phi| = ln Gamma + Gamma
};

// Hoeffding + union-bound sample sizes, with ln|S| and ln|Phi| replaced by
// their sequence-complexity surrogates.
inline SampleBounds sample_bounds(double epsilon, double delta, const GameType& type) {
    if (!(epsilon > 0.0) || !(delta > 0.0) || !(delta < 1.0))
        throw DomainError("sample_bounds needs epsilon > 0 and delta in (0,1)");
    SampleBounds out;
    out.ln_profiles = type.gamma;
    out.ln_deviations = std::log(type.gamma) + type.gamma;
    const double r_tilde = type.r_max + epsilon;
    out.m_nat = static_cast<long long>(
        std::ceil(2.0 * type.r_max * type.r_max *
                  (out.ln_profiles + out.ln_deviations + std::log(1.0 / delta)) /
                  (epsilon * epsilon)));
    out.m = static_cast<long long>(
        std::ceil(2.0 * r_tilde * r_tilde * (out.ln_deviations + std::log(1.0 / delta)) /
                  (epsilon * epsilon)));
    return out;
}

struct ScheduleConfig {
    int m0 = 100;
    double slope = 0.1;
};

// Growing per-round sample size M_t = M0 + floor(t * slope).
inline int schedule_m(long long t, const ScheduleConfig& schedule = {}) {
    if (t < 1) throw DomainError("schedule_m needs t >= 1");
    return schedule.m0 + static_cast<int>(std::floor(double(t) * schedule.slope));
}

// ---------------------------------------------------------------------------
// Solver configuration and results.
// ---------------------------------------------------------------------------

enum class EpsilonMode { kRaw, kGammaScaled };

struct LineSearchConfig {
    bool enabled = true;
    // The cap has to leave room for the dual minimizer: the basic update is
    // O(r*/r_max^2), far below the step the dual wants on loose regret
    // bounds. The effective safeguard against overfitting the sample is the
    // effective-sample-size floor.
    double cap_factor = 200.0;
    double ess_floor = 1.0 / M_E;
};

struct SolverConfig {
    double epsilon = 1e-3;
    double delta = 0.05;
    std::vector<double> w;  // payoff importance vector; empty means zero
    long long max_rounds = 100000;
    EpsilonMode epsilon_mode = EpsilonMode::kRaw;
    LineSearchConfig line_search;
    ScheduleConfig schedule;
    SamplerConfig sampler;
    bool strict_bounds = false;
    // Optional early stop at r* <= target_relative × (first round's r*).
    std::optional<double> target_relative;
    uint64_t seed = 1;
    std::size_t scenario_cap = 5000;  // exhaustive enumeration threshold
    std::size_t node_budget = kDefaultNodeBudget;
    std::size_t depth_cap = kDefaultDepthCap;
};

struct HistoryRow {
    long long round = 0;
    double r_star = 0.0;
    long long psi_size = 0;
    long long m_t = 0;
    double ess = 0.0;
    double lambda_l1 = 0.0;
    long long wall_ms = 0;
    long long peak_mem_bytes = 0;
};

struct DeviationRecord {
    int player = 0;
    uint64_t info_set = 0;
    int action = 0;
    std::vector<std::pair<uint64_t, int>> dev;  // sorted
    double lambda = 0.0;
};

struct DrawRecord {
    std::vector<std::pair<uint64_t, int>> fixed;
    uint64_t slice_seed = 0;
    double weight = 0.0;
};

struct EquilibriumCertificate {
    std::string game_kind;
    std::map<std::string, std::string> game_params;
    double gamma = 0.0;
    double r_max = 0.0;
    int num_players = 0;

    std::string status;  // converged | relative_target | budget_exhausted
    double epsilon = 0.0;
    std::string epsilon_mode;
    std::vector<double> w;
    long long rounds = 0;
    double final_r_star = 0.0;
    double initial_r_star = 0.0;

    std::vector<DeviationRecord> lambda;  // identity omitted

    std::string scenario_mode;  // exhaustive | sampled
    uint64_t scenario_seed = 0;
    long long scenario_count = 0;

    std::vector<DrawRecord> sample;
    uint64_t seed = 0;
    double burnin_mult = 0.0;
    double thin_mult = 0.0;
    int chains = 1;

    std::vector<double> expected_utilities;
    long long wall_ms = 0;
    long long peak_mem_bytes = 0;
};

struct SolveResult {
    EquilibriumCertificate certificate;
    DeviationSet psi;
    std::vector<double> lambda;
    WeightedSample final_sample;
    ScenarioSample scenarios;
    std::vector<HistoryRow> history;
};

inline long long peak_memory_bytes() {
    std::ifstream status("/proc/self/status");
    std::string line;
    while (std::getline(status, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            std::istringstream is(line.substr(6));
            long long kb = 0;
            std::string unit;
            is >> kb >> unit;
            return kb * 1024;
        }
    }
    return 0;
}

inline CausalDeviation deviation_from_record(const DeviationRecord& rec) {
    CausalDeviation::DevEntries dev;
    dev.reserve(rec.dev.size());
    for (auto& [set, action] : rec.dev) dev.push_back({InfoSetId{set}, action});
    return CausalDeviation::triggered(
        Trigger{PlayerId::regular(rec.player), InfoSetId{rec.info_set}, rec.action},
        std::move(dev));
}

inline DeviationRecord record_from_deviation(const CausalDeviation& d, double lambda) {
    DeviationRecord rec;
    rec.player = d.trigger().player.index;
    rec.info_set = d.trigger().info_set.v;
    rec.action = d.trigger().action;
    for (auto& [set, action] : d.dev()) rec.dev.push_back({set.v, action});
    rec.lambda = lambda;
    return rec;
}

// ---------------------------------------------------------------------------
// The main loop: sample q̃_t, find the best deviation, stop when
// r* < 2ε/3, otherwise grow lambda on that coordinate and reuse the sample
// through reweighting until the effective sample size drops.
// ---------------------------------------------------------------------------

namespace detail {

inline ScenarioSample choose_scenarios(const Game& game, const SolverConfig& config,
                                       double epsilon, uint64_t scenario_seed,
                                       std::string& mode_out) {
    if (auto exact = exhaustive_scenarios(game, config.scenario_cap)) {
        mode_out = "exhaustive";
        return *exact;
    }
    mode_out = "sampled";
    const SampleBounds bounds = sample_bounds(epsilon / 3.0, config.delta / 2.0, game.type());
    const long long m_nat = std::max<long long>(1, bounds.m_nat);
    return sample_scenarios(game, static_cast<int>(m_nat), scenario_seed);
}

inline double d_bound_heuristic(const Game& game, const std::vector<double>& w) {
    const GameType type = game.type();
    double extra = 0.0;
    for (double wn : w) extra += std::abs(wn);
    return type.gamma + 2.0 * extra * type.r_max;
}

}  // namespace detail

inline SolveResult solve(const Game& game, const SolverConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const GameType type = game.type();
    const double epsilon =
        config.epsilon_mode == EpsilonMode::kGammaScaled ? config.epsilon / type.gamma
                                                         : config.epsilon;
    if (!(epsilon > 0.0)) throw DomainError("solver needs epsilon > 0");
    const double r_tilde_max = type.r_max + epsilon / 3.0;

    std::vector<double> w(game.num_players(), 0.0);
    for (std::size_t n = 0; n < config.w.size() && n < w.size(); ++n) w[n] = config.w[n];

    SolveResult result;
    result.certificate.game_kind = game.name();
    result.certificate.gamma = type.gamma;
    result.certificate.r_max = type.r_max;
    result.certificate.num_players = game.num_players();
    result.certificate.epsilon = epsilon;
    result.certificate.epsilon_mode =
        config.epsilon_mode == EpsilonMode::kGammaScaled ? "gamma_scaled" : "raw";
    result.certificate.w = w;
    result.certificate.seed = config.seed;
    result.certificate.burnin_mult = config.sampler.burnin_mult;
    result.certificate.thin_mult = config.sampler.thin_mult;
    result.certificate.chains = config.sampler.chains;

    const uint64_t scenario_seed = hash_mix(config.seed, 0x5ce7ULL);
    std::string scenario_mode;
    result.scenarios = detail::choose_scenarios(game, config, epsilon, scenario_seed,
                                                scenario_mode);
    result.certificate.scenario_mode = scenario_mode;
    result.certificate.scenario_seed = scenario_seed;
    result.certificate.scenario_count = static_cast<long long>(result.scenarios.size());

    // Worst-case bounds are logged in strict mode they also govern M.
    long long strict_m = 0;
    if (config.strict_bounds) {
        const double d_bound = detail::d_bound_heuristic(game, w);
        const IterationBound t_bar = iteration_bound(epsilon / 3.0, r_tilde_max, d_bound);
        const double per_round_delta =
            config.delta / (2.0 * std::max<long long>(1, t_bar.rounds));
        strict_m = std::max<long long>(
            1, sample_bounds(epsilon / 3.0, per_round_delta, type).m);
    }

    DeviationSet& psi = result.psi;
    std::vector<double>& lambda = result.lambda;
    lambda.assign(1, 0.0);

    uint64_t sample_counter = 0;
    auto fresh_sample = [&](long long round) {
        const long long m = config.strict_bounds
                                ? strict_m
                                : schedule_m(std::max<long long>(1, round), config.schedule);
        return draw_sample(game, lambda, w, psi, static_cast<int>(m), result.scenarios,
                           config.sampler, hash_mix(config.seed, 0x5a3bULL, ++sample_counter),
                           config.depth_cap);
    };

    WeightedSample sample = fresh_sample(1);
    int sample_age = 0;
    std::optional<DeviationForest> forest;
    auto rebuild_forest = [&]() {
        std::vector<LazyProfile> draws;
        draws.reserve(sample.size());
        for (const Draw& d : sample.draws) draws.push_back(d.profile);
        forest.emplace(game, std::move(draws), sample.weights, result.scenarios,
                       config.node_budget, config.depth_cap);
    };
    rebuild_forest();

    double initial_r_star = 0.0;
    std::string status = "budget_exhausted";
    double final_r_star = 0.0;
    long long round = 1;
    for (; round <= config.max_rounds; ++round) {
        forest->set_draw_weights(sample.weights);
        const BestDeviationResult best = forest->best_deviation();
        const double r_star = best.empirical_regret;
        final_r_star = r_star;
        if (round == 1) initial_r_star = r_star;

        HistoryRow row;
        row.round = round;
        row.r_star = r_star;
        row.psi_size = static_cast<long long>(psi.size());
        row.m_t = static_cast<long long>(sample.size());
        row.ess = sample.ess;
        row.lambda_l1 = 0.0;
        for (double l : lambda) row.lambda_l1 += l;
        row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        row.peak_mem_bytes = peak_memory_bytes();
        result.history.push_back(row);

        if (r_star < 2.0 * epsilon / 3.0) {
            status = "converged";
            break;
        }
        if (config.target_relative.has_value() && round > 1 &&
            r_star <= *config.target_relative * initial_r_star) {
            status = "relative_target";
            break;
        }

        // Register the deviation and extend the per-draw regret caches so the
        // sample can be reweighted toward the updated lambda.
        const int idx = psi.add(best.deviation);
        if (static_cast<std::size_t>(idx) >= lambda.size()) lambda.resize(idx + 1, 0.0);
        extend_regret_caches(sample, game, psi, result.scenarios, config.depth_cap);

        std::vector<double> phi_regrets(sample.size());
        for (std::size_t k = 0; k < sample.size(); ++k)
            phi_regrets[k] = sample.draws[k].regrets[idx];

        double delta_step;
        const double safe_r = std::min(r_star, r_tilde_max * (1.0 - 1e-12));
        if (config.line_search.enabled) {
            delta_step = line_search_update(sample.weights, phi_regrets, r_tilde_max,
                                            config.line_search.cap_factor,
                                            config.line_search.ess_floor);
        } else {
            delta_step = basic_update(safe_r, r_tilde_max);
        }
        lambda[idx] += delta_step;

        reweight(sample, lambda);
        ++sample_age;
        const bool stale = config.sampler.max_reuse_rounds > 0 &&
                           sample_age >= config.sampler.max_reuse_rounds;
        if (stale || std::log(std::max(sample.ess, 1e-300)) <
                         std::log(double(sample.size())) - config.sampler.ess_gate) {
            sample = fresh_sample(round + 1);
            rebuild_forest();
            sample_age = 0;
        }
    }
    if (status == "budget_exhausted") round = config.max_rounds;

    result.certificate.status = status;
    result.certificate.rounds = round;
    result.certificate.final_r_star = final_r_star;
    result.certificate.initial_r_star = initial_r_star;
    for (std::size_t phi = 1; phi < psi.size(); ++phi)
        result.certificate.lambda.push_back(record_from_deviation(psi[phi], lambda[phi]));

    // Expected utilities of the returned distribution.
    UtilityVector payoff(game.num_players(), 0.0);
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const UtilityVector u =
            expected_utility(game, sample.draws[k].profile, result.scenarios, config.depth_cap);
        for (std::size_t n = 0; n < payoff.size(); ++n)
            payoff[n] += sample.weights[k] * u[n];
    }
    result.certificate.expected_utilities = payoff;

    result.certificate.sample.reserve(sample.size());
    for (std::size_t k = 0; k < sample.size(); ++k) {
        DrawRecord rec;
        for (auto& [set, action] : sample.draws[k].profile.fixed())
            rec.fixed.push_back({set.v, action});
        rec.slice_seed = sample.draws[k].profile.slice_seed();
        rec.weight = sample.weights[k];
        result.certificate.sample.push_back(std::move(rec));
    }
    result.final_sample = std::move(sample);

    result.certificate.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - start)
                                     .count();
    result.certificate.peak_mem_bytes = peak_memory_bytes();
    return result;
}

// One profile drawn from a certified distribution: a fresh chain seeded from
// the certificate's lambda, suitable for sequential suggestion replay.
inline LazyProfile moderator_sample(const Game& game, const EquilibriumCertificate& cert,
                                    uint64_t seed,
                                    std::size_t depth_cap = kDefaultDepthCap) {
    DeviationSet psi;
    std::vector<double> lambda(1, 0.0);
    for (const DeviationRecord& rec : cert.lambda) {
        const int idx = psi.add(deviation_from_record(rec));
        if (static_cast<std::size_t>(idx) >= lambda.size()) lambda.resize(idx + 1, 0.0);
        lambda[idx] = rec.lambda;
    }
    ScenarioSample scenarios;
    if (cert.scenario_mode == "exhaustive") {
        auto exact = exhaustive_scenarios(game, std::size_t(cert.scenario_count) + 1);
        if (!exact) throw ConfigError("certificate demands exhaustive scenarios");
        scenarios = *exact;
    } else {
        scenarios = sample_scenarios(game, static_cast<int>(cert.scenario_count),
                                     cert.scenario_seed);
    }
    SamplerConfig sampler;
    sampler.burnin_mult = cert.burnin_mult;
    sampler.thin_mult = cert.thin_mult;
    WeightedSample one =
        draw_sample(game, lambda, cert.w, psi, 1, scenarios, sampler, seed, depth_cap);
    return one.draws[0].profile;
}

}  // namespace efce
