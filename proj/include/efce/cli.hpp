#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "efce/certificate_io.hpp"
#include "efce/games/grid_game.hpp"
#include "efce/games/indian_poker.hpp"
#include "efce/games/job_market.hpp"
#include "efce/oracle.hpp"
#include "efce/solver.hpp"

namespace efce::cli {

// ---------------------------------------------------------------------------
// Run configuration: game selection plus solver settings plus output layout.
// ---------------------------------------------------------------------------

struct GameSelector {
    std::string kind = "jobmarket";  // jobmarket | poker | grid
    int poker_cards = 8;
    int grid_side = 5;
    uint64_t grid_payoff_seed = 0;
};

struct RunConfig {
    std::string mode = "solve";  // solve | verify | oracle | bench | moderate
    GameSelector game;
    SolverConfig solver;
    std::string out_dir = "out";
    int repeat = 1;
    std::string certificate_path;       // verify / moderate input
    std::vector<int> bench_sides = {3, 4, 5};
    double bench_target_relative = 1e-3;
};

inline std::unique_ptr<Game> make_game(const GameSelector& sel) {
    if (sel.kind == "jobmarket") return std::make_unique<games::JobMarketGame>();
    if (sel.kind == "poker")
        return std::make_unique<games::IndianPokerGame>(games::IndianPokerSpec{sel.poker_cards});
    if (sel.kind == "grid")
        return std::make_unique<games::GridGame>(
            games::GridGameSpec{sel.grid_side, sel.grid_payoff_seed, {}});
    throw ConfigError("unknown game kind: " + sel.kind);
}

inline std::unique_ptr<Game> make_game_from_certificate(const EquilibriumCertificate& cert) {
    GameSelector sel;
    sel.kind = cert.game_kind;
    auto param = [&](const std::string& key, const std::string& fallback) {
        auto it = cert.game_params.find(key);
        return it == cert.game_params.end() ? fallback : it->second;
    };
    if (sel.kind == "poker") sel.poker_cards = std::stoi(param("C", "8"));
    if (sel.kind == "grid") {
        sel.grid_side = std::stoi(param("L", "5"));
        sel.grid_payoff_seed = std::stoull(param("payoff_seed", "0"));
    }
    return make_game(sel);
}

// ---------------------------------------------------------------------------
// Reporting.
// ---------------------------------------------------------------------------

struct SeedReport {
    uint64_t seed = 0;
    std::string status;
    long long rounds = 0;
    double initial_r_star = 0.0;
    double final_r_star = 0.0;
    std::vector<double> payoffs;
    std::string certificate_path;
    std::string convergence_path;
    long long wall_ms = 0;
    long long peak_mem_bytes = 0;
    double gamma = 0.0;
    std::vector<HistoryRow> history;
};

struct RunReport {
    std::string mode;
    std::vector<SeedReport> seeds;
    OrderedJson extra;
};

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline constexpr const char* kConvergenceHeader =
    "round,r_star,psi_size,M_t,ess,lambda_l1,wall_ms,peak_mem_bytes";

inline void write_convergence_csv(const std::vector<HistoryRow>& history,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot write " + path);
    out << kConvergenceHeader << '\n';
    for (const HistoryRow& row : history) {
        out << row.round << ',' << format_double(row.r_star) << ',' << row.psi_size << ','
            << row.m_t << ',' << format_double(row.ess) << ','
            << format_double(row.lambda_l1) << ',' << row.wall_ms << ','
            << row.peak_mem_bytes << '\n';
    }
}

// Least-squares slope of ln(r_star) against ln(round) over the late half of
// the series; the tail convergence rate of the regret plots.
inline double late_regret_slope(const std::vector<HistoryRow>& history) {
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = history.size() / 2; i < history.size(); ++i) {
        if (history[i].r_star > 0.0 && history[i].round > 0)
            points.push_back({std::log(double(history[i].round)),
                              std::log(history[i].r_star)});
    }
    if (points.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = double(points.size());
    const double denom = n * sxx - sx * sx;
    return denom == 0.0 ? 0.0 : (n * sxy - sx * sy) / denom;
}

inline double loglog_slope(const std::vector<std::pair<double, double>>& points) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : points) {
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = double(points.size());
    const double denom = n * sxx - sx * sx;
    return denom == 0.0 ? 0.0 : (n * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------
// Plot-ready data files: regret series for log-log plots, payoff scatter with
// the w direction, and the size-vs-cost table for benchmark sweeps.
// ---------------------------------------------------------------------------

inline void emit_plot_data(const RunReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "plots");

    {
        std::ofstream out(fs::path(out_dir) / "plots" / "regret_vs_round.csv");
        if (!out) throw IOError("cannot write regret_vs_round.csv");
        out << "seed,round,r_star\n";
        for (const SeedReport& seed : report.seeds) {
            for (const HistoryRow& row : seed.history)
                out << seed.seed << ',' << row.round << ',' << format_double(row.r_star)
                    << '\n';
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "plots" / "payoff_scatter.csv");
        if (!out) throw IOError("cannot write payoff_scatter.csv");
        const std::size_t players =
            report.seeds.empty() ? 0 : report.seeds.front().payoffs.size();
        out << "seed,max_entropy";
        for (std::size_t n = 0; n < players; ++n) out << ",w_" << (n + 1);
        for (std::size_t n = 0; n < players; ++n) out << ",payoff_" << (n + 1);
        out << '\n';
        for (const SeedReport& seed : report.seeds) {
            bool max_entropy = true;
            const auto wvec = report.extra.contains("w")
                                  ? report.extra["w"].get<std::vector<double>>()
                                  : std::vector<double>(players, 0.0);
            for (double wn : wvec)
                if (wn != 0.0) max_entropy = false;
            out << seed.seed << ',' << (max_entropy ? 1 : 0);
            for (std::size_t n = 0; n < players; ++n)
                out << ',' << format_double(n < wvec.size() ? wvec[n] : 0.0);
            for (double u : seed.payoffs) out << ',' << format_double(u);
            out << '\n';
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "plots" / "regret_slopes.csv");
        if (!out) throw IOError("cannot write regret_slopes.csv");
        out << "seed,late_slope\n";
        for (const SeedReport& seed : report.seeds)
            out << seed.seed << ',' << format_double(late_regret_slope(seed.history)) << '\n';
    }
    if (report.mode == "bench") {
        std::ofstream out(fs::path(out_dir) / "plots" / "bench.csv");
        if (!out) throw IOError("cannot write bench.csv");
        out << "gamma,seed,rounds,wall_ms,peak_mem_bytes\n";
        for (const SeedReport& seed : report.seeds)
            out << format_double(seed.gamma) << ',' << seed.seed << ',' << seed.rounds << ','
                << seed.wall_ms << ',' << seed.peak_mem_bytes << '\n';
    }
}

inline void write_report_json(const RunReport& report, const std::string& out_dir) {
    OrderedJson j;
    j["mode"] = report.mode;
    j["seeds"] = OrderedJson::array();
    for (const SeedReport& seed : report.seeds) {
        j["seeds"].push_back({{"seed", seed.seed},
                              {"status", seed.status},
                              {"rounds", seed.rounds},
                              {"initial_r_star", seed.initial_r_star},
                              {"final_r_star", seed.final_r_star},
                              {"payoffs", seed.payoffs},
                              {"late_slope", late_regret_slope(seed.history)},
                              {"gamma", seed.gamma},
                              {"wall_ms", seed.wall_ms},
                              {"peak_mem_bytes", seed.peak_mem_bytes},
                              {"certificate", seed.certificate_path},
                              {"convergence", seed.convergence_path}});
    }
    if (!report.extra.is_null()) j["extra"] = report.extra;
    std::ofstream out(std::filesystem::path(out_dir) / "report.json");
    if (!out) throw IOError("cannot write report.json");
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Modes.
// ---------------------------------------------------------------------------

inline SeedReport solve_one(const Game& game, const GameSelector& sel, SolverConfig solver,
                            uint64_t seed, const std::string& out_dir) {
    namespace fs = std::filesystem;
    solver.seed = seed;
    SolveResult result = solve(game, solver);

    result.certificate.game_kind = sel.kind;
    if (sel.kind == "poker")
        result.certificate.game_params["C"] = std::to_string(sel.poker_cards);
    if (sel.kind == "grid") {
        result.certificate.game_params["L"] = std::to_string(sel.grid_side);
        result.certificate.game_params["payoff_seed"] = std::to_string(sel.grid_payoff_seed);
    }

    SeedReport report;
    report.seed = seed;
    report.status = result.certificate.status;
    report.rounds = result.certificate.rounds;
    report.initial_r_star = result.certificate.initial_r_star;
    report.final_r_star = result.certificate.final_r_star;
    report.payoffs = result.certificate.expected_utilities;
    report.wall_ms = result.certificate.wall_ms;
    report.peak_mem_bytes = result.certificate.peak_mem_bytes;
    report.gamma = result.certificate.gamma;
    report.history = result.history;

    if (!out_dir.empty()) {
        const fs::path run_dir = fs::path(out_dir) / "runs" / std::to_string(seed);
        fs::create_directories(run_dir);
        report.convergence_path = (run_dir / "convergence.csv").string();
        report.certificate_path = (run_dir / "certificate.json").string();
        write_convergence_csv(result.history, report.convergence_path);
        write_certificate(result.certificate, report.certificate_path);
    }
    return report;
}

inline RunReport run(const RunConfig& config) {
    namespace fs = std::filesystem;
    RunReport report;
    report.mode = config.mode;
    if (config.repeat < 1) throw ConfigError("repeat must be at least 1");

    if (config.mode == "solve") {
        fs::create_directories(config.out_dir);
        auto game = make_game(config.game);
        for (int s = 0; s < config.repeat; ++s) {
            const uint64_t seed = config.solver.seed + uint64_t(s);
            report.seeds.push_back(
                solve_one(*game, config.game, config.solver, seed, config.out_dir));
        }
        report.extra["w"] = config.solver.w;
        emit_plot_data(report, config.out_dir);
        write_report_json(report, config.out_dir);
        return report;
    }

    if (config.mode == "bench") {
        fs::create_directories(config.out_dir);
        for (int side : config.bench_sides) {
            GameSelector sel = config.game;
            sel.kind = "grid";
            sel.grid_side = side;
            for (int s = 0; s < config.repeat; ++s) {
                sel.grid_payoff_seed = config.game.grid_payoff_seed + uint64_t(s);
                auto game = make_game(sel);
                SolverConfig solver = config.solver;
                solver.target_relative = config.bench_target_relative;
                report.seeds.push_back(solve_one(*game, sel, solver,
                                                 config.solver.seed + uint64_t(s),
                                                 config.out_dir));
            }
        }
        std::vector<std::pair<double, double>> time_points;
        for (const SeedReport& seed : report.seeds)
            if (seed.wall_ms > 0) time_points.push_back({seed.gamma, double(seed.wall_ms)});
        report.extra["w"] = config.solver.w;
        if (time_points.size() >= 2)
            report.extra["time_vs_gamma_slope"] = loglog_slope(time_points);
        emit_plot_data(report, config.out_dir);
        write_report_json(report, config.out_dir);
        return report;
    }

    if (config.mode == "verify") {
        const EquilibriumCertificate cert = read_certificate(config.certificate_path);
        auto game = make_game_from_certificate(cert);
        const oracle::GameCensus census = oracle::build_census(*game);
        std::vector<LazyProfile> draws;
        std::vector<double> weights;
        for (const DrawRecord& rec : cert.sample) {
            LazyProfile::Entries fixed;
            for (auto& [set, action] : rec.fixed) fixed.push_back({InfoSetId{set}, action});
            draws.emplace_back(std::move(fixed), rec.slice_seed);
            weights.push_back(rec.weight);
        }
        const oracle::ExplicitDistribution dist =
            oracle::empirical_distribution(*game, census, draws, weights);
        const oracle::VerificationReport verdict =
            oracle::verify_efce(*game, census, dist, cert.epsilon);
        report.extra = verification_report_to_json(verdict);
        if (!config.out_dir.empty()) {
            fs::create_directories(config.out_dir);
            std::ofstream out(fs::path(config.out_dir) / "verification.json");
            out << report.extra.dump(2) << '\n';
        }
        return report;
    }

    if (config.mode == "oracle") {
        fs::create_directories(config.out_dir);
        auto game = make_game(config.game);
        const auto boost = oracle::exact_boost(*game, config.solver.w, config.solver.epsilon,
                                               config.solver.max_rounds);
        std::ofstream out(fs::path(config.out_dir) / "exact_boost.csv");
        if (!out) throw IOError("cannot write exact_boost.csv");
        out << "round,max_regret,z\n";
        for (const auto& row : boost.trajectory)
            out << row.round << ',' << format_double(row.max_regret) << ','
                << format_double(row.z) << '\n';
        report.extra["rounds"] = boost.trajectory.size();
        report.extra["final_max_regret"] =
            boost.trajectory.empty() ? 0.0 : boost.trajectory.back().max_regret;
        report.extra["expected_utilities"] = boost.distribution.expected_utilities;
        write_report_json(report, config.out_dir);
        return report;
    }

    if (config.mode == "moderate") {
        const EquilibriumCertificate cert = read_certificate(config.certificate_path);
        auto game = make_game_from_certificate(cert);
        const LazyProfile profile = moderator_sample(*game, cert, config.solver.seed);
        Scenario scenario(hash_mix(config.solver.seed, 0x30deULL));
        std::ostringstream stream;
        UtilityVector leaf_utils;
        Node leaf = walk_game(*game, [&](InfoSetId i) {
            if (game->owner(i).is_nature()) {
                const int a = scenario.action_at(*game, i);
                stream << "nature info_set=" << i.v << " outcome=" << a << '\n';
                return a;
            }
            const int a = profile.action_at(*game, i);
            stream << "player=" << (game->owner(i).index + 1) << " info_set=" << i.v
                   << " suggestion=" << a << '\n';
            return a;
        });
        game->utilities(leaf, leaf_utils);
        stream << "utilities=";
        for (std::size_t n = 0; n < leaf_utils.size(); ++n)
            stream << (n ? "," : "") << format_double(leaf_utils[n]);
        stream << '\n';
        report.extra["stream"] = stream.str();
        return report;
    }

    throw ConfigError("unknown mode: " + config.mode);
}

}  // namespace efce::cli
