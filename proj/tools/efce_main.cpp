// Command-line driver: solve / verify / oracle / bench / moderate.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "efce/cli.hpp"

namespace {

void add_common_flags(CLI::App* cmd, efce::cli::RunConfig& config) {
    cmd->add_option("--game", config.game.kind, "Game: jobmarket | poker | grid")
        ->check(CLI::IsMember({"jobmarket", "poker", "grid"}));
    cmd->add_option("--C", config.game.poker_cards, "Indian poker card count");
    cmd->add_option("--L", config.game.grid_side, "Grid side length");
    cmd->add_option("--payoff-seed", config.game.grid_payoff_seed, "Grid payoff seed");
    cmd->add_option("--w", config.solver.w, "Payoff importance vector (comma list)")
        ->delimiter(',');
    cmd->add_option("--epsilon", config.solver.epsilon, "Target precision");
    cmd->add_option("--delta", config.solver.delta, "Failure probability");
    cmd->add_option_function<std::string>(
           "--epsilon-mode",
           [&config](const std::string& mode) {
               config.solver.epsilon_mode = mode == "gamma_scaled"
                                                ? efce::EpsilonMode::kGammaScaled
                                                : efce::EpsilonMode::kRaw;
           },
           "Epsilon mode: raw | gamma_scaled")
        ->check(CLI::IsMember({"raw", "gamma_scaled"}));
    cmd->add_option("--max-rounds", config.solver.max_rounds, "Round budget");
    cmd->add_option("--seeds", config.repeat, "Number of seeds to run");
    cmd->add_option("--seed", config.solver.seed, "Base seed");
    cmd->add_option("--out", config.out_dir, "Output directory");
    cmd->add_flag("--strict-bounds", config.solver.strict_bounds,
                  "Use the worst-case Hoeffding sample sizes");
    cmd->add_option("--burnin-mult", config.solver.sampler.burnin_mult,
                    "Burn-in steps per skeleton coordinate");
    cmd->add_option("--thin-mult", config.solver.sampler.thin_mult,
                    "Thinning steps per skeleton coordinate");
    cmd->add_option("--ess-gate", config.solver.sampler.ess_gate,
                    "Resample when ln(ESS) < ln(M) - gate");
    cmd->add_option("--chains", config.solver.sampler.chains, "Chains per sample");
    cmd->add_option("--cap-factor", config.solver.line_search.cap_factor,
                    "Line-search cap over the basic update");
    cmd->add_option("--ess-floor", config.solver.line_search.ess_floor,
                    "Line-search ESS floor as a fraction of M");
    cmd->add_flag_function(
        "--no-line-search",
        [&config](int64_t) { config.solver.line_search.enabled = false; },
        "Use the basic update only");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampling-based EFCE solver for succinct extensive-form games"};
    app.require_subcommand(1);
    // TOML config: top-level file given before the subcommand, keys per
    // subcommand section, e.g. [solve] epsilon=1e-4. Flags override keys.
    app.set_config("--config", "", "TOML config file; sections per subcommand");

    efce::cli::RunConfig config;

    CLI::App* solve = app.add_subcommand("solve", "Run the solver and emit certificates");
    add_common_flags(solve, config);
    CLI::App* verify =
        app.add_subcommand("verify", "Exactly verify a certificate on an enumerable game");
    add_common_flags(verify, config);
    verify->add_option("--certificate", config.certificate_path, "Certificate to verify")
        ->required();
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "Run the exact-update reference on an enumerable game");
    add_common_flags(oracle_cmd, config);
    CLI::App* bench = app.add_subcommand("bench", "Sweep grid sizes and record cost vs Gamma");
    add_common_flags(bench, config);
    bench->add_option("--sides", config.bench_sides, "Grid side lengths")->delimiter(',');
    bench->add_option("--target-relative", config.bench_target_relative,
                      "Stop at this fraction of the initial regret");
    CLI::App* moderate =
        app.add_subcommand("moderate", "Replay a certificate as a suggestion stream");
    add_common_flags(moderate, config);
    moderate->add_option("--certificate", config.certificate_path, "Certificate to replay")
        ->required();

    CLI11_PARSE(app, argc, argv);

    config.mode = app.get_subcommands().front()->get_name();
    try {
        const efce::cli::RunReport report = efce::cli::run(config);
        if (config.mode == "moderate") {
            std::cout << report.extra.at("stream").get<std::string>();
        } else if (config.mode == "verify") {
            std::cout << report.extra.dump(2) << '\n';
        } else {
            for (const auto& seed : report.seeds) {
                std::cout << "seed=" << seed.seed << " status=" << seed.status
                          << " rounds=" << seed.rounds << " r_star=" << seed.final_r_star
                          << '\n';
            }
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
