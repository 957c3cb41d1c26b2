#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "efce/cli.hpp"

using namespace efce;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Convergence CSV with the volatile telemetry columns blanked; the spec's
// byte-identity requirement excludes timing-like fields.
std::string stable_body(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t cut = line.size();
        int commas = 0;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == ',' && ++commas == 6) {
                cut = i;
                break;
            }
        }
        out << line.substr(0, cut) << '\n';
    }
    return out.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("efce_test_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("solve mode writes the pinned CSV schema and certificate") {
    TempDir dir("solve");
    cli::RunConfig config;
    config.mode = "solve";
    config.game.kind = "jobmarket";
    config.solver.epsilon = 1e-4;
    config.solver.max_rounds = 40;
    config.solver.seed = 41;
    config.repeat = 2;
    config.out_dir = dir.path.string();
    const cli::RunReport report = cli::run(config);
    REQUIRE(report.seeds.size() == 2);

    const std::string csv = slurp(report.seeds[0].convergence_path);
    CHECK(csv.rfind("round,r_star,psi_size,M_t,ess,lambda_l1,wall_ms,peak_mem_bytes\n", 0) ==
          0);
    CHECK(fs::exists(report.seeds[0].certificate_path));
    CHECK(fs::exists(dir.path / "report.json"));
    CHECK(fs::exists(dir.path / "plots" / "regret_vs_round.csv"));
    CHECK(fs::exists(dir.path / "plots" / "payoff_scatter.csv"));
    CHECK(fs::exists(dir.path / "plots" / "regret_slopes.csv"));

    const std::string scatter = slurp(dir.path / "plots" / "payoff_scatter.csv");
    CHECK(scatter.rfind("seed,max_entropy,w_1,w_2,payoff_1,payoff_2\n", 0) == 0);
    CHECK(scatter.find("41,1,") != std::string::npos);  // w = 0: max-entropy flag set
}

TEST_CASE("identical configs and seeds reproduce identical CSV bodies") {
    cli::RunConfig config;
    config.mode = "solve";
    config.game.kind = "jobmarket";
    config.solver.epsilon = 1e-4;
    config.solver.max_rounds = 40;
    config.solver.seed = 77;
    config.repeat = 1;

    TempDir dir_a("rerun_a");
    config.out_dir = dir_a.path.string();
    const cli::RunReport a = cli::run(config);
    TempDir dir_b("rerun_b");
    config.out_dir = dir_b.path.string();
    const cli::RunReport b = cli::run(config);

    const std::string csv_a = slurp(a.seeds[0].convergence_path);
    const std::string csv_b = slurp(b.seeds[0].convergence_path);
    CHECK(stable_body(csv_a) == stable_body(csv_b));
    CHECK(stable_body(csv_a).size() > 40);
}

TEST_CASE("certificate JSON round-trips exactly") {
    games::JobMarketGame game;
    SolverConfig config;
    config.epsilon = 1e-4;
    config.max_rounds = 40;
    config.seed = 5;
    config.w = {1.0, 0.5};
    const SolveResult result = solve(game, config);
    EquilibriumCertificate cert = result.certificate;
    cert.game_kind = "jobmarket";

    TempDir dir("cert");
    const std::string path = (dir.path / "certificate.json").string();
    write_certificate(cert, path);
    const EquilibriumCertificate loaded = read_certificate(path);
    CHECK(loaded.status == cert.status);
    CHECK(loaded.epsilon == cert.epsilon);
    CHECK(loaded.w == cert.w);
    CHECK(loaded.rounds == cert.rounds);
    CHECK(loaded.final_r_star == cert.final_r_star);
    CHECK(loaded.lambda.size() == cert.lambda.size());
    for (std::size_t i = 0; i < cert.lambda.size(); ++i) {
        CHECK(loaded.lambda[i].info_set == cert.lambda[i].info_set);
        CHECK(loaded.lambda[i].lambda == cert.lambda[i].lambda);
        CHECK(loaded.lambda[i].dev == cert.lambda[i].dev);
    }
    CHECK(loaded.sample.size() == cert.sample.size());
    for (std::size_t i = 0; i < cert.sample.size(); ++i) {
        CHECK(loaded.sample[i].fixed == cert.sample[i].fixed);
        CHECK(loaded.sample[i].slice_seed == cert.sample[i].slice_seed);
        CHECK(loaded.sample[i].weight == cert.sample[i].weight);
    }
    CHECK(loaded.scenario_mode == cert.scenario_mode);
    CHECK(loaded.expected_utilities == cert.expected_utilities);
}

TEST_CASE("verify mode accepts a converged certificate") {
    TempDir dir("verify");
    cli::RunConfig solve_config;
    solve_config.mode = "solve";
    solve_config.game.kind = "jobmarket";
    solve_config.solver.epsilon = 1e-4;
    solve_config.solver.max_rounds = 60;
    solve_config.solver.seed = 19;
    solve_config.repeat = 1;
    solve_config.out_dir = dir.path.string();
    const cli::RunReport solved = cli::run(solve_config);
    REQUIRE(solved.seeds[0].status == "converged");

    cli::RunConfig verify_config;
    verify_config.mode = "verify";
    verify_config.certificate_path = solved.seeds[0].certificate_path;
    verify_config.out_dir = (dir.path / "verdict").string();
    const cli::RunReport verdict = cli::run(verify_config);
    CHECK(verdict.extra.at("is_epsilon_efce").get<bool>());
    CHECK(fs::exists(dir.path / "verdict" / "verification.json"));
}

TEST_CASE("bench mode emits the gamma table in grid order") {
    TempDir dir("bench");
    cli::RunConfig config;
    config.mode = "bench";
    config.bench_sides = {2, 3};
    config.bench_target_relative = 0.5;
    config.solver.epsilon = 1e-9;
    config.solver.max_rounds = 400;
    config.solver.seed = 3;
    config.repeat = 1;
    config.out_dir = dir.path.string();
    const cli::RunReport report = cli::run(config);
    REQUIRE(report.seeds.size() == 2);
    CHECK(report.seeds[0].gamma == 12.0);
    CHECK(report.seeds[1].gamma == 27.0);
    const std::string bench = slurp(dir.path / "plots" / "bench.csv");
    CHECK(bench.rfind("gamma,seed,rounds,wall_ms,peak_mem_bytes\n", 0) == 0);
    CHECK(bench.find("\n12,") != std::string::npos);
    CHECK(bench.find("\n27,") != std::string::npos);
}

TEST_CASE("moderate mode replays a certificate as a deterministic stream") {
    TempDir dir("moderate");
    cli::RunConfig solve_config;
    solve_config.mode = "solve";
    solve_config.game.kind = "jobmarket";
    solve_config.solver.epsilon = 1e-4;
    solve_config.solver.w = {1.0, 1.0};
    solve_config.solver.max_rounds = 60;
    solve_config.solver.seed = 29;
    solve_config.repeat = 1;
    solve_config.out_dir = dir.path.string();
    const cli::RunReport solved = cli::run(solve_config);
    REQUIRE(solved.seeds[0].status == "converged");

    cli::RunConfig mod;
    mod.mode = "moderate";
    mod.certificate_path = solved.seeds[0].certificate_path;
    mod.solver.seed = 101;
    const cli::RunReport a = cli::run(mod);
    const cli::RunReport b = cli::run(mod);
    CHECK(a.extra.at("stream") == b.extra.at("stream"));
    const std::string stream = a.extra.at("stream").get<std::string>();
    CHECK(stream.find("player=1 info_set=1 suggestion=") != std::string::npos);
    CHECK(stream.find("utilities=") != std::string::npos);
}

TEST_CASE("oracle mode writes the exact trajectory") {
    TempDir dir("oracle");
    cli::RunConfig config;
    config.mode = "oracle";
    config.game.kind = "jobmarket";
    config.solver.epsilon = 0.1;
    config.solver.max_rounds = 100000;
    config.out_dir = dir.path.string();
    const cli::RunReport report = cli::run(config);
    CHECK(report.extra.at("final_max_regret").get<double>() <= 0.1);
    const std::string csv = slurp(dir.path / "exact_boost.csv");
    CHECK(csv.rfind("round,max_regret,z\n", 0) == 0);
}

TEST_CASE("unknown modes and bad repeats are configuration errors") {
    cli::RunConfig config;
    config.mode = "unknown";
    CHECK_THROWS_AS(cli::run(config), ConfigError);
    config.mode = "solve";
    config.repeat = 0;
    CHECK_THROWS_AS(cli::run(config), ConfigError);
}
