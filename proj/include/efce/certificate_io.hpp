#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "efce/oracle.hpp"
#include "efce/solver.hpp"

namespace efce {

using OrderedJson = nlohmann::ordered_json;

inline OrderedJson certificate_to_json(const EquilibriumCertificate& cert) {
    OrderedJson j;
    j["game"] = {{"kind", cert.game_kind},
                 {"params", cert.game_params},
                 {"gamma", cert.gamma},
                 {"r_max", cert.r_max},
                 {"players", cert.num_players}};
    j["status"] = cert.status;
    j["epsilon"] = cert.epsilon;
    j["epsilon_mode"] = cert.epsilon_mode;
    j["w"] = cert.w;
    j["rounds"] = cert.rounds;
    j["final_r_star"] = cert.final_r_star;
    j["initial_r_star"] = cert.initial_r_star;
    j["lambda"] = OrderedJson::array();
    for (const DeviationRecord& rec : cert.lambda) {
        OrderedJson dev = OrderedJson::array();
        for (auto& [set, action] : rec.dev) dev.push_back({set, action});
        j["lambda"].push_back({{"player", rec.player},
                               {"info_set", rec.info_set},
                               {"action", rec.action},
                               {"dev", dev},
                               {"value", rec.lambda}});
    }
    j["scenarios"] = {{"mode", cert.scenario_mode},
                      {"seed", cert.scenario_seed},
                      {"count", cert.scenario_count}};
    j["sampler"] = {{"seed", cert.seed},
                    {"burnin_mult", cert.burnin_mult},
                    {"thin_mult", cert.thin_mult},
                    {"chains", cert.chains}};
    j["sample"] = OrderedJson::array();
    for (const DrawRecord& rec : cert.sample) {
        OrderedJson fixed = OrderedJson::array();
        for (auto& [set, action] : rec.fixed) fixed.push_back({set, action});
        j["sample"].push_back(
            {{"fixed", fixed}, {"slice_seed", rec.slice_seed}, {"weight", rec.weight}});
    }
    j["expected_utilities"] = cert.expected_utilities;
    j["wall_ms"] = cert.wall_ms;
    j["peak_mem_bytes"] = cert.peak_mem_bytes;
    return j;
}

inline EquilibriumCertificate certificate_from_json(const OrderedJson& j) {
    EquilibriumCertificate cert;
    cert.game_kind = j.at("game").at("kind").get<std::string>();
    if (j.at("game").contains("params")) {
        for (auto& [key, value] : j.at("game").at("params").items())
            cert.game_params[key] = value.get<std::string>();
    }
    cert.gamma = j.at("game").at("gamma").get<double>();
    cert.r_max = j.at("game").at("r_max").get<double>();
    cert.num_players = j.at("game").at("players").get<int>();
    cert.status = j.at("status").get<std::string>();
    cert.epsilon = j.at("epsilon").get<double>();
    cert.epsilon_mode = j.at("epsilon_mode").get<std::string>();
    cert.w = j.at("w").get<std::vector<double>>();
    cert.rounds = j.at("rounds").get<long long>();
    cert.final_r_star = j.at("final_r_star").get<double>();
    cert.initial_r_star = j.at("initial_r_star").get<double>();
    for (auto& rec : j.at("lambda")) {
        DeviationRecord dr;
        dr.player = rec.at("player").get<int>();
        dr.info_set = rec.at("info_set").get<uint64_t>();
        dr.action = rec.at("action").get<int>();
        for (auto& entry : rec.at("dev"))
            dr.dev.push_back({entry.at(0).get<uint64_t>(), entry.at(1).get<int>()});
        dr.lambda = rec.at("value").get<double>();
        cert.lambda.push_back(std::move(dr));
    }
    cert.scenario_mode = j.at("scenarios").at("mode").get<std::string>();
    cert.scenario_seed = j.at("scenarios").at("seed").get<uint64_t>();
    cert.scenario_count = j.at("scenarios").at("count").get<long long>();
    cert.seed = j.at("sampler").at("seed").get<uint64_t>();
    cert.burnin_mult = j.at("sampler").at("burnin_mult").get<double>();
    cert.thin_mult = j.at("sampler").at("thin_mult").get<double>();
    cert.chains = j.at("sampler").at("chains").get<int>();
    for (auto& rec : j.at("sample")) {
        DrawRecord dr;
        for (auto& entry : rec.at("fixed"))
            dr.fixed.push_back({entry.at(0).get<uint64_t>(), entry.at(1).get<int>()});
        dr.slice_seed = rec.at("slice_seed").get<uint64_t>();
        dr.weight = rec.at("weight").get<double>();
        cert.sample.push_back(std::move(dr));
    }
    cert.expected_utilities = j.at("expected_utilities").get<std::vector<double>>();
    cert.wall_ms = j.at("wall_ms").get<long long>();
    cert.peak_mem_bytes = j.at("peak_mem_bytes").get<long long>();
    return cert;
}

inline void write_certificate(const EquilibriumCertificate& cert, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot write certificate to " + path);
    out << certificate_to_json(cert).dump(2) << '\n';
}

inline EquilibriumCertificate read_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot read certificate from " + path);
    OrderedJson j;
    in >> j;
    return certificate_from_json(j);
}

inline OrderedJson verification_report_to_json(const oracle::VerificationReport& report) {
    OrderedJson j;
    j["max_regret"] = report.max_regret;
    j["deviations_checked"] = report.deviations_checked;
    j["epsilon"] = report.epsilon;
    j["is_epsilon_efce"] = report.is_epsilon_efce;
    if (!report.worst_deviation.is_identity()) {
        OrderedJson dev = OrderedJson::array();
        for (auto& [set, action] : report.worst_deviation.dev()) dev.push_back({set.v, action});
        j["worst_deviation"] = {{"player", report.worst_deviation.trigger().player.index},
                                {"info_set", report.worst_deviation.trigger().info_set.v},
                                {"action", report.worst_deviation.trigger().action},
                                {"dev", dev}};
    } else {
        j["worst_deviation"] = nullptr;
    }
    return j;
}

}  // namespace efce
