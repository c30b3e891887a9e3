// lbsim — batch experiment runner and tilt certification tool.
//
//   lbsim run <scenario.json> [--out DIR] [--jobs K] [--horizon S] [--plot]
//   lbsim certify --policy P --n N [--hetero FILE] [--d D] [--T T]
//                 [--trials K] [--seed S]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "lbsim/certify.hpp"
#include "lbsim/lbsim.hpp"
#include "lbsim/scenario.hpp"

namespace {

std::vector<lbsim::Rat> load_rates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rate file: " + path);
    std::vector<lbsim::Rat> rates;
    double v;
    while (in >> v) rates.push_back(lbsim::Rat::approx(v, 10'000));
    if (rates.empty()) throw std::runtime_error("rate file is empty: " + path);
    return rates;
}

lbsim::PolicySpec certify_policy(const std::string& name, int d, std::int64_t T) {
    using lbsim::PolicySpec;
    if (name == "JSQ") return PolicySpec::jsq();
    if (name == "SQ") return PolicySpec::power_of_d(d > 0 ? d : 2);
    if (name == "Random") return PolicySpec::random();
    if (name == "WRandom") return PolicySpec::weighted_random();
    if (name == "JBT") return PolicySpec::jbt(d > 0 ? d : 2, T > 0 ? T : 1000);
    if (name == "JBTG") return PolicySpec::jbtg(d > 0 ? d : 2, T > 0 ? T : 1000);
    throw CLI::ValidationError("--policy", "unsupported policy: " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discrete-time load balancing simulator"};
    app.require_subcommand(1);

    // run
    std::string scenario_path;
    std::string out_dir = "out";
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    std::int64_t horizon_override = 0;
    bool plot = false;
    auto* run_cmd = app.add_subcommand("run", "run a scenario sweep, emit CSV");
    run_cmd->add_option("scenario", scenario_path, "scenario file (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--jobs", jobs, "worker threads");
    run_cmd->add_option("--horizon", horizon_override, "override slot count");
    run_cmd->add_flag("--plot", plot, "also write per-policy two-column data files");

    // certify
    std::string policy_name;
    int n_servers = 10;
    std::string hetero_file;
    int d = 0;
    std::int64_t T = 0;
    int trials = 1000;
    std::uint64_t seed = 7;
    auto* cert_cmd = app.add_subcommand("certify", "check tilt properties of a policy");
    cert_cmd->add_option("--policy", policy_name, "JSQ | SQ | Random | WRandom | JBT | JBTG")
        ->required();
    cert_cmd->add_option("--n", n_servers, "server count (homogeneous unit rates)");
    cert_cmd->add_option("--hetero", hetero_file, "file of per-server rates");
    cert_cmd->add_option("--d", d, "probe count for SQ/JBT/JBTG");
    cert_cmd->add_option("--T", T, "refresh period for JBT/JBTG");
    cert_cmd->add_option("--trials", trials, "random states to sample");
    cert_cmd->add_option("--seed", seed, "state-sampling seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            auto sc = lbsim::load_scenario(scenario_path);
            if (horizon_override > 0) sc.horizon = horizon_override;
            if (jobs < 1) jobs = 1;
            auto csv = lbsim::run_scenario(sc, out_dir, jobs, plot);
            std::cout << "wrote " << csv.string() << "\n";
            return 0;
        }
        if (*cert_cmd) {
            lbsim::tilt::CertifyOptions opt;
            opt.policy = certify_policy(policy_name, d, T);
            opt.mu = hetero_file.empty()
                         ? std::vector<lbsim::Rat>(n_servers, lbsim::Rat(1))
                         : load_rates(hetero_file);
            opt.trials = trials;
            opt.seed = seed;
            auto rep = lbsim::tilt::certify(opt);
            std::printf("policy: %s  servers: %zu  states: %lld\n",
                        opt.policy.label().c_str(), opt.mu.size(),
                        static_cast<long long>(rep.states));
            std::printf("tilted: %.1f%%  delta-tilted: %.1f%%\n",
                        100.0 * static_cast<double>(rep.tilted) / static_cast<double>(rep.states),
                        100.0 * static_cast<double>(rep.delta_tilted) /
                            static_cast<double>(rep.states));
            if (rep.have_witness)
                std::printf("min delta witness (refresh slots): %s = %.6f\n",
                            rep.min_witness.str().c_str(), rep.min_witness.to_double());
            std::printf("inner-product bound violations: %lld / %lld\n",
                        static_cast<long long>(rep.eq5_violations + rep.eq6_violations),
                        static_cast<long long>(rep.states));
            std::printf("drift bound violations: %lld / %lld\n",
                        static_cast<long long>(rep.drift_full_violations +
                                               rep.drift_perp_violations),
                        static_cast<long long>(rep.states));
            return rep.clean() ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
