#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "lbsim/baseline.hpp"
#include "lbsim/metrics.hpp"
#include "lbsim/sim.hpp"

namespace lbsim {

struct ProcessSpec {
    std::string kind;                 // poisson | constant | two_point | class_a
    std::int64_t cap = kDefaultCap;
    std::int64_t v = 0;               // two_point support
    std::vector<std::int64_t> v_per_server;  // optional per-server two_point support
    double p0 = 0.0;                  // class_a idle probability
};

/// One batch-experiment description: a server farm template plus a sweep
/// grid of loads and policies. Arrival rates are derived per point as
/// lambda = rho * mu_total.
struct Scenario {
    std::string name;
    bool stable_regime = true;
    int servers = 1;
    std::vector<double> rates;
    ProcessSpec arrival;
    ProcessSpec service;
    std::int64_t horizon = 2'000'000;
    double warmup_fraction = 0.1;
    int batches = 30;
    std::uint64_t seed = 1;
    int replications = 1;
    double instability_guard = 50.0;
    bool coupled_baseline = false;
    bool plot = false;
    std::vector<double> rho_values;
    std::vector<PolicySpec> policies;      // after T-expansion
    std::string output;                    // csv file name

    double mu_total() const {
        double s = 0.0;
        for (double v : rates) s += v;
        return s;
    }

    void validate() const {
        if (servers < 1) throw std::invalid_argument("scenario: servers must be >= 1");
        if (static_cast<int>(rates.size()) != servers)
            throw std::invalid_argument("scenario: rates size must match servers");
        if (rho_values.empty() || policies.empty())
            throw std::invalid_argument("scenario: sweep must list rho values and policies");
        if (horizon < 10) throw std::invalid_argument("scenario: horizon too small");
        if (replications < 1) throw std::invalid_argument("scenario: replications must be >= 1");
        if (stable_regime) {
            for (double rho : rho_values) {
                if (!(rho > 0.0 && rho < 1.0))
                    throw std::invalid_argument(
                        "scenario: stable-regime rho must lie in (0,1), got " +
                        std::to_string(rho));
            }
        }
        for (const auto& p : policies) p.validate(servers);
    }
};

namespace detail {

inline PolicySpec parse_policy(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    auto d = j.value("d", 0);
    auto m = j.value("m", 0);
    auto T = j.value("T", std::int64_t{0});
    if (kind == "Random") return PolicySpec::random();
    if (kind == "WeightedRandom" || kind == "WRandom") return PolicySpec::weighted_random();
    if (kind == "JSQ") return PolicySpec::jsq();
    if (kind == "SQ") return m > 0 ? PolicySpec::power_of_d_mem(d, m) : PolicySpec::power_of_d(d);
    if (kind == "JIQ") return PolicySpec::jiq();
    if (kind == "JBT") return PolicySpec::jbt(d, T);
    if (kind == "JBTG") return PolicySpec::jbtg(d, T);
    if (kind == "JBTAvg") return PolicySpec::jbt_avg(T);
    throw std::invalid_argument("unknown policy kind: " + kind);
}

inline ProcessSpec parse_process(const nlohmann::json& j) {
    ProcessSpec p;
    p.kind = j.at("kind").get<std::string>();
    p.cap = j.value("cap", kDefaultCap);
    if (j.contains("v")) {
        if (j["v"].is_array()) p.v_per_server = j["v"].get<std::vector<std::int64_t>>();
        else p.v = j["v"].get<std::int64_t>();
    }
    p.p0 = j.value("p0", 0.0);
    return p;
}

inline ArrivalSpec make_arrival(const ProcessSpec& p, double lambda) {
    if (p.kind == "poisson") return ArrivalSpec::poisson(lambda, p.cap);
    if (p.kind == "constant") {
        auto a = static_cast<std::int64_t>(lambda + 0.5);
        if (std::abs(lambda - static_cast<double>(a)) > 1e-9)
            throw std::invalid_argument("constant arrival needs an integer rate");
        return ArrivalSpec::constant(a);
    }
    if (p.kind == "two_point") return ArrivalSpec::two_point(p.v, lambda / static_cast<double>(p.v));
    if (p.kind == "class_a") return ArrivalSpec::class_a(p.p0, lambda);
    throw std::invalid_argument("unknown arrival kind: " + p.kind);
}

inline ServiceSpec make_service(const ProcessSpec& p, double rate, int server) {
    if (p.kind == "poisson") return ServiceSpec::poisson(rate, p.cap);
    if (p.kind == "constant") {
        auto v = static_cast<std::int64_t>(rate + 0.5);
        if (std::abs(rate - static_cast<double>(v)) > 1e-9)
            throw std::invalid_argument("constant service needs an integer rate");
        return ServiceSpec::constant(v);
    }
    if (p.kind == "two_point") {
        std::int64_t v = p.v;
        if (!p.v_per_server.empty()) v = p.v_per_server[server];
        return ServiceSpec::two_point(v, rate / static_cast<double>(v));
    }
    throw std::invalid_argument("unknown service kind: " + p.kind);
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
                   ? c : '_';
    }
    return out;
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
    Scenario sc;
    sc.name = j.at("name").get<std::string>();
    sc.stable_regime = j.value("stable_regime", true);
    sc.servers = j.at("servers").get<int>();
    if (j.contains("rates")) sc.rates = j["rates"].get<std::vector<double>>();
    else sc.rates.assign(sc.servers, j.value("rate", 1.0));
    sc.arrival = detail::parse_process(j.at("arrival"));
    sc.service = detail::parse_process(j.at("service"));
    sc.horizon = j.value("horizon", std::int64_t{2'000'000});
    sc.warmup_fraction = j.value("warmup_fraction", 0.1);
    sc.batches = j.value("batches", 30);
    sc.seed = j.value("seed", std::uint64_t{1});
    sc.replications = j.value("replications", 1);
    sc.instability_guard = j.value("instability_guard", 50.0);
    sc.coupled_baseline = j.value("coupled_baseline", false);
    sc.output = j.value("output", sc.name + ".csv");

    const auto& sweep = j.at("sweep");
    sc.rho_values = sweep.at("rho").get<std::vector<double>>();
    std::vector<std::int64_t> t_values;
    if (sweep.contains("T")) t_values = sweep["T"].get<std::vector<std::int64_t>>();
    for (const auto& pj : sweep.at("policies")) {
        PolicySpec p = detail::parse_policy(pj);
        if (!t_values.empty() && p.threshold_based()) {
            for (auto T : t_values) {
                PolicySpec q = p;
                q.T = T;
                sc.policies.push_back(q);
            }
        } else {
            sc.policies.push_back(p);
        }
    }
    sc.validate();
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j;
    in >> j;
    return parse_scenario(j);
}

inline SystemConfig scenario_config(const Scenario& sc, double rho, const PolicySpec& policy) {
    SystemConfig cfg;
    cfg.n_servers = sc.servers;
    cfg.mu = sc.rates;
    const double lambda = rho * sc.mu_total();
    cfg.arrival = detail::make_arrival(sc.arrival, lambda);
    cfg.service.clear();
    for (int n = 0; n < sc.servers; ++n)
        cfg.service.push_back(detail::make_service(sc.service, sc.rates[n], n));
    cfg.policy = policy;
    cfg.horizon = sc.horizon;
    cfg.seed = sc.seed;
    cfg.warmup = static_cast<std::int64_t>(static_cast<double>(sc.horizon) * sc.warmup_fraction);
    cfg.batches = sc.batches;
    cfg.instability_guard = sc.instability_guard;
    return cfg;
}

/// Replication-aggregated result of one sweep cell.
struct SweepRow {
    std::string policy_label;
    double rho = 0.0;
    std::int64_t T = 0;
    int d = 0;
    int m = 0;
    double mean_response = 0.0;  // Little's-law estimate, averaged over reps
    double ci95 = 0.0;
    double msgs_per_arrival = 0.0;
    double mean_total_queue = 0.0;
    double eps = 0.0;
    double scaled_queue = 0.0;
    double zeta_half = 0.0;
    double ratio = 0.0;
    std::int64_t slots = 0;
    std::uint64_t seed = 0;
    bool unstable = false;
    std::vector<RunStatistics> reps;
};

namespace detail {

inline SweepRow aggregate_row(const SystemConfig& cfg, const std::string& label,
                              double rho, const std::vector<RunStatistics>& reps) {
    SweepRow row;
    row.policy_label = label;
    row.rho = rho;
    row.T = cfg.policy.T;
    row.d = cfg.policy.d;
    row.m = cfg.policy.m;
    row.slots = cfg.horizon;
    row.seed = cfg.seed;
    row.reps = reps;

    std::vector<double> responses;
    double msgs = 0.0, queue = 0.0;
    for (const auto& r : reps) {
        responses.push_back(r.mean_response_little);
        msgs += (static_cast<double>(r.push_msgs + r.pull_msgs)) /
                std::max<double>(1.0, static_cast<double>(r.arrival_events));
        queue += r.mean_total_queue;
        row.unstable = row.unstable || r.unstable_suspect;
    }
    const auto k = reps.size();
    for (double v : responses) row.mean_response += v;
    row.mean_response /= static_cast<double>(k);
    row.msgs_per_arrival = msgs / static_cast<double>(k);
    row.mean_total_queue = queue / static_cast<double>(k);
    if (k >= 2) {
        if (auto ci = batch_ci(responses)) row.ci95 = ci->second;
    } else if (!reps.empty() && reps.front().ci_defined) {
        row.ci95 = reps.front().ci_halfwidth;
    }
    row.eps = cfg.epsilon();
    row.scaled_queue = row.eps * row.mean_total_queue;
    row.zeta_half =
        (cfg.arrival.variance() + cfg.service_variance_total() + row.eps * row.eps) / 2.0;
    row.ratio = row.zeta_half > 0.0 ? row.scaled_queue / row.zeta_half : 0.0;
    return row;
}

}  // namespace detail

/// Runs the whole sweep grid. Tasks (point x policy x replication) execute on
/// `jobs` workers pulling from a shared queue; every task derives its RNG
/// from (scenario seed, replication) alone, so the aggregate is byte-stable
/// under any worker count.
inline std::vector<SweepRow> run_sweep(const Scenario& sc, int jobs = 1) {
    struct Task {
        int point;
        int policy;
        int rep;
        bool pooled;
    };
    std::vector<Task> tasks;
    const int n_pol = static_cast<int>(sc.policies.size());
    for (int pt = 0; pt < static_cast<int>(sc.rho_values.size()); ++pt) {
        for (int pol = 0; pol < n_pol; ++pol)
            for (int rep = 0; rep < sc.replications; ++rep)
                tasks.push_back({pt, pol, rep, false});
        if (sc.coupled_baseline)
            for (int rep = 0; rep < sc.replications; ++rep)
                tasks.push_back({pt, n_pol, rep, true});
    }

    std::vector<RunStatistics> results(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& tk = tasks[i];
            const double rho = sc.rho_values[tk.point];
            if (tk.pooled) {
                auto cfg = scenario_config(sc, rho, PolicySpec::random());
                results[i] = PooledSimulator(cfg, tk.rep).run();
            } else {
                auto cfg = scenario_config(sc, rho, sc.policies[tk.policy]);
                results[i] = Simulator(cfg, tk.rep).run();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Ordered reduce keyed by (point, policy).
    std::vector<SweepRow> rows;
    std::size_t idx = 0;
    for (int pt = 0; pt < static_cast<int>(sc.rho_values.size()); ++pt) {
        const double rho = sc.rho_values[pt];
        for (int pol = 0; pol < n_pol; ++pol) {
            std::vector<RunStatistics> reps(results.begin() + idx,
                                            results.begin() + idx + sc.replications);
            idx += sc.replications;
            auto cfg = scenario_config(sc, rho, sc.policies[pol]);
            rows.push_back(detail::aggregate_row(cfg, sc.policies[pol].label(), rho, reps));
        }
        if (sc.coupled_baseline) {
            std::vector<RunStatistics> reps(results.begin() + idx,
                                            results.begin() + idx + sc.replications);
            idx += sc.replications;
            auto cfg = scenario_config(sc, rho, PolicySpec::random());
            rows.push_back(detail::aggregate_row(cfg, "POOLED", rho, reps));
        }
    }
    return rows;
}

inline std::string csv_header() {
    return "policy,N,rho,arrival_kind,service_kind,T,d,m,mean_response,ci95,"
           "msgs_per_arrival,eps,scaled_queue,zeta_half,ratio,slots,seed,unstable";
}

inline std::string csv_row(const Scenario& sc, const SweepRow& r) {
    using detail::fmt;
    std::string s;
    s += r.policy_label + ",";
    s += std::to_string(sc.servers) + ",";
    s += fmt(r.rho) + ",";
    s += sc.arrival.kind + ",";
    s += sc.service.kind + ",";
    s += std::to_string(r.T) + ",";
    s += std::to_string(r.d) + ",";
    s += std::to_string(r.m) + ",";
    s += fmt(r.mean_response) + ",";
    s += fmt(r.ci95) + ",";
    s += fmt(r.msgs_per_arrival) + ",";
    s += fmt(r.eps) + ",";
    s += fmt(r.scaled_queue) + ",";
    s += fmt(r.zeta_half) + ",";
    s += fmt(r.ratio) + ",";
    s += std::to_string(r.slots) + ",";
    s += std::to_string(r.seed) + ",";
    s += (r.unstable ? "1" : "0");
    return s;
}

/// Executes the scenario and writes its CSV (plus optional per-policy plot
/// data) under out_dir. Returns the CSV path.
inline std::filesystem::path run_scenario(const Scenario& sc,
                                          const std::filesystem::path& out_dir,
                                          int jobs = 1, bool plot = false) {
    std::filesystem::create_directories(out_dir);
    auto rows = run_sweep(sc, jobs);
    const auto csv_path = out_dir / sc.output;
    {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot write " + csv_path.string());
        out << csv_header() << "\n";
        for (const auto& r : rows) out << csv_row(sc, r) << "\n";
    }
    if (plot) {
        // One two-column file per policy: x is rho (load sweeps) or T
        // (message sweeps), y is response; a second file carries messages.
        const bool t_sweep = sc.rho_values.size() == 1;
        std::vector<std::string> labels;
        for (const auto& r : rows) {
            if (std::find(labels.begin(), labels.end(), r.policy_label) == labels.end())
                labels.push_back(r.policy_label);
        }
        for (const auto& label : labels) {
            std::ofstream delay(out_dir / (sc.name + "_delay_" + detail::sanitize(label) + ".dat"));
            std::ofstream msgs(out_dir / (sc.name + "_msgs_" + detail::sanitize(label) + ".dat"));
            for (const auto& r : rows) {
                if (r.policy_label != label) continue;
                const double x = t_sweep ? static_cast<double>(r.T) : r.rho;
                delay << detail::fmt(x) << " " << detail::fmt(r.mean_response) << "\n";
                msgs << detail::fmt(x) << " " << detail::fmt(r.msgs_per_arrival) << "\n";
            }
        }
    }
    return csv_path;
}

}  // namespace lbsim
