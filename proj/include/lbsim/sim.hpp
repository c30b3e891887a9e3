#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "lbsim/core.hpp"
#include "lbsim/metrics.hpp"
#include "lbsim/policies.hpp"
#include "lbsim/rng.hpp"
#include "lbsim/stochastic.hpp"

namespace lbsim {

/// Full description of one experiment: the server farm, its arrival and
/// service processes, the dispatching policy, and the measurement plan.
struct SystemConfig {
    int n_servers = 1;
    std::vector<double> mu;             // declared service rates
    ArrivalSpec arrival = ArrivalSpec::constant(0);
    std::vector<ServiceSpec> service;   // one per server
    PolicySpec policy;
    std::int64_t horizon = 2'000'000;
    std::uint64_t seed = 1;
    std::int64_t warmup = 0;            // slots discarded before statistics
    int batches = 30;
    double instability_guard = 50.0;    // last-decile mean vs first-decile mean

    static SystemConfig homogeneous(int n, double rate, ArrivalSpec arr, ServiceSpec svc,
                                    PolicySpec pol, std::int64_t horizon, std::uint64_t seed) {
        SystemConfig c;
        c.n_servers = n;
        c.mu.assign(n, rate);
        c.arrival = std::move(arr);
        c.service.assign(n, std::move(svc));
        c.policy = pol;
        c.horizon = horizon;
        c.seed = seed;
        c.warmup = horizon / 10;
        return c;
    }

    double mu_total() const {
        double s = 0.0;
        for (double v : mu) s += v;
        return s;
    }
    double lambda() const { return arrival.mean(); }
    double epsilon() const { return mu_total() - lambda(); }
    double rho() const { return lambda() / mu_total(); }
    double service_variance_total() const {
        double s = 0.0;
        for (const auto& sv : service) s += sv.variance();
        return s;
    }

    void validate() const {
        if (n_servers < 1) throw std::invalid_argument("need at least one server");
        if (static_cast<int>(mu.size()) != n_servers ||
            static_cast<int>(service.size()) != n_servers)
            throw std::invalid_argument("mu/service size must match server count");
        for (double v : mu)
            if (v <= 0.0) throw std::invalid_argument("service rates must be > 0");
        if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
        if (warmup < 0 || warmup >= horizon)
            throw std::invalid_argument("warmup must be in [0, horizon)");
        if (batches < 1) throw std::invalid_argument("batches must be >= 1");
        policy.validate(n_servers);
    }
};

/// Z(t) = (Q(t), m(t)) plus the per-server FIFOs of arrival-slot stamps that
/// make per-job response times observable.
struct SystemState {
    std::int64_t t = 0;
    QueueVector q;
    MemoryState mem;
    std::vector<std::deque<std::int64_t>> fifo;

    static SystemState initial(const SystemConfig& cfg) {
        SystemState s;
        s.q.assign(cfg.n_servers, 0);
        s.mem = MemoryState::initial(cfg.policy, cfg.n_servers);
        s.fifo.resize(cfg.n_servers);
        return s;
    }
};

/// Queue dynamics of one slot, given the dispatch decision and the offered
/// service vector: arrivals join the destination FIFO, each server serves
/// min(Q_n + A_n, S_n) jobs in FIFO order, and the leftover capacity is the
/// unused service. Fills `out` and advances `state` by one slot.
inline void advance_slot(SystemState& state, int dest, std::int64_t a_total,
                         const std::vector<std::int64_t>& offered, SlotOutcome& out) {
    out.a_total = a_total;
    out.dest = a_total > 0 ? dest : -1;
    if (a_total > 0) {
        auto& fifo = state.fifo[dest];
        for (std::int64_t j = 0; j < a_total; ++j) fifo.push_back(state.t);
        state.q[dest] += a_total;
    }
    for (std::size_t n = 0; n < state.q.size(); ++n) {
        out.offered[n] = offered[n];
        const std::int64_t served = std::min(offered[n], state.q[n]);
        out.unused[n] = offered[n] - served;
        auto& fifo = state.fifo[n];
        for (std::int64_t j = 0; j < served; ++j) {
            out.departures.push_back({static_cast<int>(n), state.t - fifo.front() + 1});
            fifo.pop_front();
        }
        state.q[n] -= served;
    }
    ++state.t;
}

/// Time-slotted engine. Each step runs the fixed intra-slot sequence:
/// sample arrivals -> dispatch on (Q(t), m(t)) -> sample services -> apply
/// the queue dynamics with FIFO departures -> end-of-slot policy hooks.
class Simulator {
public:
    explicit Simulator(SystemConfig cfg, std::uint64_t replication = 0)
        : cfg_(std::move(cfg)),
          run_seed_(derive_seed(cfg_.seed, replication)),
          arrival_rng_(run_seed_, stream_id::arrival),
          policy_rng_(run_seed_, stream_id::policy),
          state_(SystemState::initial(cfg_)) {
        cfg_.validate();
        service_rngs_.reserve(cfg_.n_servers);
        for (int n = 0; n < cfg_.n_servers; ++n) {
            service_rngs_.emplace_back(run_seed_, stream_id::service_base + n);
        }
        outcome_.reset(cfg_.n_servers);
    }

    const SystemConfig& config() const { return cfg_; }
    const SystemState& state() const { return state_; }

    const SlotOutcome& step() {
        outcome_.reset(cfg_.n_servers);
        const std::int64_t a_total = cfg_.arrival.sample(arrival_rng_);

        // Dispatch (and its messages) only happen on slots with arrivals.
        int dest = -1;
        if (a_total > 0) {
            auto d = dispatch(cfg_.policy, state_.q, state_.mem, cfg_.mu, policy_rng_);
            dest = d.dest;
            outcome_.push_msgs += d.push_msgs;
        }

        offered_.resize(cfg_.n_servers);
        for (int n = 0; n < cfg_.n_servers; ++n) {
            offered_[n] = cfg_.service[n].sample(service_rngs_[n]);
        }

        const std::int64_t slot = state_.t;
        advance_slot(state_, dest, a_total, offered_, outcome_);

        auto eos = end_of_slot(cfg_.policy, state_.q, state_.mem, slot, policy_rng_);
        outcome_.pull_msgs += eos.pull_msgs;
        outcome_.push_msgs += eos.push_msgs;
        return outcome_;
    }

    /// Drive the configured horizon: skip `warmup` slots, stream the rest
    /// into the accumulator and per-batch windows, and compare the first and
    /// last deciles of the raw trajectory for the instability flag. The
    /// result is a pure function of (config, replication).
    RunStatistics run() {
        StatsAccumulator acc;
        const std::int64_t measured = cfg_.horizon - cfg_.warmup;
        const std::int64_t batch_len = std::max<std::int64_t>(1, measured / cfg_.batches);
        std::vector<double> batch_means;
        double batch_queue_sum = 0.0;
        std::int64_t batch_count = 0;

        const std::int64_t decile = std::max<std::int64_t>(1, cfg_.horizon / 10);
        double first_decile_sum = 0.0, last_decile_sum = 0.0;

        for (std::int64_t t = 0; t < cfg_.horizon; ++t) {
            const auto& out = step();
            std::int64_t total = 0;
            for (auto v : state_.q) total += v;
            if (t < decile) first_decile_sum += static_cast<double>(total);
            if (t >= cfg_.horizon - decile) last_decile_sum += static_cast<double>(total);
            if (t < cfg_.warmup) continue;
            acc.accumulate(out, state_.q);
            batch_queue_sum += static_cast<double>(total);
            if (++batch_count == batch_len &&
                static_cast<int>(batch_means.size()) < cfg_.batches) {
                const double lam = cfg_.lambda();
                batch_means.push_back(
                    lam > 0.0 ? batch_queue_sum / static_cast<double>(batch_count) / lam : 0.0);
                batch_queue_sum = 0.0;
                batch_count = 0;
            }
        }

        auto st = acc.finalize(cfg_.lambda(), batch_means);
        const double first_mean = first_decile_sum / static_cast<double>(decile);
        const double last_mean = last_decile_sum / static_cast<double>(decile);
        st.unstable_suspect = last_mean > cfg_.instability_guard * std::max(first_mean, 1e-12);
        return st;
    }

private:
    SystemConfig cfg_;
    std::uint64_t run_seed_;
    RngStream arrival_rng_;
    RngStream policy_rng_;
    std::vector<RngStream> service_rngs_;
    SystemState state_;
    SlotOutcome outcome_;
    std::vector<std::int64_t> offered_;
};

inline RunStatistics run(const SystemConfig& cfg, std::uint64_t replication = 0) {
    return Simulator(cfg, replication).run();
}

}  // namespace lbsim
