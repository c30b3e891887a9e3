#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <vector>

#include "lbsim/metrics.hpp"
#include "lbsim/rng.hpp"
#include "lbsim/sim.hpp"

namespace lbsim {

/// Single FCFS queue that merges the total resource of the N servers:
/// a(t) = A_sigma(t), s(t) = sum_n S_n(t). Lower-bounds the mean total queue
/// of every dispatching policy on the same arrival stream.
struct PooledState {
    std::int64_t q = 0;
    std::int64_t u = 0;  // last slot's unused service
};

inline PooledState pooled_step(PooledState state, std::int64_t a, std::int64_t s) {
    PooledState next;
    next.q = std::max<std::int64_t>(state.q + a - s, 0);
    next.u = std::max<std::int64_t>(s - state.q - a, 0);
    return next;
}

/// Runs the resource-pooled comparator for `cfg`. The arrival stream and the
/// per-server service streams are drawn from the same (seed, stream-id)
/// layout as Simulator, so a pooled run paired with a policy run shares its
/// arrival sample path and sums the very same service samples.
class PooledSimulator {
public:
    explicit PooledSimulator(SystemConfig cfg, std::uint64_t replication = 0)
        : cfg_(std::move(cfg)),
          run_seed_(derive_seed(cfg_.seed, replication)),
          arrival_rng_(run_seed_, stream_id::arrival) {
        cfg_.validate();
        for (int n = 0; n < cfg_.n_servers; ++n) {
            service_rngs_.emplace_back(run_seed_, stream_id::service_base + n);
        }
    }

    const PooledState& state() const { return state_; }

    RunStatistics run() {
        StatsAccumulator acc;
        const std::int64_t measured = cfg_.horizon - cfg_.warmup;
        const std::int64_t batch_len = std::max<std::int64_t>(1, measured / cfg_.batches);
        std::vector<double> batch_means;
        double batch_queue_sum = 0.0;
        std::int64_t batch_count = 0;
        double unused_sum = 0.0;

        SlotOutcome out;
        for (std::int64_t t = 0; t < cfg_.horizon; ++t) {
            out.reset(1);
            out.a_total = cfg_.arrival.sample(arrival_rng_);
            if (out.a_total > 0) out.dest = 0;
            std::int64_t s = 0;
            for (int n = 0; n < cfg_.n_servers; ++n) s += cfg_.service[n].sample(service_rngs_[n]);
            const std::int64_t available = state_.q + out.a_total;
            const std::int64_t served = std::min(s, available);
            out.offered[0] = s;
            out.unused[0] = s - served;
            for (std::int64_t j = 0; j < out.a_total; ++j) fifo_.push_back(t);
            for (std::int64_t j = 0; j < served; ++j) {
                out.departures.push_back({0, t - fifo_.front() + 1});
                fifo_.pop_front();
            }
            state_.q = available - served;
            state_.u = out.unused[0];

            if (t < cfg_.warmup) continue;
            acc.accumulate(out, {state_.q});
            unused_sum += static_cast<double>(state_.u);
            batch_queue_sum += static_cast<double>(state_.q);
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
        mean_unused_ = measured > 0 ? unused_sum / static_cast<double>(measured) : 0.0;
        return st;
    }

    // Time average of u over the measured window; converges to epsilon in a
    // stable regime.
    double mean_unused() const { return mean_unused_; }

private:
    SystemConfig cfg_;
    std::uint64_t run_seed_;
    RngStream arrival_rng_;
    std::vector<RngStream> service_rngs_;
    PooledState state_;
    std::deque<std::int64_t> fifo_;
    double mean_unused_ = 0.0;
};

inline RunStatistics pooled_run(const SystemConfig& cfg, std::uint64_t replication = 0) {
    return PooledSimulator(cfg, replication).run();
}

}  // namespace lbsim
