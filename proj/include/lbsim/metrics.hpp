#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "lbsim/core.hpp"

namespace lbsim {

/// Per-run summary. Response time is reported two ways: the per-job average
/// under the convention departure - arrival + 1, and the Little's-law
/// estimate mean_total_queue / lambda (queue sampled at slot boundaries).
/// The two differ by at most one slot on long stable runs; the Little
/// estimate is the one comparable across accounting conventions.
struct RunStatistics {
    double mean_total_queue = 0.0;
    double mean_response_perjob = 0.0;
    double mean_response_little = 0.0;
    double msgs_push_per_arrival = 0.0;  // per arrival event (slot with arrivals)
    double msgs_pull_per_arrival = 0.0;
    double ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
    bool ci_defined = false;
    std::vector<double> batch_means;  // per-batch Little-law response means
    std::int64_t slots_simulated = 0;
    std::int64_t jobs_completed = 0;
    std::int64_t arrival_events = 0;
    std::int64_t jobs_arrived = 0;
    std::int64_t push_msgs = 0;
    std::int64_t pull_msgs = 0;
    bool unstable_suspect = false;
};

// Student-t 95% interval over batch means; nullopt below 2 batches.
// (t_{0.975,29} = 2.045 at the default 30 batches.)
inline std::optional<std::pair<double, double>> batch_ci(const std::vector<double>& batch_means) {
    const auto k = batch_means.size();
    if (k < 2) return std::nullopt;
    double mean = 0.0;
    for (double v : batch_means) mean += v;
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double v : batch_means) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));
    boost::math::students_t dist(static_cast<double>(k - 1));
    const double t = boost::math::quantile(dist, 0.975);
    return std::make_pair(mean, t * sd / std::sqrt(static_cast<double>(k)));
}

/// Streaming accumulator fed once per measured slot with that slot's outcome
/// and the resulting queue vector. The caller handles warmup by simply not
/// feeding discarded slots. Merging accumulators is an order-insensitive sum.
class StatsAccumulator {
public:
    void accumulate(const SlotOutcome& out, const QueueVector& q_next) {
        ++slots_;
        std::int64_t total = 0;
        for (auto v : q_next) total += v;
        sum_queue_ += static_cast<double>(total);
        if (out.a_total > 0) {
            ++arrival_events_;
            jobs_arrived_ += out.a_total;
        }
        push_msgs_ += out.push_msgs;
        pull_msgs_ += out.pull_msgs;
        for (const auto& dep : out.departures) {
            ++jobs_completed_;
            sum_response_ += static_cast<double>(dep.response_slots);
        }
    }

    void merge(const StatsAccumulator& o) {
        slots_ += o.slots_;
        sum_queue_ += o.sum_queue_;
        arrival_events_ += o.arrival_events_;
        jobs_arrived_ += o.jobs_arrived_;
        push_msgs_ += o.push_msgs_;
        pull_msgs_ += o.pull_msgs_;
        jobs_completed_ += o.jobs_completed_;
        sum_response_ += o.sum_response_;
    }

    std::int64_t slots() const { return slots_; }
    double mean_total_queue() const {
        return slots_ > 0 ? sum_queue_ / static_cast<double>(slots_) : 0.0;
    }

    RunStatistics finalize(double lambda, const std::vector<double>& batch_means) const {
        RunStatistics st;
        st.slots_simulated = slots_;
        st.jobs_completed = jobs_completed_;
        st.arrival_events = arrival_events_;
        st.jobs_arrived = jobs_arrived_;
        st.push_msgs = push_msgs_;
        st.pull_msgs = pull_msgs_;
        st.mean_total_queue = mean_total_queue();
        st.mean_response_perjob =
            jobs_completed_ > 0 ? sum_response_ / static_cast<double>(jobs_completed_) : 0.0;
        st.mean_response_little = lambda > 0.0 ? st.mean_total_queue / lambda : 0.0;
        st.msgs_push_per_arrival =
            arrival_events_ > 0 ? static_cast<double>(push_msgs_) / static_cast<double>(arrival_events_) : 0.0;
        st.msgs_pull_per_arrival =
            arrival_events_ > 0 ? static_cast<double>(pull_msgs_) / static_cast<double>(arrival_events_) : 0.0;
        st.batch_means = batch_means;
        if (auto ci = batch_ci(batch_means)) {
            st.ci_halfwidth = ci->second;
            st.ci_defined = true;
        }
        return st;
    }

private:
    std::int64_t slots_ = 0;
    double sum_queue_ = 0.0;
    std::int64_t arrival_events_ = 0;
    std::int64_t jobs_arrived_ = 0;
    std::int64_t push_msgs_ = 0;
    std::int64_t pull_msgs_ = 0;
    std::int64_t jobs_completed_ = 0;
    double sum_response_ = 0.0;
};

/// One point on a heavy-traffic curve:
///   scaled_queue = eps * E[sum Q], zeta/2 = (sigma^2 + nu^2 + eps^2)/2.
/// Their ratio tends to 1 exactly for the delay-optimal policies and stays
/// bounded away from 1 otherwise.
struct HeavyTrafficPoint {
    double epsilon = 0.0;
    double scaled_queue = 0.0;
    double zeta_half = 0.0;
    double ratio = 0.0;
};

inline HeavyTrafficPoint heavy_traffic_point(double mu_total, double lambda,
                                             double arrival_variance,
                                             double service_variance_total,
                                             const RunStatistics& run) {
    const double eps = mu_total - lambda;
    if (eps <= 0.0) throw std::invalid_argument("heavy-traffic point needs mu_total > lambda");
    HeavyTrafficPoint p;
    p.epsilon = eps;
    p.scaled_queue = eps * run.mean_total_queue;
    p.zeta_half = (arrival_variance + service_variance_total + eps * eps) / 2.0;
    p.ratio = p.scaled_queue / p.zeta_half;
    return p;
}

}  // namespace lbsim
