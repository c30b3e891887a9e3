#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "lbsim/sim.hpp"

using namespace lbsim;

namespace {

SystemState state_with_queues(const QueueVector& q) {
    SystemState s;
    s.q = q;
    s.mem.member.assign(q.size(), 0);
    s.mem.reported.assign(q.size(), 0);
    s.fifo.resize(q.size());
    // backfill FIFO stamps as if every queued job arrived at slot -1
    for (std::size_t n = 0; n < q.size(); ++n)
        for (std::int64_t j = 0; j < q[n]; ++j) s.fifo[n].push_back(-1);
    return s;
}

SystemConfig small_config(PolicySpec pol, ArrivalSpec arr, std::int64_t horizon,
                          std::uint64_t seed) {
    return SystemConfig::homogeneous(3, 1.0, std::move(arr), ServiceSpec::poisson(1.0),
                                     pol, horizon, seed);
}

}  // namespace

TEST_CASE("slot dynamics: arrivals absorbed without overshoot") {
    // Q=[2], 1 arrival, 3 offered: everything drains, no unused service
    auto s = state_with_queues({2});
    SlotOutcome out;
    out.reset(1);
    advance_slot(s, 0, 1, {3}, out);
    REQUIRE(s.q == QueueVector{0});
    REQUIRE(out.unused == std::vector<std::int64_t>{0});
    REQUIRE(out.departures.size() == 3);
}

TEST_CASE("slot dynamics: service beyond the backlog goes unused") {
    auto s = state_with_queues({0});
    SlotOutcome out;
    out.reset(1);
    advance_slot(s, -1, 0, {2}, out);
    REQUIRE(s.q == QueueVector{0});
    REQUIRE(out.unused == std::vector<std::int64_t>{2});
    REQUIRE(out.departures.empty());
}

TEST_CASE("slot dynamics: componentwise update with one destination") {
    auto s = state_with_queues({5, 0});
    SlotOutcome out;
    out.reset(2);
    advance_slot(s, 1, 3, {1, 1}, out);
    REQUIRE(s.q == QueueVector{4, 2});
    REQUIRE(out.unused == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("a job arriving and departing in the same slot has response 1") {
    auto s = state_with_queues({0});
    SlotOutcome out;
    out.reset(1);
    s.t = 17;
    advance_slot(s, 0, 1, {1}, out);
    REQUIRE(out.departures.size() == 1);
    REQUIRE(out.departures[0].response_slots == 1);
}

TEST_CASE("jobs are served FIFO within a queue") {
    auto s = state_with_queues({0});
    SlotOutcome out;
    out.reset(1);
    advance_slot(s, 0, 2, {0}, out);  // two jobs arrive at t=0
    out.reset(1);
    advance_slot(s, 0, 1, {1}, out);  // one arrives at t=1, one served
    REQUIRE(out.departures.size() == 1);
    REQUIRE(out.departures[0].response_slots == 2);  // the t=0 job, not the t=1 one
    out.reset(1);
    advance_slot(s, -1, 0, {2}, out);
    REQUIRE(out.departures.size() == 2);
    REQUIRE(out.departures[0].response_slots == 3);  // second t=0 job
    REQUIRE(out.departures[1].response_slots == 2);  // the t=1 job
}

TEST_CASE("invariants hold over random slots for every policy") {
    std::vector<PolicySpec> policies = {
        PolicySpec::random(),        PolicySpec::weighted_random(),
        PolicySpec::jsq(),           PolicySpec::power_of_d(2),
        PolicySpec::power_of_d_mem(2, 3), PolicySpec::jiq(),
        PolicySpec::jbt(2, 20),      PolicySpec::jbtg(2, 20),
        PolicySpec::jbt_avg(25)};
    std::int64_t violations = 0;
    for (std::size_t pi = 0; pi < policies.size(); ++pi) {
        SystemConfig cfg = SystemConfig::homogeneous(
            4, 1.0, ArrivalSpec::poisson(3.6), ServiceSpec::poisson(1.0),
            policies[pi], 20'000, 100 + pi);
        Simulator sim(cfg);
        QueueVector prev = sim.state().q;
        for (int t = 0; t < cfg.horizon; ++t) {
            const auto& out = sim.step();
            const auto& q = sim.state().q;
            std::int64_t arr = 0, dep = 0, served_calc = 0, dq = 0;
            for (std::size_t n = 0; n < q.size(); ++n) {
                if (q[n] < 0) ++violations;
                if (q[n] != 0 && out.unused[n] != 0) ++violations;  // Q(t+1) * U(t) = 0
                served_calc += out.offered[n] - out.unused[n];
                dq += q[n] - prev[n];
            }
            arr = out.a_total;
            dep = static_cast<std::int64_t>(out.departures.size());
            if (dep != served_calc) ++violations;          // departures = sum(S - U)
            if (arr - dep != dq) ++violations;             // conservation
            if (arr > 0 && (out.dest < 0 || out.dest >= 4)) ++violations;
            if (arr == 0 && out.dest != -1) ++violations;  // exactly one destination
            if (apply_slot(prev, out) != q) ++violations;  // pure fold reconstructs
            prev = q;
        }
    }
    REQUIRE(violations == 0);
}

TEST_CASE("zero arrivals: empty means and no messages under Random") {
    auto cfg = small_config(PolicySpec::random(), ArrivalSpec::constant(0), 5'000, 3);
    auto st = run(cfg);
    REQUIRE(st.mean_total_queue == 0.0);
    REQUIRE(st.mean_response_perjob == 0.0);
    REQUIRE(st.push_msgs == 0);
    REQUIRE(st.pull_msgs == 0);
    REQUIRE(st.jobs_completed == 0);
}

TEST_CASE("identical seeds give identical statistics") {
    auto cfg = small_config(PolicySpec::jbt(2, 10), ArrivalSpec::poisson(2.7), 50'000, 99);
    auto a = run(cfg);
    auto b = run(cfg);
    REQUIRE(a.mean_total_queue == b.mean_total_queue);
    REQUIRE(a.mean_response_perjob == b.mean_response_perjob);
    REQUIRE(a.push_msgs == b.push_msgs);
    REQUIRE(a.pull_msgs == b.pull_msgs);
    REQUIRE(a.jobs_completed == b.jobs_completed);
    REQUIRE(a.batch_means == b.batch_means);

    auto c = run(cfg, /*replication=*/1);
    REQUIRE(a.mean_total_queue != c.mean_total_queue);
}

TEST_CASE("config validation rejects malformed inputs") {
    auto cfg = small_config(PolicySpec::jsq(), ArrivalSpec::poisson(1.0), 1'000, 1);
    cfg.mu[1] = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config(PolicySpec::power_of_d(9), ArrivalSpec::poisson(1.0), 1'000, 1);
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config(PolicySpec::jsq(), ArrivalSpec::poisson(1.0), 1'000, 1);
    cfg.warmup = cfg.horizon;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("instability guard flags a saturated system") {
    // lambda > mu_total: queues grow linearly, flag must trip with a guard
    // below the linear-growth ratio
    SystemConfig cfg = SystemConfig::homogeneous(2, 1.0, ArrivalSpec::poisson(3.0),
                                                 ServiceSpec::poisson(1.0),
                                                 PolicySpec::random(), 100'000, 5);
    cfg.instability_guard = 10.0;
    auto st = run(cfg);
    REQUIRE(st.unstable_suspect);

    SystemConfig stable = SystemConfig::homogeneous(2, 1.0, ArrivalSpec::poisson(1.0),
                                                    ServiceSpec::poisson(1.0),
                                                    PolicySpec::jsq(), 100'000, 5);
    stable.instability_guard = 10.0;
    REQUIRE_FALSE(run(stable).unstable_suspect);
}
