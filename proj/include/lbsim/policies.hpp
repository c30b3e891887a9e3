#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbsim/core.hpp"
#include "lbsim/rng.hpp"

namespace lbsim {

enum class PolicyKind {
    Random,
    WeightedRandom,
    JSQ,
    PowerOfD,     // SQ(d)
    PowerOfDMem,  // SQ(d, m)
    JIQ,
    JBT,
    JBTG,
    JBTAvg,
};

struct PolicySpec {
    PolicyKind kind = PolicyKind::Random;
    int d = 0;            // probe count (PowerOfD*, JBT, JBTG)
    int m = 0;            // carried sample size (PowerOfDMem)
    std::int64_t T = 0;   // threshold refresh period (JBT family)

    static PolicySpec random() { return {PolicyKind::Random, 0, 0, 0}; }
    static PolicySpec weighted_random() { return {PolicyKind::WeightedRandom, 0, 0, 0}; }
    static PolicySpec jsq() { return {PolicyKind::JSQ, 0, 0, 0}; }
    static PolicySpec power_of_d(int d) { return {PolicyKind::PowerOfD, d, 0, 0}; }
    static PolicySpec power_of_d_mem(int d, int m) { return {PolicyKind::PowerOfDMem, d, m, 0}; }
    static PolicySpec jiq() { return {PolicyKind::JIQ, 0, 0, 0}; }
    static PolicySpec jbt(int d, std::int64_t T) { return {PolicyKind::JBT, d, 0, T}; }
    static PolicySpec jbtg(int d, std::int64_t T) { return {PolicyKind::JBTG, d, 0, T}; }
    static PolicySpec jbt_avg(std::int64_t T) { return {PolicyKind::JBTAvg, 0, 0, T}; }

    bool pull_based() const {
        return kind == PolicyKind::JIQ || kind == PolicyKind::JBT ||
               kind == PolicyKind::JBTG || kind == PolicyKind::JBTAvg;
    }
    bool threshold_based() const {
        return kind == PolicyKind::JBT || kind == PolicyKind::JBTG ||
               kind == PolicyKind::JBTAvg;
    }

    void validate(int n_servers) const {
        switch (kind) {
            case PolicyKind::PowerOfD:
            case PolicyKind::PowerOfDMem:
                if (d < 1 || d > n_servers)
                    throw std::invalid_argument("power-of-d needs 1 <= d <= N");
                if (kind == PolicyKind::PowerOfDMem && m < 1)
                    throw std::invalid_argument("SQ(d,m) needs m >= 1");
                break;
            case PolicyKind::JBT:
            case PolicyKind::JBTG:
                if (d < 1 || d > n_servers)
                    throw std::invalid_argument("JBT needs 1 <= d <= N");
                [[fallthrough]];
            case PolicyKind::JBTAvg:
                if (T < 1) throw std::invalid_argument("threshold policies need T >= 1");
                break;
            default:
                break;
        }
    }

    // Labels as they appear in result tables: JSQ, SQ(d), SQ(d,m), JIQ,
    // JBT-d, JBTG-d.
    std::string label() const {
        switch (kind) {
            case PolicyKind::Random: return "Random";
            case PolicyKind::WeightedRandom: return "WRandom";
            case PolicyKind::JSQ: return "JSQ";
            case PolicyKind::PowerOfD: return "SQ(" + std::to_string(d) + ")";
            case PolicyKind::PowerOfDMem:
                return "SQ(" + std::to_string(d) + "," + std::to_string(m) + ")";
            case PolicyKind::JIQ: return "JIQ";
            case PolicyKind::JBT: return "JBT-" + std::to_string(d);
            case PolicyKind::JBTG: return "JBTG-" + std::to_string(d);
            case PolicyKind::JBTAvg: return "JBTAvg";
        }
        return "?";
    }
};

/// Dispatcher-side memory m(t). The id list is kept in insertion order;
/// `member` mirrors it for O(1) lookups. For the JBT family `reported`
/// marks servers that already sent their ID under the current threshold,
/// cleared only by consumption or a threshold refresh.
struct MemoryState {
    std::vector<int> ids;
    std::vector<char> member;    // member[n] != 0 iff n in ids
    std::vector<char> reported;  // JBT family only
    std::int64_t threshold = 0;  // JBT family only
    std::vector<std::pair<int, std::int64_t>> stored_sample;  // SQ(d,m): (server, length)

    static MemoryState initial(const PolicySpec& policy, int n_servers) {
        MemoryState mem;
        mem.member.assign(n_servers, 0);
        mem.reported.assign(n_servers, 0);
        // The system starts empty, so every server qualifies for the memory
        // of a pull-based policy (threshold 0 for the JBT family). These
        // initial entries predate the run and are not charged as messages.
        if (policy.pull_based()) {
            mem.ids.resize(n_servers);
            std::iota(mem.ids.begin(), mem.ids.end(), 0);
            std::fill(mem.member.begin(), mem.member.end(), 1);
            std::fill(mem.reported.begin(), mem.reported.end(), 1);
        }
        return mem;
    }

    bool contains(int n) const { return member[n] != 0; }

    void insert(int n) {
        if (!member[n]) {
            member[n] = 1;
            ids.push_back(n);
        }
    }

    void erase(int n) {
        if (!member[n]) return;
        member[n] = 0;
        auto it = std::find(ids.begin(), ids.end(), n);
        ids.erase(it);
    }

    void replace_with(const std::vector<int>& fresh) {
        std::fill(member.begin(), member.end(), 0);
        ids = fresh;
        for (int n : ids) member[n] = 1;
    }
};

struct DispatchResult {
    int dest = -1;
    std::int64_t push_msgs = 0;
    std::optional<int> consumed_id;  // pull-based: the memory entry spent
};

struct EndOfSlotResult {
    std::int64_t pull_msgs = 0;
    std::int64_t push_msgs = 0;
};

namespace detail {

// argmin over (server, length) candidates, ties broken uniformly at random.
template <typename It, typename LenOf, typename IdOf>
int argmin_uniform(It first, It last, LenOf len_of, IdOf id_of, RngStream& rng) {
    std::int64_t best = len_of(*first);
    int count = 0;
    int pick = -1;
    for (It it = first; it != last; ++it) {
        std::int64_t l = len_of(*it);
        if (l < best) {
            best = l;
            count = 0;
        }
        if (l == best) {
            ++count;
            if (rng.uniform_below(count) == 0) pick = id_of(*it);
        }
    }
    return pick;
}

// Uniform d-subset of {0..N-1} via partial Fisher-Yates on a scratch array.
inline void sample_subset(int n, int d, RngStream& rng, std::vector<int>& scratch,
                          std::vector<int>& out) {
    scratch.resize(n);
    std::iota(scratch.begin(), scratch.end(), 0);
    out.clear();
    for (int i = 0; i < d; ++i) {
        auto j = i + static_cast<int>(rng.uniform_below(n - i));
        std::swap(scratch[i], scratch[j]);
        out.push_back(scratch[i]);
    }
}

inline int weighted_pick(const std::vector<double>& mu, RngStream& rng) {
    double total = 0.0;
    for (double v : mu) total += v;
    double u = rng.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        acc += mu[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(mu.size()) - 1;
}

}  // namespace detail

/// Pick the destination queue for this slot's arrival batch. Push messages
/// are the query/response pairs spent doing it (2 per probed server).
/// Mutates `mem`: pull-based policies consume one ID, SQ(d,m) rotates its
/// stored sample.
inline DispatchResult dispatch(const PolicySpec& policy, const QueueVector& q,
                               MemoryState& mem, const std::vector<double>& mu,
                               RngStream& rng) {
    const int n = static_cast<int>(q.size());
    DispatchResult r;
    switch (policy.kind) {
        case PolicyKind::Random:
            r.dest = static_cast<int>(rng.uniform_below(n));
            break;
        case PolicyKind::WeightedRandom:
            r.dest = detail::weighted_pick(mu, rng);
            break;
        case PolicyKind::JSQ: {
            std::int64_t best = q[0];
            int count = 0;
            for (int i = 0; i < n; ++i) {
                if (q[i] < best) {
                    best = q[i];
                    count = 0;
                }
                if (q[i] == best) {
                    ++count;
                    if (rng.uniform_below(count) == 0) r.dest = i;
                }
            }
            r.push_msgs = 2 * n;
            break;
        }
        case PolicyKind::PowerOfD: {
            std::vector<int> scratch, probe;
            detail::sample_subset(n, policy.d, rng, scratch, probe);
            r.dest = detail::argmin_uniform(
                probe.begin(), probe.end(), [&](int i) { return q[i]; },
                [](int i) { return i; }, rng);
            r.push_msgs = 2 * policy.d;
            break;
        }
        case PolicyKind::PowerOfDMem: {
            std::vector<int> scratch, probe;
            detail::sample_subset(n, policy.d, rng, scratch, probe);
            // Candidates: fresh probes at current lengths plus the carried
            // sample at its recorded (possibly stale) lengths. Duplicate
            // servers keep the smaller recorded length.
            std::vector<std::pair<int, std::int64_t>> cand;
            cand.reserve(probe.size() + mem.stored_sample.size());
            for (int i : probe) cand.emplace_back(i, q[i]);
            for (const auto& sc : mem.stored_sample) {
                bool merged = false;
                for (auto& c : cand) {
                    if (c.first == sc.first) {
                        c.second = std::min(c.second, sc.second);
                        merged = true;
                        break;
                    }
                }
                if (!merged) cand.push_back(sc);
            }
            r.dest = detail::argmin_uniform(
                cand.begin(), cand.end(),
                [](const auto& c) { return c.second; },
                [](const auto& c) { return c.first; }, rng);
            r.push_msgs = 2 * policy.d;
            // Carry the m shortest of this slot's fresh probes.
            std::vector<std::pair<int, std::int64_t>> fresh;
            fresh.reserve(probe.size());
            for (int i : probe) fresh.emplace_back(i, q[i]);
            std::sort(fresh.begin(), fresh.end(), [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second < b.second : a.first < b.first;
            });
            if (static_cast<int>(fresh.size()) > policy.m) fresh.resize(policy.m);
            mem.stored_sample = std::move(fresh);
            break;
        }
        case PolicyKind::JIQ:
        case PolicyKind::JBT:
        case PolicyKind::JBTAvg: {
            if (!mem.ids.empty()) {
                auto k = rng.uniform_below(static_cast<std::int64_t>(mem.ids.size()));
                int id = mem.ids[static_cast<std::size_t>(k)];
                mem.erase(id);
                mem.reported[id] = 0;
                r.dest = id;
                r.consumed_id = id;
            } else {
                r.dest = static_cast<int>(rng.uniform_below(n));
            }
            break;
        }
        case PolicyKind::JBTG: {
            if (!mem.ids.empty()) {
                // psi: pick id i with probability mu_i / sum_{j in m} mu_j
                double total = 0.0;
                for (int id : mem.ids) total += mu[id];
                double u = rng.uniform01() * total;
                double acc = 0.0;
                int pick = mem.ids.back();
                for (int id : mem.ids) {
                    acc += mu[id];
                    if (u < acc) {
                        pick = id;
                        break;
                    }
                }
                mem.erase(pick);
                mem.reported[pick] = 0;
                r.dest = pick;
                r.consumed_id = pick;
            } else {
                r.dest = detail::weighted_pick(mu, rng);
            }
            break;
        }
    }
    return r;
}

/// End-of-slot protocol on the post-service queue vector. JIQ servers report
/// on becoming idle; the JBT family refreshes its threshold every T slots
/// (probing d servers, or all N for the average variant) and otherwise lets
/// first-time qualifiers report. Refresh replaces the memory wholesale and
/// charges a pull message only for newly admitted IDs.
inline EndOfSlotResult end_of_slot(const PolicySpec& policy, const QueueVector& q_next,
                                   MemoryState& mem, std::int64_t t, RngStream& rng) {
    const int n = static_cast<int>(q_next.size());
    EndOfSlotResult r;
    switch (policy.kind) {
        case PolicyKind::JIQ: {
            for (int i = 0; i < n; ++i) {
                if (q_next[i] == 0 && !mem.contains(i)) {
                    mem.insert(i);
                    ++r.pull_msgs;
                }
            }
            break;
        }
        case PolicyKind::JBT:
        case PolicyKind::JBTG:
        case PolicyKind::JBTAvg: {
            const bool refresh = ((t + 1) % policy.T) == 0;
            if (refresh) {
                if (policy.kind == PolicyKind::JBTAvg) {
                    std::int64_t sum = 0;
                    for (auto v : q_next) sum += v;
                    mem.threshold = sum / n;  // floor of the average
                    r.push_msgs += 2 * n;
                } else {
                    std::vector<int> scratch, probe;
                    detail::sample_subset(n, policy.d, rng, scratch, probe);
                    std::int64_t min_len = q_next[probe[0]];
                    for (int i : probe) min_len = std::min(min_len, q_next[i]);
                    mem.threshold = min_len;
                    r.push_msgs += 2 * policy.d;
                }
                std::vector<int> fresh;
                for (int i = 0; i < n; ++i) {
                    if (q_next[i] <= mem.threshold) {
                        fresh.push_back(i);
                        if (!mem.contains(i)) ++r.pull_msgs;  // already-known IDs do not resend
                    }
                }
                mem.replace_with(fresh);
                std::fill(mem.reported.begin(), mem.reported.end(), 0);
                for (int i : fresh) mem.reported[i] = 1;
            } else {
                for (int i = 0; i < n; ++i) {
                    if (q_next[i] <= mem.threshold && !mem.reported[i]) {
                        mem.insert(i);
                        mem.reported[i] = 1;
                        ++r.pull_msgs;
                    }
                }
            }
            break;
        }
        default:
            break;
    }
    return r;
}

}  // namespace lbsim
