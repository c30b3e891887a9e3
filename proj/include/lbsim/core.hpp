#pragma once

#include <cstdint>
#include <vector>

namespace lbsim {

// Queue lengths observed at the beginning of a slot, one entry per server.
using QueueVector = std::vector<std::int64_t>;

struct Departure {
    int server;
    std::int64_t response_slots;  // departure slot - arrival slot + 1
};

/// Everything one slot did: the sampled arrival batch and its destination,
/// offered and unused service per server, message counts, and the jobs that
/// left. Applying an outcome stream to the initial queue vector reproduces
/// the trajectory (see apply_slot).
struct SlotOutcome {
    std::int64_t a_total = 0;  // A_sigma(t)
    int dest = -1;             // receiving server, -1 when a_total == 0
    std::vector<std::int64_t> offered;  // S_n(t)
    std::vector<std::int64_t> unused;   // U_n(t) = max(S_n - Q_n - A_n, 0)
    std::int64_t push_msgs = 0;
    std::int64_t pull_msgs = 0;
    std::vector<Departure> departures;

    void reset(int n_servers) {
        a_total = 0;
        dest = -1;
        offered.assign(n_servers, 0);
        unused.assign(n_servers, 0);
        push_msgs = 0;
        pull_msgs = 0;
        departures.clear();
    }
};

// Pure fold of one slot onto a queue vector:
//   Q_n(t+1) = Q_n(t) + A_n(t) - S_n(t) + U_n(t)
// with all arrivals routed to outcome.dest.
inline QueueVector apply_slot(const QueueVector& q, const SlotOutcome& out) {
    QueueVector next(q.size());
    for (std::size_t n = 0; n < q.size(); ++n) {
        std::int64_t a = (static_cast<int>(n) == out.dest) ? out.a_total : 0;
        next[n] = q[n] + a - out.offered[n] + out.unused[n];
    }
    return next;
}

}  // namespace lbsim
