#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "lbsim/core.hpp"
#include "lbsim/policies.hpp"
#include "lbsim/rational.hpp"

namespace lbsim::tilt {

/// Dispatch probabilities re-indexed by the queue-length-nondecreasing
/// permutation: prob[k] is the probability that the (k+1)-th shortest queue
/// receives the slot's arrivals. sigma[k] is that queue's server index.
struct DispatchDistribution {
    std::vector<int> sigma;
    std::vector<Rat> prob;

    int size() const { return static_cast<int>(prob.size()); }
};

enum class Verdict { NotTilted, Tilted, DeltaTilted };

struct TiltClassification {
    Verdict verdict = Verdict::NotTilted;
    Rat delta_witness;  // min(Delta_1, -Delta_N) when DeltaTilted, else 0
};

inline std::vector<int> sorting_permutation(const QueueVector& q) {
    std::vector<int> sigma(q.size());
    std::iota(sigma.begin(), sigma.end(), 0);
    std::stable_sort(sigma.begin(), sigma.end(),
                     [&](int a, int b) { return q[a] < q[b]; });
    return sigma;
}

// Delta_n = P_n - mu_{sigma(n)} / mu_Sigma; always sums to zero.
inline std::vector<Rat> delta_vector(const DispatchDistribution& dist,
                                     const std::vector<Rat>& mu) {
    Rat mu_total;
    for (const auto& m : mu) mu_total += m;
    std::vector<Rat> delta(dist.prob.size());
    for (int k = 0; k < dist.size(); ++k) {
        delta[k] = dist.prob[k] - mu[dist.sigma[k]] / mu_total;
    }
    return delta;
}

/// Closed-form sorted dispatch distribution of a policy at a queue state.
/// For the JBT family the caller supplies the memory-size distribution
/// `mem_size_dist` with mem_size_dist[k] = Pr(|m(t)| = k), k = 0..N; an
/// empty memory falls back to (weighted) random routing and its mass is
/// folded in accordingly.
inline DispatchDistribution theoretical_distribution(
    const PolicySpec& policy, const QueueVector& q, const std::vector<Rat>& mu,
    const std::vector<Rat>* mem_size_dist = nullptr) {
    const int n = static_cast<int>(q.size());
    DispatchDistribution dist;
    dist.sigma = sorting_permutation(q);
    dist.prob.assign(n, Rat(0));

    Rat mu_total;
    for (const auto& m : mu) mu_total += m;

    switch (policy.kind) {
        case PolicyKind::JSQ:
            dist.prob[0] = Rat(1);
            break;
        case PolicyKind::Random:
            for (auto& p : dist.prob) p = Rat(1, n);
            break;
        case PolicyKind::WeightedRandom:
            for (int k = 0; k < n; ++k) dist.prob[k] = mu[dist.sigma[k]] / mu_total;
            break;
        case PolicyKind::PowerOfD: {
            // P_k = C(N-k, d-1) / C(N, d) on 1-based sorted positions,
            // zero beyond N-d+1.
            const Rat denom = Rat::raw(binomial(n, policy.d), 1);
            for (int k = 1; k <= n - policy.d + 1; ++k) {
                dist.prob[k - 1] = Rat::raw(binomial(n - k, policy.d - 1), 1) / denom;
            }
            break;
        }
        case PolicyKind::JBT:
        case PolicyKind::JBTAvg: {
            if (mem_size_dist == nullptr || static_cast<int>(mem_size_dist->size()) != n + 1)
                throw std::invalid_argument("JBT distribution needs |m|-distribution of size N+1");
            Rat total;
            for (const auto& p : *mem_size_dist) total += p;
            if (total != Rat(1))
                throw std::invalid_argument("|m|-distribution must sum to 1");
            // Memory holds the |m| shortest queues; a uniform pick lands on
            // sorted position k with probability 1/i when |m| = i >= k.
            for (int k = 1; k <= n; ++k) {
                Rat p = (*mem_size_dist)[0] / Rat(n);  // empty memory: random
                for (int i = k; i <= n; ++i) {
                    p += (*mem_size_dist)[i] / Rat(i);
                }
                dist.prob[k - 1] = p;
            }
            break;
        }
        case PolicyKind::JBTG: {
            if (mem_size_dist == nullptr || static_cast<int>(mem_size_dist->size()) != n + 1)
                throw std::invalid_argument("JBTG distribution needs |m|-distribution of size N+1");
            Rat total;
            for (const auto& p : *mem_size_dist) total += p;
            if (total != Rat(1))
                throw std::invalid_argument("|m|-distribution must sum to 1");
            // Rate-weighted pick among the |m| shortest queues; prefix sums
            // of mu in sorted order give the normalizers.
            std::vector<Rat> prefix(n + 1);
            for (int i = 1; i <= n; ++i) prefix[i] = prefix[i - 1] + mu[dist.sigma[i - 1]];
            for (int k = 1; k <= n; ++k) {
                Rat p = (*mem_size_dist)[0] * mu[dist.sigma[k - 1]] / mu_total;
                for (int i = k; i <= n; ++i) {
                    p += (*mem_size_dist)[i] * mu[dist.sigma[k - 1]] / prefix[i];
                }
                dist.prob[k - 1] = p;
            }
            break;
        }
        default:
            throw std::invalid_argument("no closed-form distribution for policy " +
                                        policy.label());
    }
    return dist;
}

/// Inner-product-equivalent representative used for classification: within
/// each maximal run of tied queue lengths, all probability mass moves to the
/// run's first sorted position. <Q_sigma, P> is unchanged and Delta_1 is
/// maximized over the equivalence class.
inline DispatchDistribution canonicalize_ties(DispatchDistribution dist,
                                              const QueueVector& q) {
    const int n = dist.size();
    int k = 0;
    while (k < n) {
        int j = k;
        while (j + 1 < n && q[dist.sigma[j + 1]] == q[dist.sigma[k]]) ++j;
        if (j > k) {
            Rat mass;
            for (int i = k; i <= j; ++i) {
                mass += dist.prob[i];
                dist.prob[i] = Rat(0);
            }
            dist.prob[k] = mass;
        }
        k = j + 1;
    }
    return dist;
}

/// Tilt verdict. Tilted: some split k in {2..N} with Delta >= 0 strictly
/// before it and <= 0 from it on. Delta-tilted additionally has Delta_1 > 0
/// and Delta_N < 0; the witness is the largest delta with Delta_1 >= delta
/// and Delta_N <= -delta.
inline TiltClassification classify(const DispatchDistribution& dist,
                                   const std::vector<Rat>& mu) {
    const auto delta = delta_vector(dist, mu);
    const int n = static_cast<int>(delta.size());
    TiltClassification out;
    if (n < 2) {
        out.verdict = Verdict::Tilted;
        return out;
    }
    bool seen_negative = false;
    bool tilted = true;
    for (int k = 0; k < n; ++k) {
        if (delta[k] < Rat(0)) seen_negative = true;
        else if (delta[k] > Rat(0) && seen_negative) {
            tilted = false;
            break;
        }
    }
    if (delta.front() < Rat(0) || delta.back() > Rat(0)) tilted = false;
    if (!tilted) return out;
    out.verdict = Verdict::Tilted;
    if (delta.front() > Rat(0) && delta.back() < Rat(0)) {
        out.verdict = Verdict::DeltaTilted;
        out.delta_witness = std::min(delta.front(), -delta.back());
    }
    return out;
}

/// Classification over the inner-product equivalence class: ties allow many
/// representatives, and membership in the policy class only needs one of
/// them to be (delta-)tilted. Front-loading recovers the tilt of JSQ- and
/// JBT-style distributions at tied states but can break the power-of-d
/// closed form, whose raw form is already tilted; so both representatives
/// are classified and the stronger verdict (larger witness on a tie) wins.
struct ClassifiedDistribution {
    DispatchDistribution dist;
    TiltClassification cls;
};

inline ClassifiedDistribution classify_best(const DispatchDistribution& raw,
                                            const QueueVector& q,
                                            const std::vector<Rat>& mu) {
    auto canon = canonicalize_ties(raw, q);
    auto cls_raw = classify(raw, mu);
    auto cls_canon = classify(canon, mu);
    auto rank = [](Verdict v) { return v == Verdict::DeltaTilted ? 2 : v == Verdict::Tilted ? 1 : 0; };
    const bool canon_wins =
        rank(cls_canon.verdict) > rank(cls_raw.verdict) ||
        (rank(cls_canon.verdict) == rank(cls_raw.verdict) &&
         cls_canon.delta_witness > cls_raw.delta_witness);
    if (canon_wins) return {std::move(canon), cls_canon};
    return {raw, cls_raw};
}

struct DriftPair {
    double full;  // E[<Q, A - S> | Z]
    double perp;  // same with Q replaced by Q - Q_avg * 1
};

/// Exact one-step conditional drifts, no sampling:
///   full = sum_n Q_{sigma(n)} (P_n lambda - mu_{sigma(n)})
///   perp = sum_n (Q_{sigma(n)} - Q_avg) (P_n lambda - mu_{sigma(n)})
inline DriftPair inner_drift(const DispatchDistribution& dist, const QueueVector& q,
                             const std::vector<double>& mu, double lambda) {
    const int n = dist.size();
    double q_avg = 0.0;
    for (auto v : q) q_avg += static_cast<double>(v);
    q_avg /= static_cast<double>(n);
    DriftPair drift{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
        const double qk = static_cast<double>(q[dist.sigma[k]]);
        const double term = dist.prob[k].to_double() * lambda - mu[dist.sigma[k]];
        drift.full += qk * term;
        drift.perp += (qk - q_avg) * term;
    }
    return drift;
}

// sum_n Q_{sigma(n)} Delta_n, the quantity the tilt inequalities bound.
inline Rat sorted_inner_product_delta(const DispatchDistribution& dist,
                                      const QueueVector& q,
                                      const std::vector<Rat>& mu) {
    const auto delta = delta_vector(dist, mu);
    Rat acc;
    for (int k = 0; k < dist.size(); ++k) {
        acc += Rat(q[dist.sigma[k]]) * delta[k];
    }
    return acc;
}

inline double perp_norm(const QueueVector& q) {
    double avg = 0.0;
    for (auto v : q) avg += static_cast<double>(v);
    avg /= static_cast<double>(q.size());
    double ss = 0.0;
    for (auto v : q) {
        double dev = static_cast<double>(v) - avg;
        ss += dev * dev;
    }
    return std::sqrt(ss);
}

}  // namespace lbsim::tilt
