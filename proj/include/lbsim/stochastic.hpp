#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "lbsim/rng.hpp"

namespace lbsim {

// Cap shared by all truncated samplers. Poisson mass above 64 is below
// 1e-20 for every rate used here, so clamping distorts the mean by less
// than double precision can represent.
inline constexpr std::int64_t kDefaultCap = 64;

namespace detail {

// Moments of min(Poisson(rate), cap), summed with the stable pmf recursion.
struct ClampedPoissonMoments {
    double mean;
    double variance;
};

inline ClampedPoissonMoments clamped_poisson_moments(double rate, std::int64_t cap) {
    double p = std::exp(-rate);  // pmf at 0
    double mean = 0.0, second = 0.0, tail = 1.0;
    for (std::int64_t k = 0; k < cap; ++k) {
        if (k > 0) p *= rate / static_cast<double>(k);
        mean += static_cast<double>(k) * p;
        second += static_cast<double>(k) * static_cast<double>(k) * p;
        tail -= p;
    }
    if (tail < 0.0) tail = 0.0;
    mean += static_cast<double>(cap) * tail;
    second += static_cast<double>(cap) * static_cast<double>(cap) * tail;
    return {mean, second - mean * mean};
}

}  // namespace detail

/// Arrival process for the whole system: i.i.d. across slots, integer
/// valued, bounded by `cap`. Declared mean/variance are exact for the
/// realized (truncated) distribution.
class ArrivalSpec {
public:
    enum class Kind { PoissonTruncated, Constant, TwoPoint, ClassA };

    static ArrivalSpec poisson(double rate, std::int64_t cap = kDefaultCap) {
        if (rate < 0.0) throw std::invalid_argument("arrival rate must be >= 0");
        ArrivalSpec s;
        s.kind_ = Kind::PoissonTruncated;
        s.rate_ = rate;
        s.cap_ = cap;
        auto m = detail::clamped_poisson_moments(rate, cap);
        s.mean_ = m.mean;
        s.variance_ = m.variance;
        return s;
    }

    static ArrivalSpec constant(std::int64_t a) {
        if (a < 0) throw std::invalid_argument("constant arrival must be >= 0");
        ArrivalSpec s;
        s.kind_ = Kind::Constant;
        s.value_ = a;
        s.cap_ = a;
        s.mean_ = static_cast<double>(a);
        s.variance_ = 0.0;
        return s;
    }

    // Value v with probability p, otherwise 0.
    static ArrivalSpec two_point(std::int64_t v, double p) {
        if (v <= 0 || p < 0.0 || p > 1.0)
            throw std::invalid_argument("two-point arrival needs v > 0, p in [0,1]");
        ArrivalSpec s;
        s.kind_ = Kind::TwoPoint;
        s.value_ = v;
        s.prob_ = p;
        s.cap_ = v;
        s.mean_ = p * static_cast<double>(v);
        s.variance_ = p * (1.0 - p) * static_cast<double>(v) * static_cast<double>(v);
        return s;
    }

    // Bursty arrivals with a fixed idle probability: P(A=0) = p0 independent
    // of the load, and the remaining mass split between v = floor(mean/(1-p0))
    // and v+1 so the mean is hit exactly. Construction fails unless the
    // variance clears 8/p0 - 4.
    static ArrivalSpec class_a(double p0, double mean) {
        if (p0 <= 0.0 || p0 >= 1.0) throw std::invalid_argument("class-A p0 must be in (0,1)");
        if (mean <= 0.0) throw std::invalid_argument("class-A mean must be > 0");
        ArrivalSpec s;
        s.kind_ = Kind::ClassA;
        s.prob_ = p0;
        s.mean_ = mean;
        double ratio = mean / (1.0 - p0);
        auto v = static_cast<std::int64_t>(std::floor(ratio));
        if (v < 1) throw std::invalid_argument("class-A mean too small for p0");
        // masses on v and v+1
        double mass_hi = mean - static_cast<double>(v) * (1.0 - p0);
        double mass_lo = (1.0 - p0) - mass_hi;
        if (mass_hi < -1e-12 || mass_lo < -1e-12)
            throw std::logic_error("class-A mass split out of range");
        s.value_ = v;
        s.prob_hi_ = mass_hi;
        s.cap_ = v + 1;
        double second = static_cast<double>(v) * static_cast<double>(v) * mass_lo +
                        static_cast<double>(v + 1) * static_cast<double>(v + 1) * mass_hi;
        s.variance_ = second - mean * mean;
        double bound = 8.0 / p0 - 4.0;
        if (!(s.variance_ > bound)) {
            throw std::invalid_argument("class-A variance " + std::to_string(s.variance_) +
                                        " does not exceed 8/p0 - 4 = " + std::to_string(bound));
        }
        return s;
    }

    Kind kind() const { return kind_; }
    double mean() const { return mean_; }
    double variance() const { return variance_; }
    std::int64_t cap() const { return cap_; }
    double class_a_p0() const { return prob_; }

    // Mean lost to clamping (zero for the discrete kinds).
    double mean_distortion() const {
        return kind_ == Kind::PoissonTruncated ? rate_ - mean_ : 0.0;
    }

    std::int64_t sample(RngStream& rng) const {
        switch (kind_) {
            case Kind::Constant:
                return value_;
            case Kind::TwoPoint:
                return rng.uniform01() < prob_ ? value_ : 0;
            case Kind::ClassA: {
                double u = rng.uniform01();
                if (u < prob_) return 0;
                return (u < prob_ + prob_hi_) ? value_ + 1 : value_;
            }
            case Kind::PoissonTruncated: {
                auto x = std::poisson_distribution<std::int64_t>(rate_)(rng.engine());
                return x > cap_ ? cap_ : x;
            }
        }
        return 0;
    }

    std::string kind_name() const {
        switch (kind_) {
            case Kind::PoissonTruncated: return "poisson";
            case Kind::Constant: return "constant";
            case Kind::TwoPoint: return "two_point";
            case Kind::ClassA: return "class_a";
        }
        return "?";
    }

private:
    Kind kind_ = Kind::Constant;
    double rate_ = 0.0;       // Poisson rate before clamping
    std::int64_t value_ = 0;  // constant / two-point / class-A low support
    double prob_ = 0.0;       // two-point P(v); class-A p0
    double prob_hi_ = 0.0;    // class-A mass on v+1
    std::int64_t cap_ = 0;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

/// Per-server service process; same families minus class-A. Processes are
/// independent across servers and of the arrivals because each server owns
/// its own stream.
class ServiceSpec {
public:
    enum class Kind { PoissonTruncated, Constant, TwoPoint };

    static ServiceSpec poisson(double rate, std::int64_t cap = kDefaultCap) {
        if (rate <= 0.0) throw std::invalid_argument("service rate must be > 0");
        ServiceSpec s;
        s.kind_ = Kind::PoissonTruncated;
        s.rate_ = rate;
        s.cap_ = cap;
        auto m = detail::clamped_poisson_moments(rate, cap);
        s.mean_ = m.mean;
        s.variance_ = m.variance;
        return s;
    }

    static ServiceSpec constant(std::int64_t v) {
        if (v <= 0) throw std::invalid_argument("constant service must be > 0");
        ServiceSpec s;
        s.kind_ = Kind::Constant;
        s.value_ = v;
        s.cap_ = v;
        s.mean_ = static_cast<double>(v);
        s.variance_ = 0.0;
        return s;
    }

    static ServiceSpec two_point(std::int64_t v, double p) {
        if (v <= 0 || p <= 0.0 || p > 1.0)
            throw std::invalid_argument("two-point service needs v > 0, p in (0,1]");
        ServiceSpec s;
        s.kind_ = Kind::TwoPoint;
        s.value_ = v;
        s.prob_ = p;
        s.cap_ = v;
        s.mean_ = p * static_cast<double>(v);
        s.variance_ = p * (1.0 - p) * static_cast<double>(v) * static_cast<double>(v);
        return s;
    }

    Kind kind() const { return kind_; }
    double mean() const { return mean_; }
    double variance() const { return variance_; }
    std::int64_t cap() const { return cap_; }

    std::int64_t sample(RngStream& rng) const {
        switch (kind_) {
            case Kind::Constant:
                return value_;
            case Kind::TwoPoint:
                return rng.uniform01() < prob_ ? value_ : 0;
            case Kind::PoissonTruncated: {
                auto x = std::poisson_distribution<std::int64_t>(rate_)(rng.engine());
                return x > cap_ ? cap_ : x;
            }
        }
        return 0;
    }

    std::string kind_name() const {
        switch (kind_) {
            case Kind::PoissonTruncated: return "poisson";
            case Kind::Constant: return "constant";
            case Kind::TwoPoint: return "two_point";
        }
        return "?";
    }

private:
    Kind kind_ = Kind::Constant;
    double rate_ = 0.0;
    std::int64_t value_ = 1;
    double prob_ = 0.0;
    std::int64_t cap_ = 0;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

}  // namespace lbsim
