#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "unmask/common.hpp"
#include "unmask/rng.hpp"

namespace unmask {

// Cumulative unmasking counts a_0 = 0 < a_1 < ... < a_K = N. Block sizes
// are s_k = a_k - a_{k-1}.
class CumSchedule {
public:
    CumSchedule(std::int64_t n, std::vector<std::int64_t> a);

    std::int64_t n() const { return n_; }
    std::int64_t steps() const { return static_cast<std::int64_t>(a_.size()) - 1; }
    const std::vector<std::int64_t>& a() const { return a_; }
    std::vector<std::int64_t> sizes() const;
    std::int64_t s_max() const;

    // r_a(i) = inf{a_k : a_k >= i}.
    std::int64_t r(std::int64_t i) const;

    static CumSchedule from_sizes(std::int64_t n, std::span<const std::int64_t> sizes);
    static CumSchedule identity(std::int64_t n);  // all sizes 1

private:
    std::int64_t n_;
    std::vector<std::int64_t> a_;
};

// Law of the schedule sizes: deterministic, truncated-geometric chain
// (s_k ~ Geom(p; remaining)), or an explicit finite mixture of schedules.
class SizeLaw {
public:
    enum class Kind { deterministic, geometric, explicit_mixture };

    static SizeLaw deterministic(CumSchedule schedule);
    static SizeLaw geometric(std::int64_t n, double p);
    static SizeLaw explicit_mixture(std::vector<std::pair<CumSchedule, double>> atoms);

    Kind kind() const { return kind_; }
    std::int64_t n() const { return n_; }
    double p() const;                                  // geometric only
    const CumSchedule& schedule() const;               // deterministic only
    const std::vector<std::pair<CumSchedule, double>>& atoms() const;  // explicit only

    CumSchedule sample(KeyedRng& rng) const;

    // Exact moments of the induced schedule distribution.
    struct Stats {
        double e_k = 0.0;           // E[K]
        double e_smax = 0.0;        // E[s_max]
        double e_n_over_smax = 0.0; // E[N / s_max]
    };
    Stats stats() const;

private:
    SizeLaw() = default;
    Kind kind_ = Kind::deterministic;
    std::int64_t n_ = 0;
    double p_ = 0.0;
    std::vector<std::pair<CumSchedule, double>> atoms_;
};

// P(X = i) under Geom(p; m) on {1..m}.
double truncated_geometric_pmf(double p, std::int64_t m, std::int64_t i);

}  // namespace unmask
