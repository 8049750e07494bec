#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unmask/efact.hpp"
#include "unmask/info_profile.hpp"
#include "unmask/schedule.hpp"

namespace unmask {

// Continuous schedule shape alpha : [0,1] -> [0,1], increasing, alpha(0)=0,
// alpha(1)=1, with derivative access. Either a closed form, a monotone-cubic
// interpolant of tabulated points, or the geodesic alpha = G^{-1}(t G(1))
// for a metric g (in which case the derivative is G(1)/sqrt(g(alpha))).
class AlphaCurve {
public:
    static AlphaCurve identity();
    static AlphaCurve exponential(double xi);  // ((1+xi)^t - 1)/xi
    static AlphaCurve tabulated(std::vector<double> t, std::vector<double> alpha);
    static AlphaCurve geodesic(RealFn g);

    double value(double t) const;
    double derivative(double t) const;
    const std::string& tag() const { return tag_; }

private:
    AlphaCurve() = default;

    enum class Kind { identity, exponential, tabulated, geodesic };
    Kind kind_ = Kind::identity;
    std::string tag_ = "identity";
    double xi_ = 0.0;

    // tabulated
    std::vector<double> knots_t_;
    std::vector<double> knots_a_;
    std::vector<double> tangents_;

    // geodesic
    RealFn g_;
    std::vector<double> big_g_;  // cumulative integral of sqrt(g) on the grid
    double big_g1_ = 0.0;

    double eval_tabulated(double t, bool deriv) const;
    double eval_geodesic(double t) const;
};

struct DpResult {
    CumSchedule schedule;  // lexicographically smallest optimum
    double a_value;        // A(a*)
};

// Exact minimizer of A(a) over all schedules with K blocks, O(K N^2) DP.
DpResult optimal_dp(const InfoProfile& profile, std::int64_t k);

// First-order optimality intervals s_{k+1} in
// [(f(a_k-1)-f(a_{k-1}))/Delta f(a_k), (f(a_k+1)-f(a_{k-1}))/Delta f(a_k+1)]
// checked for k = 1..K-1. Requires a strictly increasing profile; a
// violated hypothesis yields a report, not an exception. The upper edge is
// skipped where the +1 perturbation would collide with a_{k+1} or leave
// the profile's domain.
struct OptimalityReport {
    bool hypothesis_ok = true;
    struct Interval {
        std::int64_t k;
        double lower;
        double upper;  // NaN when skipped
        bool upper_defined;
        double s_next;
        bool satisfied;
    };
    std::vector<Interval> intervals;
    bool all_satisfied() const;
};
OptimalityReport check_optimality_interval(const InfoProfile& profile, const CumSchedule& sched);

// a_k = ceil(N k / K), exact integer arithmetic.
CumSchedule uniform_schedule(std::int64_t n, std::int64_t k);

struct FromAlphaResult {
    CumSchedule schedule;
    int repairs;  // ceiling collisions fixed up
};

// a_k = ceil(N alpha(k/K)) with duplicate entries forward-shifted to the
// next free integer (and clamped to keep the tail feasible). Products that
// land within 1e-9 of an integer snap to it before the ceiling, so exact
// grids are not off-by-one from floating noise.
FromAlphaResult from_alpha(const AlphaCurve& curve, std::int64_t n, std::int64_t k);

// Data-driven schedule: a_k = min{ m : sum_{i<=m} sqrt(Delta f(i)) >=
// (k/K) sum_i sqrt(Delta f(i)) }, endpoints pinned, same repair rule as
// from_alpha. Requires Delta f >= 0 (smooth Monte Carlo profiles first).
CumSchedule data_driven_schedule(const InfoProfile& profile, std::int64_t k);

// Geodesic solution alpha = G^{-1}(t G(1)), G(y) = int_0^y sqrt(g).
// g must be continuous and strictly positive on [0,1].
AlphaCurve continuous_optimum(const RealFn& g);

// c(alpha) = int_0^1 g(alpha_t) alpha'_t^2 dt (composite Simpson, 4097 pts).
double functional_diverging(const RealFn& g, const AlphaCurve& curve);

// Piecewise-affine interpolation of the square function on the grid n/s_bar.
double h_quantized(double u, double s_bar);

// Bounded-regime limit functional: s_bar int g(alpha) h_{s_bar}(alpha') - 1.
double functional_bounded(const RealFn& g, const AlphaCurve& curve, double s_bar);

enum class Regime { diverging, bounded };

struct LimitReport {
    Regime regime;
    double s_bar;        // N/K
    double functional;   // c(alpha) or the bounded-regime integral value
    double predicted_a;
    double measured_a;
    double ratio;        // measured/predicted (1 when degenerate)
    bool degenerate_d;
    double d;
};

// Closed-form Gaussian scaling run: builds the profile for rho = xi/N,
// measures A via the discrete-derivative identity and compares with the
// limit prediction.
LimitReport scaling_limit_experiment(double xi, const AlphaCurve& curve, std::int64_t n,
                                     std::int64_t k, Regime regime);

struct CensusEntry {
    double t;           // k/K
    std::int64_t size;  // a_{k+1} - a_k
};

// Empirical distribution of block sizes along the schedule.
std::vector<CensusEntry> block_size_census(const AlphaCurve& curve, std::int64_t n,
                                           std::int64_t k);

// Fraction of census entries with the given size.
double census_frequency(const std::vector<CensusEntry>& census, std::int64_t size);

// Number of entries outside {floor(s_bar alpha'), ceil(s_bar alpha')}.
std::int64_t census_support_violations(const std::vector<CensusEntry>& census,
                                       const AlphaCurve& curve, double s_bar);

}  // namespace unmask
