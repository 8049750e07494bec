#pragma once

#include <utility>

#include "unmask/dist.hpp"
#include "unmask/info_profile.hpp"
#include "unmask/planner.hpp"
#include "unmask/schedule.hpp"

namespace unmask {

// Riemann-approximation error of the profile integral induced by a
// deterministic schedule:
// A(a) = sum_{i<N} f(i) - sum_k (a_{k+1}-a_k) f(a_k).
double a_riemann(const InfoProfile& profile, const CumSchedule& sched);

// Same quantity through the discrete derivative:
// A(a) = sum_{i=1}^{N-1} Delta f(i) (r_a(i) - i).
double a_discrete_derivative(const InfoProfile& profile, const CumSchedule& sched);

// E_fact for the truncated-geometric size chain, exact closed form:
// (1-p)/p * sum_i (1 - (1-p)^(N-i)) Delta f(i).
double efact_geometric_closed_form(const InfoProfile& profile, double p);

// E_fact = E_law[A(a)] for random-order planners with the given size law.
double efact_random_order(const InfoProfile& profile, const SizeLaw& law);

// E_fact by brute force from its definition: the expected sum of
// conditional total correlations over the planner's partitions.
// Guarded to N <= kPartitionGuardN.
double efact_direct(const TabularDist& dist, const Planner& planner);

// Schedule moments of an arbitrary planner (exact, via support
// enumeration for random-order planners at small N, directly otherwise).
SizeLaw::Stats planner_stats(const Planner& planner);

// Worst-case upper bounds over arbitrary planners:
// first  (N - E[K]) log|X|,
// second (N - E[N/s_max]) D(pi).
std::pair<double, double> bound_worst(double log_cardinality, double d,
                                      const SizeLaw::Stats& stats, std::int64_t n);

// Random-order upper bounds: (E[s_max]-1) D and (E[s_max]-1) log|X|.
std::pair<double, double> bound_random_order(double d, double e_smax, int cardinality);

struct GeomBounds {
    double lower;
    double upper;
};

// Sandwich for the truncated-geometric chain:
// upper (1-p)/p * D, lower subtracts ((1-p)/p)^2 * max_i Delta f(i).
GeomBounds bounds_geometric(double d, double p, double max_delta);

struct MarkovTailReport {
    double threshold;       // c * ceil((N-K)/K) * D
    double markov_bound;    // 1/c
    double exceedance;      // exact probability mass of orderings at/above threshold
};

// Tail check for a fixed randomly-generated ordering with deterministic
// sizes: enumerates every ordering, computes E_fact(z) exactly, and
// reports the mass with E_fact(z) above the Markov threshold. Orderings
// exactly at a zero threshold do not count (degenerate D = 0 case).
MarkovTailReport markov_tail(const TabularDist& dist, const std::vector<std::int64_t>& sizes,
                             double c);

}  // namespace unmask
