#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "unmask/dist.hpp"
#include "unmask/gaussian.hpp"

namespace unmask {

enum class ProfileMode { exact, monte_carlo, closed_form };

struct McInfo {
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    bool sum_over_tokens = false;   // printed-formula estimator variant
    std::vector<double> stderrs;    // per-i standard error of the estimate
};

// Information profile f(0..N-1) in nats: the expected log-conditional of a
// fresh coordinate given i uniformly chosen unmasked ones. Exact and
// closed-form profiles are nondecreasing with f(N-1)-f(0) = D(pi); Monte
// Carlo profiles are allowed to wiggle.
class InfoProfile {
public:
    InfoProfile(std::vector<double> values, ProfileMode mode,
                std::optional<McInfo> mc = std::nullopt);

    std::int64_t n() const { return static_cast<std::int64_t>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    double value(std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
    ProfileMode mode() const { return mode_; }
    const std::optional<McInfo>& mc() const { return mc_; }

    // f(N-1) - f(0).
    double d() const { return values_.back() - values_.front(); }

    bool nondecreasing(double tol = 1e-10) const;

private:
    std::vector<double> values_;
    ProfileMode mode_;
    std::optional<McInfo> mc_;
};

// Exact profile by the subset formulation: f(i) averages H(x_z) - H(x_z,x_j)
// over all subsets z of size i and j outside z. Identical to the uniform
// random-permutation average by exchangeability, exponentially cheaper.
// Throws GuardExceeded when 2^N |X|^N is out of reach (use mc_profile).
InfoProfile exact_profile(const TabularDist& dist);

// Guard predicate for exact_profile, exposed for dispatch decisions.
bool exact_profile_feasible(const TabularDist& dist);

// Monte Carlo estimate of f. For each sample: draw x from `data`, draw z
// uniform of size i, then average the model's log-conditional over all
// j not in z, evaluated at the observed token x_j. With sum_over_tokens the
// inner value is instead summed over every token value (the alternative
// printed form); the observed-token estimator is the default.
InfoProfile mc_profile(const TabularDist& data, const ConditionalModel& model,
                       std::int64_t samples, std::uint64_t seed, bool sum_over_tokens = false);

// Convenience: exact conditionals of `dist` as the model.
InfoProfile mc_profile(const TabularDist& dist, std::int64_t samples, std::uint64_t seed,
                       bool sum_over_tokens = false);

// Discrete derivative Delta f(i) = f(i) - f(i-1) for i = 1..N-1 (index i-1
// in the returned vector).
std::vector<double> delta(const InfoProfile& profile);

// Largest Delta f(i).
double max_delta(const InfoProfile& profile);

// Isotonic (nondecreasing) projection of the profile values in the least
// squares sense; pool-adjacent-violators. Intended for Monte Carlo
// profiles feeding methods that require Delta f >= 0.
InfoProfile isotonic_smooth(const InfoProfile& profile);

// Piecewise constant rescaled derivative g^N(u) = (N/D) Delta f(i) on
// [(i-1)/N, i/N), i = 1..N-1. Construction enforces nonnegativity (within
// 1e-10) and unit grid integral (within 1e-8).
class RescaledDerivative {
public:
    RescaledDerivative(std::int64_t n, std::vector<double> values, double d_used);

    std::int64_t n() const { return n_; }
    const std::vector<double>& values() const { return values_; }
    double d_used() const { return d_used_; }

    // Evaluate at u in [0,1]; the last cell extends to u = 1.
    double at(double u) const;

private:
    std::int64_t n_;
    std::vector<double> values_;  // value on cell i at index i-1
    double d_used_;
};

// Throws NoCorrelation when d <= 0.
RescaledDerivative rescaled_derivative(const InfoProfile& profile, double d);

// Closed-form Gaussian profile:
// f(i) = -1/2 [log(2 pi e) + log(1-rho) + log((1+i rho)/(1+(i-1) rho))].
InfoProfile gaussian_profile(const GaussianExchangeable& model);

// Delta f(i) = -1/2 log1p(-rho^2/(1+(i-1)rho)^2), computed directly so no
// precision is lost at large N.
double gaussian_delta(const GaussianExchangeable& model, std::int64_t i);

// Scaling limit of g^N for the xi-family (rho = xi/N):
// g(u) = (1+xi)/(1+xi*u)^2 on [0,1]. Requires xi > -1.
class GaussianGLimit {
public:
    explicit GaussianGLimit(double xi);
    double xi() const { return xi_; }
    double operator()(double u) const;

private:
    double xi_;
};

using RealFn = std::function<double(double)>;

}  // namespace unmask
