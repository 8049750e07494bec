#pragma once

#include "unmask/common.hpp"

namespace unmask {

// Exchangeable centered Gaussian on R^N: unit variances, constant pairwise
// correlation rho in [-1/(N-1), 1]. Everything downstream (profile, D,
// schedules) has a closed form, which is what makes N up to 10^6 cheap.
class GaussianExchangeable {
public:
    GaussianExchangeable(std::int64_t n, double rho);

    std::int64_t n() const { return n_; }
    double rho() const { return rho_; }

    // True when rho sits on the boundary of the admissible interval, where
    // the conditional chain degenerates and D is infinite.
    bool singular() const;

private:
    std::int64_t n_;
    double rho_;
};

// Var(x_{i+1} | x_1..x_i) = (1-rho)(1+i*rho)/(1+(i-1)*rho), 0 <= i <= N-1.
double gaussian_conditional_variance(const GaussianExchangeable& model, std::int64_t i);

// D(pi) = (1/2) log((1+(N-2)rho) / (1+(N-2)rho-(N-1)rho^2)).
// Returns +infinity on the singular boundary.
double gaussian_d(const GaussianExchangeable& model);

}  // namespace unmask
