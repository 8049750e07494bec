#include "unmask/gaussian.hpp"

#include <cmath>
#include <limits>

namespace unmask {

GaussianExchangeable::GaussianExchangeable(std::int64_t n, double rho) : n_(n), rho_(rho) {
    if (n_ < 1) throw InvalidArgument("GaussianExchangeable: n must be positive");
    double lo = (n_ > 1) ? -1.0 / static_cast<double>(n_ - 1) : -1.0;
    if (!(rho_ >= lo && rho_ <= 1.0)) {
        throw InvalidArgument(
            "GaussianExchangeable: rho must lie in [-1/(N-1), 1] (covariance PSD)");
    }
}

bool GaussianExchangeable::singular() const {
    if (n_ == 1) return false;
    double lo = -1.0 / static_cast<double>(n_ - 1);
    return rho_ == 1.0 || rho_ == lo;
}

double gaussian_conditional_variance(const GaussianExchangeable& model, std::int64_t i) {
    if (i < 0 || i > model.n() - 1) {
        throw InvalidArgument("gaussian_conditional_variance: i out of range");
    }
    const double rho = model.rho();
    if (i == 0) return 1.0;
    double di = static_cast<double>(i);
    return (1.0 - rho) * (1.0 + di * rho) / (1.0 + (di - 1.0) * rho);
}

double gaussian_d(const GaussianExchangeable& model) {
    const double rho = model.rho();
    const double n = static_cast<double>(model.n());
    if (model.n() == 1 || rho == 0.0) return 0.0;
    if (model.singular()) return std::numeric_limits<double>::infinity();
    // D = -1/2 log(1 - (N-1) rho^2 / (1+(N-2) rho)); the log1p form keeps
    // accuracy when rho = xi/N is tiny.
    double ratio = (n - 1.0) * rho * rho / (1.0 + (n - 2.0) * rho);
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    return -0.5 * std::log1p(-ratio);
}

}  // namespace unmask
