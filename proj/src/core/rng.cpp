#include "unmask/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "unmask/common.hpp"

namespace unmask {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

KeyedRng::KeyedRng(std::uint64_t seed) : key_(splitmix64(seed)) {}

KeyedRng KeyedRng::derive(std::uint64_t word) const {
    KeyedRng child(0);
    child.key_ = splitmix64(key_ ^ splitmix64(word));
    child.counter_ = 0;
    return child;
}

std::uint64_t KeyedRng::next() {
    return splitmix64(key_ + (++counter_) * kGolden);
}

double KeyedRng::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double KeyedRng::uniform_pos() {
    return 1.0 - uniform();
}

std::uint32_t KeyedRng::below(std::uint32_t bound) {
    if (bound == 0) throw InvalidArgument("below: bound must be positive");
    // Rejection from the top 32 bits keeps the draw unbiased.
    const std::uint64_t span = 0x100000000ull;
    const std::uint64_t limit = span - span % bound;
    for (;;) {
        std::uint64_t v = next() >> 32;
        if (v < limit) return static_cast<std::uint32_t>(v % bound);
    }
}

double KeyedRng::normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_gamma(KeyedRng& rng, double shape) {
    if (!(shape > 0.0)) throw InvalidArgument("sample_gamma: shape must be positive");
    if (shape < 1.0) {
        // Boost the shape, then scale back: X_a = X_{a+1} * U^{1/a}.
        double g = sample_gamma(rng, shape + 1.0);
        double u = rng.uniform_pos();
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = rng.uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

int sample_truncated_geometric(KeyedRng& rng, double p, int m) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("truncated geometric: p must lie in (0,1)");
    if (m < 1) throw InvalidArgument("truncated geometric: threshold must be >= 1");
    double u = rng.uniform();
    // Inversion: X = floor(log(1-u)/log(1-p)) + 1 is Geom(p) on {1,2,...}.
    double raw = std::floor(std::log1p(-u) / std::log1p(-p)) + 1.0;
    if (!(raw >= 1.0)) raw = 1.0;
    if (raw >= static_cast<double>(m)) return m;
    return static_cast<int>(raw);
}

std::vector<int> draw_subset(KeyedRng& rng, std::vector<int>& pool, int count) {
    if (count < 0 || count > static_cast<int>(pool.size())) {
        throw InvalidArgument("draw_subset: count out of range");
    }
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        std::uint32_t idx = rng.below(static_cast<std::uint32_t>(pool.size()));
        picked.push_back(pool[idx]);
        pool[idx] = pool.back();
        pool.pop_back();
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

}  // namespace unmask
