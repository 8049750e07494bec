#include "unmask/info_profile.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "unmask/rng.hpp"

namespace unmask {

namespace {

constexpr double kExactProfileCostGuard = 2.5e8;  // ~2^N |X|^N state visits

// Samples joint states by inverse CDF over the (compensated) cumulative
// table; O(log states) per draw.
class TableSampler {
public:
    explicit TableSampler(const TabularDist& dist) : dist_(&dist) {
        cumulative_.reserve(dist.states());
        StableSum run;
        for (double p : dist.pmf()) {
            run.add(p);
            cumulative_.push_back(run.value());
        }
        cumulative_.back() = 1.0;
    }

    std::size_t draw_code(KeyedRng& rng) const {
        double u = rng.uniform();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

    std::vector<int> draw_state(KeyedRng& rng) const {
        std::vector<int> state(static_cast<std::size_t>(dist_->n()));
        dist_->decode(draw_code(rng), state);
        return state;
    }

private:
    const TabularDist* dist_;
    std::vector<double> cumulative_;
};

}  // namespace

InfoProfile::InfoProfile(std::vector<double> values, ProfileMode mode, std::optional<McInfo> mc)
    : values_(std::move(values)), mode_(mode), mc_(std::move(mc)) {
    if (values_.empty()) throw InvalidArgument("InfoProfile: values must be nonempty");
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidArgument("InfoProfile: values must be finite");
    }
    if (mode_ != ProfileMode::monte_carlo) {
        if (!nondecreasing(1e-10)) {
            throw InvalidArgument("InfoProfile: exact/closed-form profile must be nondecreasing");
        }
    }
    if (mode_ == ProfileMode::monte_carlo && !mc_) {
        throw InvalidArgument("InfoProfile: Monte Carlo profile requires sampling metadata");
    }
}

bool InfoProfile::nondecreasing(double tol) const {
    for (std::size_t i = 1; i < values_.size(); ++i) {
        if (values_[i] < values_[i - 1] - tol) return false;
    }
    return true;
}

bool exact_profile_feasible(const TabularDist& dist) {
    double cost = std::pow(2.0, dist.n()) * static_cast<double>(dist.states());
    return cost <= kExactProfileCostGuard;
}

InfoProfile exact_profile(const TabularDist& dist) {
    if (!exact_profile_feasible(dist)) {
        throw GuardExceeded(
            "exact_profile: subset enumeration too large; use the Monte Carlo profile");
    }
    const int n = dist.n();
    const int card = dist.cardinality();
    const std::size_t masks = std::size_t{1} << n;

    // Entropy of the marginal on every subset of coordinates.
    std::vector<double> h(masks, 0.0);
    std::vector<std::size_t> weight(static_cast<std::size_t>(n));
    auto pmf = dist.pmf();
    for (std::size_t mask = 1; mask < masks; ++mask) {
        int bits = std::popcount(mask);
        std::size_t size = 1;
        for (int b = 0; b < bits; ++b) size *= static_cast<std::size_t>(card);
        // Per-coordinate weights of the projected code, most significant first.
        std::size_t w = 1;
        for (int i = n - 1; i >= 0; --i) {
            if (mask & (std::size_t{1} << i)) {
                weight[static_cast<std::size_t>(i)] = w;
                w *= static_cast<std::size_t>(card);
            } else {
                weight[static_cast<std::size_t>(i)] = 0;
            }
        }
        std::vector<StableSum> marg(size);
        for (std::size_t code = 0; code < pmf.size(); ++code) {
            if (pmf[code] == 0.0) continue;
            std::size_t c = code;
            std::size_t proj = 0;
            for (int i = n - 1; i >= 0; --i) {
                std::size_t digit = c % static_cast<std::size_t>(card);
                c /= static_cast<std::size_t>(card);
                proj += digit * weight[static_cast<std::size_t>(i)];
            }
            marg[proj].add(pmf[code]);
        }
        StableSum ent;
        for (const auto& acc : marg) {
            double p = acc.value();
            if (p > 0.0) ent.add(-p * std::log(p));
        }
        h[mask] = ent.value();
    }

    // f(i) = avg over |z| = i, j not in z of (H(z) - H(z u {j})).
    std::vector<StableSum> acc(static_cast<std::size_t>(n));
    std::vector<double> pair_count(static_cast<std::size_t>(n), 0.0);
    for (std::size_t mask = 0; mask < masks; ++mask) {
        int i = std::popcount(mask);
        if (i >= n) continue;
        for (int j = 0; j < n; ++j) {
            if (mask & (std::size_t{1} << j)) continue;
            acc[static_cast<std::size_t>(i)].add(h[mask] - h[mask | (std::size_t{1} << j)]);
            pair_count[static_cast<std::size_t>(i)] += 1.0;
        }
    }
    std::vector<double> values(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        values[static_cast<std::size_t>(i)] =
            acc[static_cast<std::size_t>(i)].value() / pair_count[static_cast<std::size_t>(i)];
    }
    return InfoProfile(std::move(values), ProfileMode::exact);
}

InfoProfile mc_profile(const TabularDist& data, const ConditionalModel& model,
                       std::int64_t samples, std::uint64_t seed, bool sum_over_tokens) {
    if (samples <= 0) throw InvalidArgument("mc_profile: need at least one sample");
    if (model.n() != data.n() || model.cardinality() != data.cardinality()) {
        throw InvalidArgument("mc_profile: model and data dimensions disagree");
    }
    const int n = data.n();
    TableSampler sampler(data);

    std::vector<double> values(static_cast<std::size_t>(n));
    std::vector<double> stderrs(static_cast<std::size_t>(n));
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) all[static_cast<std::size_t>(j)] = j;

    KeyedRng master(seed);
    for (int i = 0; i < n; ++i) {
        KeyedRng stream = master.derive(static_cast<std::uint64_t>(i));
        StableSum mean_acc;
        StableSum sq_acc;
        for (std::int64_t m = 0; m < samples; ++m) {
            KeyedRng draw = stream.derive(static_cast<std::uint64_t>(m));
            std::vector<int> x = sampler.draw_state(draw);
            std::vector<int> pool = all;
            std::vector<int> z = draw_subset(draw, pool, i);
            std::vector<int> z_values;
            z_values.reserve(z.size());
            for (int pos : z) z_values.push_back(x[static_cast<std::size_t>(pos)]);
            Assignment given(z, z_values, n, data.cardinality());

            // Stratified inner average over every masked coordinate.
            double inner = 0.0;
            for (int j : pool) {
                std::vector<double> cond = model.conditional_of(j, given);
                if (sum_over_tokens) {
                    for (double q : cond) inner += std::log(std::max(q, 1e-300));
                } else {
                    double q = cond[static_cast<std::size_t>(x[static_cast<std::size_t>(j)])];
                    inner += std::log(q);
                }
            }
            inner /= static_cast<double>(n - i);
            mean_acc.add(inner);
            sq_acc.add(inner * inner);
        }
        double mean = mean_acc.value() / static_cast<double>(samples);
        double var = sq_acc.value() / static_cast<double>(samples) - mean * mean;
        if (var < 0.0) var = 0.0;
        values[static_cast<std::size_t>(i)] = mean;
        stderrs[static_cast<std::size_t>(i)] = std::sqrt(var / static_cast<double>(samples));
    }

    McInfo info;
    info.samples = samples;
    info.seed = seed;
    info.sum_over_tokens = sum_over_tokens;
    info.stderrs = std::move(stderrs);
    return InfoProfile(std::move(values), ProfileMode::monte_carlo, std::move(info));
}

InfoProfile mc_profile(const TabularDist& dist, std::int64_t samples, std::uint64_t seed,
                       bool sum_over_tokens) {
    ExactConditional model(dist);
    return mc_profile(dist, model, samples, seed, sum_over_tokens);
}

std::vector<double> delta(const InfoProfile& profile) {
    if (profile.n() < 2) throw InvalidArgument("delta: profile needs at least two points");
    const auto& f = profile.values();
    std::vector<double> d(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i) d[i - 1] = f[i] - f[i - 1];
    return d;
}

double max_delta(const InfoProfile& profile) {
    auto d = delta(profile);
    return *std::max_element(d.begin(), d.end());
}

InfoProfile isotonic_smooth(const InfoProfile& profile) {
    // Pool adjacent violators, all weights 1.
    const auto& f = profile.values();
    std::vector<double> level;
    std::vector<double> width;
    for (double v : f) {
        level.push_back(v);
        width.push_back(1.0);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            double w = width[width.size() - 2] + width.back();
            double merged =
                (level[level.size() - 2] * width[width.size() - 2] + level.back() * width.back()) /
                w;
            level.pop_back();
            width.pop_back();
            level.back() = merged;
            width.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(f.size());
    for (std::size_t b = 0; b < level.size(); ++b) {
        for (int r = 0; r < static_cast<int>(width[b]); ++r) out.push_back(level[b]);
    }
    return InfoProfile(std::move(out), profile.mode(), profile.mc());
}

RescaledDerivative::RescaledDerivative(std::int64_t n, std::vector<double> values, double d_used)
    : n_(n), values_(std::move(values)), d_used_(d_used) {
    if (n_ < 2 || values_.size() != static_cast<std::size_t>(n_ - 1)) {
        throw InvalidArgument("RescaledDerivative: need N-1 grid values");
    }
    StableSum integral;
    for (double v : values_) {
        if (v < -1e-10) {
            throw InvalidArgument("RescaledDerivative: values must be nonnegative");
        }
        integral.add(v / static_cast<double>(n_));
    }
    if (std::abs(integral.value() - 1.0) > 1e-8) {
        throw InvalidArgument("RescaledDerivative: grid integral must be 1 within 1e-8");
    }
}

double RescaledDerivative::at(double u) const {
    if (u < 0.0 || u > 1.0) throw InvalidArgument("RescaledDerivative::at: u outside [0,1]");
    auto idx = static_cast<std::int64_t>(std::floor(u * static_cast<double>(n_)));
    if (idx < 0) idx = 0;
    if (idx > n_ - 2) idx = n_ - 2;  // last cell extends through u = 1
    return values_[static_cast<std::size_t>(idx)];
}

RescaledDerivative rescaled_derivative(const InfoProfile& profile, double d) {
    if (!(d > 0.0)) {
        throw NoCorrelation("rescaled_derivative: D = 0, no correlation structure to rescale");
    }
    auto df = delta(profile);
    std::vector<double> g(df.size());
    double scale = static_cast<double>(profile.n()) / d;
    for (std::size_t i = 0; i < df.size(); ++i) g[i] = scale * df[i];
    return RescaledDerivative(profile.n(), std::move(g), d);
}

InfoProfile gaussian_profile(const GaussianExchangeable& model) {
    if (model.singular()) {
        throw SingularModel("gaussian_profile: rho on the singular boundary");
    }
    const std::int64_t n = model.n();
    const double log_2pi_e = std::log(2.0 * std::numbers::pi) + 1.0;
    std::vector<double> values(static_cast<std::size_t>(n));
    // f(0) = -1/2 log(2 pi e); accumulate increments so the closed-form
    // delta stays exact at large N.
    values[0] = -0.5 * log_2pi_e;
    for (std::int64_t i = 1; i < n; ++i) {
        values[static_cast<std::size_t>(i)] =
            values[static_cast<std::size_t>(i - 1)] + gaussian_delta(model, i);
    }
    return InfoProfile(std::move(values), ProfileMode::closed_form);
}

double gaussian_delta(const GaussianExchangeable& model, std::int64_t i) {
    if (i < 1 || i > model.n() - 1) throw InvalidArgument("gaussian_delta: i out of range");
    const double rho = model.rho();
    if (rho == 0.0) return 0.0;
    double denom = 1.0 + (static_cast<double>(i) - 1.0) * rho;
    double ratio = rho * rho / (denom * denom);
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    return -0.5 * std::log1p(-ratio);
}

GaussianGLimit::GaussianGLimit(double xi) : xi_(xi) {
    if (!(xi > -1.0)) throw InvalidArgument("GaussianGLimit: xi must exceed -1");
}

double GaussianGLimit::operator()(double u) const {
    double denom = 1.0 + xi_ * u;
    return (1.0 + xi_) / (denom * denom);
}

}  // namespace unmask
