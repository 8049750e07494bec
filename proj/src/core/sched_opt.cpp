#include "unmask/sched_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "unmask/gaussian.hpp"

namespace unmask {

namespace {

constexpr int kQuadraturePoints = 4097;  // composite Simpson grid for [0,1]
constexpr double kBisectTol = 1e-12;

// Composite Simpson over [0,1] on the fixed grid (one midpoint evaluation
// per interval).
double simpson01(const RealFn& fn) {
    const int m = kQuadraturePoints - 1;
    const double h = 1.0 / static_cast<double>(m);
    StableSum acc;
    double left = fn(0.0);
    for (int i = 0; i < m; ++i) {
        double a = static_cast<double>(i) * h;
        double mid = fn(a + 0.5 * h);
        double right = fn(a + h);
        acc.add(h / 6.0 * (left + 4.0 * mid + right));
        left = right;
    }
    return acc.value();
}

double simpson_segment(const RealFn& fn, double a, double b) {
    return (b - a) / 6.0 * (fn(a) + 4.0 * fn(0.5 * (a + b)) + fn(b));
}

// ceil with a snap: values within 1e-9 of an integer round to it first, so
// N * alpha(k/K) at exact grid points is not pushed up by float noise.
std::int64_t snapped_ceil(double v) {
    double r = std::round(v);
    if (std::abs(v - r) < 1e-9 * std::max(1.0, std::abs(v))) {
        return static_cast<std::int64_t>(r);
    }
    return static_cast<std::int64_t>(std::ceil(v));
}

}  // namespace

AlphaCurve AlphaCurve::identity() {
    AlphaCurve c;
    c.kind_ = Kind::identity;
    c.tag_ = "identity";
    return c;
}

AlphaCurve AlphaCurve::exponential(double xi) {
    if (!(xi > -1.0)) throw InvalidArgument("AlphaCurve::exponential: xi must exceed -1");
    AlphaCurve c;
    c.kind_ = Kind::exponential;
    c.xi_ = xi;
    c.tag_ = "exponential(" + std::to_string(xi) + ")";
    return c;
}

AlphaCurve AlphaCurve::tabulated(std::vector<double> t, std::vector<double> alpha) {
    if (t.size() != alpha.size() || t.size() < 2) {
        throw InvalidArgument("AlphaCurve::tabulated: need matching grids with >= 2 points");
    }
    if (std::abs(t.front()) > 1e-12 || std::abs(t.back() - 1.0) > 1e-12) {
        throw InvalidArgument("AlphaCurve::tabulated: t grid must span [0,1]");
    }
    if (std::abs(alpha.front()) > 1e-10 || std::abs(alpha.back() - 1.0) > 1e-10) {
        throw InvalidArgument("AlphaCurve::tabulated: endpoints must be alpha(0)=0, alpha(1)=1");
    }
    for (std::size_t j = 1; j < t.size(); ++j) {
        if (t[j] <= t[j - 1]) throw InvalidArgument("AlphaCurve::tabulated: t must increase");
        if (alpha[j] <= alpha[j - 1]) {
            throw InvalidArgument("AlphaCurve::tabulated: alpha must be strictly increasing");
        }
    }

    AlphaCurve c;
    c.kind_ = Kind::tabulated;
    c.tag_ = "tabulated";
    // Fritsch-Carlson monotone cubic tangents (all secants positive here).
    const std::size_t m = t.size();
    std::vector<double> secant(m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        secant[j] = (alpha[j + 1] - alpha[j]) / (t[j + 1] - t[j]);
    }
    std::vector<double> tang(m);
    tang[0] = secant[0];
    tang[m - 1] = secant[m - 2];
    for (std::size_t j = 1; j + 1 < m; ++j) tang[j] = 0.5 * (secant[j - 1] + secant[j]);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        double a = tang[j] / secant[j];
        double b = tang[j + 1] / secant[j];
        double s = a * a + b * b;
        if (s > 9.0) {
            double tau = 3.0 / std::sqrt(s);
            tang[j] = tau * a * secant[j];
            tang[j + 1] = tau * b * secant[j];
        }
    }
    c.knots_t_ = std::move(t);
    c.knots_a_ = std::move(alpha);
    c.tangents_ = std::move(tang);
    return c;
}

AlphaCurve AlphaCurve::geodesic(RealFn g) {
    AlphaCurve c;
    c.kind_ = Kind::geodesic;
    c.tag_ = "geodesic";
    const int m = kQuadraturePoints - 1;
    const double h = 1.0 / static_cast<double>(m);
    RealFn sqrt_g = [g](double u) { return std::sqrt(g(u)); };
    // Strict positivity check on the quadrature grid (incl. midpoints).
    for (int i = 0; i <= 2 * m; ++i) {
        double u = static_cast<double>(i) * 0.5 * h;
        if (!(g(u) > 0.0)) {
            throw InvalidArgument("AlphaCurve::geodesic: g must be strictly positive on [0,1]");
        }
    }
    c.big_g_.assign(static_cast<std::size_t>(m) + 1, 0.0);
    StableSum run;
    for (int i = 0; i < m; ++i) {
        double a = static_cast<double>(i) * h;
        run.add(simpson_segment(sqrt_g, a, a + h));
        c.big_g_[static_cast<std::size_t>(i) + 1] = run.value();
    }
    c.big_g1_ = c.big_g_.back();
    c.g_ = std::move(g);
    return c;
}

double AlphaCurve::eval_tabulated(double t, bool deriv) const {
    const auto& xs = knots_t_;
    const auto& ys = knots_a_;
    std::size_t hi = static_cast<std::size_t>(
        std::upper_bound(xs.begin(), xs.end(), t) - xs.begin());
    if (hi == 0) hi = 1;
    if (hi >= xs.size()) hi = xs.size() - 1;
    std::size_t lo = hi - 1;
    double dx = xs[hi] - xs[lo];
    double s = (t - xs[lo]) / dx;
    double y0 = ys[lo], y1 = ys[hi], m0 = tangents_[lo] * dx, m1 = tangents_[hi] * dx;
    if (!deriv) {
        double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 +
               (s3 - s2) * m1;
    }
    double ds2 = 2 * s, ds3 = 3 * s * s;
    return ((ds3 * 2 - 3 * ds2) * y0 + (ds3 - 2 * ds2 + 1) * m0 + (-2 * ds3 + 3 * ds2) * y1 +
            (ds3 - ds2) * m1) /
           dx;
}

double AlphaCurve::eval_geodesic(double t) const {
    const int m = kQuadraturePoints - 1;
    const double h = 1.0 / static_cast<double>(m);
    double target = t * big_g1_;
    RealFn sqrt_g = [this](double u) { return std::sqrt(g_(u)); };
    // Bracket on the grid, then bisect within the cell against
    // G(y) = G[i] + int_{t_i}^{y} sqrt(g).
    auto it = std::lower_bound(big_g_.begin(), big_g_.end(), target);
    std::size_t hi = static_cast<std::size_t>(it - big_g_.begin());
    if (hi == 0) return 0.0;
    if (hi >= big_g_.size()) return 1.0;
    std::size_t cell = hi - 1;
    double lo_y = static_cast<double>(cell) * h;
    double hi_y = lo_y + h;
    double base = big_g_[cell];
    double residual = target - base;
    for (int iter = 0; iter < 60 && hi_y - lo_y > kBisectTol; ++iter) {
        double mid = 0.5 * (lo_y + hi_y);
        double val = simpson_segment(sqrt_g, static_cast<double>(cell) * h, mid);
        if (val < residual) {
            lo_y = mid;
        } else {
            hi_y = mid;
        }
    }
    return 0.5 * (lo_y + hi_y);
}

double AlphaCurve::value(double t) const {
    if (t < 0.0 || t > 1.0) throw InvalidArgument("AlphaCurve::value: t outside [0,1]");
    switch (kind_) {
        case Kind::identity:
            return t;
        case Kind::exponential: {
            if (xi_ == 0.0) return t;
            return std::expm1(t * std::log1p(xi_)) / xi_;
        }
        case Kind::tabulated:
            return eval_tabulated(t, false);
        case Kind::geodesic:
            return eval_geodesic(t);
    }
    return t;
}

double AlphaCurve::derivative(double t) const {
    if (t < 0.0 || t > 1.0) throw InvalidArgument("AlphaCurve::derivative: t outside [0,1]");
    switch (kind_) {
        case Kind::identity:
            return 1.0;
        case Kind::exponential: {
            if (xi_ == 0.0) return 1.0;
            double l = std::log1p(xi_);
            return l * std::exp(t * l) / xi_;
        }
        case Kind::tabulated:
            return eval_tabulated(t, true);
        case Kind::geodesic:
            return big_g1_ / std::sqrt(g_(eval_geodesic(t)));
    }
    return 1.0;
}

DpResult optimal_dp(const InfoProfile& profile, std::int64_t k) {
    const std::int64_t n = profile.n();
    if (k < 1 || k > n) throw InvalidArgument("optimal_dp: K must satisfy 1 <= K <= N");
    if ((k + 1) * (n + 1) > 50'000'000) {
        throw GuardExceeded("optimal_dp: K*N table too large");
    }
    const auto& f = profile.values();
    const double neg_inf = -std::numeric_limits<double>::infinity();

    // Suffix value S[j][a]: best sum of (a'-a) f(a) terms from position a
    // to N using exactly j blocks. Rolled over j; parents kept for the
    // lexicographically-smallest reconstruction.
    std::vector<double> prev(static_cast<std::size_t>(n) + 1, neg_inf);
    std::vector<double> cur(static_cast<std::size_t>(n) + 1, neg_inf);
    std::vector<std::vector<std::int32_t>> parent(
        static_cast<std::size_t>(k) + 1,
        std::vector<std::int32_t>(static_cast<std::size_t>(n) + 1, -1));
    prev[static_cast<std::size_t>(n)] = 0.0;

    for (std::int64_t j = 1; j <= k; ++j) {
        std::fill(cur.begin(), cur.end(), neg_inf);
        // With j blocks remaining the position can be at most N - j.
        for (std::int64_t a = j == k ? 0 : 1; a <= n - j; ++a) {
            if (j == k && a != 0) continue;  // full problem starts at 0
            double fa = f[static_cast<std::size_t>(a)];
            double best = neg_inf;
            std::int32_t arg = -1;
            for (std::int64_t nxt = a + 1; nxt <= n - (j - 1); ++nxt) {
                double v = static_cast<double>(nxt - a) * fa + prev[static_cast<std::size_t>(nxt)];
                if (v > best) {  // strict: keeps the smallest maximizer
                    best = v;
                    arg = static_cast<std::int32_t>(nxt);
                }
            }
            cur[static_cast<std::size_t>(a)] = best;
            parent[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)] = arg;
        }
        std::swap(prev, cur);
    }

    std::vector<std::int64_t> a{0};
    std::int64_t pos = 0;
    for (std::int64_t j = k; j >= 1; --j) {
        pos = parent[static_cast<std::size_t>(j)][static_cast<std::size_t>(pos)];
        a.push_back(pos);
    }
    CumSchedule sched(n, std::move(a));

    StableSum total;
    for (double v : f) total.add(v);
    double a_value = total.value() - prev[0];
    return {std::move(sched), a_value};
}

bool OptimalityReport::all_satisfied() const {
    if (!hypothesis_ok) return false;
    for (const auto& iv : intervals) {
        if (!iv.satisfied) return false;
    }
    return true;
}

OptimalityReport check_optimality_interval(const InfoProfile& profile, const CumSchedule& sched) {
    if (profile.n() != sched.n()) {
        throw InvalidArgument("check_optimality_interval: dimension mismatch");
    }
    OptimalityReport report;
    const auto& f = profile.values();
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (!(f[i] > f[i - 1])) {
            report.hypothesis_ok = false;
            return report;
        }
    }
    const auto& a = sched.a();
    const std::int64_t n = sched.n();
    const std::int64_t kk = sched.steps();
    const double tol = 1e-9;
    for (std::int64_t k = 1; k <= kk - 1; ++k) {
        auto ak = a[static_cast<std::size_t>(k)];
        auto akm1 = a[static_cast<std::size_t>(k - 1)];
        auto akp1 = a[static_cast<std::size_t>(k + 1)];
        double s_next = static_cast<double>(akp1 - ak);

        OptimalityReport::Interval iv;
        iv.k = k;
        iv.s_next = s_next;
        double df_ak = f[static_cast<std::size_t>(ak)] - f[static_cast<std::size_t>(ak - 1)];
        iv.lower = (f[static_cast<std::size_t>(ak - 1)] - f[static_cast<std::size_t>(akm1)]) /
                   df_ak;
        bool ok = s_next >= iv.lower - tol;
        // Upper edge requires the +1 perturbation to stay a valid schedule
        // and f(a_k + 1) to exist.
        if (ak + 1 < akp1 && ak + 1 <= n - 1) {
            double df_up =
                f[static_cast<std::size_t>(ak + 1)] - f[static_cast<std::size_t>(ak)];
            iv.upper = (f[static_cast<std::size_t>(ak + 1)] - f[static_cast<std::size_t>(akm1)]) /
                       df_up;
            iv.upper_defined = true;
            ok = ok && s_next <= iv.upper + tol;
        } else {
            iv.upper = std::numeric_limits<double>::quiet_NaN();
            iv.upper_defined = false;
        }
        iv.satisfied = ok;
        report.intervals.push_back(iv);
    }
    return report;
}

CumSchedule uniform_schedule(std::int64_t n, std::int64_t k) {
    if (k < 1 || k > n) throw InvalidArgument("uniform_schedule: K must satisfy 1 <= K <= N");
    std::vector<std::int64_t> a(static_cast<std::size_t>(k) + 1);
    for (std::int64_t j = 0; j <= k; ++j) {
        a[static_cast<std::size_t>(j)] = (n * j + k - 1) / k;
    }
    a[0] = 0;
    return CumSchedule(n, std::move(a));
}

namespace {

// Shared endpoint-pinning and collision repair for ceiling-based schedules.
std::pair<CumSchedule, int> repair_schedule(std::int64_t n, std::vector<std::int64_t> a) {
    const auto k = static_cast<std::int64_t>(a.size()) - 1;
    int repairs = 0;
    a[0] = 0;
    if (a[static_cast<std::size_t>(k)] != n) {
        a[static_cast<std::size_t>(k)] = n;
        ++repairs;
    }
    for (std::int64_t j = 1; j <= k; ++j) {
        if (a[static_cast<std::size_t>(j)] <= a[static_cast<std::size_t>(j - 1)]) {
            a[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(j - 1)] + 1;
            ++repairs;
        }
    }
    for (std::int64_t j = k - 1; j >= 1; --j) {
        std::int64_t cap = n - (k - j);
        if (a[static_cast<std::size_t>(j)] > cap) {
            a[static_cast<std::size_t>(j)] = cap;
            ++repairs;
        }
    }
    return {CumSchedule(n, std::move(a)), repairs};
}

}  // namespace

FromAlphaResult from_alpha(const AlphaCurve& curve, std::int64_t n, std::int64_t k) {
    if (k < 1 || k > n) throw InvalidArgument("from_alpha: K must satisfy 1 <= K <= N");
    std::vector<std::int64_t> a(static_cast<std::size_t>(k) + 1);
    for (std::int64_t j = 0; j <= k; ++j) {
        double alpha = curve.value(static_cast<double>(j) / static_cast<double>(k));
        a[static_cast<std::size_t>(j)] = snapped_ceil(static_cast<double>(n) * alpha);
    }
    auto [sched, repairs] = repair_schedule(n, std::move(a));
    return {std::move(sched), repairs};
}

CumSchedule data_driven_schedule(const InfoProfile& profile, std::int64_t k) {
    const std::int64_t n = profile.n();
    if (k < 1 || k > n) throw InvalidArgument("data_driven_schedule: K out of range");
    auto df = delta(profile);
    for (double v : df) {
        if (v < -1e-10) {
            throw HypothesisViolated(
                "data_driven_schedule: Delta f must be nonnegative (smooth the profile first)");
        }
    }
    // Cumulative sqrt-increments c(m) = sum_{i<=m} sqrt(Delta f(i)).
    std::vector<double> cum(static_cast<std::size_t>(n), 0.0);
    StableSum run;
    for (std::int64_t m = 1; m <= n - 1; ++m) {
        run.add(std::sqrt(std::max(df[static_cast<std::size_t>(m - 1)], 0.0)));
        cum[static_cast<std::size_t>(m)] = run.value();
    }
    double total = cum[static_cast<std::size_t>(n - 1)];
    if (!(total > 0.0)) {
        throw NoCorrelation("data_driven_schedule: all increments are zero");
    }
    const double tol = 1e-9 * (total + 1.0);
    std::vector<std::int64_t> a(static_cast<std::size_t>(k) + 1, 0);
    for (std::int64_t j = 1; j < k; ++j) {
        double threshold = static_cast<double>(j) / static_cast<double>(k) * total;
        auto it = std::lower_bound(cum.begin(), cum.end(), threshold - tol);
        a[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(it - cum.begin());
    }
    a[static_cast<std::size_t>(k)] = n;
    auto [sched, repairs] = repair_schedule(n, std::move(a));
    (void)repairs;
    return std::move(sched);
}

AlphaCurve continuous_optimum(const RealFn& g) { return AlphaCurve::geodesic(g); }

double functional_diverging(const RealFn& g, const AlphaCurve& curve) {
    return simpson01([&](double t) {
        double d = curve.derivative(t);
        return g(curve.value(t)) * d * d;
    });
}

double h_quantized(double u, double s_bar) {
    if (!(s_bar >= 1.0)) throw InvalidArgument("h_quantized: s_bar must be >= 1");
    if (u < 0.0) throw InvalidArgument("h_quantized: u must be nonnegative");
    double su = s_bar * u;
    double fl = std::floor(su);
    double frac = su - fl;
    double ce = (frac == 0.0) ? fl : fl + 1.0;
    return ((1.0 - frac) * fl * fl + frac * ce * ce) / (s_bar * s_bar);
}

double functional_bounded(const RealFn& g, const AlphaCurve& curve, double s_bar) {
    if (!(s_bar >= 1.0)) throw InvalidArgument("functional_bounded: s_bar must be >= 1");
    double integral = simpson01([&](double t) {
        return g(curve.value(t)) * h_quantized(curve.derivative(t), s_bar);
    });
    return s_bar * integral - 1.0;
}

LimitReport scaling_limit_experiment(double xi, const AlphaCurve& curve, std::int64_t n,
                                     std::int64_t k, Regime regime) {
    if (n < 2 || k < 1 || k > n) throw InvalidArgument("scaling_limit_experiment: bad N, K");
    double s_bar = static_cast<double>(n) / static_cast<double>(k);
    if (regime == Regime::bounded && s_bar < 1.0) {
        throw InvalidArgument("scaling_limit_experiment: bounded regime needs N/K >= 1");
    }
    GaussianExchangeable model(n, xi / static_cast<double>(n));
    InfoProfile profile = gaussian_profile(model);
    double d = gaussian_d(model);
    CumSchedule sched = from_alpha(curve, n, k).schedule;
    double measured = a_discrete_derivative(profile, sched);

    LimitReport report;
    report.regime = regime;
    report.s_bar = s_bar;
    report.d = d;
    report.measured_a = measured;
    report.degenerate_d = !(d > 0.0);
    GaussianGLimit g(xi);
    RealFn g_fn = [g](double u) { return g(u); };
    // The functional itself is D-free, so it stays meaningful even when
    // the target is independent (D = 0).
    if (regime == Regime::diverging) {
        report.functional = functional_diverging(g_fn, curve);
        report.predicted_a = 0.5 * d * s_bar * report.functional;
    } else {
        report.functional = functional_bounded(g_fn, curve, s_bar);
        report.predicted_a = 0.5 * d * report.functional;
    }
    report.ratio = report.degenerate_d ? 1.0 : report.measured_a / report.predicted_a;
    return report;
}

std::vector<CensusEntry> block_size_census(const AlphaCurve& curve, std::int64_t n,
                                           std::int64_t k) {
    CumSchedule sched = from_alpha(curve, n, k).schedule;
    const auto& a = sched.a();
    std::vector<CensusEntry> out;
    out.reserve(a.size() - 1);
    for (std::size_t j = 0; j + 1 < a.size(); ++j) {
        out.push_back({static_cast<double>(j) / static_cast<double>(k), a[j + 1] - a[j]});
    }
    return out;
}

double census_frequency(const std::vector<CensusEntry>& census, std::int64_t size) {
    if (census.empty()) return 0.0;
    std::int64_t hits = 0;
    for (const auto& e : census) {
        if (e.size == size) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(census.size());
}

std::int64_t census_support_violations(const std::vector<CensusEntry>& census,
                                       const AlphaCurve& curve, double s_bar) {
    std::int64_t bad = 0;
    for (const auto& e : census) {
        double su = s_bar * curve.derivative(e.t);
        auto lo = static_cast<std::int64_t>(std::floor(su));
        auto hi = static_cast<std::int64_t>(std::ceil(su));
        if (e.size != lo && e.size != hi) ++bad;
    }
    return bad;
}

}  // namespace unmask
