#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "unmask/gaussian.hpp"
#include "unmask/info_profile.hpp"
#include "unmask/rng.hpp"
#include "unmask/sched_opt.hpp"
#include "util/oracles.hpp"

using namespace unmask;

namespace {

const double kTwoLogTwoSq = 2.0 * std::log(2.0) * std::log(2.0);

InfoProfile random_monotone_profile(std::uint64_t seed, std::int64_t n) {
    KeyedRng rng(seed);
    std::vector<double> f(static_cast<std::size_t>(n));
    double run = -2.0;
    for (auto& v : f) {
        run += rng.uniform();
        v = run;
    }
    return InfoProfile(std::move(f), ProfileMode::exact);
}

AlphaCurve random_competitor(std::uint64_t seed, int knots) {
    KeyedRng rng(seed);
    std::vector<double> t(static_cast<std::size_t>(knots));
    std::vector<double> a(static_cast<std::size_t>(knots));
    std::vector<double> inc(static_cast<std::size_t>(knots) - 1);
    double total = 0.0;
    for (auto& v : inc) {
        v = 0.1 + rng.uniform();
        total += v;
    }
    a[0] = 0.0;
    for (std::size_t j = 1; j < a.size(); ++j) a[j] = a[j - 1] + inc[j - 1] / total;
    a.back() = 1.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        t[j] = static_cast<double>(j) / static_cast<double>(knots - 1);
    }
    return AlphaCurve::tabulated(std::move(t), std::move(a));
}

}  // namespace

TEST_CASE("optimal_dp: identity at K=N, single-jump profile, ramp") {
    InfoProfile ramp(std::vector<double>{0.0, 1.0, 2.0, 3.0}, ProfileMode::exact);
    DpResult full = optimal_dp(ramp, 4);
    CHECK(full.a_value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(full.schedule.a() == std::vector<std::int64_t>{0, 1, 2, 3, 4});

    // Single jump at i = 3: split exactly there.
    InfoProfile jump(std::vector<double>{0.0, 0.0, 0.0, 1.0, 1.0}, ProfileMode::exact);
    DpResult j2 = optimal_dp(jump, 2);
    CHECK(j2.schedule.a() == std::vector<std::int64_t>{0, 3, 5});
    CHECK(j2.a_value == doctest::Approx(0.0).epsilon(1e-12));

    DpResult r2 = optimal_dp(ramp, 2);
    CHECK(r2.schedule.a() == std::vector<std::int64_t>{0, 2, 4});
    CHECK(r2.a_value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(a_riemann(ramp, r2.schedule) == doctest::Approx(r2.a_value).epsilon(1e-10));
}

TEST_CASE("optimal_dp: ties break to the lexicographically smallest schedule") {
    InfoProfile ramp(std::vector<double>{0.0, 1.0, 2.0, 3.0}, ProfileMode::exact);
    // All three K=3 schedules give A = 1.
    DpResult r = optimal_dp(ramp, 3);
    CHECK(r.a_value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.schedule.a() == std::vector<std::int64_t>{0, 1, 2, 4});
}

TEST_CASE("optimal_dp: equals exhaustive enumeration") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        std::int64_t n = 6 + static_cast<std::int64_t>(seed);
        InfoProfile prof = random_monotone_profile(seed, n);
        for (std::int64_t k : {2, 3, 4}) {
            DpResult dp = optimal_dp(prof, k);
            double best = 1e300;
            for (const auto& a : testing::all_schedules(n, k)) {
                best = std::min(best, testing::a_oracle(prof.values(), a));
            }
            CHECK(dp.a_value == doctest::Approx(best).epsilon(1e-10));
            CHECK(a_riemann(prof, dp.schedule) == doctest::Approx(best).epsilon(1e-10));
        }
    }
}

TEST_CASE("optimal_dp: refinement never hurts") {
    InfoProfile prof = random_monotone_profile(99, 12);
    double prev = optimal_dp(prof, 1).a_value;
    for (std::int64_t k = 2; k <= 12; ++k) {
        double cur = optimal_dp(prof, k).a_value;
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("optimal_dp: K out of range") {
    InfoProfile prof = random_monotone_profile(1, 5);
    CHECK_THROWS_AS(optimal_dp(prof, 0), InvalidArgument);
    CHECK_THROWS_AS(optimal_dp(prof, 6), InvalidArgument);
}

TEST_CASE("check_optimality_interval: DP optimum passes, hypothesis handling") {
    GaussianExchangeable model(10, 0.5);
    InfoProfile prof = gaussian_profile(model);
    DpResult dp = optimal_dp(prof, 3);
    OptimalityReport rep = check_optimality_interval(prof, dp.schedule);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.all_satisfied());

    InfoProfile flat(std::vector<double>{-1.0, -1.0, -1.0}, ProfileMode::exact);
    OptimalityReport bad = check_optimality_interval(flat, CumSchedule(3, {0, 1, 3}));
    CHECK_FALSE(bad.hypothesis_ok);
    CHECK_FALSE(bad.all_satisfied());
}

TEST_CASE("check_optimality_interval: every DP optimum on strictly increasing profiles") {
    for (double rho : {-0.05, 0.2, 0.6}) {
        InfoProfile prof = gaussian_profile(GaussianExchangeable(14, rho));
        for (std::int64_t k : {2, 3, 5, 7}) {
            DpResult dp = optimal_dp(prof, k);
            OptimalityReport rep = check_optimality_interval(prof, dp.schedule);
            CHECK(rep.hypothesis_ok);
            CHECK(rep.all_satisfied());
        }
    }
    // A deliberately bad schedule fails at least one interval.
    InfoProfile concave = gaussian_profile(GaussianExchangeable(14, 0.6));
    OptimalityReport rep = check_optimality_interval(concave, CumSchedule(14, {0, 10, 12, 14}));
    CHECK(rep.hypothesis_ok);
    CHECK_FALSE(rep.all_satisfied());
}

TEST_CASE("optimal_dp: table guard refuses oversized problems") {
    std::vector<double> f(1000000, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i);
    InfoProfile prof(std::move(f), ProfileMode::exact);
    CHECK_THROWS_AS(optimal_dp(prof, 100), GuardExceeded);
}

TEST_CASE("Prop-10 monotone sizes: convex vs concave Gaussian profiles") {
    // rho < 0: strictly convex profile, sizes non-increasing.
    InfoProfile convex = gaussian_profile(GaussianExchangeable(20, -0.04));
    // rho > 0: strictly concave profile, sizes non-decreasing.
    InfoProfile concave = gaussian_profile(GaussianExchangeable(20, 0.3));
    for (std::int64_t k : {3, 4, 5}) {
        auto sc = optimal_dp(convex, k).schedule.sizes();
        for (std::size_t j = 1; j < sc.size(); ++j) CHECK(sc[j] <= sc[j - 1]);
        auto sv = optimal_dp(concave, k).schedule.sizes();
        for (std::size_t j = 1; j < sv.size(); ++j) CHECK(sv[j] >= sv[j - 1]);
    }
}

TEST_CASE("uniform_schedule and identity from_alpha agree") {
    CumSchedule u = uniform_schedule(10, 5);
    CHECK(u.a() == std::vector<std::int64_t>{0, 2, 4, 6, 8, 10});
    FromAlphaResult fa = from_alpha(AlphaCurve::identity(), 10, 5);
    CHECK(fa.schedule.a() == u.a());
    CHECK(fa.repairs == 0);

    CumSchedule arm = uniform_schedule(7, 7);
    CHECK(arm.a() == CumSchedule::identity(7).a());
}

TEST_CASE("from_alpha: exponential ceilings") {
    // alpha_t = 2^t - 1 at t = 1/4, 1/2, 3/4 gives 16*(0.1892, 0.4142,
    // 0.6818) = 3.03, 6.63, 10.91, whose ceilings are 4, 7, 11.
    FromAlphaResult fa = from_alpha(AlphaCurve::exponential(1.0), 16, 4);
    CHECK(fa.schedule.a() == std::vector<std::int64_t>{0, 4, 7, 11, 16});
    CHECK(fa.repairs == 0);
}

TEST_CASE("from_alpha: collision repair keeps schedules valid") {
    // A very steep exponential floors many early ceilings into collisions.
    FromAlphaResult fa = from_alpha(AlphaCurve::exponential(200.0), 12, 12);
    CHECK(fa.repairs > 0);
    const auto& a = fa.schedule.a();
    CHECK(a.front() == 0);
    CHECK(a.back() == 12);
    for (std::size_t j = 1; j < a.size(); ++j) CHECK(a[j] > a[j - 1]);
}

TEST_CASE("data_driven_schedule: constant increments give the uniform schedule") {
    std::vector<double> f(10);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.3 * static_cast<double>(i);
    InfoProfile prof(std::move(f), ProfileMode::exact);
    CHECK(data_driven_schedule(prof, 5).a() == uniform_schedule(10, 5).a());
}

TEST_CASE("data_driven_schedule: late-concentrated increments") {
    // Delta f = (1, 4): cumulative sqrt increments 0,1,3; the K=2 threshold
    // 1.5 lands at m = 2 and the endpoint pins to N.
    InfoProfile prof(std::vector<double>{0.0, 1.0, 5.0}, ProfileMode::exact);
    CHECK(data_driven_schedule(prof, 2).a() == std::vector<std::int64_t>{0, 2, 3});
}

TEST_CASE("data_driven_schedule: Gaussian profile tracks the exponential ansatz") {
    std::int64_t n = 1000, k = 10;
    GaussianExchangeable model(n, 1.0 / static_cast<double>(n));
    InfoProfile prof = gaussian_profile(model);
    CumSchedule dd = data_driven_schedule(prof, k);
    for (std::int64_t j = 0; j <= k; ++j) {
        double alpha = std::exp2(static_cast<double>(j) / static_cast<double>(k)) - 1.0;
        auto ansatz = static_cast<std::int64_t>(std::ceil(static_cast<double>(n) * alpha - 1e-9));
        CHECK(std::abs(dd.a()[static_cast<std::size_t>(j)] - ansatz) <= 1);
    }
}

TEST_CASE("data_driven_schedule: degenerate profiles rejected") {
    InfoProfile flat(std::vector<double>{-1.0, -1.0, -1.0}, ProfileMode::exact);
    CHECK_THROWS_AS(data_driven_schedule(flat, 2), NoCorrelation);

    McInfo info;
    info.samples = 1;
    InfoProfile wiggly(std::vector<double>{0.0, 0.5, 0.2}, ProfileMode::monte_carlo, info);
    CHECK_THROWS_AS(data_driven_schedule(wiggly, 2), HypothesisViolated);
    CHECK_NOTHROW(data_driven_schedule(isotonic_smooth(wiggly), 2));
}

TEST_CASE("continuous_optimum: flat metric gives the identity") {
    AlphaCurve opt = continuous_optimum([](double) { return 1.0; });
    for (double t : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        CHECK(opt.value(t) == doctest::Approx(t).epsilon(1e-9));
        CHECK(opt.derivative(t) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(functional_diverging([](double) { return 1.0; }, opt) ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("continuous_optimum: xi = 1 metric gives the exponential schedule") {
    GaussianGLimit g(1.0);
    AlphaCurve opt = continuous_optimum([g](double u) { return g(u); });
    double sup = 0.0;
    for (int j = 0; j <= 200; ++j) {
        double t = static_cast<double>(j) / 200.0;
        sup = std::max(sup, std::abs(opt.value(t) - (std::exp2(t) - 1.0)));
    }
    CHECK(sup < 1e-6);

    double v = functional_diverging([g](double u) { return g(u); }, opt);
    CHECK(v == doctest::Approx(kTwoLogTwoSq).epsilon(1e-6));

    CHECK_THROWS_AS(continuous_optimum([](double u) { return u - 0.5; }), InvalidArgument);
}

TEST_CASE("geodesic beats every competitor curve") {
    GaussianGLimit g(1.0);
    RealFn g_fn = [g](double u) { return g(u); };
    AlphaCurve opt = continuous_optimum(g_fn);
    double best = functional_diverging(g_fn, opt);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        AlphaCurve comp = random_competitor(seed, 17);
        CHECK(functional_diverging(g_fn, comp) >= best - 1e-8);
    }
    CHECK(functional_diverging(g_fn, AlphaCurve::exponential(1.0)) ==
          doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("functional_diverging: closed forms") {
    RealFn one = [](double) { return 1.0; };
    CHECK(functional_diverging(one, AlphaCurve::identity()) == doctest::Approx(1.0));

    // alpha = t^2 via a dense table: integral of 4 t^2 is 4/3.
    std::vector<double> t(1025), a(1025);
    for (std::size_t j = 0; j < t.size(); ++j) {
        t[j] = static_cast<double>(j) / 1024.0;
        a[j] = t[j] * t[j];
    }
    a[0] = 0.0;
    a.back() = 1.0;
    AlphaCurve square = AlphaCurve::tabulated(std::move(t), std::move(a));
    CHECK(functional_diverging(one, square) == doctest::Approx(4.0 / 3.0).epsilon(1e-5));

    GaussianGLimit g(1.0);
    CHECK(functional_diverging([g](double u) { return g(u); }, AlphaCurve::exponential(1.0)) ==
          doctest::Approx(kTwoLogTwoSq).epsilon(1e-9));
}

TEST_CASE("Jensen ratio: optimal over uniform equals (int sqrt g)^2 / int g") {
    for (double xi : {0.5, 1.0, 4.0}) {
        GaussianGLimit g(xi);
        RealFn g_fn = [g](double u) { return g(u); };
        double copt = functional_diverging(g_fn, continuous_optimum(g_fn));
        double cuni = functional_diverging(g_fn, AlphaCurve::identity());
        double ratio = copt / cuni;
        // (int sqrt g)^2 with int g = 1.
        double root = std::sqrt(1.0 + xi) * std::log1p(xi) / xi;
        CHECK(ratio == doctest::Approx(root * root).epsilon(1e-7));
        CHECK(ratio <= 1.0 + 1e-10);
    }
    RealFn one = [](double) { return 1.0; };
    double flat_ratio = functional_diverging(one, continuous_optimum(one)) /
                        functional_diverging(one, AlphaCurve::identity());
    CHECK(flat_ratio == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("alpha convexity follows the monotonicity of g") {
    // Non-increasing g: convex alpha; non-decreasing g: concave alpha.
    GaussianGLimit dec(1.0);
    GaussianGLimit inc(-0.5);
    AlphaCurve a_dec = continuous_optimum([dec](double u) { return dec(u); });
    AlphaCurve a_inc = continuous_optimum([inc](double u) { return inc(u); });
    const int m = 64;
    for (int j = 1; j < m; ++j) {
        double t0 = static_cast<double>(j - 1) / m;
        double t1 = static_cast<double>(j) / m;
        double t2 = static_cast<double>(j + 1) / m;
        double second_dec = a_dec.value(t2) - 2.0 * a_dec.value(t1) + a_dec.value(t0);
        double second_inc = a_inc.value(t2) - 2.0 * a_inc.value(t1) + a_inc.value(t0);
        CHECK(second_dec >= -1e-9);
        CHECK(second_inc <= 1e-9);
    }
}

TEST_CASE("h_quantized: grid values, piecewise-affine example, sandwich") {
    CHECK(h_quantized(1.0, 2.0) == doctest::Approx(1.0));
    CHECK(h_quantized(0.5, 2.0) == doctest::Approx(0.25));
    // h_2(0.75) = (0.5 * 1 + 0.5 * 4)/4.
    CHECK(h_quantized(0.75, 2.0) == doctest::Approx(0.625).epsilon(1e-15));

    for (double s_bar : {1.0, 1.5, 2.0, 4.0, 16.0}) {
        for (int j = 0; j <= 10000; ++j) {
            double u = 3.0 * static_cast<double>(j) / 10000.0;
            double h = h_quantized(u, s_bar);
            CHECK(h >= u * u - 1e-12);
            CHECK(h <= u * u + 1.0 / (4.0 * s_bar * s_bar) + 1e-12);
        }
    }
}

TEST_CASE("functional_bounded: grid case and s_bar -> infinity trend") {
    RealFn one = [](double) { return 1.0; };
    CHECK(functional_bounded(one, AlphaCurve::identity(), 2.0) ==
          doctest::Approx(1.0).epsilon(1e-10));

    GaussianGLimit g(1.0);
    RealFn g_fn = [g](double u) { return g(u); };
    AlphaCurve curve = AlphaCurve::exponential(1.0);
    double c = functional_diverging(g_fn, curve);
    double prev = 1e300;
    for (double s_bar : {2.0, 4.0, 8.0, 16.0}) {
        double v = functional_bounded(g_fn, curve, s_bar);
        double normalized = v / s_bar + 1.0 / s_bar;  // = int g h_sbar(alpha')
        CHECK(normalized >= c - 1e-8);
        CHECK(normalized <= prev + 1e-12);
        prev = normalized;
    }
    CHECK(prev == doctest::Approx(c).epsilon(2e-3));

    CHECK_THROWS_AS(functional_bounded(one, AlphaCurve::identity(), 0.5), InvalidArgument);
}

TEST_CASE("scaling_limit_experiment: degenerate and moderate-size runs") {
    LimitReport indep =
        scaling_limit_experiment(0.0, AlphaCurve::identity(), 4096, 64, Regime::diverging);
    CHECK(indep.degenerate_d);
    CHECK(indep.measured_a == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(indep.predicted_a == 0.0);
    CHECK(indep.ratio == 1.0);

    LimitReport rep = scaling_limit_experiment(1.0, AlphaCurve::exponential(1.0), 1 << 14, 1 << 6,
                                               Regime::diverging);
    CHECK_FALSE(rep.degenerate_d);
    CHECK(rep.ratio > 0.8);
    CHECK(rep.ratio < 1.2);

    LimitReport bounded =
        scaling_limit_experiment(1.0, AlphaCurve::identity(), 4000, 2000, Regime::bounded);
    CHECK(bounded.s_bar == doctest::Approx(2.0));
    CHECK(bounded.ratio > 0.8);
    CHECK(bounded.ratio < 1.2);
}

TEST_CASE("block_size_census: integer and fractional slopes") {
    auto c3 = block_size_census(AlphaCurve::identity(), 300, 100);
    CHECK(census_frequency(c3, 3) == doctest::Approx(1.0));

    auto c25 = block_size_census(AlphaCurve::identity(), 2500, 1000);
    CHECK(census_frequency(c25, 2) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(census_frequency(c25, 3) == doctest::Approx(0.5).epsilon(0.01));

    auto cexp = block_size_census(AlphaCurve::exponential(1.0), 8000, 2000);
    std::int64_t bad = census_support_violations(cexp, AlphaCurve::exponential(1.0), 4.0);
    CHECK(bad <= 2000 / 20);
}
