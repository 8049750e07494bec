#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <bit>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "unmask/dist.hpp"
#include "unmask/info_profile.hpp"
#include "unmask/rng.hpp"
#include "unmask/sampler.hpp"
#include "util/oracles.hpp"
#include "util/stats.hpp"

using namespace unmask;

namespace {

const double kLog2 = std::log(2.0);
const double kLog2PiE = std::log(2.0 * std::numbers::pi) + 1.0;

TabularDist copied_uniform_bits(int n) {
    std::vector<std::vector<int>> blocks(1);
    for (int i = 0; i < n; ++i) blocks[0].push_back(i);
    return block_copy_dist(n, TokenSpace::make_default(2), blocks);
}

TabularDist bernoulli_product(double p1, int n) {
    std::size_t states = std::size_t{1} << n;
    std::vector<double> pmf(states);
    for (std::size_t code = 0; code < states; ++code) {
        double p = 1.0;
        for (int i = 0; i < n; ++i) {
            bool one = (code >> (n - 1 - i)) & 1u;
            p *= one ? p1 : (1.0 - p1);
        }
        pmf[code] = p;
    }
    return TabularDist(n, TokenSpace::make_default(2), std::move(pmf));
}

}  // namespace

TEST_CASE("exact_profile: product target is flat") {
    TabularDist prod = bernoulli_product(0.8, 4);
    InfoProfile prof = exact_profile(prod);
    double expected = 0.8 * std::log(0.8) + 0.2 * std::log(0.2);
    for (std::int64_t i = 0; i < 4; ++i) {
        CHECK(prof.value(i) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(prof.mode() == ProfileMode::exact);
    CHECK(prof.d() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact_profile: copied bits") {
    InfoProfile prof = exact_profile(copied_uniform_bits(2));
    CHECK(prof.value(0) == doctest::Approx(-kLog2).epsilon(1e-12));
    CHECK(prof.value(1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact_profile: matches the N!-permutation oracle") {
    TabularDist rnd = random_tabular(3, 4, TokenSpace::make_default(2), 1.0);
    InfoProfile prof = exact_profile(rnd);
    std::vector<double> oracle = testing::permutation_profile_oracle(rnd);
    for (std::int64_t i = 0; i < 4; ++i) {
        CHECK(prof.value(i) ==
              doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-10));
    }

    TabularDist rnd3 = random_tabular(8, 3, TokenSpace::make_default(3), 0.6);
    InfoProfile prof3 = exact_profile(rnd3);
    std::vector<double> oracle3 = testing::permutation_profile_oracle(rnd3);
    for (std::int64_t i = 0; i < 3; ++i) {
        CHECK(prof3.value(i) ==
              doctest::Approx(oracle3[static_cast<std::size_t>(i)]).epsilon(1e-10));
    }
}

TEST_CASE("exact_profile: nondecreasing and endpoint identity") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TabularDist dist = random_tabular(seed, 5, TokenSpace::make_default(2), 0.7);
        InfoProfile prof = exact_profile(dist);
        CHECK(prof.nondecreasing(1e-10));
        CHECK(prof.d() == doctest::Approx(d_measure(dist)).epsilon(1e-10));
    }
}

TEST_CASE("exact_profile: guard trips and points to mc_profile") {
    // |X|^N = 8^8 = 1.7e7 joint states is fine for the table but far past
    // the subset-enumeration budget.
    std::vector<double> pmf(16777216, 1.0 / 16777216.0);
    CHECK_THROWS_AS(
        exact_profile(TabularDist(8, TokenSpace::make_default(8), std::move(pmf), 20'000'000)),
        GuardExceeded);
}

TEST_CASE("mc_profile: close to exact with reported stderr") {
    TabularDist rnd = random_tabular(4, 3, TokenSpace::make_default(2), 1.0);
    InfoProfile exact = exact_profile(rnd);
    InfoProfile mc = mc_profile(rnd, 100000, 42);
    REQUIRE(mc.mc().has_value());
    for (std::int64_t i = 0; i < 3; ++i) {
        double err = std::abs(mc.value(i) - exact.value(i));
        double se = mc.mc()->stderrs[static_cast<std::size_t>(i)];
        // i = 0 draws no conditioning set, the estimator is still noisy.
        CHECK(err <= 4.0 * std::max(se, 1e-12) + 1e-12);
    }
}

TEST_CASE("mc_profile: point mass gives exactly zero") {
    std::vector<double> pmf(8, 0.0);
    pmf[5] = 1.0;
    TabularDist point(3, TokenSpace::make_default(2), std::move(pmf));
    InfoProfile mc = mc_profile(point, 200, 7);
    for (std::int64_t i = 0; i < 3; ++i) CHECK(mc.value(i) == 0.0);
}

TEST_CASE("mc_profile: seed determinism") {
    TabularDist rnd = random_tabular(9, 3, TokenSpace::make_default(2), 1.0);
    InfoProfile a = mc_profile(rnd, 500, 11);
    InfoProfile b = mc_profile(rnd, 500, 11);
    InfoProfile c = mc_profile(rnd, 500, 12);
    bool differs = false;
    for (std::int64_t i = 0; i < 3; ++i) {
        CHECK(a.value(i) == b.value(i));
        if (a.value(i) != c.value(i)) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("mc_profile: error shrinks like samples^(-1/2)") {
    TabularDist rnd = random_tabular(21, 3, TokenSpace::make_default(2), 1.0);
    InfoProfile exact = exact_profile(rnd);
    std::vector<double> log_m, log_err;
    for (double m : {100.0, 1000.0, 10000.0}) {
        // RMS error over independent seeds.
        double sq = 0.0;
        const int reps = 24;
        for (int r = 0; r < reps; ++r) {
            InfoProfile mc = mc_profile(rnd, static_cast<std::int64_t>(m),
                                        1000 + static_cast<std::uint64_t>(r));
            for (std::int64_t i = 0; i < 3; ++i) {
                double e = mc.value(i) - exact.value(i);
                sq += e * e;
            }
        }
        log_m.push_back(std::log(m));
        log_err.push_back(0.5 * std::log(sq / (3.0 * reps)));
    }
    double slope = testing::regression_slope(log_m, log_err);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("mc_profile: denoiser source estimates the model profile") {
    // Data drawn from pi, conditionals supplied by an imperfect model:
    // the estimator targets E[log p_hat], not f. Oracle by enumeration.
    TabularDist dist = random_tabular(33, 3, TokenSpace::make_default(2), 1.0);
    const double eps = 0.3;
    Denoiser model = Denoiser::uniform_mixture(dist, eps);

    auto oracle = [&](int i) {
        // Average over subsets z of size i and j outside z of
        // E_pi[log p_hat(x_j ; x_z)], all sums explicit.
        const int n = 3;
        std::vector<int> coords{0, 1, 2};
        double total = 0.0;
        int pairs = 0;
        std::vector<int> state(3);
        // Enumerate subsets of size i by bitmask.
        for (int mask = 0; mask < 8; ++mask) {
            if (std::popcount(static_cast<unsigned>(mask)) != i) continue;
            std::vector<int> z;
            for (int c = 0; c < n; ++c) {
                if (mask & (1 << c)) z.push_back(c);
            }
            for (int j = 0; j < n; ++j) {
                if (mask & (1 << j)) continue;
                double term = 0.0;
                for (std::size_t code = 0; code < dist.states(); ++code) {
                    double p = dist.pmf()[code];
                    if (p == 0.0) continue;
                    dist.decode(code, state);
                    std::vector<int> zv;
                    for (int c : z) zv.push_back(state[static_cast<std::size_t>(c)]);
                    Assignment given(z, zv, n, 2);
                    std::vector<double> cond = model.conditional_of(j, given);
                    term += p * std::log(cond[static_cast<std::size_t>(
                                     state[static_cast<std::size_t>(j)])]);
                }
                total += term;
                ++pairs;
            }
        }
        return total / pairs;
    };

    InfoProfile mc = mc_profile(dist, model, 60000, 99);
    for (int i = 0; i < 3; ++i) {
        double se = mc.mc()->stderrs[static_cast<std::size_t>(i)];
        CHECK(std::abs(mc.value(i) - oracle(i)) <= 4.0 * std::max(se, 1e-12));
    }
}

TEST_CASE("mc_profile: sum-over-tokens variant differs but is deterministic") {
    TabularDist rnd = random_tabular(2, 3, TokenSpace::make_default(2), 1.0);
    InfoProfile obs = mc_profile(rnd, 200, 5, false);
    InfoProfile alt = mc_profile(rnd, 200, 5, true);
    InfoProfile alt2 = mc_profile(rnd, 200, 5, true);
    CHECK(alt.value(1) == alt2.value(1));
    CHECK(obs.value(1) != alt.value(1));
}

TEST_CASE("delta: constants, ramp, copied bits, telescoping") {
    InfoProfile flat(std::vector<double>{-1.0, -1.0, -1.0}, ProfileMode::exact);
    for (double v : delta(flat)) CHECK(v == 0.0);

    InfoProfile ramp(std::vector<double>{0.0, 1.0, 2.0, 3.0}, ProfileMode::exact);
    std::vector<double> d = delta(ramp);
    REQUIRE(d.size() == 3);
    for (double v : d) CHECK(v == doctest::Approx(1.0));

    InfoProfile copy = exact_profile(copied_uniform_bits(2));
    std::vector<double> dc = delta(copy);
    REQUIRE(dc.size() == 1);
    CHECK(dc[0] == doctest::Approx(kLog2).epsilon(1e-12));

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TabularDist dist = random_tabular(seed, 4, TokenSpace::make_default(2), 1.0);
        InfoProfile prof = exact_profile(dist);
        StableSum sum;
        for (double v : delta(prof)) sum.add(v);
        CHECK(sum.value() == doctest::Approx(prof.d()).epsilon(1e-12));
    }
}

TEST_CASE("rescaled_derivative: linear profile, homogeneity, unit integral") {
    std::int64_t n = 6;
    std::vector<double> f(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = 0.2 * static_cast<double>(i);
    InfoProfile prof(f, ProfileMode::exact);
    RescaledDerivative g = rescaled_derivative(prof, prof.d());
    double expected = static_cast<double>(n) / static_cast<double>(n - 1);
    for (double v : g.values()) CHECK(v == doctest::Approx(expected).epsilon(1e-12));

    // Scaling f and D together leaves g unchanged.
    std::vector<double> f2(f);
    for (double& v : f2) v *= 3.5;
    InfoProfile prof2(f2, ProfileMode::exact);
    RescaledDerivative g2 = rescaled_derivative(prof2, prof2.d());
    for (std::size_t i = 0; i < g.values().size(); ++i) {
        CHECK(g2.values()[i] == doctest::Approx(g.values()[i]).epsilon(1e-12));
    }

    StableSum integral;
    for (double v : g.values()) integral.add(v / static_cast<double>(n));
    CHECK(std::abs(integral.value() - 1.0) <= 1e-8);
}

TEST_CASE("rescaled_derivative: D = 0 is an explicit error") {
    InfoProfile flat(std::vector<double>{-1.0, -1.0, -1.0}, ProfileMode::exact);
    CHECK_THROWS_AS(rescaled_derivative(flat, 0.0), NoCorrelation);
}

TEST_CASE("rescaled_derivative: Gaussian grid approaches the xi-limit") {
    std::int64_t n = 1000;
    GaussianExchangeable model(n, 1.0 / static_cast<double>(n));
    InfoProfile prof = gaussian_profile(model);
    RescaledDerivative g = rescaled_derivative(prof, prof.d());
    GaussianGLimit limit(1.0);
    double sup = 0.0;
    for (std::int64_t i = 1; i <= n - 1; ++i) {
        double u = (static_cast<double>(i) - 0.5) / static_cast<double>(n);
        sup = std::max(sup, std::abs(g.at(u) - limit(u)));
    }
    CHECK(sup < 0.02);
}

TEST_CASE("gaussian uniform convergence: sup error halves when N doubles") {
    for (double xi : {-0.5, 1.0, 4.0}) {
        auto sup_err = [&](std::int64_t n) {
            GaussianExchangeable model(n, xi / static_cast<double>(n));
            InfoProfile prof = gaussian_profile(model);
            RescaledDerivative g = rescaled_derivative(prof, prof.d());
            GaussianGLimit limit(xi);
            double sup = 0.0;
            for (std::int64_t i = 1; i <= n - 1; ++i) {
                double u = (static_cast<double>(i) - 0.5) / static_cast<double>(n);
                sup = std::max(sup, std::abs(g.at(u) - limit(u)));
            }
            return sup;
        };
        double ratio = sup_err(2000) / sup_err(1000);
        CHECK(ratio > 0.35);
        CHECK(ratio < 0.65);
    }
}

TEST_CASE("gaussian_profile: closed forms") {
    GaussianExchangeable indep(5, 0.0);
    InfoProfile flat = gaussian_profile(indep);
    for (std::int64_t i = 0; i < 5; ++i) {
        CHECK(flat.value(i) == doctest::Approx(-0.5 * kLog2PiE).epsilon(1e-12));
    }

    GaussianExchangeable m(3, 0.5);
    InfoProfile prof = gaussian_profile(m);
    CHECK(prof.value(1) ==
          doctest::Approx(-0.5 * (kLog2PiE + std::log(0.75))).epsilon(1e-12));
    CHECK(prof.mode() == ProfileMode::closed_form);

    // Concavity for rho > 0: increments decrease.
    GaussianExchangeable wide(10, 0.5);
    std::vector<double> d = delta(gaussian_profile(wide));
    for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] < d[i - 1]);
    // Convexity for rho < 0: increments increase.
    GaussianExchangeable negm(10, -0.05);
    std::vector<double> dn = delta(gaussian_profile(negm));
    for (std::size_t i = 1; i < dn.size(); ++i) CHECK(dn[i] > dn[i - 1]);

    CHECK_THROWS_AS(gaussian_profile(GaussianExchangeable(4, 1.0)), SingularModel);
}

TEST_CASE("gaussian_profile: endpoint identity against gaussian_d") {
    for (double rho : {-0.15, 0.1, 0.45, 0.9}) {
        GaussianExchangeable model(6, rho);
        InfoProfile prof = gaussian_profile(model);
        CHECK(prof.d() == doctest::Approx(gaussian_d(model)).epsilon(1e-12));
        CHECK(prof.nondecreasing(1e-12));
    }
}

TEST_CASE("gaussian g limit: endpoints and unit mass") {
    GaussianGLimit flat(0.0);
    CHECK(flat(0.3) == doctest::Approx(1.0));

    GaussianGLimit one(1.0);
    CHECK(one(0.0) == doctest::Approx(2.0));
    CHECK(one(1.0) == doctest::Approx(0.5));

    for (double xi : {-0.7, 0.0, 1.0, 5.0}) {
        GaussianGLimit g(xi);
        // Simpson on a fine grid; the antiderivative is exact.
        const int m = 4096;
        StableSum acc;
        for (int i = 0; i < m; ++i) {
            double a = static_cast<double>(i) / m;
            double b = static_cast<double>(i + 1) / m;
            acc.add((b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b)));
        }
        CHECK(std::abs(acc.value() - 1.0) <= 1e-10);
    }

    CHECK_THROWS_AS(GaussianGLimit(-1.0), InvalidArgument);
}

TEST_CASE("subset average equals permutation average for N <= 5") {
    TabularDist rnd = random_tabular(13, 5, TokenSpace::make_default(2), 0.9);
    InfoProfile prof = exact_profile(rnd);
    std::vector<double> oracle = testing::permutation_profile_oracle(rnd);
    for (std::int64_t i = 0; i < 5; ++i) {
        CHECK(prof.value(i) ==
              doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-10));
    }
}

TEST_CASE("isotonic_smooth: projects onto nondecreasing profiles") {
    McInfo info;
    info.samples = 10;
    info.seed = 1;
    InfoProfile noisy(std::vector<double>{0.0, 0.5, 0.3, 0.9}, ProfileMode::monte_carlo, info);
    InfoProfile smooth = isotonic_smooth(noisy);
    CHECK(smooth.nondecreasing(0.0));
    CHECK(smooth.value(1) == doctest::Approx(0.4));
    CHECK(smooth.value(2) == doctest::Approx(0.4));
    // Monotone input is untouched.
    InfoProfile mono(std::vector<double>{0.0, 0.1, 0.9}, ProfileMode::exact);
    InfoProfile same = isotonic_smooth(mono);
    for (std::int64_t i = 0; i < 3; ++i) CHECK(same.value(i) == mono.value(i));
}
