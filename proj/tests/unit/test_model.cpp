#include "garchx/errors.hpp"
#include "garchx/model.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace garchx;
using namespace garchx::model;
using Catch::Approx;

namespace {

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double a : v) s += (a - m) * (a - m);
    return s / static_cast<double>(v.size() - 1);
}

Dataset small_dataset() {
    Dataset d;
    d.y0 = 2.0;  // y0^2 = 4
    d.x0 = 1.0;
    d.y = {0.5, -1.0, 0.3};
    d.x = {1.5, 0.2, -0.7};
    return d;
}

TrueConfig config(double b1, double b2, double pi, double varphi, double kappa) {
    TrueConfig c;
    c.theta = {b1, b2, 1.0, pi};
    c.varphi = varphi;
    c.kappa = kappa;
    return c;
}

}  // namespace

TEST_CASE("simulated y has unit variance without ARCH terms", "[model]") {
    const auto d = simulate_dgp(config(0, 0, 0.4, 0, 0), 100000, 100, 11);
    const double v = variance(d.y);
    // Var(y^2-moment) for N(0,1): sd of sample variance = sqrt(2/n)
    REQUIRE(std::abs(v - 1.0) < 3.0 * std::sqrt(2.0 / 1e5));
}

TEST_CASE("simulated x has the AR(1) stationary variance", "[model]") {
    const auto d = simulate_dgp(config(0, 0, 0, 0.5, 0), 100000, 100, 12);
    const double target = 1.0 / (1.0 - 0.25);
    // long-run variance of the sample variance of an AR(1) with phi = 0.5:
    // 2 sigma_x^4 (1 + phi^2) / (1 - phi^2) / n
    const double se = std::sqrt(2.0 * target * target * (1.25 / 0.75) / 1e5);
    REQUIRE(std::abs(variance(d.x) - target) < 3.0 * se);
}

TEST_CASE("innovation correlation equals kappa", "[model]") {
    const auto d = simulate_dgp(config(0, 0, 0, 0, 0.99), 100000, 100, 13);
    double szz = 0, see = 0, sze = 0;
    for (std::size_t t = 0; t < d.size(); ++t) {
        szz += d.z[t] * d.z[t];
        see += d.eps[t] * d.eps[t];
        sze += d.z[t] * d.eps[t];
    }
    const double r = sze / std::sqrt(szz * see);
    // se of a correlation near 0.99: (1 - r^2) / sqrt(n)
    REQUIRE(std::abs(r - 0.99) < 3.0 * (1 - 0.99 * 0.99) / std::sqrt(1e5));
}

TEST_CASE("simulation is reproducible from the seed", "[model]") {
    const auto cfg = config(0.1, 0.05, 0.3, 0.5, 0.3);
    const auto a = simulate_dgp(cfg, 500, 100, 99);
    const auto b = simulate_dgp(cfg, 500, 100, 99);
    const auto c = simulate_dgp(cfg, 500, 100, 100);
    REQUIRE(a.y == b.y);
    REQUIRE(a.x == b.x);
    REQUIRE(a.y0 == b.y0);
    REQUIRE(a.y != c.y);
}

TEST_CASE("invalid covariate law is rejected", "[model]") {
    REQUIRE_THROWS_AS(simulate_dgp(config(0, 0, 0, 1.0, 0), 10, 0, 1), DomainError);
    REQUIRE_THROWS_AS(simulate_dgp(config(0, 0, 0, 0, 1.5), 10, 0, 1), DomainError);
    REQUIRE_THROWS_AS(simulate_dgp(config(0, 0, 0, 0, 0), 0, 0, 1), DomainError);
}

TEST_CASE("variance path without ARCH terms is constant", "[model]") {
    const auto d = simulate_dgp(config(0, 0, 0, 0.5, 0), 200, 100, 3);
    const auto h = h_path({0.0, 0.0, 1.7, 0.6}, d);
    for (double v : h) REQUIRE(v == Approx(1.7).epsilon(1e-14));
}

TEST_CASE("first variance matches hand evaluation", "[model]") {
    const auto d = small_dataset();
    const auto h = h_path({0.2, 0.1, 1.0, 0.5}, d);
    REQUIRE(h[0] == Approx(1.9).epsilon(1e-15));
    // h2 = 0.5 + 0.2*0.25 + 0.5*1.9 + 0.1*2.25
    REQUIRE(h[1] == Approx(0.5 + 0.05 + 0.95 + 0.225).epsilon(1e-15));
}

TEST_CASE("recursion agrees with explicit lag sums", "[model][property]") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ParamSpace space;
    const auto d = simulate_dgp(config(0.2, 0.1, 0.5, 0.5, 0.3), 300, 100, 5);
    for (int k = 0; k < 100; ++k) {
        ThetaPoint th{u(gen) * space.beta1_max, u(gen) * space.beta2_max,
                      space.zeta_min + u(gen) * (space.zeta_max - space.zeta_min), u(gen) * space.pi_max};
        const auto a = h_path(th, d);
        const auto b = h_path_closed_form(th, d);
        for (std::size_t t = 0; t < a.size(); ++t) {
            REQUIRE(std::abs(a[t] - b[t]) <= 1e-12 * b[t]);
            REQUIRE(a[t] >= th.zeta);
        }
    }
}

TEST_CASE("likelihood without ARCH terms has closed form and ignores pi", "[model]") {
    const auto d = simulate_dgp(config(0, 0, 0, 0.5, 0), 400, 100, 8);
    double my2 = 0.0;
    for (double y : d.y) my2 += y * y;
    my2 /= static_cast<double>(d.size());
    const double zeta = 1.3;
    const double expect = 0.5 * std::log(2.0 * std::numbers::pi * zeta) + my2 / (2.0 * zeta);
    const double q0 = neg_loglik({0, 0, zeta, 0.0}, d);
    REQUIRE(q0 == Approx(expect).epsilon(1e-13));
    for (double pi : {0.1, 0.37, 0.5, 0.9}) {
        REQUIRE(neg_loglik({0, 0, zeta, pi}, d) == q0);
    }
    // first-order condition in zeta: minimizer is mean(y^2)
    const double qm = neg_loglik({0, 0, my2, 0}, d);
    REQUIRE(qm < neg_loglik({0, 0, my2 * 1.01, 0}, d));
    REQUIRE(qm < neg_loglik({0, 0, my2 * 0.99, 0}, d));
}

TEST_CASE("likelihood at truth beats a perturbed point on average", "[model]") {
    const auto cfg = config(0.2, 0.1, 0.4, 0.5, 0.0);
    int wins = 0;
    double diff = 0.0;
    for (int r = 0; r < 100; ++r) {
        const auto d = simulate_dgp(cfg, 2000, 100, 1000 + r);
        const double a = neg_loglik(cfg.theta, d);
        const double b = neg_loglik({0.35, 0.02, 1.3, 0.2}, d);
        diff += b - a;
        wins += a < b;
    }
    REQUIRE(diff > 0.0);
    REQUIRE(wins > 90);
}

TEST_CASE("lag-sum derivative matrix", "[model]") {
    const auto d = simulate_dgp(config(0.1, 0.1, 0.3, 0.5, 0), 50, 100, 21);
    const auto lag = lagged_squares(d);
    SECTION("pi = 0 keeps only the first lag") {
        const auto m = dh_dpsi(0.0, d, kAllLags);
        for (std::size_t t = 0; t < d.size(); ++t) {
            REQUIRE(m(t, 0) == lag.y2[t]);
            REQUIRE(m(t, 1) == lag.x2[t]);
            REQUIRE(m(t, 2) == 1.0);
        }
    }
    SECTION("constant squares sum to the geometric limit") {
        Dataset c;
        c.y.assign(2000, 1.0);
        c.x.assign(2000, 1.0);
        c.y0 = c.x0 = 1.0;
        const auto m = dh_dpsi(0.9, c, kAllLags);
        REQUIRE(m(1999, 0) == Approx(10.0).epsilon(1e-9));
        REQUIRE(m(1999, 1) == Approx(10.0).epsilon(1e-9));
    }
    SECTION("truncated sums match direct summation") {
        const double pi = 0.7;
        for (std::size_t trunc : {std::size_t{1}, std::size_t{5}, kKernelLags, kAllLags}) {
            const auto m = dh_dpsi(pi, d, trunc);
            for (std::size_t t = 1; t <= d.size(); ++t) {
                const std::size_t terms = std::min<std::size_t>(trunc, t);
                double sy = 0.0;
                for (std::size_t i = 0; i < terms; ++i) sy += std::pow(pi, double(i)) * lag.y2[t - i - 1];
                REQUIRE(m(t - 1, 0) == Approx(sy).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("tau vector entries", "[model]") {
    const auto d = simulate_dgp(config(0.1, 0.1, 0.3, 0.5, 0), 60, 100, 22);
    const auto lag = lagged_squares(d);
    const auto e1 = tau_vector({1.0, 0.0}, 0.0, d, kAllLags);
    const auto e2 = tau_vector({0.0, 1.0}, 0.0, d, kAllLags);
    REQUIRE(e1(0, 3) == 0.0);
    for (std::size_t t = 1; t < d.size(); ++t) {
        REQUIRE(e1(t, 3) == lag.y2[t - 1]);  // y_{t-2}^2
        REQUIRE(e2(t, 3) == lag.x2[t - 1]);
    }
    const double pi = 0.45;
    const Eigen::Vector2d w(0.6, 0.8);
    const auto tv = tau_vector(w, pi, d, kAllLags);
    const auto tv_trunc = tau_vector(w, pi, d, 7);
    const auto dh = dh_dpsi(pi, d, kAllLags);
    REQUIRE((tv.leftCols(3) - dh).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t t = 1; t <= d.size(); ++t) {
        double full = 0.0, trunc = 0.0;
        for (std::size_t i = 1; i < t; ++i) {
            const double term = double(i) * std::pow(pi, double(i - 1)) *
                                (w(0) * lag.y2[t - i - 1] + w(1) * lag.x2[t - i - 1]);
            full += term;
            if (i < 7) trunc += term;
        }
        REQUIRE(tv(t - 1, 3) == Approx(full).epsilon(1e-12).margin(1e-14));
        REQUIRE(tv_trunc(t - 1, 3) == Approx(trunc).epsilon(1e-12).margin(1e-14));
    }
    REQUIRE_THROWS_AS(tau_vector({1.0, 1.0}, pi, d, kAllLags), DomainError);
}

TEST_CASE("kurtosis estimates", "[model]") {
    SECTION("zero data gives one half") {
        Dataset z;
        z.y.assign(10, 0.0);
        z.x.assign(10, 0.0);
        REQUIRE(c_hat({0, 0, 1, 0}, z) == 0.5);
    }
    SECTION("gaussian innovations at the truth") {
        const auto cfg = config(0.2, 0.1, 0.3, 0.5, 0.0);
        const auto d = simulate_dgp(cfg, 100000, 100, 31);
        const double r = c_hat(cfg.theta, d, CVariant::Ratio);
        const double a = c_hat(cfg.theta, d, CVariant::Alt);
        // Var((z^2-1)^2) = E z^8 - 4E z^6 + 6E z^4 - 4E z^2 + 1 - 4 = 105-60+18-4+1-4 = 56
        REQUIRE(std::abs(r - 1.0) < 3.0 * std::sqrt(56.0 / 1e5) / 2.0);
        REQUIRE(std::abs(r - a) < 5.0 / std::sqrt(1e5));
    }
}
