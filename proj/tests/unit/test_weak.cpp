#include "garchx/errors.hpp"
#include "garchx/io.hpp"
#include "garchx/stats.hpp"
#include "garchx/weak.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace garchx;
using namespace garchx::weak;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

model::TrueConfig baseline(double pi0, double varphi, double kappa) {
    model::TrueConfig g;
    g.theta = {0.0, 0.0, 1.0, pi0};
    g.varphi = varphi;
    g.kappa = kappa;
    return g;
}

KernelSet kernels(double pi0, double varphi, double kappa, std::size_t n_star, double step = 0.1) {
    KernelConfig kc;
    kc.n_star = n_star;
    kc.seed = 3;
    return build_kernels(baseline(pi0, varphi, kappa), io::linear_grid(0.0, step, 0.9), kc, {pi0});
}

}  // namespace

TEST_CASE("kernel at pi = 0 matches normal moments", "[weak]") {
    KernelConfig kc;
    kc.n_star = 100000;
    const auto ks = build_kernels(baseline(0.0, 0.0, 0.0), {0.0, 0.5}, kc);
    const Matrix3d W = ks.omega(0.0, 0.0);
    Matrix3d target;
    target << 3, 1, 1, 1, 3, 1, 1, 1, 1;
    target *= 0.5;
    // standard errors of the block averages: sd(z^2 x^2) = sqrt(8), sd(x^4) = sqrt(96), sd(x^2) = sqrt(2)
    const double n = 1e5;
    Matrix3d se = Matrix3d::Zero();
    se(0, 1) = se(1, 0) = 0.5 * std::sqrt(8.0 / n);
    se(1, 1) = 0.5 * std::sqrt(96.0 / n);
    se(1, 2) = se(2, 1) = 0.5 * std::sqrt(2.0 / n);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) REQUIRE(std::abs(W(a, b) - target(a, b)) <= 3.0 * se(a, b) + 1e-15);
}

TEST_CASE("kernel identities hold exactly", "[weak][property]") {
    const auto ks = kernels(0.3, 0.5, 0.5, 5000);
    for (std::size_t i = 0; i < ks.pi_grid.size(); ++i) {
        const double p = ks.pi_grid[i];
        REQUIRE(ks.H(i) == ks.omega(p, p) / ks.c0);
        const Matrix3d H = ks.H(i);
        REQUIRE(Eigen::SelfAdjointEigenSolver<Matrix3d>(H).eigenvalues().minCoeff() >= -1e-10);
        REQUIRE((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(ks.K(i, 0.3).maxCoeff() <= 0.0);
        for (double q : ks.pi_grid) REQUIRE(ks.omega(p, q) == ks.omega(q, p).transpose());
    }
    REQUIRE_THROWS_AS(ks.K(0, 0.33), DomainError);
}

TEST_CASE("eta criterion is smallest at pi0", "[weak]") {
    const auto ks = kernels(0.3, 0.5, 0.0, 20000);
    for (const Vector2d& w : {Vector2d(1, 0), Vector2d(0, 1)}) {
        const auto eta = eta_criterion(ks, 0.3, w);
        const auto it = std::min_element(eta.begin(), eta.end());
        REQUIRE(ks.pi_grid[static_cast<std::size_t>(it - eta.begin())] == Catch::Approx(0.3));
    }
}

TEST_CASE("a nonzero slope in the baseline is rejected", "[weak]") {
    auto g = baseline(0.2, 0.5, 0.0);
    g.theta.beta1 = 0.1;
    REQUIRE_THROWS_AS(build_kernels(g, {0.0, 0.1}, KernelConfig{}), DomainError);
}

TEST_CASE("few kernel blocks raise a diagnostic", "[weak]") {
    REQUIRE(kernels(0.2, 0.5, 0.0, 500).diagnostics.size() == 1);
    REQUIRE(kernels(0.2, 0.5, 0.0, 1000).diagnostics.empty());
}

TEST_CASE("multiplier draws have mean zero and kernel covariance", "[weak]") {
    KernelConfig kc;
    kc.n_star = 100000;
    const auto ks = build_kernels(baseline(0.0, 0.5, 0.0), {0.0, 0.5}, kc);
    const std::size_t J = 10000, N = 20000;
    const auto gp = draw_gp(ks, J, N, 8);
    const double Jd = static_cast<double>(J);
    // coordinate matrix: (Gz(0), Gx(0), Gzeta, Gz(0.5), Gx(0.5))
    Eigen::MatrixXd D(J, 5);
    D.col(0) = gp.gz.col(0);
    D.col(1) = gp.gx.col(0);
    D.col(2) = gp.gzeta;
    D.col(3) = gp.gz.col(1);
    D.col(4) = gp.gx.col(1);
    const Eigen::VectorXd mean = D.colwise().mean();
    const Eigen::MatrixXd cov = D.transpose() * D / Jd;
    for (int c = 0; c < 5; ++c) REQUIRE(std::abs(mean(c)) <= 3.0 * std::sqrt(cov(c, c) / Jd));

    auto check = [&](double p1, double p2, const std::array<int, 3>& r, const std::array<int, 3>& c) {
        const Matrix3d W = ks.omega(p1, p2);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const double v = cov(r[a], c[b]);
                // se of a Gaussian product moment, plus the block-average noise of N blocks
                const double se_j = std::sqrt((cov(r[a], r[a]) * cov(c[b], c[b]) + v * v) / Jd);
                const double se_blocks = std::abs(W(a, b)) * 6.0 / std::sqrt(static_cast<double>(N));
                INFO("pi " << p1 << "," << p2 << " entry " << a << b << " cov " << v << " omega " << W(a, b));
                REQUIRE(std::abs(v - W(a, b)) <= 5.0 * std::hypot(se_j, se_blocks));
            }
        }
    };
    check(0.0, 0.0, {0, 1, 2}, {0, 1, 2});
    check(0.0, 0.5, {0, 1, 2}, {3, 4, 2});
}

TEST_CASE("Z process algebra", "[weak]") {
    const auto ks = kernels(0.3, 0.5, 0.0, 5000);
    const auto gp = draw_gp(ks, 5, 500, 4);
    const auto d = gp.draw(2);
    const auto z0 = z_process(d, ks, 0.3, Vector2d::Zero());
    for (std::size_t i = 0; i < z0.size(); ++i) {
        const Vector3d direct = -ks.H(i).inverse() * d.g[i];
        REQUIRE((z0[i] - direct).norm() < 1e-10);
    }
    GPDraw zero = d;
    for (auto& g : zero.g) g.setZero();
    const Vector2d b(1.3, 0.4);
    const auto z1 = z_process(d, ks, 0.3, b);
    const auto z2 = z_process(d, ks, 0.3, 2.0 * b);
    const auto zb = z_process(zero, ks, 0.3, b);
    for (std::size_t i = 0; i < z0.size(); ++i) REQUIRE((z2[i] - z1[i] - zb[i]).norm() < 1e-10);
    REQUIRE_THROWS_AS(z_process(d, ks, 0.3, Vector2d(kInf, 0)), DomainError);
}

TEST_CASE("reduced projections agree with the general cone solver", "[weak]") {
    const auto ks = kernels(0.2, 0.5, 0.3, 5000);
    const auto gp = draw_gp(ks, 300, 1000, 5);
    LocalizationPoint loc;
    loc.gamma0 = baseline(0.2, 0.5, 0.3);
    loc.b1 = 1.5;
    const auto fast = limit_draws(loc, ks, gp);
    LimitOptions slow_opts;
    slow_opts.general_solver = true;
    const auto slow = limit_draws(loc, ks, gp, slow_opts);
    for (std::size_t j = 0; j < fast.size(); ++j) {
        REQUIRE(fast[j].lr_dagger == Catch::Approx(slow[j].lr_dagger).epsilon(1e-9).margin(1e-10));
        REQUIRE(fast[j].lr == Catch::Approx(slow[j].lr).epsilon(1e-9).margin(1e-10));
        REQUIRE(fast[j].pi_hat == slow[j].pi_hat);
        REQUIRE((fast[j].lambda_hat - slow[j].lambda_hat).norm() < 1e-8);
    }
}

TEST_CASE("limit draws are nested and pi-hat has boundary atoms", "[weak]") {
    const auto ks = kernels(0.2, 0.5, 0.0, 20000, 0.05);
    LocalizationPoint loc;
    loc.gamma0 = baseline(0.2, 0.5, 0.0);
    const auto draws = limit_draws(loc, ks, 4000, 2000, 6);
    std::size_t at0 = 0, at_max = 0, at1 = 0;
    for (const auto& d : draws) {
        REQUIRE(d.lr >= 0.0);
        REQUIRE(d.lr_dagger >= d.lr);
        REQUIRE(d.lambda_hat(0) >= 0.0);
        REQUIRE(d.lambda_hat(1) >= 0.0);
        at0 += d.pi_hat == 0.0;
        at_max += d.pi_hat == 0.9;
        at1 += d.pi_hat == 1.0;
    }
    const double J = static_cast<double>(draws.size());
    REQUIRE(at0 / J > 0.01);
    REQUIRE(at_max / J > 0.01);
    REQUIRE(at1 / J > 0.01);
}

TEST_CASE("draws do not depend on the worker count", "[weak]") {
    const auto ks = kernels(0.2, 0.5, 0.0, 3000);
    LocalizationPoint loc;
    loc.gamma0 = baseline(0.2, 0.5, 0.0);
    loc.b1 = 2.0;
    LimitOptions one, four;
    four.workers = 4;
    const auto a = limit_draws(loc, ks, 700, 1500, 9, one);
    const auto b = limit_draws(loc, ks, 700, 1500, 9, four);
    for (std::size_t j = 0; j < a.size(); ++j) {
        REQUIRE(a[j].lr == b[j].lr);
        REQUIRE(a[j].lr_dagger == b[j].lr_dagger);
        REQUIRE(a[j].pi_hat == b[j].pi_hat);
    }
    KernelConfig kc;
    kc.n_star = 2500;
    kc.workers = 3;
    const auto k3 = build_kernels(loc.gamma0, ks.pi_grid, kc, {0.2});
    kc.workers = 1;
    const auto k1 = build_kernels(loc.gamma0, ks.pi_grid, kc, {0.2});
    REQUIRE(k3.m_xx == k1.m_xx);
    REQUIRE(k3.m_zx == k1.m_zx);
}

TEST_CASE("rejection probabilities are reproducible and ordered", "[weak]") {
    const auto ks = kernels(0.2, 0.5, 0.0, 5000);
    LocalizationPoint loc;
    loc.gamma0 = baseline(0.2, 0.5, 0.0);
    const auto a = rp_weak(loc, ks, 2000, 1000, 12, 0.05);
    const auto b = rp_weak(loc, ks, 2000, 1000, 12, 0.05);
    REQUIRE(a.rp_s == b.rp_s);
    REQUIRE(a.rp_ts == b.rp_ts);
    REQUIRE(a.lr_dagger_quantile == b.lr_dagger_quantile);
    REQUIRE(a.rp_ts <= a.rp_s);
}

TEST_CASE("kernel cache round trip", "[weak]") {
    const auto ks = kernels(0.25, 0.5, 0.2, 2000);
    const auto text = to_json(ks).dump();
    const auto back = kernels_from_json(nlohmann::json::parse(text));
    REQUIRE(back.nodes == ks.nodes);
    REQUIRE(back.m_xx == ks.m_xx);
    REQUIRE(back.m_zx == ks.m_zx);
    REQUIRE(back.m_x == ks.m_x);
    REQUIRE(back.H(3) == ks.H(3));
    std::ostringstream csv;
    write_draws_csv(csv, {LimitDraw{Vector3d(1, 0, 2), 0.3, 4.0, 1.0}});
    REQUIRE(csv.str().rfind("draw,pi_hat,lr_dagger,lr,", 0) == 0);
}
