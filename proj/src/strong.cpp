#include "garchx/strong.hpp"

#include "garchx/cone.hpp"
#include "garchx/errors.hpp"
#include "garchx/parallel.hpp"
#include "garchx/rng.hpp"
#include "garchx/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>

namespace garchx::strong {

using Eigen::Matrix4d;
using Eigen::Vector4d;

namespace {

constexpr std::size_t kChunk = 1000;

}  // namespace

void check_conditioning(const Matrix4d& J, const char* what) {
    if (!J.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
    const Eigen::SelfAdjointEigenSolver<Matrix4d> es(J);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        throw NumericError(std::string(what) + ": matrix is singular or has condition number above 1e12");
    }
}

JMatrix build_J(const model::TrueConfig& gamma0, const Eigen::Vector2d& omega0, const JConfig& cfg) {
    gamma0.validate();
    if (std::abs(omega0.norm() - 1.0) > 1e-12) throw DomainError("build_J: omega0 must be a unit vector");
    if (cfg.n_star == 0 || cfg.lags < 2) throw DomainError("build_J: need n_star >= 1 and lags >= 2");

    const auto& th = gamma0.theta;
    const std::size_t L = cfg.lags;
    std::vector<double> w(L), dw(L, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
        w[i] = std::pow(th.pi, static_cast<double>(i));
        if (i >= 1) dw[i] = static_cast<double>(i) * std::pow(th.pi, static_cast<double>(i - 1));
    }

    const std::size_t chunks = (cfg.n_star + kChunk - 1) / kChunk;
    std::vector<Matrix4d> part(chunks);
    parallel_for(chunks, cfg.workers, [&](std::size_t c) {
        rng::NormalStream normal(rng::derive(cfg.seed, rng::Stream::Kernel, c));
        const std::size_t count = std::min(kChunk, cfg.n_star - c * kChunk);
        Matrix4d acc = Matrix4d::Zero();
        for (std::size_t k = 0; k < count; ++k) {
            const auto d = model::simulate_dgp(gamma0, L, cfg.burn_in, normal);
            // lag i = 0 is the most recent observation
            double sy = 0, sx = 0, s4 = 0;
            for (std::size_t i = 0; i < L; ++i) {
                const std::size_t t = L - 1 - i;
                const double y2 = d.y[t] * d.y[t];
                const double x2 = d.x[t] * d.x[t];
                sy += w[i] * y2;
                sx += w[i] * x2;
                s4 += dw[i] * (omega0(0) * y2 + omega0(1) * x2);
            }
            const double h = th.zeta + th.beta1 * sy + th.beta2 * sx;
            const Vector4d tau = Vector4d(sy, sx, 1.0, s4) / h;
            acc.noalias() += tau * tau.transpose();
        }
        part[c] = acc;
    });
    Matrix4d J = Matrix4d::Zero();
    for (const auto& p : part) J += p;
    J /= 2.0 * static_cast<double>(cfg.n_star);
    J = 0.5 * (J + J.transpose()).eval();
    check_conditioning(J, "build_J");
    return {J, gamma0, omega0, cfg};
}

double rho_of_J(const Matrix4d& J) {
    const Eigen::FullPivLU<Matrix4d> lu(J);
    if (!lu.isInvertible()) throw NumericError("rho_of_J: J is singular");
    const Matrix4d inv = lu.inverse();
    const double r = inv(1, 3) / std::sqrt(inv(1, 1) * inv(3, 3));
    if (!std::isfinite(r)) throw NumericError("rho_of_J: non-finite correlation");
    return std::clamp(r, -1.0, 1.0);
}

double q_of_rho(double rho) {
    if (!(rho >= -1.0) || !(rho <= 1.0)) throw DomainError("q_of_rho: rho must lie in [-1, 1]");
    return std::asin(rho) / (2.0 * std::numbers::pi);
}

double chibar_cdf(double x, double rho) {
    if (!(rho >= 0.0) || !(rho <= 1.0)) throw DomainError("chibar: rho must lie in [0, 1]");
    if (x < 0.0) return 0.0;
    const double q = q_of_rho(rho);
    const double f1 = x > 0.0 ? boost::math::cdf(boost::math::chi_squared_distribution<double>(1.0), x) : 0.0;
    const double f2 = x > 0.0 ? boost::math::cdf(boost::math::chi_squared_distribution<double>(2.0), x) : 0.0;
    return (0.5 - q) + 0.5 * f1 + q * f2;
}

double chibar_rp(double rho, double alpha) {
    const double cv = stats::maxz_quantile(alpha);
    return 1.0 - chibar_cdf(cv, rho);
}

double chibar_quantile(double rho, double alpha) {
    if (!(alpha > 0.0) || !(alpha < 0.5)) throw DomainError("chibar_quantile: alpha must lie in (0, 0.5)");
    const double target = 1.0 - alpha;
    auto f = [&](double x) { return chibar_cdf(x, rho) - target; };
    double hi = 10.0;
    while (f(hi) < 0.0) hi *= 2.0;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, 1e-12, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
}

std::vector<InftyDraw> lr_infty_draws(const weak::LocalizationPoint& loc, const Matrix4d& J, double c0,
                                      std::size_t draws, std::uint64_t seed, unsigned workers) {
    if (!(c0 > 0.0)) throw DomainError("lr_infty_draws: c0 must be positive");
    if (!(loc.b2 >= 0.0) || !std::isfinite(loc.b2)) throw DomainError("lr_infty_draws: b2 must be finite");
    if (!(loc.b1 >= 0.0) || !(loc.p >= 0.0)) throw DomainError("lr_infty_draws: b1 and p must be nonnegative");
    check_conditioning(J, "lr_infty_draws");

    const Matrix4d Jinv = J.inverse();
    const Matrix4d cov = c0 * 0.5 * (Jinv + Jinv.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix4d> es(cov);
    Vector4d ev = es.eigenvalues();
    for (int i = 0; i < 4; ++i) {
        if (ev(i) < -1e-10) throw NumericError("lr_infty_draws: covariance is not positive semidefinite");
        ev(i) = std::max(0.0, ev(i));
    }
    const Matrix4d root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();

    // weight of the (beta1, beta2, pi) block once zeta is profiled out
    Eigen::Matrix3d sel;
    const int idx[3] = {0, 1, 3};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) sel(a, b) = Jinv(idx[a], idx[b]);
    const Eigen::Matrix3d W = (c0 * sel).inverse();

    using cone::Bound;
    const Bound beta1 = std::isinf(loc.b1) ? Bound::free() : Bound::half_line(-loc.b1);
    const Bound pi = std::isinf(loc.p) ? Bound::free() : Bound::half_line(-loc.p);
    const cone::Cone full{beta1, Bound::half_line(-loc.b2), Bound::free(), pi};
    const cone::Cone restricted{beta1, Bound::fixed(-loc.b2), Bound::free(), pi};
    const Eigen::MatrixXd H = J;

    std::vector<InftyDraw> out(draws);
    parallel_for(draws, workers, [&](std::size_t j) {
        rng::NormalStream normal(rng::derive(seed, rng::Stream::Gaussian, j));
        Vector4d e;
        for (int i = 0; i < 4; ++i) e(i) = normal();
        const Eigen::VectorXd z = root * e;
        const auto a = cone::solve_cone_qp(H, z, full);
        const auto r = cone::solve_cone_qp(H, z, restricted);
        const Eigen::Vector3d la(a.minimizer(0), a.minimizer(1), a.minimizer(3));
        const Eigen::Vector3d lr(r.minimizer(0), r.minimizer(1), r.minimizer(3));
        out[j].lambda = a.minimizer;
        out[j].lr = la.dot(W * la) - lr.dot(W * lr);
    });
    return out;
}

nlohmann::json to_json(const JMatrix& j) {
    nlohmann::json out;
    auto rows = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) rows.push_back({j.J(r, 0), j.J(r, 1), j.J(r, 2), j.J(r, 3)});
    out["J"] = rows;
    out["gamma0"] = {{"beta1", j.gamma0.theta.beta1}, {"beta2", j.gamma0.theta.beta2}, {"zeta", j.gamma0.theta.zeta},
                     {"pi", j.gamma0.theta.pi},       {"varphi", j.gamma0.varphi},     {"kappa", j.gamma0.kappa}};
    out["omega0"] = {j.omega0(0), j.omega0(1)};
    out["mc"] = {{"n_star", j.meta.n_star}, {"lags", j.meta.lags}, {"burn_in", j.meta.burn_in}, {"seed", j.meta.seed}};
    out["rho"] = rho_of_J(j.J);
    return out;
}

}  // namespace garchx::strong
