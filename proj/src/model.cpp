#include "garchx/model.hpp"

#include "garchx/errors.hpp"
#include "garchx/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace garchx::model {

void ParamSpace::validate() const {
    if (!(beta1_max > 0.0) || !(beta2_max > 0.0)) {
        throw DomainError("ParamSpace: beta upper bounds must be positive");
    }
    if (!(zeta_min > 0.0) || !(zeta_min < zeta_max) || !std::isfinite(zeta_max)) {
        throw DomainError("ParamSpace: need 0 < zeta_min < zeta_max < inf");
    }
    if (!(pi_max > 0.0) || !(pi_max < 1.0)) {
        throw DomainError("ParamSpace: need 0 < pi_max < 1");
    }
}

bool ThetaPoint::inside(const ParamSpace& s) const noexcept {
    return beta1 >= 0.0 && beta1 <= s.beta1_max && beta2 >= 0.0 && beta2 <= s.beta2_max &&
           zeta >= s.zeta_min && zeta <= s.zeta_max && pi >= 0.0 && pi <= s.pi_max;
}

void TrueConfig::validate() const {
    if (!(std::abs(varphi) < 1.0)) throw DomainError("TrueConfig: |varphi| must be < 1");
    if (!(std::abs(kappa) <= 1.0)) throw DomainError("TrueConfig: |kappa| must be <= 1");
    if (!(theta.beta1 >= 0.0) || !(theta.beta2 >= 0.0)) {
        throw DomainError("TrueConfig: beta must be nonnegative");
    }
    if (!(theta.zeta > 0.0) || !std::isfinite(theta.zeta)) {
        throw DomainError("TrueConfig: zeta must be positive");
    }
    if (!(theta.pi >= 0.0) || !(theta.pi < 1.0)) throw DomainError("TrueConfig: pi must lie in [0,1)");
}

void Dataset::validate() const {
    if (y.empty()) throw DomainError("Dataset: need n >= 1 observations");
    if (y.size() != x.size()) throw DomainError("Dataset: y and x lengths differ");
}

Dataset simulate_dgp(const TrueConfig& cfg, std::size_t n, std::size_t burn_in, std::uint64_t seed) {
    rng::NormalStream normal(rng::derive(seed, rng::Stream::Data, 0));
    return simulate_dgp(cfg, n, burn_in, normal);
}

Dataset simulate_dgp(const TrueConfig& cfg, std::size_t n, std::size_t burn_in, rng::NormalStream& normal) {
    cfg.validate();
    if (n == 0) throw DomainError("simulate_dgp: n must be >= 1");

    const auto& th = cfg.theta;
    const double kc = std::sqrt(std::max(0.0, 1.0 - cfg.kappa * cfg.kappa));

    Dataset d;
    d.burn_in = burn_in;
    d.y.reserve(n);
    d.x.reserve(n);
    d.z.reserve(n);
    d.eps.reserve(n);

    double y_prev = 0.0, x_prev = 0.0, h_prev = th.zeta;
    const std::size_t total = burn_in + n;
    for (std::size_t s = 1; s <= total; ++s) {
        const double z = normal();
        const double eps = cfg.kappa * z + kc * normal();
        const double h = th.zeta * (1.0 - th.pi) + th.beta1 * y_prev * y_prev + th.pi * h_prev +
                         th.beta2 * x_prev * x_prev;
        const double y = std::sqrt(h) * z;
        const double x = cfg.varphi * x_prev + eps;
        if (s > burn_in) {
            d.y.push_back(y);
            d.x.push_back(x);
            d.z.push_back(z);
            d.eps.push_back(eps);
        } else if (s == burn_in) {
            d.y0 = y;
            d.x0 = x;
        }
        y_prev = y;
        x_prev = x;
        h_prev = h;
    }
    return d;
}

std::vector<double> h_path(const ThetaPoint& th, const Dataset& data) {
    data.validate();
    const std::size_t n = data.size();
    std::vector<double> h(n);
    // Carry e_t = h_t - zeta = pi e_{t-1} + beta1 y_{t-1}^2 + beta2 x_{t-1}^2, which
    // is the same recursion but keeps h_t == zeta exactly when beta = 0.
    double y_prev = data.y0, x_prev = data.x0, e = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        e = th.pi * e + th.beta1 * y_prev * y_prev + th.beta2 * x_prev * x_prev;
        h[t] = th.zeta + e;
        y_prev = data.y[t];
        x_prev = data.x[t];
    }
    return h;
}

std::vector<double> h_path_closed_form(const ThetaPoint& th, const Dataset& data) {
    data.validate();
    const auto lag = lagged_squares(data);
    const std::size_t n = data.size();
    std::vector<double> h(n);
    for (std::size_t t = 1; t <= n; ++t) {
        double sy = 0.0, sx = 0.0, w = 1.0;
        for (std::size_t i = 0; i < t; ++i) {
            sy += w * lag.y2[t - i - 1];
            sx += w * lag.x2[t - i - 1];
            w *= th.pi;
        }
        h[t - 1] = th.zeta + th.beta1 * sy + th.beta2 * sx;
    }
    return h;
}

double neg_loglik(const ThetaPoint& theta, const Dataset& data) {
    const auto h = h_path(theta, data);
    double acc = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
        if (!(h[t] > 0.0)) throw NumericError("neg_loglik: nonpositive conditional variance");
        acc += std::log(h[t]) + data.y[t] * data.y[t] / h[t];
    }
    const double q = 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * acc / static_cast<double>(h.size());
    if (!std::isfinite(q)) throw NumericError("neg_loglik: non-finite objective");
    return q;
}

LaggedSquares lagged_squares(const Dataset& data) {
    const std::size_t n = data.size();
    LaggedSquares out;
    out.y2.resize(n);
    out.x2.resize(n);
    if (n == 0) return out;
    out.y2[0] = data.y0 * data.y0;
    out.x2[0] = data.x0 * data.x0;
    for (std::size_t t = 1; t < n; ++t) {
        out.y2[t] = data.y[t - 1] * data.y[t - 1];
        out.x2[t] = data.x[t - 1] * data.x[t - 1];
    }
    return out;
}

std::vector<double> lag_sum(std::span<const double> w, double pi, std::size_t trunc) {
    if (trunc == 0) throw DomainError("lag_sum: truncation must be >= 1");
    const std::size_t n = w.size();
    std::vector<double> s(n);
    const bool truncate = trunc < n;
    const double drop = truncate ? std::pow(pi, static_cast<double>(trunc)) : 0.0;
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        acc = pi * acc + w[t];
        if (truncate && t >= trunc) acc -= drop * w[t - trunc];
        s[t] = acc;
    }
    return s;
}

Eigen::MatrixXd dh_dpsi(double pi, const Dataset& data, std::size_t trunc) {
    data.validate();
    const auto lag = lagged_squares(data);
    const auto sy = lag_sum(lag.y2, pi, trunc);
    const auto sx = lag_sum(lag.x2, pi, trunc);
    Eigen::MatrixXd out(data.size(), 3);
    for (std::size_t t = 0; t < data.size(); ++t) {
        out(t, 0) = sy[t];
        out(t, 1) = sx[t];
        out(t, 2) = 1.0;
    }
    return out;
}

namespace {

// d_t = sum_{i=1}^{m-1} i pi^(i-1) w_{t-i-1} with m = min(trunc, t), the pi-derivative
// of the truncated lag sum. Computed directly so that truncation stays exact.
std::vector<double> lag_sum_derivative(std::span<const double> w, double pi, std::size_t trunc) {
    const std::size_t n = w.size();
    std::vector<double> d(n, 0.0);
    if (trunc >= n) {
        // s_t = pi s_{t-1} + w_{t-1}  =>  d_t = s_{t-1} + pi d_{t-1}
        double s_prev = 0.0, d_prev = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            d[t] = s_prev + pi * d_prev;
            s_prev = pi * s_prev + w[t];
            d_prev = d[t];
        }
        return d;
    }
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t m = std::min(trunc, t + 1);
        double acc = 0.0, p = 1.0;
        for (std::size_t i = 1; i < m; ++i) {
            acc += static_cast<double>(i) * p * w[t - i];
            p *= pi;
        }
        d[t] = acc;
    }
    return d;
}

}  // namespace

Eigen::MatrixXd tau_vector(const Eigen::Vector2d& omega, double pi, const Dataset& data,
                           std::size_t trunc) {
    data.validate();
    if (std::abs(omega.norm() - 1.0) > 1e-12) throw DomainError("tau_vector: omega must be a unit vector");
    const auto lag = lagged_squares(data);
    const auto sy = lag_sum(lag.y2, pi, trunc);
    const auto sx = lag_sum(lag.x2, pi, trunc);
    const auto dy = lag_sum_derivative(lag.y2, pi, trunc);
    const auto dx = lag_sum_derivative(lag.x2, pi, trunc);
    Eigen::MatrixXd out(data.size(), 4);
    for (std::size_t t = 0; t < data.size(); ++t) {
        out(t, 0) = sy[t];
        out(t, 1) = sx[t];
        out(t, 2) = 1.0;
        out(t, 3) = omega(0) * dy[t] + omega(1) * dx[t];
    }
    return out;
}

double c_hat(const ThetaPoint& theta, const Dataset& data, CVariant variant) {
    const auto h = h_path(theta, data);
    double acc = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
        const double r = data.y[t] * data.y[t] / h[t];
        acc += variant == CVariant::Ratio ? (r - 1.0) * (r - 1.0) : r * r;
    }
    acc /= static_cast<double>(h.size());
    return variant == CVariant::Ratio ? acc / 2.0 : (acc - 1.0) / 2.0;
}

}  // namespace garchx::model
