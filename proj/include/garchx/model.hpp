#pragma once

#include "garchx/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace garchx::model {

/// Optimization box for theta = (beta1, beta2, zeta, pi).
struct ParamSpace {
    double beta1_max = 1.0;
    double beta2_max = 1.0;
    double zeta_min = 0.05;
    double zeta_max = 20.0;
    double pi_max = 0.9;

    /// Throws DomainError unless 0 < zeta_min < zeta_max and 0 < pi_max < 1.
    void validate() const;
};

struct ThetaPoint {
    double beta1 = 0.0;
    double beta2 = 0.0;
    double zeta = 1.0;
    double pi = 0.0;

    bool inside(const ParamSpace& space) const noexcept;
};

/// True parameter gamma: theta plus the law of the covariate, an AR(1) with
/// coefficient varphi whose innovation has correlation kappa with z.
struct TrueConfig {
    ThetaPoint theta;
    double varphi = 0.0;
    double kappa = 0.0;

    void validate() const;
};

/// Observations t = 1..n plus the presample pair (y0, x0). The innovation
/// series are filled by simulate_dgp and empty for imported data.
struct Dataset {
    std::vector<double> y;
    std::vector<double> x;
    double y0 = 0.0;
    double x0 = 0.0;
    std::size_t burn_in = 0;
    std::vector<double> z;
    std::vector<double> eps;

    std::size_t size() const noexcept { return y.size(); }
    void validate() const;
};

Dataset simulate_dgp(const TrueConfig& cfg, std::size_t n, std::size_t burn_in, std::uint64_t seed);
/// Same process drawing from a caller-owned stream (used for short simulated blocks).
Dataset simulate_dgp(const TrueConfig& cfg, std::size_t n, std::size_t burn_in, rng::NormalStream& normal);

/// Conditional variances h_1..h_n from the recursion
/// h_t = zeta(1 - pi) + beta1 y_{t-1}^2 + pi h_{t-1} + beta2 x_{t-1}^2, h_0 = zeta.
std::vector<double> h_path(const ThetaPoint& theta, const Dataset& data);

/// Same quantity through the explicit lag sums zeta + beta1 sum pi^i y^2 + beta2 sum pi^i x^2.
/// O(n^2); kept as an independent check of h_path.
std::vector<double> h_path_closed_form(const ThetaPoint& theta, const Dataset& data);

/// Q_n(theta): mean negative Gaussian quasi log-likelihood.
double neg_loglik(const ThetaPoint& theta, const Dataset& data);

/// Lagged squares entering the lag sums: element t-1 of the returned vectors
/// is y_{t-1}^2 (resp. x_{t-1}^2) for t = 1..n, so index 0 holds the presample.
struct LaggedSquares {
    std::vector<double> y2;
    std::vector<double> x2;
};
LaggedSquares lagged_squares(const Dataset& data);

/// Truncated geometric lag sums s_t = sum_{i=0}^{min(trunc, t) - 1} pi^i w_{t-i-1}
/// for t = 1..n, where w are the lagged squares above.
std::vector<double> lag_sum(std::span<const double> lagged, double pi, std::size_t trunc);

/// Rows t = 1..n of (sum pi^i y^2, sum pi^i x^2, 1).
Eigen::MatrixXd dh_dpsi(double pi, const Dataset& data, std::size_t trunc);

/// Rows of (sum pi^i y^2, sum pi^i x^2, 1, sum i pi^(i-1)(w1 y^2 + w2 x^2)).
Eigen::MatrixXd tau_vector(const Eigen::Vector2d& omega, double pi, const Dataset& data,
                           std::size_t trunc);

enum class CVariant { Ratio, Alt };

/// Estimate of c0 = (E z^4 - 1) / 2 at theta.
double c_hat(const ThetaPoint& theta, const Dataset& data, CVariant variant = CVariant::Ratio);

/// Unlimited truncation: use every available lag.
inline constexpr std::size_t kAllLags = static_cast<std::size_t>(-1);
/// Lag window used by the asymptotic kernels (lags 0..99).
inline constexpr std::size_t kKernelLags = 100;

// CSV with header `t,y,x`; the row t = 0 carries the presample pair.
void write_csv(std::ostream& out, const Dataset& data);
Dataset read_csv(std::istream& in);

// Key-value config text (`key = value`, `#` comments) with keys
// beta1, beta2, zeta, pi, varphi, kappa.
TrueConfig read_true_config(std::istream& in);
void write_true_config(std::ostream& out, const TrueConfig& cfg);

}  // namespace garchx::model
