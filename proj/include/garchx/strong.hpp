#pragma once

#include "garchx/model.hpp"
#include "garchx/weak.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace garchx::strong {

struct JConfig {
    std::size_t n_star = 100000;
    std::size_t lags = model::kKernelLags;
    std::size_t burn_in = 100;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

/// Information matrix of the strongly identified limit, coordinates
/// (beta1, beta2, zeta, pi).
struct JMatrix {
    Eigen::Matrix4d J;
    model::TrueConfig gamma0;
    Eigen::Vector2d omega0{1.0, 0.0};
    JConfig meta;
};

/// (1 / 2N*) sum tau tau' / h^2 over simulated blocks, with h the truncated
/// infinite-past variance at gamma0. Throws NumericError when the condition
/// number exceeds 1e12.
JMatrix build_J(const model::TrueConfig& gamma0, const Eigen::Vector2d& omega0, const JConfig& cfg);

/// Throws NumericError unless J is symmetric positive definite with condition number <= 1e12.
void check_conditioning(const Eigen::Matrix4d& J, const char* what);

/// Correlation of the beta2 and pi coordinates of J^{-1}.
double rho_of_J(const Eigen::Matrix4d& J);

/// asin(rho) / (2 pi).
double q_of_rho(double rho);

/// CDF of the mixture (1/2 - q) chi2_0 + 1/2 chi2_1 + q chi2_2 at x >= 0, rho in [0, 1].
double chibar_cdf(double x, double rho);

/// Rejection probability of LR > cv_{1-alpha} under the mixture.
double chibar_rp(double rho, double alpha);

/// 1 - alpha quantile of the mixture by root finding on its CDF.
double chibar_quantile(double rho, double alpha);

struct InftyDraw {
    Eigen::Vector4d lambda;  ///< minimizer over the unrestricted limit cone
    double lr = 0.0;
};

/// Draws of the strongly identified LR limit: Z ~ N(0, c0 J^{-1}) projected on
/// the cones for beta1 >= -b1 (free if b1 = inf), beta2 >= -b2, zeta free,
/// pi >= -p (free if p = inf), and on the same cone with beta2 = -b2.
std::vector<InftyDraw> lr_infty_draws(const weak::LocalizationPoint& loc, const Eigen::Matrix4d& J, double c0,
                                      std::size_t draws, std::uint64_t seed, unsigned workers = 1);

nlohmann::json to_json(const JMatrix& j);

}  // namespace garchx::strong
