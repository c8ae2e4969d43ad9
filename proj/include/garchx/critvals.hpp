#pragma once

#include "garchx/model.hpp"
#include "garchx/qmle.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace garchx::critvals {

struct CritConfig {
    double alpha = 0.05;
    std::size_t J_draws = 2000;
    std::vector<double> pi_grid;   ///< grid of the simulated limit processes
    std::vector<double> pi0_grid;  ///< candidate pi0 for the least favorable search
    std::vector<double> b1_grid;   ///< candidate b1 >= 0
    std::uint64_t seed = 1;
    unsigned workers = 1;

    /// Coarse grids: pi in {0,..,0.9}, pi0 in {0,..,0.8}, the b1 list below, J = 2000.
    static CritConfig desk();
    void validate() const;
};

/// Square of the standard normal 1 - alpha quantile.
double cv_maxz(double alpha);

/// (pi0, b1) satisfies 3 beta^2 + pi0^2 + 2 beta pi0 < 1 with beta = b1 / sqrt(n).
bool in_pb(double pi0, double b1, std::size_t n);

/// Estimated weak-identification limit built from one dataset and its
/// both-betas-zero fit. The multiplier draws are generated once and shared by
/// every (pi0, b1) evaluated through this object.
class EstimatedLimit {
public:
    EstimatedLimit(const model::Dataset& data, const qmle::FitResult& dagger, const CritConfig& cfg);

    std::vector<double> lr_dagger_draws() const;
    std::vector<double> lr_draws(double pi0, double b1) const;

    double c_hat() const noexcept { return c_; }
    double zeta_hat() const noexcept { return zeta_; }
    /// True when c-hat is numerically zero; the simulated process then vanishes
    /// and every draw is reported as 0.
    bool degenerate() const noexcept { return degenerate_; }

    /// Analytic y-entries where the resulting matrix is positive definite;
    /// at other grid points those entries are replaced by sample means.
    Eigen::Matrix3d H(std::size_t grid_index) const;
    /// Grid points that use the sample-mean entries.
    std::size_t sample_fallbacks() const;
    Eigen::Matrix<double, 3, 2> K(std::size_t grid_index, double pi0) const;
    Eigen::Vector3d G(std::size_t draw, std::size_t grid_index) const;

private:
    std::vector<double> draws_at(double pi0, double b1, bool dagger) const;
    Eigen::Matrix<double, 3, 2> k_matrix(std::size_t grid_index, double pi0, const std::vector<double>& sy0,
                                         const std::vector<double>& sx0) const;

    const model::Dataset* data_;
    CritConfig cfg_;
    double c_ = 0.0;
    double zeta_ = 1.0;
    bool degenerate_ = false;
    std::vector<std::vector<double>> sy_, sx_;  // lag sums per grid point
    std::vector<Eigen::Matrix3d> h_;
    std::vector<char> sample_y_;                // grid points using sample y-entries
    Eigen::MatrixXd g_;                         // J x 3G multiplier draws
};

double cv_lr_dagger(const model::Dataset& data, const qmle::FitResult& dagger, const CritConfig& cfg);
double cv_lr_finite_b(const model::Dataset& data, const qmle::FitResult& dagger, double pi0, double b1,
                      const CritConfig& cfg);

struct InftyCv {
    double value = 0.0;
    double rho = 0.0;
    bool chibar_branch = false;  ///< false: rho < 0 and value = cv_maxz
    double pi0_hat = 0.0;
    Eigen::Matrix4d J;
};

/// Sample analogue of J at the beta2 = 0 restricted fit, then cv_maxz when
/// rho < 0 and the chi-bar quantile otherwise.
InftyCv cv_lr_infty(const model::Dataset& data, const qmle::FitResult& restricted, double alpha);
/// Branch and quantile for a given J (pi0_hat left at 0).
InftyCv infty_cv_from_J(const Eigen::Matrix4d& J, double alpha);

struct PbCell {
    double pi0 = 0.0;
    double b1 = 0.0;
    double quantile = 0.0;
};

struct PilfReport {
    double value = 0.0;
    double cv = 0.0;  ///< cv_maxz(alpha)
    double lr_dagger_quantile = 0.0;
    std::size_t sample_fallbacks = 0;
    bool beta1_positive = false;
    std::vector<PbCell> cells;
    std::size_t argmax_cell = 0;
    double max_pb = 0.0;
    bool has_infty = false;
    InftyCv infty;
    std::string branch;  ///< component attaining the max: "pb", "infty" or "cv"
    double c_hat = 0.0;
};

/// Plug-in least favorable critical value
/// max{ max_PB LR~(pi0, b1), 1(beta1-hat > 0) LR~inf, 1(beta1-hat > 0) cv }.
PilfReport cv_pilf(const model::Dataset& data, const qmle::NestedFits& fits, const CritConfig& cfg);

nlohmann::json to_json(const InftyCv& r);
nlohmann::json to_json(const PilfReport& r);

}  // namespace garchx::critvals
