#pragma once

#include "garchx/model.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace garchx::weak {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coordinates of a drifting sequence: sqrt(n) beta -> b, beta / |beta| -> omega0,
/// sqrt(n) |beta| pi -> p, around the baseline gamma0.
struct LocalizationPoint {
    double b1 = 0.0;
    double b2 = 0.0;
    Eigen::Vector2d omega0{1.0, 0.0};
    double p = kInf;
    model::TrueConfig gamma0;

    bool is_weak() const noexcept { return std::isfinite(b1) && std::isfinite(b2); }
    void validate() const;
};

struct KernelConfig {
    std::size_t n_star = 100000;         ///< simulated blocks for the moment entries
    std::size_t lags = model::kKernelLags;  ///< lags 0..lags-1 in each truncated sum
    std::size_t burn_in = 100;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

/// Omega, H and K of the weak-identification limit tabulated over a set of pi
/// nodes. Entries with closed forms are exact; the x-dependent entries are
/// block averages shared by all three matrices.
struct KernelSet {
    model::TrueConfig gamma0;
    double c0 = 1.0;
    KernelConfig meta;
    std::vector<double> pi_grid;       ///< evaluation grid
    std::vector<double> nodes;         ///< pi_grid plus extra pi0 values, ascending
    std::vector<std::size_t> grid_node;
    Eigen::MatrixXd m_zx;              ///< E[S_z(a) S_x(b)] over nodes
    Eigen::MatrixXd m_xx;              ///< E[S_x(a) S_x(b)], symmetric
    Eigen::VectorXd m_x;               ///< E[S_x(a)]
    std::vector<std::string> diagnostics;

    std::size_t node_of(double pi) const;  ///< throws DomainError if pi is not a node
    Eigen::Matrix3d omega_nodes(std::size_t a, std::size_t b) const;
    Eigen::Matrix3d omega(double pi1, double pi2) const;
    Eigen::Matrix3d H(std::size_t grid_index) const;
    Eigen::Matrix<double, 3, 2> K(std::size_t grid_index, double pi0) const;
};

/// Tabulates the kernels for gamma0 (which must have beta = 0) on pi_grid;
/// `extra_pi0` adds localization values of pi0 that are not grid points.
KernelSet build_kernels(const model::TrueConfig& gamma0, const std::vector<double>& pi_grid,
                        const KernelConfig& cfg, const std::vector<double>& extra_pi0 = {});

/// One path G_j on the grid.
struct GPDraw {
    std::size_t index = 0;
    std::vector<Eigen::Vector3d> g;
};

/// J multiplier draws of G over the grid from N regressor blocks.
struct GPDraws {
    Eigen::MatrixXd gz;      ///< J x grid, first coordinate
    Eigen::MatrixXd gx;      ///< J x grid, second coordinate
    Eigen::VectorXd gzeta;   ///< J, third coordinate (constant in pi)
    std::size_t size() const noexcept { return static_cast<std::size_t>(gzeta.size()); }
    GPDraw draw(std::size_t j) const;
};

GPDraws draw_gp(const KernelSet& kernels, std::size_t J, std::size_t N, std::uint64_t seed, unsigned workers = 1);

/// Z(pi) = -H^{-1}(pi) {G(pi) + K(pi, pi0) b} over the grid.
std::vector<Eigen::Vector3d> z_process(const GPDraw& draw, const KernelSet& kernels, double pi0,
                                       const Eigen::Vector2d& b);

/// eta(pi) = -1/2 omega0' K' H^{-1} K omega0 over the grid.
std::vector<double> eta_criterion(const KernelSet& kernels, double pi0, const Eigen::Vector2d& omega0);

struct LimitDraw {
    Eigen::Vector3d lambda_hat;  ///< minimizer over the full cone at pi-hat
    double pi_hat = 0.0;         ///< 1 when the criterion is flat over the grid
    double lr_dagger = 0.0;
    double lr = 0.0;
};

struct LimitOptions {
    unsigned workers = 1;
    /// Solve every cone problem with the general enumeration solver instead of
    /// the reduced two-dimensional projections (slow; used for cross-checks).
    bool general_solver = false;
};

/// Per-draw limit of the estimator and of both LR statistics; LR-dagger and LR
/// share the same G path within a draw.
std::vector<LimitDraw> limit_draws(const LocalizationPoint& loc, const KernelSet& kernels, const GPDraws& gp,
                                   const LimitOptions& opts = {});
std::vector<LimitDraw> limit_draws(const LocalizationPoint& loc, const KernelSet& kernels, std::size_t J,
                                   std::size_t N, std::uint64_t seed, const LimitOptions& opts = {});

struct RpWeak {
    double rp_ts = 0.0;
    double rp_s = 0.0;
    double lr_dagger_quantile = 0.0;  ///< first-step critical value from the b = 0 run
};

/// Asymptotic rejection probabilities of the two-step and one-step procedures.
RpWeak rp_weak(const LocalizationPoint& loc, const KernelSet& kernels, std::size_t J, std::size_t N,
               std::uint64_t seed, double alpha, const LimitOptions& opts = {});

nlohmann::json to_json(const KernelSet& k);
KernelSet kernels_from_json(const nlohmann::json& j);
void write_draws_csv(std::ostream& out, const std::vector<LimitDraw>& draws);

}  // namespace garchx::weak
