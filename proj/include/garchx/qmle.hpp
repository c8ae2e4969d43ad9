#pragma once

#include "garchx/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace garchx::qmle {

enum class Restriction { None, Beta2Zero, BothBetasZero };

const char* to_string(Restriction r);

/// Concentrated criterion and minimizer psi-hat(pi) at one grid value.
struct ProfileRow {
    double pi = 0.0;
    double qn = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double zeta = 0.0;
};

struct FitResult {
    Restriction restriction = Restriction::None;
    /// Reported estimate; pi is set to 1 when the profile is flat in pi.
    model::ThetaPoint theta_hat;
    double qn_value = 0.0;
    std::vector<ProfileRow> profile;
    bool flat_pi = false;
    /// Grid index of the profile minimizer, smallest pi on ties.
    std::size_t argmin = 0;

    /// psi-hat at the minimizing grid value of pi (a point of the parameter space).
    model::ThetaPoint grid_theta() const;
};

struct FitOptions {
    double grad_tol = 1e-8;
    int max_iter = 200;
    /// Nonzero: the midpoint start is perturbed with draws from this seed.
    std::uint64_t perturb_seed = 0;
};

/// {0, step, ..., pi_max}.
std::vector<double> default_pi_grid(const model::ParamSpace& space, double step = 0.01);

/// Minimizes Q_n(psi, pi) over psi for every grid pi (projected Newton with
/// three starts) and concentrates over the grid. `nested` supplies per-grid
/// starting values from a more restricted fit on the same grid; passing it
/// guarantees the profile never exceeds the nested one.
/// Throws ConvergenceError naming the grid pi where the optimizer stalls.
FitResult fit_profile(const model::Dataset& data, const model::ParamSpace& space, Restriction restriction,
                      const std::vector<double>& pi_grid, const FitResult* nested = nullptr,
                      const FitOptions& opts = {});

/// The three nested fits: both betas zero, beta2 = 0, unrestricted.
struct NestedFits {
    FitResult dagger;
    FitResult restricted;
    FitResult full;
};

NestedFits fit_nested(const model::Dataset& data, const model::ParamSpace& space,
                      const std::vector<double>& pi_grid, const FitOptions& opts = {});

/// 2n (Q_small - Q_big) / c, clamped at zero when above -1e-8.
double lr_from_fits(const FitResult& small, const FitResult& big, double c, std::size_t n);

/// Kurtosis factor at the restricted estimate (its grid point when flat).
double c_at(const FitResult& fit, const model::Dataset& data, model::CVariant variant = model::CVariant::Ratio);

double lr_dagger_stat(const NestedFits& fits, const model::Dataset& data);
double lr_stat(const NestedFits& fits, const model::Dataset& data);
double lr_dagger_stat(const model::Dataset& data, const model::ParamSpace& space, const std::vector<double>& pi_grid);
double lr_stat(const model::Dataset& data, const model::ParamSpace& space, const std::vector<double>& pi_grid);

nlohmann::json to_json(const FitResult& fit);

}  // namespace garchx::qmle
