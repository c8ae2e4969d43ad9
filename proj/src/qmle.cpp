#include "garchx/qmle.hpp"

#include "garchx/errors.hpp"
#include "garchx/io.hpp"
#include "garchx/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace garchx::qmle {

using model::Dataset;
using model::ParamSpace;
using model::ThetaPoint;

const char* to_string(Restriction r) {
    switch (r) {
        case Restriction::None: return "none";
        case Restriction::Beta2Zero: return "beta2_zero";
        case Restriction::BothBetasZero: return "both_betas_zero";
    }
    return "?";
}

ThetaPoint FitResult::grid_theta() const {
    const auto& row = profile.at(argmin);
    return {row.beta1, row.beta2, row.zeta, row.pi};
}

std::vector<double> default_pi_grid(const ParamSpace& space, double step) {
    return io::linear_grid(0.0, step, space.pi_max);
}

namespace {

// same expression as model::neg_loglik so that equal variance paths give bitwise equal values
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// h_t = A_t . psi holds exactly for the variance recursion started at
// h_0 = zeta, where A_t = (sum pi^i y^2, sum pi^i x^2, 1) over all lags.
struct Problem {
    const Eigen::MatrixXd& A;
    const std::vector<double>& y2;
    std::array<bool, 3> active_var;  // which of (beta1, beta2, zeta) are optimized
    std::array<double, 3> lo, hi;

    double value(const Eigen::Vector3d& psi) const {
        const Eigen::VectorXd h = A * psi;
        double acc = 0.0;
        for (Eigen::Index t = 0; t < h.size(); ++t) acc += std::log(h(t)) + y2[t] / h(t);
        return kHalfLog2Pi + 0.5 * acc / static_cast<double>(h.size());
    }

    // gradient, Hessian and Fisher information of the mean criterion
    void derivatives(const Eigen::Vector3d& psi, Eigen::Vector3d& g, Eigen::Matrix3d& hess,
                     Eigen::Matrix3d& fisher) const {
        const Eigen::VectorXd h = A * psi;
        g.setZero();
        hess.setZero();
        fisher.setZero();
        for (Eigen::Index t = 0; t < h.size(); ++t) {
            const double inv = 1.0 / h(t);
            const double r = y2[t] * inv;
            const Eigen::Vector3d a = A.row(t).transpose();
            g += 0.5 * inv * (1.0 - r) * a;
            const Eigen::Matrix3d aa = a * a.transpose();
            hess += (inv * inv * (r - 0.5)) * aa;
            fisher += (0.5 * inv * inv) * aa;
        }
        const double n = static_cast<double>(h.size());
        g /= n;
        hess /= n;
        fisher /= n;
    }

    Eigen::Vector3d project(Eigen::Vector3d p) const {
        for (int i = 0; i < 3; ++i) p(i) = std::clamp(p(i), lo[i], hi[i]);
        return p;
    }

    double projected_gradient_norm(const Eigen::Vector3d& psi, const Eigen::Vector3d& g) const {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (!active_var[i]) continue;
            const double step = psi(i) - std::clamp(psi(i) - g(i), lo[i], hi[i]);
            s += step * step;
        }
        return std::sqrt(s);
    }
};

struct LocalResult {
    Eigen::Vector3d psi;
    double value;
    bool converged;
};

// Projected Newton for a box (Bertsekas 1982): coordinates at a bound with the
// gradient pushing outward are held by a diagonal step, the rest take a Newton
// step with the Hessian (Fisher information when the Hessian is not positive
// definite on them), followed by an Armijo search along the projection arc.
LocalResult projected_newton(const Problem& pb, Eigen::Vector3d psi, const FitOptions& opts) {
    psi = pb.project(psi);
    double f = pb.value(psi);
    Eigen::Vector3d g;
    Eigen::Matrix3d hess, fisher;
    for (int it = 0; it < opts.max_iter; ++it) {
        pb.derivatives(psi, g, hess, fisher);
        const double pg = pb.projected_gradient_norm(psi, g);
        if (pg <= opts.grad_tol) return {psi, f, true};

        const double eps = std::min(1e-6, pg);
        std::array<bool, 3> hold{};
        std::vector<int> fr;
        for (int i = 0; i < 3; ++i) {
            if (!pb.active_var[i]) {
                hold[i] = true;
                continue;
            }
            hold[i] = (psi(i) <= pb.lo[i] + eps && g(i) > 0.0) || (psi(i) >= pb.hi[i] - eps && g(i) < 0.0);
            if (!hold[i]) fr.push_back(i);
        }

        Eigen::Vector3d dir = Eigen::Vector3d::Zero();
        for (int i = 0; i < 3; ++i) {
            if (hold[i] && pb.active_var[i]) dir(i) = -g(i) / std::max(fisher(i, i), 1e-12);
        }
        if (!fr.empty()) {
            const int k = static_cast<int>(fr.size());
            Eigen::MatrixXd B(k, k);
            Eigen::VectorXd gf(k);
            for (int a = 0; a < k; ++a) {
                gf(a) = g(fr[a]);
                for (int b = 0; b < k; ++b) B(a, b) = hess(fr[a], fr[b]);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(B);
            if (llt.info() != Eigen::Success) {
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) B(a, b) = fisher(fr[a], fr[b]);
                llt.compute(B);
            }
            Eigen::VectorXd step;
            if (llt.info() == Eigen::Success) {
                step = -llt.solve(gf);
            } else {
                step = -gf;
            }
            for (int a = 0; a < k; ++a) dir(fr[a]) = step(a);
        }

        bool moved = false;
        for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
            if (attempt == 1) {
                // fall back to the scaled projected gradient direction
                for (int i = 0; i < 3; ++i) {
                    dir(i) = pb.active_var[i] ? -g(i) / std::max(fisher(i, i), 1e-12) : 0.0;
                }
            }
            double alpha = 1.0;
            for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
                const Eigen::Vector3d cand = pb.project(psi + alpha * dir);
                const double fc = pb.value(cand);
                const double decrease = g.dot(cand - psi);
                const bool armijo = fc <= f && fc <= f + 1e-4 * decrease;
                // Close to the optimum the predicted decrease drops below the
                // rounding noise of the n-term sum; take full Newton steps there.
                const bool in_noise = attempt == 0 && ls == 0 && pg < 1e-5 && fc <= f + 1e-13 * (1.0 + std::abs(f));
                if (std::isfinite(fc) && (armijo || in_noise)) {
                    moved = (cand - psi).norm() > 0.0;
                    psi = cand;
                    f = fc;
                    break;
                }
            }
        }
        if (!moved) {
            // No representable decrease is left; accept only if stationary to rounding.
            return {psi, f, pg <= opts.grad_tol};
        }
    }
    pb.derivatives(psi, g, hess, fisher);
    return {psi, f, pb.projected_gradient_norm(psi, g) <= opts.grad_tol};
}

void validate_grid(const std::vector<double>& grid, const ParamSpace& space) {
    if (grid.empty()) throw DomainError("fit_profile: pi grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !(grid[i] <= space.pi_max)) {
            throw DomainError("fit_profile: pi grid must lie in [0, pi_max]");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("fit_profile: pi grid must be increasing");
    }
}

void finish(FitResult& fit) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < fit.profile.size(); ++i) {
        const double q = fit.profile[i].qn;
        if (q < lo) {
            lo = q;
            fit.argmin = i;
        }
        hi = std::max(hi, q);
    }
    fit.qn_value = lo;
    fit.flat_pi = fit.flat_pi || (hi - lo) < 1e-12;
    fit.theta_hat = fit.grid_theta();
    if (fit.flat_pi) fit.theta_hat.pi = 1.0;
}

}  // namespace

FitResult fit_profile(const Dataset& data, const ParamSpace& space, Restriction restriction,
                      const std::vector<double>& pi_grid, const FitResult* nested, const FitOptions& opts) {
    data.validate();
    space.validate();
    validate_grid(pi_grid, space);
    if (nested && nested->profile.size() != pi_grid.size()) {
        throw DomainError("fit_profile: nested fit uses a different grid");
    }

    const std::size_t n = data.size();
    std::vector<double> y2(n);
    double my2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        y2[t] = data.y[t] * data.y[t];
        my2 += y2[t];
    }
    my2 /= static_cast<double>(n);

    FitResult fit;
    fit.restriction = restriction;
    fit.profile.resize(pi_grid.size());

    if (restriction == Restriction::BothBetasZero) {
        const double zeta = std::clamp(my2, space.zeta_min, space.zeta_max);
        const double q = model::neg_loglik({0.0, 0.0, zeta, 0.0}, data);
        for (std::size_t i = 0; i < pi_grid.size(); ++i) fit.profile[i] = {pi_grid[i], q, 0.0, 0.0, zeta};
        fit.flat_pi = true;
        finish(fit);
        return fit;
    }

    const bool with_beta2 = restriction == Restriction::None;
    Eigen::Vector3d mid(0.5 * space.beta1_max, with_beta2 ? 0.5 * space.beta2_max : 0.0,
                        0.5 * (space.zeta_min + space.zeta_max));
    if (opts.perturb_seed != 0) {
        std::mt19937_64 gen(rng::derive(opts.perturb_seed, rng::Stream::Retry, 0));
        std::uniform_real_distribution<double> u(0.1, 0.9);
        mid = Eigen::Vector3d(u(gen) * space.beta1_max, with_beta2 ? u(gen) * space.beta2_max : 0.0,
                              space.zeta_min + u(gen) * (std::min(space.zeta_max, 4.0 * my2 + 1.0) - space.zeta_min));
    }
    const Eigen::Vector3d fallback(0.0, 0.0, std::clamp(my2, space.zeta_min, space.zeta_max));

    Eigen::Vector3d prev = fallback;
    for (std::size_t i = 0; i < pi_grid.size(); ++i) {
        const double pi = pi_grid[i];
        const Eigen::MatrixXd A = model::dh_dpsi(pi, data, model::kAllLags);
        Problem pb{A, y2, {true, with_beta2, true}, {0.0, 0.0, space.zeta_min},
                   {space.beta1_max, with_beta2 ? space.beta2_max : 0.0, space.zeta_max}};

        Eigen::Vector3d first = fallback;
        if (nested) {
            const auto& r = nested->profile[i];
            first = Eigen::Vector3d(r.beta1, r.beta2, r.zeta);
        }
        const std::array<Eigen::Vector3d, 3> starts{first, mid, prev};

        LocalResult best{first, std::numeric_limits<double>::infinity(), false};
        bool any = false;
        for (std::size_t s = 0; s < starts.size(); ++s) {
            if (s == 2 && i == 0) continue;
            const auto res = projected_newton(pb, starts[s], opts);
            if (!res.converged) continue;
            // later starts must beat earlier ones by more than rounding noise
            if (!any || res.value < best.value - 1e-14 * (1.0 + std::abs(best.value))) best = res;
            any = true;
        }
        if (!any) throw ConvergenceError("fit_profile: optimizer did not converge", pi);
        fit.profile[i] = {pi, best.value, best.psi(0), best.psi(1), best.psi(2)};
        prev = best.psi;
    }
    finish(fit);
    return fit;
}

NestedFits fit_nested(const Dataset& data, const ParamSpace& space, const std::vector<double>& pi_grid,
                      const FitOptions& opts) {
    NestedFits f;
    f.dagger = fit_profile(data, space, Restriction::BothBetasZero, pi_grid, nullptr, opts);
    f.restricted = fit_profile(data, space, Restriction::Beta2Zero, pi_grid, &f.dagger, opts);
    f.full = fit_profile(data, space, Restriction::None, pi_grid, &f.restricted, opts);
    return f;
}

double lr_from_fits(const FitResult& small, const FitResult& big, double c, std::size_t n) {
    const double diff = 2.0 * static_cast<double>(n) * (small.qn_value - big.qn_value);
    // A perfect fit (y^2 / h == 1) has c == 0 and no improvement to scale.
    if (diff <= 0.0 && c == 0.0) return 0.0;
    if (!(c > 0.0)) throw NumericError("lr statistic: kurtosis factor must be positive");
    const double lr = diff / c;
    if (lr < 0.0 && lr >= -1e-8) return 0.0;
    return lr;
}

double c_at(const FitResult& fit, const Dataset& data, model::CVariant variant) {
    return model::c_hat(fit.grid_theta(), data, variant);
}

double lr_dagger_stat(const NestedFits& fits, const Dataset& data) {
    return lr_from_fits(fits.dagger, fits.full, c_at(fits.dagger, data), data.size());
}

double lr_stat(const NestedFits& fits, const Dataset& data) {
    return lr_from_fits(fits.restricted, fits.full, c_at(fits.restricted, data), data.size());
}

double lr_dagger_stat(const Dataset& data, const ParamSpace& space, const std::vector<double>& pi_grid) {
    return lr_dagger_stat(fit_nested(data, space, pi_grid), data);
}

double lr_stat(const Dataset& data, const ParamSpace& space, const std::vector<double>& pi_grid) {
    return lr_stat(fit_nested(data, space, pi_grid), data);
}

nlohmann::json to_json(const FitResult& fit) {
    nlohmann::json j;
    j["restriction"] = to_string(fit.restriction);
    j["theta_hat"] = {{"beta1", fit.theta_hat.beta1},
                      {"beta2", fit.theta_hat.beta2},
                      {"zeta", fit.theta_hat.zeta},
                      {"pi", fit.theta_hat.pi}};
    j["qn"] = fit.qn_value;
    j["flat_pi"] = fit.flat_pi;
    j["argmin_pi"] = fit.profile.at(fit.argmin).pi;
    auto& rows = j["profile"] = nlohmann::json::array();
    for (const auto& r : fit.profile) {
        rows.push_back({{"pi", r.pi}, {"qn", r.qn}, {"beta1", r.beta1}, {"beta2", r.beta2}, {"zeta", r.zeta}});
    }
    return j;
}

}  // namespace garchx::qmle
