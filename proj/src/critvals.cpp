#include "garchx/critvals.hpp"

#include "garchx/cone.hpp"
#include "garchx/errors.hpp"
#include "garchx/io.hpp"
#include "garchx/parallel.hpp"
#include "garchx/rng.hpp"
#include "garchx/stats.hpp"
#include "garchx/strong.hpp"

#include <algorithm>
#include <cmath>

namespace garchx::critvals {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

constexpr double kDegenerateC = 1e-10;

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double mean_product(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
    return s / static_cast<double>(a.size());
}

bool positive_definite(const Matrix3d& h) {
    if (!h.allFinite()) return false;
    const Eigen::LDLT<Matrix3d> ldlt(h);
    return ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 0.0;
}

}  // namespace

CritConfig CritConfig::desk() {
    CritConfig c;
    c.pi_grid = io::linear_grid(0.0, 0.1, 0.9);
    c.pi0_grid = io::linear_grid(0.0, 0.1, 0.8);
    c.b1_grid = {0, 0.1, 0.2, 0.3, 0.4, 0.5, 1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12};
    return c;
}

void CritConfig::validate() const {
    if (!(alpha > 0.0) || !(alpha < 0.5)) throw DomainError("critical values: alpha must lie in (0, 0.5)");
    if (J_draws < 1) throw DomainError("critical values: J_draws must be >= 1");
    if (pi_grid.empty() || pi0_grid.empty() || b1_grid.empty()) {
        throw DomainError("critical values: grids must be nonempty");
    }
    for (double p : pi_grid)
        if (!(p >= 0.0) || !(p < 1.0)) throw DomainError("critical values: pi grid must lie in [0, 1)");
    for (double p : pi0_grid)
        if (!(p >= 0.0) || !(p < 1.0)) throw DomainError("critical values: pi0 grid must lie in [0, 1)");
    for (double b : b1_grid)
        if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("critical values: b1 grid must be finite and >= 0");
}

double cv_maxz(double alpha) { return stats::maxz_quantile(alpha); }

bool in_pb(double pi0, double b1, std::size_t n) {
    // multiplied through by n so that b1 = sqrt(n / 3) lands exactly on the boundary
    const double nn = static_cast<double>(n);
    return 3.0 * b1 * b1 + pi0 * pi0 * nn + 2.0 * b1 * pi0 * std::sqrt(nn) < nn;
}

EstimatedLimit::EstimatedLimit(const model::Dataset& data, const qmle::FitResult& dagger, const CritConfig& cfg)
    : data_(&data), cfg_(cfg) {
    cfg.validate();
    data.validate();
    if (dagger.restriction != qmle::Restriction::BothBetasZero) {
        throw DomainError("EstimatedLimit: needs the both-betas-zero fit");
    }
    c_ = qmle::c_at(dagger, data);
    zeta_ = dagger.theta_hat.zeta;
    degenerate_ = !(c_ > kDegenerateC);

    const auto lag = model::lagged_squares(data);
    const std::size_t G = cfg.pi_grid.size();
    for (double p : cfg.pi_grid) {
        sy_.push_back(model::lag_sum(lag.y2, p, model::kAllLags));
        sx_.push_back(model::lag_sum(lag.x2, p, model::kAllLags));
    }

    const double z2 = zeta_ * zeta_;
    sample_y_.assign(G, 0);
    for (std::size_t i = 0; i < G; ++i) {
        const double p = cfg.pi_grid[i];
        Matrix3d h;
        h(0, 0) = 2.0 * c_ / (1.0 - p * p) + 1.0 / ((1.0 - p) * (1.0 - p));
        h(0, 1) = h(1, 0) = mean_product(sy_[i], sx_[i]) / z2;
        h(0, 2) = h(2, 0) = 1.0 / (zeta_ * (1.0 - p));
        h(1, 1) = mean_product(sx_[i], sx_[i]) / z2;
        h(1, 2) = h(2, 1) = mean(sx_[i]) / z2;
        h(2, 2) = 1.0 / z2;
        h *= 0.5;
        if (!degenerate_ && !positive_definite(h)) {
            // the closed forms hold under beta = 0 only; far from it they can
            // lose definiteness, so use their sample counterparts here
            h(0, 0) = 0.5 * mean_product(sy_[i], sy_[i]) / z2;
            h(0, 2) = h(2, 0) = 0.5 * mean(sy_[i]) / z2;
            sample_y_[i] = 1;
        }
        h_.push_back(h);
    }

    const std::size_t n = data.size();
    const std::size_t J = cfg.J_draws;
    // rows of A: observation t, columns (Sy, Sx, 1) per grid point, scaled by sqrt(c/2) / zeta
    MatrixXd A(n, 3 * G);
    const double scale = std::sqrt(std::max(c_, 0.0) / 2.0) / zeta_;
    for (std::size_t i = 0; i < G; ++i) {
        for (std::size_t t = 0; t < n; ++t) {
            A(t, 3 * i) = sy_[i][t] * scale;
            A(t, 3 * i + 1) = sx_[i][t] * scale;
            A(t, 3 * i + 2) = scale;
        }
    }
    MatrixXd Z(J, n);
    parallel_for(J, cfg.workers, [&](std::size_t j) {
        rng::NormalStream normal(rng::derive(cfg.seed, rng::Stream::Multipliers, j));
        for (std::size_t t = 0; t < n; ++t) Z(j, t) = normal();
    });
    g_ = (Z * A) / std::sqrt(static_cast<double>(n));
}

Matrix3d EstimatedLimit::H(std::size_t i) const { return h_.at(i); }

std::size_t EstimatedLimit::sample_fallbacks() const {
    return static_cast<std::size_t>(std::count(sample_y_.begin(), sample_y_.end(), 1));
}

Eigen::Matrix<double, 3, 2> EstimatedLimit::K(std::size_t i, double pi0) const {
    const auto lag = model::lagged_squares(*data_);
    return k_matrix(i, pi0, model::lag_sum(lag.y2, pi0, model::kAllLags), model::lag_sum(lag.x2, pi0, model::kAllLags));
}

Eigen::Matrix<double, 3, 2> EstimatedLimit::k_matrix(std::size_t i, double pi0, const std::vector<double>& sy0,
                                                     const std::vector<double>& sx0) const {
    const double p = cfg_.pi_grid.at(i);
    const double z = zeta_;
    Eigen::Matrix<double, 3, 2> k;
    if (sample_y_[i]) {
        k(0, 0) = mean_product(sy_[i], sy0) / (z * z);
        k(2, 0) = mean(sy0) / z;
    } else {
        k(0, 0) = 2.0 * c_ / (1.0 - p * pi0) + 1.0 / ((1.0 - p) * (1.0 - pi0));
        k(2, 0) = 1.0 / (1.0 - pi0);
    }
    k(0, 1) = mean_product(sy_[i], sx0) / (z * z);
    k(1, 0) = mean_product(sy0, sx_[i]) / (z * z);
    k(1, 1) = mean_product(sx_[i], sx0) / (z * z);
    k(2, 0) /= z;
    k(2, 1) = mean(sx0) / (z * z);
    return -0.5 * k;
}

Vector3d EstimatedLimit::G(std::size_t j, std::size_t i) const {
    const auto jr = static_cast<Eigen::Index>(j);
    const auto c = static_cast<Eigen::Index>(3 * i);
    return {g_(jr, c), g_(jr, c + 1), g_(jr, c + 2)};
}

std::vector<double> EstimatedLimit::draws_at(double pi0, double b1, bool dagger) const {
    const std::size_t J = cfg_.J_draws;
    if (degenerate_) return std::vector<double>(J, 0.0);
    const std::size_t ng = cfg_.pi_grid.size();
    std::vector<double> sy0, sx0;
    if (b1 > 0.0) {
        const auto lag = model::lagged_squares(*data_);
        sy0 = model::lag_sum(lag.y2, pi0, model::kAllLags);
        sx0 = model::lag_sum(lag.x2, pi0, model::kAllLags);
    }

    struct Terms {
        Matrix3d Hinv;
        Eigen::Matrix2d M;
        Vector3d shift;
    };
    std::vector<Terms> terms(ng);
    for (std::size_t i = 0; i < ng; ++i) {
        const Matrix3d& h = h_[i];
        Eigen::LDLT<Matrix3d> ldlt(h);
        if (!positive_definite(h)) {
            throw NumericError("estimated limit: H is singular at pi = " + std::to_string(cfg_.pi_grid[i]) +
                               "; inspect the data for degeneracy");
        }
        terms[i].Hinv = ldlt.solve(Matrix3d::Identity());
        terms[i].M = terms[i].Hinv.topLeftCorner<2, 2>().inverse();
        terms[i].shift =
            b1 > 0.0 ? Vector3d(-terms[i].Hinv * (k_matrix(i, pi0, sy0, sx0) * Vector2d(b1, 0.0))) : Vector3d::Zero();
    }

    std::vector<double> out(J);
    for (std::size_t j = 0; j < J; ++j) {
        double best_a = 0.0, best_b = 0.0;
        for (std::size_t i = 0; i < ng; ++i) {
            const auto& t = terms[i];
            const Vector3d z = -t.Hinv * G(j, i) + t.shift;
            const Vector2d zb = z.head<2>();
            const Vector2d la = cone::project_quadrant(t.M, zb);
            best_a = std::max(best_a, la.dot(t.M * la));
            if (!dagger) {
                const Vector2d lr = cone::project_first_axis(t.M, zb);
                best_b = std::max(best_b, lr.dot(t.M * lr));
            }
        }
        out[j] = dagger ? best_a / c_ : std::max(0.0, (best_a - best_b) / c_);
    }
    return out;
}

std::vector<double> EstimatedLimit::lr_dagger_draws() const { return draws_at(0.0, 0.0, true); }

std::vector<double> EstimatedLimit::lr_draws(double pi0, double b1) const {
    if (!(pi0 >= 0.0) || !(pi0 < 1.0)) throw DomainError("lr_draws: pi0 must lie in [0, 1)");
    if (!(b1 >= 0.0) || !std::isfinite(b1)) throw DomainError("lr_draws: b1 must be finite and >= 0");
    return draws_at(pi0, b1, false);
}

double cv_lr_dagger(const model::Dataset& data, const qmle::FitResult& dagger, const CritConfig& cfg) {
    const EstimatedLimit lim(data, dagger, cfg);
    return stats::empirical_quantile(lim.lr_dagger_draws(), 1.0 - cfg.alpha);
}

double cv_lr_finite_b(const model::Dataset& data, const qmle::FitResult& dagger, double pi0, double b1,
                      const CritConfig& cfg) {
    const EstimatedLimit lim(data, dagger, cfg);
    return stats::empirical_quantile(lim.lr_draws(pi0, b1), 1.0 - cfg.alpha);
}

InftyCv cv_lr_infty(const model::Dataset& data, const qmle::FitResult& restricted, double alpha) {
    if (restricted.restriction != qmle::Restriction::Beta2Zero) {
        throw DomainError("cv_lr_infty: needs the beta2 = 0 restricted fit");
    }
    const auto theta = restricted.grid_theta();
    const auto h = model::h_path(theta, data);
    const auto tau = model::tau_vector({1.0, 0.0}, theta.pi, data, model::kAllLags);
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    for (std::size_t t = 0; t < data.size(); ++t) {
        const Eigen::Vector4d v = tau.row(static_cast<Eigen::Index>(t)).transpose() / h[t];
        J.noalias() += v * v.transpose();
    }
    J /= 2.0 * static_cast<double>(data.size());
    J = 0.5 * (J + J.transpose()).eval();
    strong::check_conditioning(J, "cv_lr_infty: estimated J (inspect the data for degeneracy)");
    auto r = infty_cv_from_J(J, alpha);
    r.pi0_hat = theta.pi;
    return r;
}

InftyCv infty_cv_from_J(const Eigen::Matrix4d& J, double alpha) {
    InftyCv r;
    r.J = J;
    r.rho = strong::rho_of_J(J);
    r.chibar_branch = r.rho >= 0.0;
    r.value = r.chibar_branch ? strong::chibar_quantile(r.rho, alpha) : cv_maxz(alpha);
    return r;
}

PilfReport cv_pilf(const model::Dataset& data, const qmle::NestedFits& fits, const CritConfig& cfg) {
    cfg.validate();
    const std::size_t n = data.size();
    PilfReport rep;
    for (double p0 : cfg.pi0_grid)
        for (double b : cfg.b1_grid)
            if (in_pb(p0, b, n)) rep.cells.push_back({p0, b, 0.0});
    if (rep.cells.empty()) throw DomainError("cv_pilf: no (pi0, b1) grid point satisfies the PB constraint");

    const EstimatedLimit lim(data, fits.dagger, cfg);
    rep.c_hat = lim.c_hat();
    rep.sample_fallbacks = lim.sample_fallbacks();
    rep.cv = cv_maxz(cfg.alpha);
    parallel_for(rep.cells.size(), cfg.workers, [&](std::size_t k) {
        auto& cell = rep.cells[k];
        cell.quantile = stats::empirical_quantile(lim.lr_draws(cell.pi0, cell.b1), 1.0 - cfg.alpha);
    });
    rep.lr_dagger_quantile = stats::empirical_quantile(lim.lr_dagger_draws(), 1.0 - cfg.alpha);
    for (std::size_t k = 0; k < rep.cells.size(); ++k) {
        if (k == 0 || rep.cells[k].quantile > rep.max_pb) {
            rep.max_pb = rep.cells[k].quantile;
            rep.argmax_cell = k;
        }
    }
    rep.value = rep.max_pb;
    rep.branch = "pb";
    rep.beta1_positive = fits.full.theta_hat.beta1 > 0.0;
    if (rep.beta1_positive) {
        rep.infty = cv_lr_infty(data, fits.restricted, cfg.alpha);
        rep.has_infty = true;
        if (rep.infty.value > rep.value) {
            rep.value = rep.infty.value;
            rep.branch = "infty";
        }
        if (rep.cv > rep.value) {
            rep.value = rep.cv;
            rep.branch = "cv";
        }
    }
    return rep;
}

nlohmann::json to_json(const InftyCv& r) {
    nlohmann::json j;
    j["value"] = r.value;
    j["rho"] = r.rho;
    j["branch"] = r.chibar_branch ? "chibar" : "cv";
    j["pi0_hat"] = r.pi0_hat;
    return j;
}

nlohmann::json to_json(const PilfReport& r) {
    nlohmann::json j;
    j["value"] = r.value;
    j["branch"] = r.branch;
    j["cv"] = r.cv;
    j["c_hat"] = r.c_hat;
    j["sample_fallbacks"] = r.sample_fallbacks;
    j["lr_dagger_quantile"] = r.lr_dagger_quantile;
    j["beta1_positive"] = r.beta1_positive;
    j["max_pb"] = r.max_pb;
    j["argmax"] = {{"pi0", r.cells.at(r.argmax_cell).pi0}, {"b1", r.cells.at(r.argmax_cell).b1}};
    auto cells = nlohmann::json::array();
    for (const auto& c : r.cells) cells.push_back({{"pi0", c.pi0}, {"b1", c.b1}, {"quantile", c.quantile}});
    j["cells"] = cells;
    if (r.has_infty) j["infty"] = to_json(r.infty);
    return j;
}

}  // namespace garchx::critvals
