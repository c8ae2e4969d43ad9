#include "garchx/weak.hpp"

#include "garchx/cone.hpp"
#include "garchx/errors.hpp"
#include "garchx/parallel.hpp"
#include "garchx/rng.hpp"
#include "garchx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace garchx::weak {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

constexpr std::size_t kBlockChunk = 1000;
constexpr std::size_t kDrawChunk = 256;

bool same_pi(double a, double b) { return std::abs(a - b) <= 1e-12; }

// Powers pi^i for i = 0..lags-1, one row per pi value (0^0 = 1).
MatrixXd power_table(const std::vector<double>& pis, std::size_t lags) {
    MatrixXd P(static_cast<Eigen::Index>(pis.size()), static_cast<Eigen::Index>(lags));
    for (std::size_t a = 0; a < pis.size(); ++a) {
        double w = 1.0;
        for (std::size_t i = 0; i < lags; ++i) {
            P(a, i) = w;
            w *= pis[a];
        }
    }
    return P;
}

// Lagged squares of one simulated block: column i holds the i-th lag
// (i = 0 is the most recent observation).
void fill_block(const model::TrueConfig& gamma0, std::size_t lags, std::size_t burn_in, rng::NormalStream& normal,
                MatrixXd& z2, MatrixXd& x2, Eigen::Index row) {
    const auto d = model::simulate_dgp(gamma0, lags, burn_in, normal);
    for (std::size_t i = 0; i < lags; ++i) {
        const std::size_t t = lags - 1 - i;
        z2(row, i) = d.z[t] * d.z[t];
        x2(row, i) = d.x[t] * d.x[t];
    }
}

// Truncated lag sums S_z, S_x of `count` blocks on the given pi values.
void block_sums(const model::TrueConfig& gamma0, std::size_t lags, std::size_t burn_in, std::uint64_t stream_seed,
                std::size_t count, const MatrixXd& powers, MatrixXd& sz, MatrixXd& sx) {
    rng::NormalStream normal(stream_seed);
    MatrixXd z2(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(lags));
    MatrixXd x2(z2.rows(), z2.cols());
    for (std::size_t k = 0; k < count; ++k) fill_block(gamma0, lags, burn_in, normal, z2, x2, static_cast<Eigen::Index>(k));
    sz.noalias() = z2 * powers.transpose();
    sx.noalias() = x2 * powers.transpose();
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("pi grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !(grid[i] < 1.0)) throw DomainError("pi grid must lie in [0, 1)");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("pi grid must be increasing");
    }
}

}  // namespace

void LocalizationPoint::validate() const {
    gamma0.validate();
    if (!(b1 >= 0.0) || !(b2 >= 0.0)) throw DomainError("localization: b must be nonnegative");
    if (!(p >= 0.0)) throw DomainError("localization: p must be nonnegative");
    if (!is_weak() && std::abs(omega0.norm() - 1.0) > 1e-12) {
        throw DomainError("localization: omega0 must be a unit vector when |b| is infinite");
    }
}

std::size_t KernelSet::node_of(double pi) const {
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        if (same_pi(nodes[a], pi)) return a;
    }
    throw DomainError("kernel set has no node at pi = " + std::to_string(pi));
}

Matrix3d KernelSet::omega_nodes(std::size_t a, std::size_t b) const {
    const double pa = nodes.at(a), pb = nodes.at(b);
    const double z = gamma0.theta.zeta;
    const double h = 0.5 * c0;
    Matrix3d W;
    W(0, 0) = h * (2.0 * c0 / (1.0 - pa * pb) + 1.0 / ((1.0 - pa) * (1.0 - pb)));
    W(0, 1) = h * m_zx(a, b) / z;
    W(0, 2) = h / (z * (1.0 - pa));
    W(1, 0) = h * m_zx(b, a) / z;
    W(1, 1) = h * m_xx(a, b) / (z * z);
    W(1, 2) = h * m_x(a) / (z * z);
    W(2, 0) = h / (z * (1.0 - pb));
    W(2, 1) = h * m_x(b) / (z * z);
    W(2, 2) = h / (z * z);
    return W;
}

Matrix3d KernelSet::omega(double pi1, double pi2) const { return omega_nodes(node_of(pi1), node_of(pi2)); }

Matrix3d KernelSet::H(std::size_t i) const {
    const std::size_t g = grid_node.at(i);
    return omega_nodes(g, g) / c0;
}

Eigen::Matrix<double, 3, 2> KernelSet::K(std::size_t i, double pi0) const {
    return -omega_nodes(grid_node.at(i), node_of(pi0)).leftCols<2>() / c0;
}

KernelSet build_kernels(const model::TrueConfig& gamma0, const std::vector<double>& pi_grid, const KernelConfig& cfg,
                        const std::vector<double>& extra_pi0) {
    gamma0.validate();
    if (gamma0.theta.beta1 != 0.0 || gamma0.theta.beta2 != 0.0) {
        throw DomainError("build_kernels: the baseline must have beta = 0");
    }
    check_grid(pi_grid);
    if (cfg.n_star == 0 || cfg.lags == 0) throw DomainError("build_kernels: need n_star >= 1 and lags >= 1");

    KernelSet ks;
    ks.gamma0 = gamma0;
    ks.meta = cfg;
    ks.pi_grid = pi_grid;
    ks.nodes = pi_grid;
    for (double p : extra_pi0) {
        if (!(p >= 0.0) || !(p < 1.0)) throw DomainError("build_kernels: pi0 must lie in [0, 1)");
        if (std::none_of(ks.nodes.begin(), ks.nodes.end(), [&](double q) { return same_pi(p, q); })) {
            ks.nodes.push_back(p);
        }
    }
    std::sort(ks.nodes.begin(), ks.nodes.end());
    for (double p : pi_grid) ks.grid_node.push_back(ks.node_of(p));
    if (cfg.n_star < 1000) {
        ks.diagnostics.push_back("warning: n_star = " + std::to_string(cfg.n_star) +
                                 " blocks gives noisy kernel moments (use at least 1000)");
    }

    const auto m = static_cast<Eigen::Index>(ks.nodes.size());
    const MatrixXd powers = power_table(ks.nodes, cfg.lags);
    const std::size_t chunks = (cfg.n_star + kBlockChunk - 1) / kBlockChunk;
    std::vector<MatrixXd> zx(chunks), xx(chunks);
    std::vector<VectorXd> sxs(chunks);
    parallel_for(chunks, cfg.workers, [&](std::size_t c) {
        const std::size_t count = std::min(kBlockChunk, cfg.n_star - c * kBlockChunk);
        MatrixXd sz, sx;
        block_sums(gamma0, cfg.lags, cfg.burn_in, rng::derive(cfg.seed, rng::Stream::Kernel, c), count, powers, sz, sx);
        zx[c] = sz.transpose() * sx;
        xx[c] = sx.transpose() * sx;
        sxs[c] = sx.colwise().sum().transpose();
    });
    ks.m_zx = MatrixXd::Zero(m, m);
    ks.m_xx = MatrixXd::Zero(m, m);
    ks.m_x = VectorXd::Zero(m);
    for (std::size_t c = 0; c < chunks; ++c) {
        ks.m_zx += zx[c];
        ks.m_xx += xx[c];
        ks.m_x += sxs[c];
    }
    const double inv = 1.0 / static_cast<double>(cfg.n_star);
    ks.m_zx *= inv;
    ks.m_xx = 0.5 * inv * (ks.m_xx + ks.m_xx.transpose()).eval();
    ks.m_x *= inv;
    return ks;
}

GPDraw GPDraws::draw(std::size_t j) const {
    GPDraw d;
    d.index = j;
    const auto Jr = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < gz.cols(); ++i) d.g.emplace_back(gz(Jr, i), gx(Jr, i), gzeta(Jr));
    return d;
}

GPDraws draw_gp(const KernelSet& ks, std::size_t J, std::size_t N, std::uint64_t seed, unsigned workers) {
    if (J == 0 || N == 0) throw DomainError("draw_gp: need J >= 1 and N >= 1");
    const auto G = static_cast<Eigen::Index>(ks.pi_grid.size());
    const MatrixXd powers = power_table(ks.pi_grid, ks.meta.lags);

    // regressor blocks, simulated once and shared by all draws
    const std::size_t chunks = (N + kBlockChunk - 1) / kBlockChunk;
    MatrixXd sz(static_cast<Eigen::Index>(N), G), sx(static_cast<Eigen::Index>(N), G);
    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t count = std::min(kBlockChunk, N - c * kBlockChunk);
        MatrixXd a, b;
        block_sums(ks.gamma0, ks.meta.lags, ks.meta.burn_in, rng::derive(seed, rng::Stream::Blocks, c), count, powers,
                   a, b);
        const auto r0 = static_cast<Eigen::Index>(c * kBlockChunk);
        sz.middleRows(r0, a.rows()) = a;
        sx.middleRows(r0, b.rows()) = b;
    });

    const double zeta = ks.gamma0.theta.zeta;
    const double scale = std::sqrt(ks.c0 / 2.0) / std::sqrt(static_cast<double>(N));
    GPDraws out;
    out.gz.resize(static_cast<Eigen::Index>(J), G);
    out.gx.resize(static_cast<Eigen::Index>(J), G);
    out.gzeta.resize(static_cast<Eigen::Index>(J));
    const std::size_t dchunks = (J + kDrawChunk - 1) / kDrawChunk;
    parallel_for(dchunks, workers, [&](std::size_t c) {
        const std::size_t j0 = c * kDrawChunk;
        const std::size_t count = std::min(kDrawChunk, J - j0);
        MatrixXd mult(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(N));
        for (std::size_t r = 0; r < count; ++r) {
            rng::NormalStream normal(rng::derive(seed, rng::Stream::Multipliers, j0 + r));
            for (std::size_t k = 0; k < N; ++k) mult(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = normal();
        }
        const auto r0 = static_cast<Eigen::Index>(j0);
        const auto rc = static_cast<Eigen::Index>(count);
        out.gz.middleRows(r0, rc).noalias() = scale * (mult * sz);
        out.gx.middleRows(r0, rc).noalias() = (scale / zeta) * (mult * sx);
        out.gzeta.segment(r0, rc) = (scale / zeta) * mult.rowwise().sum();
    });
    return out;
}

std::vector<Vector3d> z_process(const GPDraw& draw, const KernelSet& ks, double pi0, const Vector2d& b) {
    if (!b.allFinite()) throw DomainError("z_process: b must be finite");
    if (draw.g.size() != ks.pi_grid.size()) throw DomainError("z_process: draw does not match the kernel grid");
    const bool shift = b.squaredNorm() > 0.0;
    std::vector<Vector3d> z(ks.pi_grid.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const Matrix3d H = ks.H(i);
        Eigen::LDLT<Matrix3d> ldlt(H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
            throw NumericError("z_process: H is singular at pi = " + std::to_string(ks.pi_grid[i]));
        }
        Vector3d rhs = draw.g[i];
        if (shift) rhs += ks.K(i, pi0) * b;
        z[i] = -ldlt.solve(rhs);
    }
    return z;
}

std::vector<double> eta_criterion(const KernelSet& ks, double pi0, const Vector2d& omega0) {
    std::vector<double> eta(ks.pi_grid.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const Vector3d k = ks.K(i, pi0) * omega0;
        eta[i] = -0.5 * k.dot(ks.H(i).ldlt().solve(k));
    }
    return eta;
}

namespace {

// Per-grid quantities of the limit criterion that do not depend on the draw.
struct GridTerms {
    Matrix3d H;
    Matrix3d Hinv;
    Eigen::Matrix2d M;  // (S H^{-1} S')^{-1}: metric of the beta block once zeta is profiled out
    Vector3d shift;     // -H^{-1} K b
};

std::vector<GridTerms> grid_terms(const KernelSet& ks, double pi0, const Vector2d& b) {
    std::vector<GridTerms> out(ks.pi_grid.size());
    const bool shift = b.squaredNorm() > 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& t = out[i];
        t.H = ks.H(i);
        Eigen::LDLT<Matrix3d> ldlt(t.H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
            throw NumericError("limit draws: H is singular at pi = " + std::to_string(ks.pi_grid[i]));
        }
        t.Hinv = ldlt.solve(Matrix3d::Identity());
        t.M = t.Hinv.topLeftCorner<2, 2>().inverse();
        t.shift = shift ? Vector3d(-t.Hinv * (ks.K(i, pi0) * b)) : Vector3d::Zero();
    }
    return out;
}

}  // namespace

std::vector<LimitDraw> limit_draws(const LocalizationPoint& loc, const KernelSet& ks, const GPDraws& gp,
                                   const LimitOptions& opts) {
    loc.validate();
    if (!loc.is_weak()) throw DomainError("limit_draws: localization must have finite b");
    if (static_cast<std::size_t>(gp.gz.cols()) != ks.pi_grid.size()) {
        throw DomainError("limit_draws: draws do not match the kernel grid");
    }
    const Vector2d b(loc.b1, loc.b2);
    const auto terms = grid_terms(ks, loc.gamma0.theta.pi, b);
    const std::size_t G = terms.size();
    const std::size_t J = gp.size();

    using cone::Bound;
    const cone::Cone full{Bound::half_line(0.0), Bound::half_line(0.0), Bound::free()};
    const cone::Cone restricted{Bound::half_line(0.0), Bound::fixed(0.0), Bound::free()};

    std::vector<LimitDraw> out(J);
    parallel_for(J, opts.workers, [&](std::size_t j) {
        const auto jr = static_cast<Eigen::Index>(j);
        double best_a = -1.0, min_a = kInf, best_b = -1.0;
        std::size_t arg = 0;
        Vector3d lam_at = Vector3d::Zero();
        for (std::size_t i = 0; i < G; ++i) {
            const auto& t = terms[i];
            const auto ir = static_cast<Eigen::Index>(i);
            const Vector3d g(gp.gz(jr, ir), gp.gx(jr, ir), gp.gzeta(jr));
            const Vector3d z = -t.Hinv * g + t.shift;
            Vector2d lb, lr;
            Vector3d lam;
            if (opts.general_solver) {
                const MatrixXd H = t.H;
                const VectorXd zz = z;
                lam = cone::solve_cone_qp(H, zz, full).minimizer;
                lb = lam.head<2>();
                lr = cone::solve_cone_qp(H, zz, restricted).minimizer.head<2>();
            } else {
                const Vector2d zb = z.head<2>();
                lb = cone::project_quadrant(t.M, zb);
                lr = cone::project_first_axis(t.M, zb);
                lam.head<2>() = lb;
                lam(2) = z(2) - (t.H(2, 0) * (lb(0) - z(0)) + t.H(2, 1) * (lb(1) - z(1))) / t.H(2, 2);
            }
            const double a = lb.dot(t.M * lb);
            const double r = lr.dot(t.M * lr);
            if (a > best_a) {
                best_a = a;
                arg = i;
                lam_at = lam;
            }
            min_a = std::min(min_a, a);
            best_b = std::max(best_b, r);
        }
        auto& rec = out[j];
        rec.lambda_hat = lam_at;
        rec.pi_hat = (best_a - min_a) < 1e-12 ? 1.0 : ks.pi_grid[arg];
        rec.lr_dagger = best_a / ks.c0;
        rec.lr = std::max(0.0, (best_a - best_b) / ks.c0);
    });
    return out;
}

std::vector<LimitDraw> limit_draws(const LocalizationPoint& loc, const KernelSet& ks, std::size_t J, std::size_t N,
                                   std::uint64_t seed, const LimitOptions& opts) {
    const auto gp = draw_gp(ks, J, N, seed, opts.workers);
    return limit_draws(loc, ks, gp, opts);
}

RpWeak rp_weak(const LocalizationPoint& loc, const KernelSet& ks, std::size_t J, std::size_t N, std::uint64_t seed,
               double alpha, const LimitOptions& opts) {
    const double cv = stats::maxz_quantile(alpha);
    LocalizationPoint null_loc = loc;
    null_loc.b1 = 0.0;
    null_loc.b2 = 0.0;
    const auto null_draws = limit_draws(null_loc, ks, J, N, rng::derive(seed, rng::Stream::Critical, 0), opts);
    std::vector<double> lrd(J);
    for (std::size_t j = 0; j < J; ++j) lrd[j] = null_draws[j].lr_dagger;
    RpWeak rp;
    rp.lr_dagger_quantile = stats::empirical_quantile(lrd, 1.0 - alpha);

    const auto draws = limit_draws(loc, ks, J, N, seed, opts);
    std::size_t ts = 0, s = 0;
    for (const auto& d : draws) {
        const bool rs = d.lr > cv;
        s += rs;
        ts += rs && d.lr_dagger > rp.lr_dagger_quantile;
    }
    rp.rp_ts = static_cast<double>(ts) / static_cast<double>(J);
    rp.rp_s = static_cast<double>(s) / static_cast<double>(J);
    return rp;
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

MatrixXd matrix_from(const nlohmann::json& j) {
    const auto r = static_cast<Eigen::Index>(j.size());
    const auto c = r ? static_cast<Eigen::Index>(j[0].size()) : 0;
    MatrixXd m(r, c);
    for (Eigen::Index a = 0; a < r; ++a)
        for (Eigen::Index b = 0; b < c; ++b) m(a, b) = j[a][b].get<double>();
    return m;
}

}  // namespace

nlohmann::json to_json(const KernelSet& k) {
    nlohmann::json j;
    j["gamma0"] = {{"beta1", k.gamma0.theta.beta1}, {"beta2", k.gamma0.theta.beta2}, {"zeta", k.gamma0.theta.zeta},
                   {"pi", k.gamma0.theta.pi},       {"varphi", k.gamma0.varphi},     {"kappa", k.gamma0.kappa}};
    j["c0"] = k.c0;
    j["mc"] = {{"n_star", k.meta.n_star}, {"lags", k.meta.lags}, {"burn_in", k.meta.burn_in}, {"seed", k.meta.seed}};
    j["pi_grid"] = k.pi_grid;
    j["nodes"] = k.nodes;
    j["m_zx"] = matrix_json(k.m_zx);
    j["m_xx"] = matrix_json(k.m_xx);
    j["m_x"] = std::vector<double>(k.m_x.data(), k.m_x.data() + k.m_x.size());
    j["diagnostics"] = k.diagnostics;
    return j;
}

KernelSet kernels_from_json(const nlohmann::json& j) {
    KernelSet k;
    const auto& g = j.at("gamma0");
    k.gamma0.theta = {g.at("beta1").get<double>(), g.at("beta2").get<double>(), g.at("zeta").get<double>(),
                      g.at("pi").get<double>()};
    k.gamma0.varphi = g.at("varphi").get<double>();
    k.gamma0.kappa = g.at("kappa").get<double>();
    k.c0 = j.at("c0").get<double>();
    const auto& mc = j.at("mc");
    k.meta.n_star = mc.at("n_star").get<std::size_t>();
    k.meta.lags = mc.at("lags").get<std::size_t>();
    k.meta.burn_in = mc.at("burn_in").get<std::size_t>();
    k.meta.seed = mc.at("seed").get<std::uint64_t>();
    k.pi_grid = j.at("pi_grid").get<std::vector<double>>();
    k.nodes = j.at("nodes").get<std::vector<double>>();
    for (double p : k.pi_grid) k.grid_node.push_back(k.node_of(p));
    k.m_zx = matrix_from(j.at("m_zx"));
    k.m_xx = matrix_from(j.at("m_xx"));
    const auto mx = j.at("m_x").get<std::vector<double>>();
    k.m_x = Eigen::Map<const VectorXd>(mx.data(), static_cast<Eigen::Index>(mx.size()));
    k.diagnostics = j.value("diagnostics", std::vector<std::string>{});
    const auto m = static_cast<Eigen::Index>(k.nodes.size());
    if (k.m_zx.rows() != m || k.m_xx.rows() != m || k.m_x.size() != m) {
        throw DomainError("kernel cache: table sizes do not match the nodes");
    }
    return k;
}

void write_draws_csv(std::ostream& out, const std::vector<LimitDraw>& draws) {
    out << "draw,pi_hat,lr_dagger,lr,lambda_beta1,lambda_beta2,lambda_zeta\n";
    out << std::setprecision(17);
    for (std::size_t j = 0; j < draws.size(); ++j) {
        const auto& d = draws[j];
        out << j << ',' << d.pi_hat << ',' << d.lr_dagger << ',' << d.lr << ',' << d.lambda_hat(0) << ','
            << d.lambda_hat(1) << ',' << d.lambda_hat(2) << '\n';
    }
}

}  // namespace garchx::weak
