#include "garchx/harness.hpp"

#include "garchx/errors.hpp"
#include "garchx/io.hpp"
#include "garchx/parallel.hpp"
#include "garchx/rng.hpp"
#include "garchx/strong.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace garchx::harness {

namespace {

model::TrueConfig design(double pi, double varphi, double kappa, double beta1, double beta2) {
    model::TrueConfig g;
    g.theta = {beta1, beta2, 1.0, pi};
    g.varphi = varphi;
    g.kappa = kappa;
    return g;
}

nlohmann::json dgp_json(const model::TrueConfig& g) {
    return {{"beta1", g.theta.beta1}, {"beta2", g.theta.beta2}, {"zeta", g.theta.zeta},
            {"pi", g.theta.pi},       {"varphi", g.varphi},      {"kappa", g.kappa}};
}

// per-rep outcome: 0..3 rejection flags, or failure
struct RepOutcome {
    bool ok = false;
    bool retried = false;
    bool reject[4] = {false, false, false, false};
    std::string message;
};

}  // namespace

void ExperimentConfig::validate() const {
    dgp.validate();
    if (n < 2) throw DomainError("experiment: n must be >= 2");
    if (reps < 1) throw DomainError("experiment: reps must be >= 1");
    proc.space.validate();
    proc.crit.validate();
}

std::vector<ExperimentConfig> table_columns() {
    const double b2s[3] = {0.0, 0.05, 0.1};
    const double b1s[3] = {0.0, 0.05, 0.1};
    std::vector<ExperimentConfig> out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            ExperimentConfig c;
            c.name = std::to_string(3 * i + j + 1);
            c.dgp = design(0.2, 0.5, 0.0, b1s[i], b2s[j]);
            out.push_back(c);
        }
    }
    ExperimentConfig c10;
    c10.name = "10";
    c10.dgp = design(0.64, 0.5, 0.0, 0.11, 0.0);
    out.push_back(c10);
    ExperimentConfig c11;
    c11.name = "11";
    c11.dgp = design(0.0, 0.0, 0.99, 0.3, 0.0);
    out.push_back(c11);
    return out;
}

ExperimentConfig table_column(const std::string& label) {
    for (const auto& c : table_columns())
        if (c.name == label) return c;
    throw DomainError("unknown table column '" + label + "' (expected 1..11)");
}

double ColumnResult::frequency(std::size_t row) const {
    if (completed == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(rejections[row]) / static_cast<double>(completed);
}

double ColumnResult::standard_error(std::size_t row) const {
    const double p = frequency(row);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(completed));
}

std::uint64_t rep_seed(std::uint64_t master_seed, std::size_t rep) {
    return rng::derive(master_seed, rng::Stream::Data, rep);
}

ColumnResult run_column(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RepOutcome> outcomes(cfg.reps);
    parallel_for(cfg.reps, cfg.workers, [&](std::size_t r) {
        const auto data = model::simulate_dgp(cfg.dgp, cfg.n, cfg.burn_in, rep_seed(cfg.master_seed, r));
        auto proc = cfg.proc;
        proc.crit.seed = rng::derive(cfg.master_seed, rng::Stream::Critical, r);
        proc.crit.workers = 1;
        auto& out = outcomes[r];
        auto attempt = [&](const qmle::FitOptions& opts) {
            const auto all = procedures::run_all(data, proc, opts);
            out.reject[0] = all.ts.first_step;
            out.reject[1] = all.ts.reject;
            out.reject[2] = all.s.reject;
            out.reject[3] = all.lrlf.reject;
            out.ok = true;
        };
        try {
            attempt({});
            return;
        } catch (const ConvergenceError& e) {
            out.message = e.what();
        } catch (const NumericError& e) {
            out.message = e.what();
        }
        out.retried = true;
        qmle::FitOptions perturbed;
        perturbed.perturb_seed = rng::derive(cfg.master_seed, rng::Stream::Retry, r);
        try {
            attempt(perturbed);
        } catch (const ConvergenceError& e) {
            out.message += std::string("; retry: ") + e.what();
        } catch (const NumericError& e) {
            out.message += std::string("; retry: ") + e.what();
        }
    });

    ColumnResult res;
    res.config = cfg;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        const auto& o = outcomes[r];
        res.retried += o.retried;
        if (!o.ok) {
            ++res.failed;
            res.failures.push_back({r, o.message});
            continue;
        }
        ++res.completed;
        for (int k = 0; k < 4; ++k) res.rejections[k] += o.reject[k];
    }
    if (100 * res.failed >= cfg.reps) {
        std::ostringstream msg;
        msg << "column " << cfg.name << ": " << res.failed << " of " << cfg.reps
            << " replications failed (limit is below 1%); first failure at rep " << res.failures.front().rep << ": "
            << res.failures.front().message;
        throw NumericError(msg.str());
    }
    return res;
}

std::vector<ColumnResult> run_table(const std::vector<ExperimentConfig>& cfgs) {
    std::vector<ColumnResult> out;
    out.reserve(cfgs.size());
    for (const auto& c : cfgs) out.push_back(run_column(c));
    return out;
}

std::string table_csv_header() {
    std::string h = "column,pi,varphi,kappa,beta1,beta2,n,reps,completed,failed";
    for (const char* r : kRowNames) h += std::string(",") + r + "," + r + "_se";
    return h;
}

void write_table_csv(std::ostream& out, const std::vector<ColumnResult>& results) {
    out << table_csv_header() << '\n';
    out.precision(10);
    for (const auto& r : results) {
        const auto& g = r.config.dgp;
        out << r.config.name << ',' << g.theta.pi << ',' << g.varphi << ',' << g.kappa << ',' << g.theta.beta1 << ','
            << g.theta.beta2 << ',' << r.config.n << ',' << r.config.reps << ',' << r.completed << ',' << r.failed;
        for (std::size_t k = 0; k < 4; ++k) out << ',' << 100.0 * r.frequency(k) << ',' << 100.0 * r.standard_error(k);
        out << '\n';
    }
}

BoundsReport run_bounds(const BoundsConfig& cfg) {
    const auto grid = io::linear_grid(0.0, cfg.grid_step, cfg.pi_max);
    const auto g = design(0.64, 0.5, 0.0, 0.0, 0.0);
    weak::KernelConfig kc;
    kc.n_star = cfg.n_star;
    kc.seed = cfg.kernel_seed;
    kc.workers = cfg.workers;
    const auto ks = weak::build_kernels(g, grid, kc, {0.64});
    weak::LimitOptions opts;
    opts.workers = cfg.workers;

    BoundsReport rep;
    weak::LocalizationPoint loc;
    loc.gamma0 = g;
    loc.b1 = 0.0;
    rep.at_b0 = weak::rp_weak(loc, ks, cfg.J, cfg.N, cfg.draw_seed, cfg.alpha, opts);
    loc.b1 = 2.5;
    rep.at_b25 = weak::rp_weak(loc, ks, cfg.J, cfg.N, cfg.draw_seed, cfg.alpha, opts);

    strong::JConfig jc;
    jc.n_star = cfg.n_star;
    jc.seed = cfg.kernel_seed;
    jc.workers = cfg.workers;
    rep.rho = strong::rho_of_J(strong::build_J(design(0.0, 0.0, 0.99, 0.3, 0.0), {1.0, 0.0}, jc).J);
    // a negative rho leaves the strong-identification probability at alpha
    rep.rp_infty = rep.rho >= 0.0 ? strong::chibar_rp(rep.rho, cfg.alpha) : cfg.alpha;

    rep.bound_ts = std::max({rep.at_b0.rp_ts, rep.at_b25.rp_ts, rep.rp_infty});
    rep.bound_s = std::max({rep.at_b0.rp_s, rep.at_b25.rp_s, rep.rp_infty});
    return rep;
}

DensityDraws export_densities(const DensityConfig& cfg) {
    if (cfg.draws < 1) throw DomainError("densities: draws must be >= 1");
    if (!(cfg.b1 >= 0.0) || !std::isfinite(cfg.b1)) throw DomainError("densities: b1 must be finite and >= 0");
    const double rn = std::sqrt(static_cast<double>(cfg.n));
    const auto truth = design(cfg.pi0, cfg.varphi, cfg.kappa, cfg.b1 / rn, 0.0);
    const model::ParamSpace space;
    const auto grid = io::linear_grid(0.0, cfg.grid_step, space.pi_max);

    DensityDraws out;
    out.finite = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(cfg.draws), 6,
                                           std::numeric_limits<double>::quiet_NaN());
    std::vector<char> failed(cfg.draws, 0);
    parallel_for(cfg.draws, cfg.workers, [&](std::size_t r) {
        const auto d = model::simulate_dgp(truth, cfg.n, 100, rep_seed(cfg.seed, r));
        qmle::NestedFits f;
        try {
            f = qmle::fit_nested(d, space, grid);
        } catch (const ConvergenceError&) {
            failed[r] = 1;
            return;
        }
        const auto row = static_cast<Eigen::Index>(r);
        const auto& th = f.full.theta_hat;
        out.finite(row, 0) = th.pi;
        out.finite(row, 1) = rn * th.beta1;
        out.finite(row, 2) = rn * th.beta2;
        out.finite(row, 3) = rn * (th.zeta - truth.theta.zeta);
        out.finite(row, 4) = qmle::lr_dagger_stat(f, d);
        out.finite(row, 5) = qmle::lr_stat(f, d);
    });
    for (char c : failed) out.failed += c;

    weak::KernelConfig kc;
    kc.n_star = cfg.n_star;
    kc.seed = rng::derive(cfg.seed, rng::Stream::Kernel, 0);
    kc.workers = cfg.workers;
    auto base = truth;
    base.theta.beta1 = 0.0;
    const auto ks = weak::build_kernels(base, grid, kc, {cfg.pi0});
    weak::LocalizationPoint loc;
    loc.gamma0 = base;
    loc.b1 = cfg.b1;
    weak::LimitOptions opts;
    opts.workers = cfg.workers;
    const auto lim = weak::limit_draws(loc, ks, cfg.draws, cfg.N, rng::derive(cfg.seed, rng::Stream::Gaussian, 0), opts);
    out.asymptotic.resize(static_cast<Eigen::Index>(cfg.draws), 6);
    for (std::size_t j = 0; j < cfg.draws; ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        out.asymptotic(row, 0) = lim[j].pi_hat;
        out.asymptotic(row, 1) = lim[j].lambda_hat(0);
        out.asymptotic(row, 2) = lim[j].lambda_hat(1);
        out.asymptotic(row, 3) = lim[j].lambda_hat(2);
        out.asymptotic(row, 4) = lim[j].lr_dagger;
        out.asymptotic(row, 5) = lim[j].lr;
    }
    return out;
}

void write_densities_csv(std::ostream& out, const DensityDraws& d) {
    out << "draw";
    for (const char* t : kDensityTargets) out << ',' << t << "_finite," << t << "_asymptotic";
    out << '\n';
    out.precision(17);
    for (Eigen::Index r = 0; r < d.finite.rows(); ++r) {
        out << r;
        for (Eigen::Index k = 0; k < 6; ++k) {
            out << ',';
            if (std::isfinite(d.finite(r, k))) out << d.finite(r, k);
            out << ',' << d.asymptotic(r, k);
        }
        out << '\n';
    }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    const auto& c = cfg.proc.crit;
    return {{"name", cfg.name},
            {"dgp", dgp_json(cfg.dgp)},
            {"n", cfg.n},
            {"burn_in", cfg.burn_in},
            {"reps", cfg.reps},
            {"master_seed", cfg.master_seed},
            {"workers", cfg.workers},
            {"estimation_grid", cfg.proc.estimation_grid},
            {"alpha", c.alpha},
            {"J_draws", c.J_draws},
            {"pi_grid", c.pi_grid},
            {"pi0_grid", c.pi0_grid},
            {"b1_grid", c.b1_grid}};
}

nlohmann::json to_json(const ColumnResult& r) {
    nlohmann::json j;
    j["config"] = to_json(r.config);
    j["completed"] = r.completed;
    j["failed"] = r.failed;
    j["retried"] = r.retried;
    for (std::size_t k = 0; k < 4; ++k) {
        j["rejections"][kRowNames[k]] = r.rejections[k];
        j["frequency"][kRowNames[k]] = r.frequency(k);
    }
    auto f = nlohmann::json::array();
    for (const auto& x : r.failures) f.push_back({{"rep", x.rep}, {"message", x.message}});
    j["failures"] = f;
    return j;
}

nlohmann::json to_json(const BoundsConfig& c) {
    return {{"alpha", c.alpha}, {"pi_max", c.pi_max},           {"grid_step", c.grid_step},
            {"J", c.J},         {"N", c.N},                     {"n_star", c.n_star},
            {"kernel_seed", c.kernel_seed}, {"draw_seed", c.draw_seed}, {"workers", c.workers}};
}

nlohmann::json to_json(const BoundsReport& r) {
    auto rp = [](const weak::RpWeak& w) {
        return nlohmann::json{{"rp_ts", w.rp_ts}, {"rp_s", w.rp_s}, {"lr_dagger_quantile", w.lr_dagger_quantile}};
    };
    return {{"weak_b1_0", rp(r.at_b0)}, {"weak_b1_2.5_pi0_0.64", rp(r.at_b25)},
            {"rho", r.rho},             {"rp_infty", r.rp_infty},
            {"bound_ts", r.bound_ts},   {"bound_s", r.bound_s}};
}

nlohmann::json to_json(const DensityConfig& c) {
    return {{"b1", c.b1}, {"pi0", c.pi0}, {"varphi", c.varphi},       {"kappa", c.kappa},
            {"n", c.n},   {"draws", c.draws}, {"grid_step", c.grid_step}, {"N", c.N},
            {"n_star", c.n_star}, {"seed", c.seed}, {"workers", c.workers}};
}

nlohmann::json manifest(const std::string& command, const nlohmann::json& settings) {
    return {{"program", "garchx"}, {"version", kVersion}, {"command", command}, {"settings", settings}};
}

}  // namespace garchx::harness
