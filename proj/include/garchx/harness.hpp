#pragma once

#include "garchx/model.hpp"
#include "garchx/procedures.hpp"
#include "garchx/weak.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace garchx::harness {

inline constexpr const char* kVersion = "1.0.0";

struct ExperimentConfig {
    std::string name = "custom";
    model::TrueConfig dgp;
    std::size_t n = 500;
    std::size_t burn_in = 100;
    std::size_t reps = 500;
    procedures::ProcedureConfig proc = procedures::ProcedureConfig::desk();
    std::uint64_t master_seed = 1;
    unsigned workers = 1;

    void validate() const;
};

/// The eleven designs of the rejection-frequency table (zeta = 1), labelled "1".."11".
std::vector<ExperimentConfig> table_columns();
ExperimentConfig table_column(const std::string& label);

struct RepFailure {
    std::size_t rep = 0;
    std::string message;
};

/// Rejection counts over completed replications, ordered LR-dagger, TS, S, LR-LF.
struct ColumnResult {
    ExperimentConfig config;
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::size_t retried = 0;
    std::size_t rejections[4] = {0, 0, 0, 0};
    std::vector<RepFailure> failures;

    double frequency(std::size_t row) const;
    /// sqrt(p (1 - p) / completed), in the same units as frequency.
    double standard_error(std::size_t row) const;
};

inline constexpr const char* kRowNames[4] = {"lr_dagger", "ts", "s", "lrlf"};

/// Seed of replication `rep`; a pure function of the pair.
std::uint64_t rep_seed(std::uint64_t master_seed, std::size_t rep);

/// Runs the replications of one design in parallel over reps. A replication
/// whose fit fails is retried once from perturbed starts and skipped if it
/// fails again; the run aborts with NumericError when 1% or more are skipped.
ColumnResult run_column(const ExperimentConfig& cfg);
std::vector<ColumnResult> run_table(const std::vector<ExperimentConfig>& cfgs);

std::string table_csv_header();
/// One row per design; frequencies and standard errors in percent.
void write_table_csv(std::ostream& out, const std::vector<ColumnResult>& results);

struct BoundsConfig {
    double alpha = 0.05;
    double pi_max = 0.9;
    double grid_step = 0.05;
    std::size_t J = 10000;
    std::size_t N = 2000;
    std::size_t n_star = 100000;
    std::uint64_t kernel_seed = 5;
    std::uint64_t draw_seed = 17;
    unsigned workers = 1;
};

struct BoundsReport {
    weak::RpWeak at_b0;       ///< b1 = 0, varphi = 0.5, kappa = 0
    weak::RpWeak at_b25;      ///< b1 = 2.5, pi0 = 0.64, varphi = 0.5, kappa = 0
    double rho = 0.0;         ///< from J at beta1 = 0.3, pi0 = 0, varphi = 0, kappa = 0.99
    double rp_infty = 0.0;    ///< chi-bar rejection probability at that rho
    double bound_ts = 0.0;
    double bound_s = 0.0;
};

BoundsReport run_bounds(const BoundsConfig& cfg);

struct DensityConfig {
    double b1 = 0.0;
    double pi0 = 0.2;
    double varphi = 0.5;
    double kappa = 0.0;
    std::size_t n = 500;
    std::size_t draws = 10000;  ///< finite-sample replications and limit draws each
    double grid_step = 0.01;
    std::size_t N = 2000;
    std::size_t n_star = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

/// Paired draws of one localization: finite-sample estimates scaled as in the
/// limit (sqrt(n) beta-hat, sqrt(n) (zeta-hat - zeta0), pi-hat) and the
/// statistics, next to limit draws of the same quantities.
struct DensityDraws {
    Eigen::MatrixXd finite;      ///< draws x 6
    Eigen::MatrixXd asymptotic;  ///< draws x 6
    std::size_t failed = 0;      ///< finite replications skipped (rows left NaN)
};

inline constexpr const char* kDensityTargets[6] = {"pi_hat", "beta1_hat", "beta2_hat", "zeta_hat", "lr_dagger", "lr"};

DensityDraws export_densities(const DensityConfig& cfg);
/// Header `draw,<target>_finite,<target>_asymptotic,...`; raw draws, not binned.
void write_densities_csv(std::ostream& out, const DensityDraws& d);

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const ColumnResult& r);
nlohmann::json to_json(const BoundsConfig& cfg);
nlohmann::json to_json(const BoundsReport& r);
nlohmann::json to_json(const DensityConfig& cfg);

/// Run manifest: version, command, settings and seeds.
nlohmann::json manifest(const std::string& command, const nlohmann::json& settings);

}  // namespace garchx::harness
