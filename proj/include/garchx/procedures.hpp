#pragma once

#include "garchx/critvals.hpp"
#include "garchx/model.hpp"
#include "garchx/qmle.hpp"

#include <json.hpp>

#include <vector>

namespace garchx::procedures {

struct ProcedureConfig {
    model::ParamSpace space;
    std::vector<double> estimation_grid;  ///< pi grid of the QMLE profiles
    critvals::CritConfig crit;            ///< alpha, simulation grids and seeds

    /// Estimation grid step 0.1 and CritConfig::desk().
    static ProcedureConfig desk();
};

struct TsReport {
    bool reject = false;
    bool first_step = false;  ///< LR-dagger exceeds its simulated quantile
    double lr_dagger = 0.0;
    double lr = 0.0;
    double cv1 = 0.0;  ///< simulated LR-dagger quantile
    double cv2 = 0.0;  ///< cv_maxz(alpha)
};

struct SReport {
    bool reject = false;
    double lr = 0.0;
    double cv = 0.0;
};

struct LrlfReport {
    bool reject = false;
    double lr = 0.0;
    critvals::PilfReport pilf;
};

TsReport test_ts(const model::Dataset& data, const qmle::NestedFits& fits, const ProcedureConfig& cfg);
SReport test_s(const model::Dataset& data, const qmle::NestedFits& fits, const ProcedureConfig& cfg);
LrlfReport test_lrlf(const model::Dataset& data, const qmle::NestedFits& fits, const ProcedureConfig& cfg);

TsReport test_ts(const model::Dataset& data, const ProcedureConfig& cfg);
SReport test_s(const model::Dataset& data, const ProcedureConfig& cfg);
LrlfReport test_lrlf(const model::Dataset& data, const ProcedureConfig& cfg);

/// All three procedures from one set of fits and one set of multiplier draws.
struct AllReports {
    TsReport ts;
    SReport s;
    LrlfReport lrlf;
};
AllReports run_all(const model::Dataset& data, const ProcedureConfig& cfg, const qmle::FitOptions& opts = {});

nlohmann::json to_json(const TsReport& r);
nlohmann::json to_json(const SReport& r);
nlohmann::json to_json(const LrlfReport& r);
nlohmann::json to_json(const AllReports& r);

}  // namespace garchx::procedures
