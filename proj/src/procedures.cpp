#include "garchx/procedures.hpp"

#include "garchx/io.hpp"

namespace garchx::procedures {

ProcedureConfig ProcedureConfig::desk() {
    ProcedureConfig c;
    c.estimation_grid = qmle::default_pi_grid(c.space, 0.1);
    c.crit = critvals::CritConfig::desk();
    return c;
}

namespace {

TsReport make_ts(double lr_dagger, double lr, double cv1, double cv2) {
    TsReport r;
    r.lr_dagger = lr_dagger;
    r.lr = lr;
    r.cv1 = cv1;
    r.cv2 = cv2;
    r.first_step = lr_dagger > cv1;
    r.reject = r.first_step && lr > cv2;
    return r;
}

SReport make_s(double lr, double cv) { return {lr > cv, lr, cv}; }

}  // namespace

TsReport test_ts(const model::Dataset& data, const qmle::NestedFits& fits, const ProcedureConfig& cfg) {
    const double cv1 = critvals::cv_lr_dagger(data, fits.dagger, cfg.crit);
    return make_ts(qmle::lr_dagger_stat(fits, data), qmle::lr_stat(fits, data), cv1,
                   critvals::cv_maxz(cfg.crit.alpha));
}

SReport test_s(const model::Dataset& data, const qmle::NestedFits& fits, const ProcedureConfig& cfg) {
    return make_s(qmle::lr_stat(fits, data), critvals::cv_maxz(cfg.crit.alpha));
}

LrlfReport test_lrlf(const model::Dataset& data, const qmle::NestedFits& fits, const ProcedureConfig& cfg) {
    LrlfReport r;
    r.lr = qmle::lr_stat(fits, data);
    r.pilf = critvals::cv_pilf(data, fits, cfg.crit);
    r.reject = r.lr > r.pilf.value;
    return r;
}

TsReport test_ts(const model::Dataset& data, const ProcedureConfig& cfg) {
    return test_ts(data, qmle::fit_nested(data, cfg.space, cfg.estimation_grid), cfg);
}

SReport test_s(const model::Dataset& data, const ProcedureConfig& cfg) {
    return test_s(data, qmle::fit_nested(data, cfg.space, cfg.estimation_grid), cfg);
}

LrlfReport test_lrlf(const model::Dataset& data, const ProcedureConfig& cfg) {
    return test_lrlf(data, qmle::fit_nested(data, cfg.space, cfg.estimation_grid), cfg);
}

AllReports run_all(const model::Dataset& data, const ProcedureConfig& cfg, const qmle::FitOptions& opts) {
    const auto fits = qmle::fit_nested(data, cfg.space, cfg.estimation_grid, opts);
    AllReports out;
    out.lrlf = test_lrlf(data, fits, cfg);
    const double cv = critvals::cv_maxz(cfg.crit.alpha);
    // the PI-LF run already holds the LR-dagger quantile from the same multiplier draws
    out.ts = make_ts(qmle::lr_dagger_stat(fits, data), out.lrlf.lr, out.lrlf.pilf.lr_dagger_quantile, cv);
    out.s = make_s(out.lrlf.lr, cv);
    return out;
}

nlohmann::json to_json(const TsReport& r) {
    return {{"reject", r.reject}, {"first_step", r.first_step}, {"lr_dagger", r.lr_dagger},
            {"lr", r.lr},         {"cv1", r.cv1},               {"cv2", r.cv2}};
}

nlohmann::json to_json(const SReport& r) { return {{"reject", r.reject}, {"lr", r.lr}, {"cv", r.cv}}; }

nlohmann::json to_json(const LrlfReport& r) {
    return {{"reject", r.reject}, {"lr", r.lr}, {"cv_pilf", critvals::to_json(r.pilf)}};
}

nlohmann::json to_json(const AllReports& r) {
    return {{"ts", to_json(r.ts)}, {"s", to_json(r.s)}, {"lrlf", to_json(r.lrlf)}};
}

}  // namespace garchx::procedures
