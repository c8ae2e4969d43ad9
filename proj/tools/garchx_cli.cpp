// Command line driver: simulate, fit, test, table, bounds, densities.
#include "garchx/critvals.hpp"
#include "garchx/errors.hpp"
#include "garchx/harness.hpp"
#include "garchx/io.hpp"
#include "garchx/procedures.hpp"
#include "garchx/qmle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace garchx;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<double> alpha;
    std::string out = ".";
};

io::KeyValues load(const Common& c) { return c.config.empty() ? io::KeyValues{} : io::read_key_values_file(c.config); }

std::uint64_t seed_of(const Common& c, const io::KeyValues& kv, const std::string& key = "seed") {
    return c.seed ? *c.seed : static_cast<std::uint64_t>(io::get_int(kv, key, 1));
}

unsigned workers_of(const Common& c, const io::KeyValues& kv) {
    return c.workers ? *c.workers : static_cast<unsigned>(io::get_int(kv, "workers", 1));
}

model::TrueConfig dgp_of(const io::KeyValues& kv, model::TrueConfig g = {}) {
    g.theta.beta1 = io::get_double(kv, "dgp.beta1", g.theta.beta1);
    g.theta.beta2 = io::get_double(kv, "dgp.beta2", g.theta.beta2);
    g.theta.zeta = io::get_double(kv, "dgp.zeta", g.theta.zeta);
    g.theta.pi = io::get_double(kv, "dgp.pi", g.theta.pi);
    g.varphi = io::get_double(kv, "dgp.varphi", g.varphi);
    g.kappa = io::get_double(kv, "dgp.kappa", g.kappa);
    g.validate();
    return g;
}

procedures::ProcedureConfig procedure_of(const Common& c, const io::KeyValues& kv, bool full_scale) {
    auto p = procedures::ProcedureConfig::desk();
    if (full_scale) {
        p.estimation_grid = qmle::default_pi_grid(p.space, 0.01);
        p.crit.J_draws = 10000;
    }
    const double step = io::get_double(kv, "estimation.grid_step", 0.0);
    if (step > 0.0) p.estimation_grid = qmle::default_pi_grid(p.space, step);
    p.estimation_grid = io::get_doubles(kv, "estimation.grid", p.estimation_grid);
    p.crit.J_draws = static_cast<std::size_t>(io::get_int(kv, "crit.J_draws", static_cast<long long>(p.crit.J_draws)));
    p.crit.pi_grid = io::get_doubles(kv, "crit.pi_grid", p.crit.pi_grid);
    p.crit.pi0_grid = io::get_doubles(kv, "crit.pi0_grid", p.crit.pi0_grid);
    p.crit.b1_grid = io::get_doubles(kv, "crit.b1_grid", p.crit.b1_grid);
    p.crit.alpha = c.alpha ? *c.alpha : io::get_double(kv, "alpha", p.crit.alpha);
    p.crit.seed = seed_of(c, kv, "crit.seed");
    p.crit.workers = workers_of(c, kv);
    return p;
}

std::ofstream open_out(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    const auto path = fs::path(c.out) / name;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

void write_json(const Common& c, const std::string& name, const nlohmann::json& j) {
    auto f = open_out(c, name);
    f << j.dump(2) << '\n';
}

model::Dataset read_data(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return model::read_csv(in);
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "key-value config file");
    app->add_option("--seed", c.seed, "master seed");
    app->add_option("--workers", c.workers, "worker threads");
    app->add_option("--alpha", c.alpha, "nominal level");
    app->add_option("--out", c.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GARCH-X testing for a boundary covariate coefficient"};
    app.require_subcommand(1);
    Common common;

    auto* sim = app.add_subcommand("simulate", "simulate one dataset (data.csv)");
    add_common(sim, common);
    std::size_t n = 500;
    sim->add_option("--n", n, "sample size")->capture_default_str();

    auto* fit = app.add_subcommand("fit", "QMLE fits of one dataset (fit.json)");
    add_common(fit, common);
    std::string data_path;
    fit->add_option("--data", data_path, "dataset CSV (t,y,x)")->required();

    auto* test = app.add_subcommand("test", "apply a procedure to one dataset (test.json)");
    add_common(test, common);
    std::string procedure = "all";
    test->add_option("--data", data_path, "dataset CSV (t,y,x)")->required();
    test->add_option("--procedure", procedure, "ts, s, lrlf or all")
        ->check(CLI::IsMember({"ts", "s", "lrlf", "all"}))
        ->capture_default_str();

    auto* table = app.add_subcommand("table", "rejection-frequency table (table.csv)");
    add_common(table, common);
    std::string columns;
    std::optional<std::size_t> reps;
    bool full_scale = false;
    table->add_option("--columns", columns, "comma separated design labels 1..11, or 'config' for [dgp]");
    table->add_option("--reps", reps, "replications per column");
    table->add_flag("--full-scale", full_scale, "J = 10000 and estimation grid step 0.01");

    auto* bounds = app.add_subcommand("bounds", "asymptotic rejection probabilities and size bounds (bounds.json)");
    add_common(bounds, common);
    bounds->add_flag("--full-scale", full_scale, "grid step 0.01 and J = N = 10000");

    auto* dens = app.add_subcommand("densities", "finite-sample and limit draws (densities.csv)");
    add_common(dens, common);
    std::optional<double> b1;
    dens->add_option("--b1", b1, "localization b1");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto kv = load(common);
        if (sim->parsed()) {
            const auto g = dgp_of(kv);
            const std::size_t nn = sim->count("--n") ? n : static_cast<std::size_t>(io::get_int(kv, "n", 500));
            const auto burn = static_cast<std::size_t>(io::get_int(kv, "burn_in", 100));
            const auto seed = seed_of(common, kv);
            const auto d = model::simulate_dgp(g, nn, burn, seed);
            auto f = open_out(common, "data.csv");
            model::write_csv(f, d);
            write_json(common, "manifest.json",
                       harness::manifest("simulate", {{"n", nn}, {"burn_in", burn}, {"seed", seed},
                                                      {"dgp", {{"beta1", g.theta.beta1}, {"beta2", g.theta.beta2},
                                                               {"zeta", g.theta.zeta}, {"pi", g.theta.pi},
                                                               {"varphi", g.varphi}, {"kappa", g.kappa}}}}));
            std::cout << "wrote " << (fs::path(common.out) / "data.csv").string() << '\n';
        } else if (fit->parsed()) {
            const auto d = read_data(data_path);
            const auto p = procedure_of(common, kv, false);
            const auto f = qmle::fit_nested(d, p.space, p.estimation_grid);
            const nlohmann::json j = {{"full", qmle::to_json(f.full)},
                                      {"restricted", qmle::to_json(f.restricted)},
                                      {"dagger", qmle::to_json(f.dagger)},
                                      {"lr_dagger", qmle::lr_dagger_stat(f, d)},
                                      {"lr", qmle::lr_stat(f, d)}};
            write_json(common, "fit.json", j);
            write_json(common, "manifest.json",
                       harness::manifest("fit", {{"data", data_path}, {"estimation_grid", p.estimation_grid}}));
            std::cout << "LR-dagger " << j["lr_dagger"] << "  LR " << j["lr"] << '\n';
        } else if (test->parsed()) {
            const auto d = read_data(data_path);
            const auto p = procedure_of(common, kv, false);
            const auto fits = qmle::fit_nested(d, p.space, p.estimation_grid);
            nlohmann::json j;
            if (procedure == "ts") {
                j = procedures::to_json(procedures::test_ts(d, fits, p));
            } else if (procedure == "s") {
                j = procedures::to_json(procedures::test_s(d, fits, p));
            } else if (procedure == "lrlf") {
                j = procedures::to_json(procedures::test_lrlf(d, fits, p));
            } else {
                j = procedures::to_json(procedures::run_all(d, p));
            }
            write_json(common, "test.json", j);
            harness::ExperimentConfig ec;
            ec.proc = p;
            write_json(common, "manifest.json",
                       harness::manifest("test", {{"data", data_path}, {"procedure", procedure},
                                                  {"settings", harness::to_json(ec)}}));
            std::cout << j.dump(2) << '\n';
        } else if (table->parsed()) {
            std::vector<harness::ExperimentConfig> cfgs;
            const std::string cols = columns.empty() ? io::get_string(kv, "table.columns", "1,7,10,11") : columns;
            std::stringstream ss(cols);
            for (std::string label; std::getline(ss, label, ',');) {
                if (label.empty()) continue;
                auto c = label == "config" ? harness::ExperimentConfig{} : harness::table_column(label);
                if (label == "config") {
                    c.name = "config";
                    c.dgp = dgp_of(kv, c.dgp);
                }
                c.n = static_cast<std::size_t>(io::get_int(kv, "n", static_cast<long long>(c.n)));
                c.burn_in = static_cast<std::size_t>(io::get_int(kv, "burn_in", static_cast<long long>(c.burn_in)));
                c.reps = reps ? *reps : static_cast<std::size_t>(io::get_int(kv, "table.reps", 500));
                c.proc = procedure_of(common, kv, full_scale);
                c.master_seed = seed_of(common, kv);
                c.workers = workers_of(common, kv);
                cfgs.push_back(c);
            }
            nlohmann::json results = nlohmann::json::array();
            std::vector<harness::ColumnResult> out;
            for (const auto& c : cfgs) {
                out.push_back(harness::run_column(c));
                for (const auto& f : out.back().failures)
                    std::cerr << "column " << c.name << " rep " << f.rep << " skipped: " << f.message << '\n';
                results.push_back(harness::to_json(out.back()));
            }
            auto f = open_out(common, "table.csv");
            harness::write_table_csv(f, out);
            write_json(common, "manifest.json", harness::manifest("table", {{"columns", results}}));
            harness::write_table_csv(std::cout, out);
        } else if (bounds->parsed()) {
            harness::BoundsConfig b;
            if (full_scale) {
                b.grid_step = 0.01;
                b.J = 10000;
                b.N = 10000;
            }
            b.alpha = common.alpha ? *common.alpha : io::get_double(kv, "alpha", b.alpha);
            b.grid_step = io::get_double(kv, "bounds.grid_step", b.grid_step);
            b.J = static_cast<std::size_t>(io::get_int(kv, "bounds.J", static_cast<long long>(b.J)));
            b.N = static_cast<std::size_t>(io::get_int(kv, "bounds.N", static_cast<long long>(b.N)));
            b.n_star = static_cast<std::size_t>(io::get_int(kv, "bounds.n_star", static_cast<long long>(b.n_star)));
            b.kernel_seed = static_cast<std::uint64_t>(io::get_int(kv, "bounds.kernel_seed", 5));
            b.draw_seed = common.seed ? *common.seed : static_cast<std::uint64_t>(io::get_int(kv, "bounds.draw_seed", 17));
            b.workers = workers_of(common, kv);
            const auto r = harness::run_bounds(b);
            write_json(common, "bounds.json", harness::to_json(r));
            write_json(common, "manifest.json", harness::manifest("bounds", harness::to_json(b)));
            std::cout << harness::to_json(r).dump(2) << '\n';
        } else if (dens->parsed()) {
            harness::DensityConfig c;
            c.b1 = b1 ? *b1 : io::get_double(kv, "densities.b1", c.b1);
            c.pi0 = io::get_double(kv, "densities.pi0", c.pi0);
            c.varphi = io::get_double(kv, "densities.varphi", c.varphi);
            c.kappa = io::get_double(kv, "densities.kappa", c.kappa);
            c.n = static_cast<std::size_t>(io::get_int(kv, "densities.n", static_cast<long long>(c.n)));
            c.draws = static_cast<std::size_t>(io::get_int(kv, "densities.draws", static_cast<long long>(c.draws)));
            c.grid_step = io::get_double(kv, "densities.grid_step", c.grid_step);
            c.N = static_cast<std::size_t>(io::get_int(kv, "densities.N", static_cast<long long>(c.N)));
            c.n_star = static_cast<std::size_t>(io::get_int(kv, "densities.n_star", static_cast<long long>(c.n_star)));
            c.seed = seed_of(common, kv);
            c.workers = workers_of(common, kv);
            const auto d = harness::export_densities(c);
            auto f = open_out(common, "densities.csv");
            harness::write_densities_csv(f, d);
            auto settings = harness::to_json(c);
            settings["failed_finite"] = d.failed;
            write_json(common, "manifest.json", harness::manifest("densities", settings));
            std::cout << "wrote " << (fs::path(common.out) / "densities.csv").string() << " (" << d.failed
                      << " finite replications skipped)\n";
        }
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
