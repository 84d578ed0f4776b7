// Command-line front end: coupled runs, twin-run stability, the local
// fixed-point construction, the linear heat-decay oracle, and log-log fits
// over recorded series.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "vns/driver.hpp"

using namespace vns;

namespace {

int cmd_run(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    RunResult res = run(cfg);
    std::printf("run: %zu records, t_end = %.6g, E0 residual = %.3e%s\n",
                res.state.records.size(), res.state.fluid.t,
                res.summary["energy_balance_residual"].get<double>(),
                res.state.aborted ? " [ABORTED]" : "");
    std::printf("out: %s/records.csv, %s/summary.json\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
    if (res.state.aborted)
        std::printf("abort: %s\n", res.state.abort_reason.c_str());
    return res.exit_code;
}

int cmd_twin(const std::string& config_path, double eps, double horizon) {
    const RunConfig cfg = load_config(config_path);
    const double h = (horizon > 0.0) ? horizon : cfg.t_end;
    const TwinResult tw = twin_run(cfg, eps, h);
    ensure_directory(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/twin.csv");
    out << "t,Y,du2,dz2\n";
    for (std::size_t i = 0; i < tw.t.size(); ++i) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", tw.t[i], tw.Y[i], tw.du2[i],
                      tw.dz2[i]);
        out << buf;
    }
    std::printf("twin: eps = %.3e, Y(0) = %.6e, Y(end) = %.6e -> %s/twin.csv\n", eps,
                tw.Y.front(), tw.Y.back(), cfg.out_dir.c_str());
    return 0;
}

int cmd_picard(const std::string& config_path, double T, double tol) {
    const RunConfig cfg = load_config(config_path);
    const PicardReport rep = picard_local_solve(cfg, T, tol);
    std::printf("picard: T = %.6g, steps = %d, iterations = %d\n", rep.T, rep.steps,
                rep.iterations);
    for (std::size_t i = 0; i < rep.gaps.size(); ++i)
        std::printf("  gap[%zu] = %.6e\n", i, rep.gaps[i]);
    std::printf("contraction factor = %.4f%s\n", rep.contraction_factor,
                rep.contraction_failure ? " (contraction failure)" : "");
    std::printf("fixed point vs split trajectory at T: %.3e (integrator error %.3e)\n",
                rep.coupled_gap, rep.integrator_error);
    ensure_directory(cfg.out_dir);
    json j;
    j["T"] = rep.T;
    j["steps"] = rep.steps;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["contraction_failure"] = rep.contraction_failure;
    j["contraction_factor"] = rep.contraction_factor;
    j["gaps"] = rep.gaps;
    j["coupled_gap"] = rep.coupled_gap;
    j["integrator_error"] = rep.integrator_error;
    std::ofstream(cfg.out_dir + "/picard.json") << j.dump(2) << "\n";
    return 0;
}

int cmd_heat_decay(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    const Grid g = cfg.grid();
    const double mass = (cfg.u0_amplitude > 0.0) ? cfg.u0_amplitude : 1.0;
    SpectralField z0 = gaussian_blob(g, mass, cfg.u0_sigma);
    const auto [lo, hi] = cfg.fit_window();
    const int npts = 48;
    std::vector<double> ts, l2sq, grad_l2sq;
    for (int m = 0; m <= npts; ++m) {
        const double t = lo * std::pow(hi / lo, static_cast<double>(m) / npts);
        const SpectralField z = heat_propagate(z0, t);
        ts.push_back(t);
        l2sq.push_back(std::pow(l2_norm(z), 2));
        grad_l2sq.push_back(std::pow(sobolev_norm(z, 1.0), 2));
    }
    ensure_directory(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/heat_decay.csv");
    out << "t,l2sq,grad_l2sq\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", ts[i], l2sq[i], grad_l2sq[i]);
        out << buf;
    }
    const DecayFit f0 = decay_fit(ts, l2sq, lo, hi);
    const DecayFit f1 = decay_fit(ts, grad_l2sq, lo, hi);
    std::printf("heat-decay over [%.3g, %.3g]: slope(|z|^2) = %.4f +- %.2e, "
                "slope(|grad z|^2) = %.4f +- %.2e\n",
                lo, hi, f0.exponent, f0.confidence, f1.exponent, f1.confidence);
    json j;
    j["window"] = {lo, hi};
    j["l2sq_slope"] = f0.exponent;
    j["l2sq_confidence"] = f0.confidence;
    j["grad_l2sq_slope"] = f1.exponent;
    j["grad_l2sq_confidence"] = f1.confidence;
    std::ofstream(cfg.out_dir + "/heat_decay.json") << j.dump(2) << "\n";
    return 0;
}

int cmd_fit(const std::string& csv_path, const std::string& window, const std::string& column) {
    const auto colon = window.find(':');
    if (colon == std::string::npos)
        throw usage_error("--window expects the form a:b");
    const double lo = std::stod(window.substr(0, colon));
    const double hi = std::stod(window.substr(colon + 1));
    const CsvTable table = read_csv(csv_path);
    const std::vector<double> t = table.column("t");
    const std::vector<double> y = table.column(column);
    const DecayFit fit = decay_fit(t, y, lo, hi);
    std::printf("%s over [%g, %g]: slope = %.6f +- %.3e (%zu samples)\n", column.c_str(), lo, hi,
                fit.exponent, fit.confidence, fit.samples);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale kinetic-fluid simulation laboratory"};
    app.require_subcommand(1);

    std::string config_path, csv_path, window = "1:10", column = "E0";
    double eps = 1e-3, horizon = 0.0, T = 0.0, tol = 1e-10;

    CLI::App* c_run = app.add_subcommand("run", "integrate a coupled run from a config");
    c_run->add_option("config", config_path, "config file")->required();

    CLI::App* c_twin = app.add_subcommand("twin", "twin-run stability experiment");
    c_twin->add_option("config", config_path, "config file")->required();
    c_twin->add_option("--eps", eps, "initial velocity perturbation size");
    c_twin->add_option("--horizon", horizon, "horizon (default: t_end)");

    CLI::App* c_picard = app.add_subcommand("picard", "local fixed-point construction");
    c_picard->add_option("config", config_path, "config file")->required();
    c_picard->add_option("--T", T, "horizon (default: from the step conditions)");
    c_picard->add_option("--tol", tol, "convergence tolerance");

    CLI::App* c_heat = app.add_subcommand("heat-decay", "linear heat decay oracle");
    c_heat->add_option("config", config_path, "config file")->required();

    CLI::App* c_fit = app.add_subcommand("fit", "log-log slope of a recorded series");
    c_fit->add_option("series", csv_path, "records csv")->required();
    c_fit->add_option("--window", window, "fit window a:b");
    c_fit->add_option("--column", column, "column name (default E0)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_run->parsed()) return cmd_run(config_path);
        if (c_twin->parsed()) return cmd_twin(config_path, eps, horizon);
        if (c_picard->parsed()) return cmd_picard(config_path, T, tol);
        if (c_heat->parsed()) return cmd_heat_decay(config_path);
        if (c_fit->parsed()) return cmd_fit(csv_path, window, column);
    } catch (const config_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 3;
    } catch (const data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
