#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run_config.hpp"
#include "sirsfit/data_io.hpp"
#include "sirsfit/errors.hpp"
#include "sirsfit/ode.hpp"
#include "sirsfit/optimizer.hpp"
#include "sirsfit/pde.hpp"
#include "sirsfit/stability.hpp"

using namespace sirs;

namespace {

std::chrono::steady_clock::time_point run_start;

double wall_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Grid make_grid(const RunConfig& rc) {
    Grid g;
    g.nx = rc.nx;
    g.ny = rc.ny;
    g.a = rc.a;
    g.b = rc.b;
    g.nt = rc.nt;
    g.T = rc.T;
    g.validate();
    return g;
}

// year labels mapped to months since the first slice
std::vector<double> slice_times(const std::vector<ScatteredData>& slices) {
    std::vector<double> t;
    t.reserve(slices.size());
    for (const ScatteredData& s : slices) t.push_back((s.label - slices.front().label) * 12.0);
    return t;
}

std::string trajectory_csv(const Trajectory& tr) {
    std::string out = "t,y1,y2,y3\n";
    for (size_t m = 0; m < tr.t.size(); ++m)
        out += num(tr.t[m]) + "," + num(tr.y1[m]) + "," + num(tr.y2[m]) + "," + num(tr.y3[m]) +
               "\n";
    return out;
}

int exit_code(const FitReport& r) {
    if (!r.converged)
        std::fprintf(stderr, "did not converge: %s after %d iterations\n",
                     to_string(r.stop_reason), r.iterations);
    return r.converged ? 0 : 3;
}

int cmd_fit_pde(const RunConfig& rc) {
    std::vector<ScatteredData> slices = load_spatial_csv(rc.spatial);
    Grid g = make_grid(rc);
    std::vector<Field> fitted;
    fitted.reserve(slices.size());
    for (const ScatteredData& s : slices) fitted.push_back(gridfit(s, g, rc.stiffness));
    const std::vector<double> times = slice_times(slices);
    const Field data = interpolate_slices_in_time(g, times, fitted);

    InitialState init{Field::slice(g, rc.y1_0), Field::slice(g), Field::slice(g, rc.y3_0)};
    auto y2lvl = init.y2.level(0);
    auto d0 = data.level(0);
    std::copy(d0.begin(), d0.end(), y2lvl.begin());

    if (rc.p.omega < 1e-3)
        std::fprintf(stderr,
                     "warning: omega below 1e-3 weakens the penalty; the fitted rate can climb "
                     "above 3\n");

    const Field beta0 = rc.beta_mode == "time" ? Field::time_series(g, rc.beta_init)
                                               : Field::space_time(g, rc.beta_init);
    PdeFitResult res = fit_pde(g, rc.p, data, init, beta0, {rc.eps, rc.max_iter, rc.stall});

    write_field_file(rc.out_dir + "/beta.txt", res.beta, g.T, g.a, g.b);
    write_field_file(rc.out_dir + "/y2_fit.txt", res.solution.y2, g.T, g.a, g.b);
    write_field_file(rc.out_dir + "/y2_data.txt", data, g.T, g.a, g.b);
    write_text_atomic(rc.out_dir + "/trace.csv", fit_trace_csv(res.report));
    for (size_t s = 0; s < slices.size(); ++s) {
        const int m = std::clamp(static_cast<int>(std::llround(times[s] / g.dt())), 0, g.nt);
        std::string csv = "x1,x2,data,fit\n";
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                csv += num(i * g.hx()) + "," + num(j * g.hy()) + "," + num(data(m, i, j)) + "," +
                       num(res.solution.y2(m, i, j)) + "\n";
        char label[32];
        std::snprintf(label, sizeof label, "%g", slices[s].label);
        write_text_atomic(rc.out_dir + "/slice_" + label + ".csv", csv);
    }

    std::printf("fit-pde: J %.6g -> %.6g in %d iterations (%s)\n", res.report.initial_objective,
                res.report.final_objective, res.report.iterations,
                to_string(res.report.stop_reason));
    write_manifest(rc.out_dir, "fit-pde", rc, wall_seconds());
    return exit_code(res.report);
}

int cmd_fit_ode(const RunConfig& rc) {
    IncidenceSeries inc = load_incidence_csv(rc.incidence);
    const double T = rc.is_set("T") ? rc.T : inc.t.back();
    if (!(T > 0)) throw InputError("incidence series spans no time; set T explicitly");
    TimeGrid tg{T, rc.nt};

    if (rc.ode_fit == "constant") {
        ConstantFitSpec spec;
        spec.beta = rc.beta_init;
        spec.gamma = rc.p.gamma;
        spec.y3_0 = rc.y3_0;
        spec.fit_gamma = rc.fit_gamma;
        spec.fit_y3_0 = rc.fit_y3_0;
        spec.y1_0 = rc.y1_0;
        spec.substeps = rc.substeps;
        ConstantFitResult res = fit_constant_params(inc.t, inc.cases, rc.p, spec);

        std::string csv = "beta,gamma,y3_0,residual,converged,degenerate,evaluations,restarts\n";
        csv += num(res.beta) + "," + num(res.gamma) + "," + num(res.y3_0) + "," +
               num(res.residual) + "," + (res.converged ? "1" : "0") + "," +
               (res.degenerate ? "1" : "0") + "," + std::to_string(res.evaluations) + "," +
               std::to_string(res.restarts) + "\n";
        write_text_atomic(rc.out_dir + "/constant_fit.csv", csv);

        Params fitted = rc.p;
        fitted.gamma = res.gamma;
        StateTriple init(rc.y1_0, inc.cases.front(), res.y3_0);
        write_text_atomic(rc.out_dir + "/fit.csv",
                          trajectory_csv(ode_solve(fitted, res.beta, init, tg)));

        std::printf("fit-ode constant: beta %.6g gamma %.6g residual %.6g (%s%s)\n", res.beta,
                    res.gamma, res.residual, res.converged ? "converged" : "not converged",
                    res.degenerate ? ", degenerate" : "");
        write_manifest(rc.out_dir, "fit-ode", rc, wall_seconds());
        return res.converged && !res.degenerate ? 0 : 3;
    }

    const std::vector<double> data = interpolate_series(inc.t, inc.cases, tg);
    const std::vector<double> beta0(tg.nt + 1, rc.beta_init);
    const double y2_0 = rc.is_set("y2_0") ? rc.y2_0 : data.front();
    StateTriple init(rc.y1_0, y2_0, rc.y3_0);
    OdeFitResult res = fit_ode_time_varying(rc.p, tg, data, beta0, init,
                                            {rc.eps, rc.max_iter, rc.stall});

    std::string beta_csv = "t,beta\n";
    for (int m = 0; m <= tg.nt; ++m) beta_csv += num(m * tg.dt()) + "," + num(res.beta[m]) + "\n";
    write_text_atomic(rc.out_dir + "/beta.csv", beta_csv);
    std::string fit_csv = "t,y1,y2,y3,data\n";
    for (int m = 0; m <= tg.nt; ++m)
        fit_csv += num(res.trajectory.t[m]) + "," + num(res.trajectory.y1[m]) + "," +
                   num(res.trajectory.y2[m]) + "," + num(res.trajectory.y3[m]) + "," +
                   num(data[m]) + "\n";
    write_text_atomic(rc.out_dir + "/fit.csv", fit_csv);
    write_text_atomic(rc.out_dir + "/trace.csv", fit_trace_csv(res.report));

    std::printf("fit-ode: J %.6g -> %.6g in %d iterations (%s)\n", res.report.initial_objective,
                res.report.final_objective, res.report.iterations,
                to_string(res.report.stop_reason));
    write_manifest(rc.out_dir, "fit-ode", rc, wall_seconds());
    return exit_code(res.report);
}

int cmd_simulate_sde(const RunConfig& rc) {
    TimeGrid tg{rc.T, rc.nt};
    StateTriple init(rc.y1_0, rc.y2_0, rc.y3_0);
    SdeConfig cfg{rc.rho, rc.seed, rc.n_realizations};
    const std::vector<Trajectory> runs = sde_ensemble(rc.p, rc.beta, init, tg, cfg);
    const EnsembleStats st = ensemble_stats(runs);

    std::string csv = "t,mean1,sd1,mean2,sd2,mean3,sd3\n";
    for (size_t m = 0; m < st.t.size(); ++m)
        csv += num(st.t[m]) + "," + num(st.mean1[m]) + "," + num(st.sd1[m]) + "," +
               num(st.mean2[m]) + "," + num(st.sd2[m]) + "," + num(st.mean3[m]) + "," +
               num(st.sd3[m]) + "\n";
    write_text_atomic(rc.out_dir + "/ensemble.csv", csv);
    write_text_atomic(rc.out_dir + "/deterministic.csv",
                      trajectory_csv(ode_solve(rc.p, rc.beta, init, tg)));

    std::printf("simulate-sde: %d realizations, rho %.6g, seed %llu\n", rc.n_realizations, rc.rho,
                static_cast<unsigned long long>(rc.seed));
    write_manifest(rc.out_dir, "simulate-sde", rc, wall_seconds());
    return 0;
}

std::string modes_csv(const EquilibriumAnalysis& an) {
    std::string out = "j,k,lambda,max_real,verdict,a1,a2,a3,rh_stable\n";
    for (const ModeAnalysis& m : an.modes)
        out += std::to_string(m.j) + "," + std::to_string(m.k) + "," + num(m.lambda) + "," +
               num(m.max_real) + "," + to_string(m.verdict) + "," + num(m.char_coeffs[0]) + "," +
               num(m.char_coeffs[1]) + "," + num(m.char_coeffs[2]) + "," +
               (m.rh_stable ? "1" : "0") + "\n";
    return out;
}

void print_modes(const char* name, const EquilibriumAnalysis& an) {
    const StateTriple& s = an.equilibrium.state;
    std::printf("%s equilibrium (%.6g, %.6g, %.6g): %s\n", name, s.y1, s.y2, s.y3,
                to_string(an.verdict));
    for (const ModeAnalysis& m : an.modes)
        std::printf("  mode (%2d,%2d)  lambda %10.4f  max Re %12.6g  %s\n", m.j, m.k, m.lambda,
                    m.max_real, to_string(m.verdict));
}

int cmd_stability(const RunConfig& rc) {
    const double y0 = rc.y1_0 + rc.y2_0 + rc.y3_0;
    const double r0 = basic_reproductive_number(rc.p, rc.beta);
    std::printf("beta %.6g, r0 %.6g\n", rc.beta, r0);

    const EquilibriumAnalysis dfe = analyze_equilibrium(rc.p, rc.beta, y0,
                                                        EquilibriumKind::DiseaseFree, rc.n_modes,
                                                        rc.a, rc.b);
    write_text_atomic(rc.out_dir + "/modes_dfe.csv", modes_csv(dfe));
    print_modes("disease-free", dfe);
    if (r0 > 1.0) {
        const EquilibriumAnalysis endemic = analyze_equilibrium(
            rc.p, rc.beta, y0, EquilibriumKind::Endemic, rc.n_modes, rc.a, rc.b);
        write_text_atomic(rc.out_dir + "/modes_endemic.csv", modes_csv(endemic));
        print_modes("endemic", endemic);
    }
    if (rc.n_beta > 0) {
        const std::vector<SweepRow> rows = stability_sweep(rc.p, y0, rc.beta_lo, rc.beta_hi,
                                                           rc.n_beta, rc.n_modes, rc.a, rc.b);
        write_text_atomic(rc.out_dir + "/sweep.csv", sweep_csv(rows));
    }
    write_manifest(rc.out_dir, "stability", rc, wall_seconds());
    return 0;
}

int cmd_gridfit(const RunConfig& rc) {
    std::vector<ScatteredData> slices = load_spatial_csv(rc.spatial);
    Grid g = make_grid(rc);
    std::vector<Field> fitted;
    fitted.reserve(slices.size());
    for (const ScatteredData& s : slices) {
        Field f = gridfit(s, g, rc.stiffness);
        char label[32];
        std::snprintf(label, sizeof label, "%g", s.label);
        write_field_file(rc.out_dir + "/surface_" + label + ".txt", f, g.T, g.a, g.b);
        std::string csv = "x1,x2,value\n";
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                csv += num(i * g.hx()) + "," + num(j * g.hy()) + "," + num(f(0, i, j)) + "\n";
        write_text_atomic(rc.out_dir + "/surface_" + std::string(label) + ".csv", csv);
        fitted.push_back(std::move(f));
    }
    if (slices.size() > 1) {
        const Field full = interpolate_slices_in_time(g, slice_times(slices), fitted);
        write_field_file(rc.out_dir + "/y2_data.txt", full, g.T, g.a, g.b);
    }
    std::printf("gridfit: %zu slices on %dx%d nodes, stiffness %.6g\n", slices.size(), g.nx, g.ny,
                rc.stiffness);
    write_manifest(rc.out_dir, "gridfit", rc, wall_seconds());
    return 0;
}

int cmd_correlate(const RunConfig& rc) {
    IncidenceSeries inc = load_incidence_csv(rc.incidence);
    MeteoSeries met = load_meteo_csv(rc.meteo);
    const LagMode mode = rc.lag_mode == "monthly" ? LagMode::ShiftMonthly : LagMode::ShiftDaily;
    const std::vector<LagCorrelation> all = lagged_correlations(met, inc, rc.max_lag, mode);
    const std::vector<LagCorrelation> best = best_lags(all);
    write_text_atomic(rc.out_dir + "/correlations.csv", correlations_csv(all));
    write_text_atomic(rc.out_dir + "/best_lags.csv", correlations_csv(best));
    for (const LagCorrelation& r : best)
        std::printf("%-14s best lag %2d days  corr %+.4f\n", r.variable.c_str(), r.lag,
                    r.correlation);
    write_manifest(rc.out_dir, "correlate", rc, wall_seconds());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    run_start = std::chrono::steady_clock::now();
    CLI::App app{"space- and time-resolved transmission rate estimation for SIRS models"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path, out_dir, beta_mode;
    std::uint64_t seed = 0;
    std::vector<int> grid_dims;
    double omega = 0, rho = 0, stiffness = 0;
    auto* o_config = app.add_option("--config", config_path, "flat key = value config file");
    auto* o_out = app.add_option("--out-dir", out_dir, "output directory (default: out)");
    auto* o_seed = app.add_option("--seed", seed, "ensemble seed");
    auto* o_grid = app.add_option("--grid", grid_dims, "space-time resolution as NX NY NT")
                       ->expected(3);
    auto* o_omega = app.add_option("--omega", omega, "control penalty weight");
    auto* o_rho = app.add_option("--rho", rho, "demographic noise intensity");
    auto* o_stiffness = app.add_option("--stiffness", stiffness, "surface fit stiffness");
    auto* o_mode = app.add_option("--beta-mode", beta_mode, "control shape")
                       ->check(CLI::IsMember({"time", "time-space"}));

    app.add_subcommand("fit-pde", "estimate the transmission rate from spatial case data");
    app.add_subcommand("fit-ode", "estimate rates from a monthly incidence series");
    app.add_subcommand("simulate-sde", "sample demographic-noise ensembles");
    app.add_subcommand("stability", "classify both equilibria mode by mode");
    app.add_subcommand("gridfit", "fit case surfaces through scattered observations");
    app.add_subcommand("correlate", "lag meteorology against incidence");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig rc = make_config();
        if (*o_config) load_config_file(rc, config_path);
        if (*o_out) {
            rc.out_dir = out_dir;
            rc.given.insert("out_dir");
        }
        if (*o_seed) {
            rc.seed = seed;
            rc.given.insert("seed");
        }
        if (*o_grid) {
            rc.nx = grid_dims[0];
            rc.ny = grid_dims[1];
            rc.nt = grid_dims[2];
            rc.given.insert({"nx", "ny", "nt"});
        }
        if (*o_omega) {
            rc.p.omega = omega;
            rc.given.insert("omega");
        }
        if (*o_rho) {
            rc.rho = rho;
            rc.given.insert("rho");
        }
        if (*o_stiffness) {
            rc.stiffness = stiffness;
            rc.given.insert("stiffness");
        }
        if (*o_mode) {
            rc.beta_mode = beta_mode;
            rc.given.insert("beta_mode");
        }

        const std::string sub = app.get_subcommands().front()->get_name();
        rc.validate_for(sub);
        std::filesystem::create_directories(rc.out_dir);

        if (sub == "fit-pde") return cmd_fit_pde(rc);
        if (sub == "fit-ode") return cmd_fit_ode(rc);
        if (sub == "simulate-sde") return cmd_simulate_sde(rc);
        if (sub == "stability") return cmd_stability(rc);
        if (sub == "gridfit") return cmd_gridfit(rc);
        if (sub == "correlate") return cmd_correlate(rc);
        throw InputError("unknown subcommand " + sub);
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
