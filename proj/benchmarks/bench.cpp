// Hot paths under the optimizer and the CLI, sized like the shipped runs.

#include <benchmark/benchmark.h>

#include <sirsfit/adjoint.hpp>
#include <sirsfit/data_io.hpp>
#include <sirsfit/ode.hpp>
#include <sirsfit/optimizer.hpp>
#include <sirsfit/pde.hpp>
#include <sirsfit/stability.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace sirs;

namespace {

Params monthly_params() {
    Params p;
    p.mu = 1.0 / 780.0;
    p.gamma = 1.0 / 0.879;
    p.kappa = 1.0 / 9.0;
    p.d1 = 0.005;
    p.d2 = 0.001;
    p.d3 = 0.005;
    return p;
}

Grid sized_grid(int n) {
    Grid g;
    g.nx = g.ny = n;
    g.nt = 50;
    g.T = 6.0;
    return g;
}

InitialState bumped_init(const Grid& g) {
    Field y1 = Field::slice(g, 200.0), y2 = Field::slice(g), y3 = Field::slice(g, 3.0);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            double dx = i * g.hx() - 0.4, dy = j * g.hy() - 0.6;
            y2(0, i, j) = 20.0 * std::exp(-40.0 * (dx * dx + dy * dy));
        }
    return {std::move(y1), std::move(y2), std::move(y3)};
}

Field random_control(const Grid& g, unsigned seed) {
    Field f = Field::space_time(g);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.5, 3.5);
    for (double& v : f.data()) v = u(rng);
    return f;
}

void forward_solve(benchmark::State& state) {
    Grid g = sized_grid(static_cast<int>(state.range(0)));
    Params p = monthly_params();
    InitialState init = bumped_init(g);
    Field beta = random_control(g, 11u);
    PdeWorkspace ws(g, p);
    for (auto _ : state) {
        PdeSolution sol = solve_forward(g, p, beta, init, &ws);
        benchmark::DoNotOptimize(sol.y2.data().data());
    }
}
BENCHMARK(forward_solve)->Arg(17)->Arg(33)->Unit(benchmark::kMillisecond);

void adjoint_gradient(benchmark::State& state) {
    Grid g = sized_grid(static_cast<int>(state.range(0)));
    Params p = monthly_params();
    InitialState init = bumped_init(g);
    Field data = solve_forward(g, p, Field::space_time(g, 1.2), init).y2;
    PdeWorkspace ws(g, p);
    PdeSolution fwd = solve_forward(g, p, random_control(g, 12u), init, &ws);
    for (auto _ : state) {
        Field grad = gradient_beta(fwd, solve_adjoint(fwd, data, &ws));
        benchmark::DoNotOptimize(grad.data().data());
    }
}
BENCHMARK(adjoint_gradient)->Arg(17)->Arg(33)->Unit(benchmark::kMillisecond);

void surface_fit(benchmark::State& state) {
    Grid g;
    g.nx = g.ny = static_cast<int>(state.range(0));
    ScatteredData d;
    std::mt19937 rng(13u);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int k = 0; k < 18; ++k) {
        double x = u(rng), y = u(rng);
        d.points.push_back({x, y});
        d.values.push_back(40.0 * std::exp(-6.0 * ((x - 0.4) * (x - 0.4) + (y - 0.6) * (y - 0.6))));
    }
    for (auto _ : state) {
        Field f = gridfit(d, g, 1.0);
        benchmark::DoNotOptimize(f.data().data());
    }
}
BENCHMARK(surface_fit)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

void sde_ensemble_run(benchmark::State& state) {
    Params p = monthly_params();
    p.gamma = 0.8785;
    StateTriple init(1.4e6, 87.0, 227.0);
    TimeGrid tg{12.0, 120};
    SdeConfig cfg;
    cfg.rho = 1.69e-2;
    cfg.seed = 14u;
    cfg.n_realizations = static_cast<int>(state.range(0));
    for (auto _ : state) {
        EnsembleStats stats = ensemble_stats(sde_ensemble(p, 0.8823, init, tg, cfg));
        benchmark::DoNotOptimize(stats.mean2.data());
    }
}
BENCHMARK(sde_ensemble_run)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void rate_fit_ode(benchmark::State& state) {
    Params p = monthly_params();
    p.gamma = 0.8785;
    TimeGrid tg{71.0, 284};
    StateTriple init(1.4e6, 87.0, 227.0);
    std::vector<double> truth(static_cast<size_t>(tg.nt) + 1);
    for (int n = 0; n <= tg.nt; ++n)
        truth[n] = 0.88 + 0.05 * std::sin(2.0 * M_PI * n * tg.dt() / 12.0);
    std::vector<double> data = ode_solve(p, truth, init, tg).y2;
    std::vector<double> beta0(truth.size(), 1.0);
    FitOptions opt;
    opt.max_iter = static_cast<int>(state.range(0));
    opt.eps = 0.0;
    for (auto _ : state) {
        OdeFitResult fit = fit_ode_time_varying(p, tg, data, beta0, init, opt);
        benchmark::DoNotOptimize(fit.beta.data());
    }
}
BENCHMARK(rate_fit_ode)->Arg(50)->Unit(benchmark::kMillisecond);

void mode_spectrum(benchmark::State& state) {
    Params p = monthly_params();
    for (auto _ : state) {
        EquilibriumAnalysis ea =
            analyze_equilibrium(p, 2.0, 210.0, EquilibriumKind::Endemic,
                                static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(ea.modes.data());
    }
}
BENCHMARK(mode_spectrum)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
