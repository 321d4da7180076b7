#include "sirsfit/pde.hpp"

#include <cmath>
#include <cstdio>

#include "diffusion_op.hpp"
#include "sirsfit/errors.hpp"

namespace sirs {

PdeWorkspace::PdeWorkspace(const Grid& g, const Params& p) : impl_(std::make_shared<Impl>(g, p)) {}

namespace {

void check_reaction_step(const Grid& g, const Params& p) {
    if (!(g.dt() * (p.beta_max + p.gamma + p.mu + p.kappa) < 1.0))
        throw InputError("time step too large for the explicit reaction step: "
                         "dt*(beta_max+gamma+mu+kappa) must stay below 1");
}

void check_beta_shape(const Grid& g, const Field& beta, const Params& p) {
    const bool full = beta.steps() == g.nt + 1 && beta.nx() == g.nx && beta.ny() == g.ny;
    const bool series = beta.steps() == g.nt + 1 && beta.nx() == 1 && beta.ny() == 1;
    if (!full && !series) throw InputError("beta must have nt+1 levels, either on the grid or 1x1");
    for (double v : beta.data())
        if (!(v >= p.beta_min && v <= p.beta_max))
            throw InputError("beta leaves the admissible box [beta_min, beta_max]");
}

void check_init(const Grid& g, const InitialState& init) {
    for (const Field* f : {&init.y1, &init.y2, &init.y3}) {
        if (f->steps() != 1 || f->nx() != g.nx || f->ny() != g.ny)
            throw InputError("initial state slices must match the grid");
        for (double v : f->data())
            if (!(v >= 0.0) || !std::isfinite(v))
                throw InputError("initial state must be nonnegative and finite");
    }
}

[[noreturn]] void report_nonfinite(int step, int i, int j, int comp) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "non-finite value at step %d, node (%d,%d), compartment y%d",
                  step, i, j, comp);
    throw NumericalError(buf);
}

} // namespace

PdeSolution solve_forward(const Grid& g, const Params& p, const Field& beta,
                          const InitialState& init, const PdeWorkspace* ws) {
    g.validate();
    p.validate();
    check_reaction_step(g, p);
    check_beta_shape(g, beta, p);
    check_init(g, init);

    PdeWorkspace local = ws ? *ws : PdeWorkspace(g, p);
    const auto& ops = local.impl();

    PdeSolution sol{g, p, beta, Field::space_time(g), Field::space_time(g), Field::space_time(g)};
    std::copy(init.y1.data().begin(), init.y1.data().end(), sol.y1.level(0).begin());
    std::copy(init.y2.data().begin(), init.y2.data().end(), sol.y2.level(0).begin());
    std::copy(init.y3.data().begin(), init.y3.data().end(), sol.y3.level(0).begin());

    double ref = 0.0;
    for (int k = 0; k < g.nodes(); ++k)
        ref = std::max(ref, sol.y1.level(0)[k] + sol.y2.level(0)[k] + sol.y3.level(0)[k]);
    const double clamp_tol = 1e-9 * std::max(ref, 1.0);

    const double dt = g.dt();
    const int nx = g.nx, ny = g.ny;
    for (int n = 0; n < g.nt; ++n) {
        auto a1 = sol.y1.level(n), a2 = sol.y2.level(n), a3 = sol.y3.level(n);
        auto b1 = sol.y1.level(n + 1), b2 = sol.y2.level(n + 1), b3 = sol.y3.level(n + 1);
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) {
                const size_t k = static_cast<size_t>(i) * ny + j;
                const double bb = 0.5 * (control_value(beta, n, i, j) + control_value(beta, n + 1, i, j));
                const double y1v = a1[k], y2v = a2[k], y3v = a3[k];
                const double yv = y1v + y2v + y3v;
                const Vec3 f = reaction_unchecked(p, y1v, y2v, y3v, yv, bb);
                b1[k] = y1v + dt * f[0];
                b2[k] = y2v + dt * f[1];
                b3[k] = y3v + dt * f[2];
            }
        }
        ops.op1.solve(b1);
        ops.op2.solve(b2);
        ops.op3.solve(b3);
        // clamp roundoff-scale negatives, reject anything larger
        std::span<double> levels[3] = {b1, b2, b3};
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j) {
                    double& v = levels[c][static_cast<size_t>(i) * ny + j];
                    if (!std::isfinite(v)) report_nonfinite(n + 1, i, j, c + 1);
                    if (v < 0.0) {
                        if (v < -clamp_tol) {
                            char buf[160];
                            std::snprintf(buf, sizeof buf,
                                          "negative excursion %.3e at step %d, node (%d,%d), compartment y%d",
                                          v, n + 1, i, j, c + 1);
                            throw NumericalError(buf);
                        }
                        v = 0.0;
                    }
                }
        }
    }
    return sol;
}

double objective(const PdeSolution& sol, const Field& data, double omega) {
    const Grid& g = sol.grid;
    if (!data.same_shape(sol.y2)) throw InputError("objective: data shape must match the solution");
    const double dt = g.dt();
    double track = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
        const double wt = (n == 0 || n == g.nt) ? 0.5 * dt : dt;
        auto y2 = sol.y2.level(n);
        auto d = data.level(n);
        double acc = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            const double wi = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            for (int j = 0; j < g.ny; ++j) {
                const double wj = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
                const size_t k = static_cast<size_t>(i) * g.ny + j;
                const double r = y2[k] - d[k];
                acc += wi * wj * r * r;
            }
        }
        track += wt * acc * g.hx() * g.hy();
    }

    const Field& beta = sol.beta;
    double reg = 0.0;
    if (beta.nx() == 1 && beta.ny() == 1) {
        for (int n = 0; n <= g.nt; ++n) {
            const double wt = (n == 0 || n == g.nt) ? 0.5 * dt : dt;
            reg += wt * beta(n, 0, 0) * beta(n, 0, 0);
        }
        reg *= g.a * g.b;
    } else {
        for (int n = 0; n <= g.nt; ++n) {
            const double wt = (n == 0 || n == g.nt) ? 0.5 * dt : dt;
            auto bl = beta.level(n);
            double acc = 0.0;
            for (int i = 0; i < g.nx; ++i) {
                const double wi = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
                for (int j = 0; j < g.ny; ++j) {
                    const double wj = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
                    const size_t k = static_cast<size_t>(i) * g.ny + j;
                    acc += wi * wj * bl[k] * bl[k];
                }
            }
            reg += wt * acc * g.hx() * g.hy();
        }
    }
    return 0.5 * track + 0.5 * omega * reg;
}

} // namespace sirs
