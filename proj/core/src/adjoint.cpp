#include "sirsfit/adjoint.hpp"

#include <cstddef>
#include <utility>

#include "diffusion_op.hpp"
#include "sirsfit/errors.hpp"

namespace sirs {

namespace {

double time_weight(const Grid& g, int m) {
    return (m == 0 || m == g.nt) ? 0.5 * g.dt() : g.dt();
}

// y1 y2 / y with the zero extension, at one node of a stored level
double flux_shape(double y1, double y2, double y3) {
    if (y1 == 0.0 || y2 == 0.0) return 0.0;
    return y1 * y2 / ((y1 + y2) + y3);
}

void check_data(const PdeSolution& fwd, const Field& data) {
    if (!data.same_shape(fwd.y2)) throw InputError("data shape must match the forward solution");
}

} // namespace

AdjointSolution solve_adjoint(const PdeSolution& fwd, const Field& data, const PdeWorkspace* ws) {
    check_data(fwd, data);
    const Grid& g = fwd.grid;
    const Params& p = fwd.params;
    PdeWorkspace local = ws ? *ws : PdeWorkspace(g, p);
    const auto& ops = local.impl();

    AdjointSolution adj{Field::space_time(g), Field::space_time(g), Field::space_time(g)};
    const double dt = g.dt();
    const int nx = g.nx, ny = g.ny;

    for (int k = g.nt - 1; k >= 0; --k) {
        const int m = k + 1;  // forward level feeding this step
        auto z1n = adj.z1.level(m), z2n = adj.z2.level(m), z3n = adj.z3.level(m);
        auto z1 = adj.z1.level(k), z2 = adj.z2.level(k), z3 = adj.z3.level(k);
        auto y1 = fwd.y1.level(m), y2 = fwd.y2.level(m), y3 = fwd.y3.level(m);
        auto d = data.level(m);
        const double wt = time_weight(g, m);
        const bool couple = m < g.nt;  // the terminal costate level is zero
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) {
                const size_t q = static_cast<size_t>(i) * ny + j;
                double r1 = z1n[q], r2 = z2n[q], r3 = z3n[q];
                if (couple) {
                    const double bb = 0.5 * (control_value(fwd.beta, m, i, j) + control_value(fwd.beta, m + 1, i, j));
                    const Matrix3 jf = reaction_jacobian(p, StateTriple(y1[q], y2[q], y3[q]), bb);
                    const double c1 = jf[0][0] * z1n[q] + jf[1][0] * z2n[q] + jf[2][0] * z3n[q];
                    const double c2 = jf[0][1] * z1n[q] + jf[1][1] * z2n[q] + jf[2][1] * z3n[q];
                    const double c3 = jf[0][2] * z1n[q] + jf[1][2] * z2n[q] + jf[2][2] * z3n[q];
                    r1 += dt * c1;
                    r2 += dt * c2;
                    r3 += dt * c3;
                }
                r2 += wt * (y2[q] - d[q]);
                z1[q] = r1;
                z2[q] = r2;
                z3[q] = r3;
            }
        }
        ops.op1.solve(z1);
        ops.op2.solve(z2);
        ops.op3.solve(z3);
    }
    return adj;
}

Field gradient_beta(const PdeSolution& fwd, const AdjointSolution& adj) {
    const Grid& g = fwd.grid;
    const double omega = fwd.params.omega;
    const double dt = g.dt();
    const int nx = g.nx, ny = g.ny;
    const bool time_only = fwd.beta.nx() == 1 && fwd.beta.ny() == 1;

    // P(m) = (y1 y2 / y)(z2 - z1) at level m; the terminal level vanishes
    auto product_level = [&](int m, Field& out) {
        auto y1 = fwd.y1.level(m), y2 = fwd.y2.level(m), y3 = fwd.y3.level(m);
        auto z1 = adj.z1.level(m), z2 = adj.z2.level(m);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                const size_t q = static_cast<size_t>(i) * ny + j;
                out(0, i, j) = flux_shape(y1[q], y2[q], y3[q]) * (z2[q] - z1[q]);
            }
    };

    Field grad(fwd.beta.steps(), fwd.beta.nx(), fwd.beta.ny());
    Field prev = Field::slice(g), cur = Field::slice(g);
    for (int m = 0; m <= g.nt; ++m) {
        product_level(m, cur);
        const double cm = dt / (2.0 * time_weight(g, m));
        if (time_only) {
            const double p_prev = (m == 0) ? 0.0 : integrate_slice(g, prev.level(0));
            const double p_cur = integrate_slice(g, cur.level(0));
            grad(m, 0, 0) = omega * fwd.beta(m, 0, 0) * (g.a * g.b) + cm * (p_prev + p_cur);
        } else {
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j) {
                    const double p_prev = (m == 0) ? 0.0 : prev(0, i, j);
                    grad(m, i, j) = omega * fwd.beta(m, i, j) + cm * (p_prev + cur(0, i, j));
                }
        }
        std::swap(prev, cur);
    }
    return grad;
}

SensitivitySolution solve_sensitivity(const PdeSolution& fwd, const Field& direction,
                                      const PdeWorkspace* ws) {
    const Grid& g = fwd.grid;
    const Params& p = fwd.params;
    if (!direction.same_shape(fwd.beta)) throw InputError("direction shape must match the control");
    PdeWorkspace local = ws ? *ws : PdeWorkspace(g, p);
    const auto& ops = local.impl();

    SensitivitySolution sens{Field::space_time(g), Field::space_time(g), Field::space_time(g)};
    const double dt = g.dt();
    const int nx = g.nx, ny = g.ny;
    for (int n = 0; n < g.nt; ++n) {
        auto u1 = sens.u1.level(n), u2 = sens.u2.level(n), u3 = sens.u3.level(n);
        auto v1 = sens.u1.level(n + 1), v2 = sens.u2.level(n + 1), v3 = sens.u3.level(n + 1);
        auto y1 = fwd.y1.level(n), y2 = fwd.y2.level(n), y3 = fwd.y3.level(n);
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) {
                const size_t q = static_cast<size_t>(i) * ny + j;
                const double bb = 0.5 * (control_value(fwd.beta, n, i, j) + control_value(fwd.beta, n + 1, i, j));
                const double hb = 0.5 * (control_value(direction, n, i, j) + control_value(direction, n + 1, i, j));
                const Matrix3 jf = reaction_jacobian(p, StateTriple(y1[q], y2[q], y3[q]), bb);
                const double phi = flux_shape(y1[q], y2[q], y3[q]);
                const double s1 = jf[0][0] * u1[q] + jf[0][1] * u2[q] + jf[0][2] * u3[q] - phi * hb;
                const double s2 = jf[1][0] * u1[q] + jf[1][1] * u2[q] + jf[1][2] * u3[q] + phi * hb;
                const double s3 = jf[2][0] * u1[q] + jf[2][1] * u2[q] + jf[2][2] * u3[q];
                v1[q] = u1[q] + dt * s1;
                v2[q] = u2[q] + dt * s2;
                v3[q] = u3[q] + dt * s3;
            }
        }
        ops.op1.solve(v1);
        ops.op2.solve(v2);
        ops.op3.solve(v3);
    }
    return sens;
}

double directional_derivative(const PdeSolution& fwd, const SensitivitySolution& sens,
                              const Field& data, const Field& direction, double omega) {
    check_data(fwd, data);
    if (!direction.same_shape(fwd.beta)) throw InputError("direction shape must match the control");
    const Grid& g = fwd.grid;

    double track = 0.0;
    for (int m = 0; m <= g.nt; ++m) {
        const double wt = time_weight(g, m);
        auto y2 = fwd.y2.level(m);
        auto u2 = sens.u2.level(m);
        auto d = data.level(m);
        double acc = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            const double wi = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            for (int j = 0; j < g.ny; ++j) {
                const double wj = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
                const size_t q = static_cast<size_t>(i) * g.ny + j;
                acc += wi * wj * (y2[q] - d[q]) * u2[q];
            }
        }
        track += wt * acc * g.hx() * g.hy();
    }

    double reg = 0.0;
    if (fwd.beta.nx() == 1 && fwd.beta.ny() == 1) {
        for (int m = 0; m <= g.nt; ++m) reg += time_weight(g, m) * fwd.beta(m, 0, 0) * direction(m, 0, 0);
        reg *= g.a * g.b;
    } else {
        for (int m = 0; m <= g.nt; ++m) {
            const double wt = time_weight(g, m);
            auto b = fwd.beta.level(m);
            auto h = direction.level(m);
            double acc = 0.0;
            for (int i = 0; i < g.nx; ++i) {
                const double wi = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
                for (int j = 0; j < g.ny; ++j) {
                    const double wj = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
                    const size_t q = static_cast<size_t>(i) * g.ny + j;
                    acc += wi * wj * b[q] * h[q];
                }
            }
            reg += wt * acc * g.hx() * g.hy();
        }
    }
    return track + omega * reg;
}

double inner_q(const Grid& g, const Field& f, const Field& h) {
    if (!f.same_shape(h)) throw InputError("inner product needs matching shapes");
    if (f.steps() != g.nt + 1) throw InputError("inner product expects nt+1 levels");
    double acc = 0.0;
    if (f.nx() == 1 && f.ny() == 1) {
        for (int m = 0; m <= g.nt; ++m) acc += time_weight(g, m) * f(m, 0, 0) * h(m, 0, 0);
        return acc;
    }
    if (f.nx() != g.nx || f.ny() != g.ny) throw InputError("field does not match the grid");
    for (int m = 0; m <= g.nt; ++m) {
        const double wt = time_weight(g, m);
        auto a = f.level(m);
        auto b = h.level(m);
        double lvl = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            const double wi = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            for (int j = 0; j < g.ny; ++j) {
                const double wj = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
                const size_t q = static_cast<size_t>(i) * g.ny + j;
                lvl += wi * wj * a[q] * b[q];
            }
        }
        acc += wt * lvl * g.hx() * g.hy();
    }
    return acc;
}

} // namespace sirs
