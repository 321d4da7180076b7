#include "sirsfit/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "sirsfit/errors.hpp"

namespace sirs {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::ToleranceMet: return "tolerance_met";
        case StopReason::MaxIterations: return "max_iterations";
        case StopReason::LineSearchStall: return "line_search_stall";
    }
    return "unknown";
}

Field project_box(const Field& beta, double lo, double hi) {
    if (lo > hi) throw InputError("box projection needs lo <= hi");
    Field out = beta;
    for (double& v : out.data()) v = std::clamp(v, lo, hi);
    return out;
}

double quadratic_step(double phi0, double dphi0, double delta0, double phi_delta0) {
    if (dphi0 >= 0.0) throw InputError("line search direction is not a descent direction");
    if (!(delta0 > 0.0)) throw InputError("trial step length must be positive");
    const double curv = phi_delta0 - phi0 - dphi0 * delta0;
    if (curv <= 0.0) return 0.5 * delta0;
    const double d1 = -dphi0 * delta0 * delta0 / (2.0 * curv);
    return std::clamp(d1, 0.1 * delta0, 0.9 * delta0);
}

namespace {

double series_weight(int m, int nt, double dt) {
    return (m == 0 || m == nt) ? 0.5 * dt : dt;
}

double sup_norm(const Field& f) {
    double m = 0.0;
    for (double v : f.data()) m = std::max(m, std::abs(v));
    return m;
}

// Evaluation backend the descent loop drives. qw holds the control
// quadrature weights aligned with the flat control storage.
struct Problem {
    std::vector<double> qw;
    virtual ~Problem() = default;
    virtual double evaluate(const Field& beta) = 0;
    virtual Field gradient() = 0;  // at the most recently evaluated control
};

// Gradient mass on the non-active part of the box: nodes pinned at a bound
// with the gradient pointing outward do not move under the projection.
double masked_norm_sq(const Field& g, const Field& beta, double lo, double hi,
                      const std::vector<double>& qw) {
    const auto& gv = g.data();
    const auto& bv = beta.data();
    double acc = 0.0;
    for (size_t k = 0; k < gv.size(); ++k) {
        const bool active = (bv[k] == lo && gv[k] > 0.0) || (bv[k] == hi && gv[k] < 0.0);
        if (!active) acc += qw[k] * gv[k] * gv[k];
    }
    return acc;
}

Field step_project(const Field& beta, double delta, const Field& g, double lo, double hi) {
    Field out = beta;
    auto& ov = out.data();
    const auto& gv = g.data();
    for (size_t k = 0; k < ov.size(); ++k) ov[k] = std::clamp(ov[k] - delta * gv[k], lo, hi);
    return out;
}

FitReport descend(Problem& prob, Field& beta, double lo, double hi, const FitOptions& opt) {
    if (opt.max_iter < 1) throw InputError("max_iter must be at least 1");
    if (!(opt.stall > 0.0)) throw InputError("line search stall floor must be positive");
    for (double v : beta.data())
        if (v < lo || v > hi) throw InputError("starting control must lie inside the admissible box");

    double J = prob.evaluate(beta);

    FitReport rep;
    rep.initial_objective = J;
    rep.eps = opt.eps >= 0.0 ? opt.eps : 1e-6 * J;

    Field g = prob.gradient();
    double gg = masked_norm_sq(g, beta, lo, hi, prob.qw);
    rep.trace.push_back({0, J, 0.0, std::sqrt(gg)});

    double delta0 = 1.0 / (sup_norm(g) + 1.0);
    bool state_stale = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
        if (gg == 0.0) {  // projected gradient vanished: first-order optimal
            rep.stop_reason = StopReason::ToleranceMet;
            rep.converged = true;
            break;
        }
        const double dphi0 = -gg;
        double delta = delta0;
        Field trial = step_project(beta, delta, g, lo, hi);
        double phi = prob.evaluate(trial);
        bool stalled = false, shrunk = false;
        while (phi >= J) {
            shrunk = true;
            delta = quadratic_step(J, dphi0, delta, phi);
            if (delta < opt.stall) {
                stalled = true;
                break;
            }
            trial = step_project(beta, delta, g, lo, hi);
            phi = prob.evaluate(trial);
        }
        if (stalled) {
            rep.stop_reason = StopReason::LineSearchStall;
            state_stale = true;
            break;
        }
        const double dj = J - phi;
        beta = std::move(trial);
        J = phi;
        // carry the accepted step into the next search; an immediately
        // accepted trial frees the step to grow back toward the curvature
        // limit, without which weakly coupled control nodes crawl
        delta0 = shrunk ? delta : std::min(2.0 * delta, 1e12);
        g = prob.gradient();
        gg = masked_norm_sq(g, beta, lo, hi, prob.qw);
        rep.iterations = it;
        rep.trace.push_back({it, J, delta, std::sqrt(gg)});
        if (dj < rep.eps) {
            rep.stop_reason = StopReason::ToleranceMet;
            rep.converged = true;
            break;
        }
    }
    if (state_stale) prob.evaluate(beta);  // leave the cached state at the accepted control
    rep.final_objective = J;
    return rep;
}

struct PdeProblem final : Problem {
    const Grid& g;
    const Params& p;
    const Field& data;
    const InitialState& init;
    PdeWorkspace ws;
    PdeSolution last;

    PdeProblem(const Grid& g_, const Params& p_, const Field& data_, const InitialState& init_,
               const Field& beta0)
        : g(g_), p(p_), data(data_), init(init_), ws(g_, p_) {
        const bool series = beta0.nx() == 1 && beta0.ny() == 1;
        qw.reserve(beta0.data().size());
        for (int m = 0; m <= g.nt; ++m) {
            const double wt = series_weight(m, g.nt, g.dt());
            if (series) {
                qw.push_back(wt);
            } else {
                for (int i = 0; i < g.nx; ++i)
                    for (int j = 0; j < g.ny; ++j) qw.push_back(wt * node_weight(g, i, j));
            }
        }
    }

    double evaluate(const Field& beta) override {
        last = solve_forward(g, p, beta, init, &ws);
        return objective(last, data, p.omega);
    }

    Field gradient() override {
        const AdjointSolution adj = solve_adjoint(last, data, &ws);
        return gradient_beta(last, adj);
    }
};

struct OdeProblem final : Problem {
    const Params& p;
    TimeGrid tg;
    std::span<const double> data;
    StateTriple init;
    Trajectory last;
    std::vector<double> beta_last;

    OdeProblem(const Params& p_, const TimeGrid& tg_, std::span<const double> data_,
               const StateTriple& init_)
        : p(p_), tg(tg_), data(data_), init(init_) {
        qw.reserve(tg.nt + 1);
        for (int m = 0; m <= tg.nt; ++m) qw.push_back(series_weight(m, tg.nt, tg.dt()));
    }

    double evaluate(const Field& beta) override {
        beta_last = beta.data();
        last = ode_solve(p, std::span<const double>(beta_last), init, tg);
        double track = 0.0, reg = 0.0;
        for (int m = 0; m <= tg.nt; ++m) {
            const double r = last.y2[m] - data[m];
            track += qw[m] * r * r;
            reg += qw[m] * beta_last[m] * beta_last[m];
        }
        return 0.5 * track + 0.5 * p.omega * reg;
    }

    Field gradient() override {
        const int nt = tg.nt;
        const double dt = tg.dt();
        std::vector<double> z1(nt + 1, 0.0), z2(nt + 1, 0.0), z3(nt + 1, 0.0);
        for (int k = nt - 1; k >= 0; --k) {
            const int m = k + 1;
            double r1 = z1[m], r2 = z2[m], r3 = z3[m];
            if (m < nt) {  // the terminal costate level is zero
                const double bb = 0.5 * (beta_last[m] + beta_last[m + 1]);
                const Matrix3 jf =
                    reaction_jacobian(p, StateTriple(last.y1[m], last.y2[m], last.y3[m]), bb);
                r1 += dt * (jf[0][0] * z1[m] + jf[1][0] * z2[m] + jf[2][0] * z3[m]);
                r2 += dt * (jf[0][1] * z1[m] + jf[1][1] * z2[m] + jf[2][1] * z3[m]);
                r3 += dt * (jf[0][2] * z1[m] + jf[1][2] * z2[m] + jf[2][2] * z3[m]);
            }
            r2 += qw[m] * (last.y2[m] - data[m]);
            z1[k] = r1;
            z2[k] = r2;
            z3[k] = r3;
        }
        Field grad(nt + 1, 1, 1);
        double p_prev = 0.0;
        for (int m = 0; m <= nt; ++m) {
            const double y = (last.y1[m] + last.y2[m]) + last.y3[m];
            const double p_cur = infection_flux(1.0, last.y1[m], last.y2[m], y) * (z2[m] - z1[m]);
            const double cm = dt / (2.0 * qw[m]);
            grad(m, 0, 0) = p.omega * beta_last[m] + cm * (p_prev + p_cur);
            p_prev = p_cur;
        }
        return grad;
    }
};

} // namespace

PdeFitResult fit_pde(const Grid& g, const Params& p, const Field& data, const InitialState& init,
                     const Field& beta0, const FitOptions& opt) {
    g.validate();
    p.validate();
    PdeProblem prob(g, p, data, init, beta0);
    Field beta = beta0;
    FitReport rep = descend(prob, beta, p.beta_min, p.beta_max, opt);
    return {std::move(beta), std::move(prob.last), std::move(rep)};
}

OdeFitResult fit_ode_time_varying(const Params& p, const TimeGrid& tg, std::span<const double> data,
                                  std::span<const double> beta0, const StateTriple& init,
                                  const FitOptions& opt) {
    tg.validate();
    p.validate();
    if (static_cast<int>(data.size()) != tg.nt + 1)
        throw InputError("data series must hold nt+1 samples");
    if (static_cast<int>(beta0.size()) != tg.nt + 1)
        throw InputError("initial control series must hold nt+1 values");
    OdeProblem prob(p, tg, data, init);
    Field beta(tg.nt + 1, 1, 1);
    std::copy(beta0.begin(), beta0.end(), beta.data().begin());
    FitReport rep = descend(prob, beta, p.beta_min, p.beta_max, opt);
    return {std::move(beta.data()), std::move(prob.last), std::move(rep)};
}

std::string fit_trace_csv(const FitReport& r) {
    std::string out = "iter,objective,delta,grad_norm\n";
    char line[160];
    for (const TraceRow& row : r.trace) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", row.iter, row.objective,
                      row.delta, row.grad_norm);
        out += line;
    }
    return out;
}

} // namespace sirs
