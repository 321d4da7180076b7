#pragma once

#include <span>
#include <string>
#include <vector>

#include "sirsfit/adjoint.hpp"
#include "sirsfit/ode.hpp"

namespace sirs {

enum class StopReason { ToleranceMet, MaxIterations, LineSearchStall };
const char* to_string(StopReason r);

// One accepted iterate: its objective, the step length that reached it
// (0 for the starting point) and the masked gradient norm there.
struct TraceRow {
    int iter;
    double objective;
    double delta;
    double grad_norm;
};

struct FitOptions {
    double eps = -1.0;     // |dJ| tolerance; negative means 1e-6 * J(beta0)
    int max_iter = 100;
    double stall = 1e-12;  // step-length floor before the line search gives up
};

struct FitReport {
    std::vector<TraceRow> trace;
    StopReason stop_reason = StopReason::MaxIterations;
    bool converged = false;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double eps = 0.0;  // tolerance actually applied
    int iterations = 0;
};

// Pointwise clamp onto [lo, hi], the L2 projection onto the admissible box.
Field project_box(const Field& beta, double lo, double hi);

// Minimizer of the quadratic through (0, phi0) with slope dphi0 and through
// (delta0, phi_delta0), clipped into [0.1, 0.9]*delta0. Nonpositive curvature
// falls back to 0.5*delta0; a non-descent slope is an input error.
double quadratic_step(double phi0, double dphi0, double delta0, double phi_delta0);

// Projected-gradient descent beta <- P(beta - delta*g) with a quadratic
// backtracking line search. The step length carries over between iterations.
// Accepted objectives decrease strictly; every iterate stays in the box.
struct PdeFitResult {
    Field beta;
    PdeSolution solution;
    FitReport report;
};
PdeFitResult fit_pde(const Grid& g, const Params& p, const Field& data, const InitialState& init,
                     const Field& beta0, const FitOptions& opt = {});

// Same iteration with the spatial dimension collapsed: beta and data are
// series on the nt+1 time nodes, the model is the homogeneous kinetics.
struct OdeFitResult {
    std::vector<double> beta;
    Trajectory trajectory;
    FitReport report;
};
OdeFitResult fit_ode_time_varying(const Params& p, const TimeGrid& tg, std::span<const double> data,
                                  std::span<const double> beta0, const StateTriple& init,
                                  const FitOptions& opt = {});

// CSV rendering of the trace: header iter,objective,delta,grad_norm.
std::string fit_trace_csv(const FitReport& r);

} // namespace sirs
