#pragma once

#include "sirsfit/pde.hpp"

namespace sirs {

// Costate of the tracking functional. Stored on the same nt+1 levels as the
// forward solution; the terminal level is exactly zero.
struct AdjointSolution {
    Field z1, z2, z3;
};

// Marches the adjoint system backward from z(T) = 0 with the time-reversed
// IMEX scheme: the reaction coupling (Jacobian transpose) and the tracking
// residual enter explicitly, diffusion implicitly through the same factored
// operators as the forward solve. The residual carries its trapezoidal
// quadrature weight so the resulting gradient is the exact transpose of the
// discrete forward linearization.
AdjointSolution solve_adjoint(const PdeSolution& fwd, const Field& data, const PdeWorkspace* ws = nullptr);

// dJ/dbeta as a density against the control inner product. Shape follows
// fwd.beta: pointwise omega*beta + (y1 y2/y)(z2 - z1) staggering included
// for the full control, additionally integrated over the domain for the
// time-only control.
Field gradient_beta(const PdeSolution& fwd, const AdjointSolution& adj);

// Forward linearization of the solve in a control direction h (same shape
// as fwd.beta). The initial level is exactly zero.
struct SensitivitySolution {
    Field u1, u2, u3;
};
SensitivitySolution solve_sensitivity(const PdeSolution& fwd, const Field& direction,
                                      const PdeWorkspace* ws = nullptr);

// Directional derivative of the objective assembled from the sensitivity:
// <y2 - data, u2> + omega <beta, h>, the second route of the dual check.
double directional_derivative(const PdeSolution& fwd, const SensitivitySolution& sens,
                              const Field& data, const Field& direction, double omega);

// Quadrature inner product matching the control shape: trapezoid in time
// and space for full fields, trapezoid in time for 1x1 series.
double inner_q(const Grid& g, const Field& f, const Field& h);

} // namespace sirs
