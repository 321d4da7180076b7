#pragma once

#include <array>
#include <vector>

namespace sirs {

using Vec3 = std::array<double, 3>;
// row-major 3x3, M[i][j] = d f_i / d y_j
using Matrix3 = std::array<std::array<double, 3>, 3>;

// Epidemiological rates and box constraints for the transmission rate.
// All rates share one time unit (years for the spatial runs, months for the
// seasonal ones); the caller keeps that consistent.
struct Params {
    double mu = 0.1;     // birth/death rate
    double gamma = 1.0;  // recovery rate
    double kappa = 0.5;  // immunity loss rate
    double d1 = 0.0, d2 = 0.0, d3 = 0.0;  // diffusivities
    double beta_min = 0.0, beta_max = 4.0;
    double omega = 1e-3;  // regularization weight

    void validate() const;
};

// Compartment values at one point. y caches y1+y2+y3.
struct StateTriple {
    double y1, y2, y3, y;

    StateTriple(double s, double i, double r);
};

// Transmission pressure beta*y1*y2/y, extended by 0 whenever y1 or y2
// vanishes (which covers y = 0).
double infection_flux(double beta, double y1, double y2, double y);

// Right-hand side of the reaction kinetics. Components cancel to within
// roundoff of the shared terms, and exactly at the equilibria.
Vec3 reaction(const Params& p, const StateTriple& s, double beta);

// Unchecked fast path shared by the time steppers. y must equal y1+y2+y3
// as computed by the caller; the checked overload delegates here so both
// produce identical floating-point results.
Vec3 reaction_unchecked(const Params& p, double y1, double y2, double y3, double y, double beta);

// Pointwise Jacobian of the reaction in the compartment values.
// Columns sum to zero; the flux partials use the one-sided smooth formula
// on the extension seam.
Matrix3 reaction_jacobian(const Params& p, const StateTriple& s, double beta);

// Linearization of the kinetics with the total population frozen at s.y:
// recruitment and the flux denominator are constants, so perturbations do
// not feed back through the total. This is the matrix the equilibrium
// analysis diagonalizes; reaction_jacobian lets the total float instead.
Matrix3 frozen_total_jacobian(const Params& p, const StateTriple& s, double beta);

double basic_reproductive_number(const Params& p, double beta);

enum class EquilibriumKind { DiseaseFree, Endemic };

struct Equilibrium {
    EquilibriumKind kind;
    StateTriple state;
    double r0;
};

// Spatially constant steady states for total population y0. The endemic
// state is included only when r0 > 1; its components close to y0 exactly.
std::vector<Equilibrium> equilibria(const Params& p, double beta, double y0);

} // namespace sirs
