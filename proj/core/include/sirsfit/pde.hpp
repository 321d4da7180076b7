#pragma once

#include <memory>

#include "sirsfit/grid.hpp"
#include "sirsfit/model.hpp"

namespace sirs {

// One slice per compartment.
struct InitialState {
    Field y1, y2, y3;
};

// Forward trajectory of the reaction-diffusion system together with the
// inputs that produced it. beta keeps the shape it was passed with: a full
// space-time field or an (nt+1) x 1 x 1 series broadcast in space.
struct PdeSolution {
    Grid grid;
    Params params;
    Field beta;
    Field y1, y2, y3;
};

// Factored implicit-diffusion operators for one (grid, params) pair.
// Building one up front and passing it around avoids refactoring the
// linear systems on every solve inside a fitting loop. Safe to share
// between threads once constructed.
class PdeWorkspace {
public:
    PdeWorkspace(const Grid& g, const Params& p);
    struct Impl;
    const Impl& impl() const { return *impl_; }

private:
    std::shared_ptr<const Impl> impl_;
};

// IMEX time stepping: explicit reaction step with beta averaged between the
// two bracketing time nodes, then backward-Euler diffusion through factored
// constant-coefficient solves. Preserves nonnegativity and total mass.
PdeSolution solve_forward(const Grid& g, const Params& p, const Field& beta,
                          const InitialState& init, const PdeWorkspace* ws = nullptr);

// 1/2 ||y2 - data||^2 + omega/2 ||beta||^2, trapezoidal in time and space.
double objective(const PdeSolution& sol, const Field& data, double omega);

// Reads a control value honoring the broadcast shape.
inline double control_value(const Field& beta, int t, int i, int j) {
    return (beta.nx() == 1 && beta.ny() == 1) ? beta(t, 0, 0) : beta(t, i, j);
}

} // namespace sirs
