#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sirsfit/model.hpp"

namespace sirs {

struct TimeGrid {
    double T = 1.0;
    int nt = 100;

    double dt() const { return T / nt; }
    void validate() const;
};

struct Trajectory {
    TimeGrid tg;
    std::vector<double> t, y1, y2, y3;  // nt+1 entries each
};

// Forward-Euler integration of the spatially homogeneous kinetics. A step
// from node n uses beta averaged between nodes n and n+1, matching the PDE
// solver's reaction treatment so the d=0 reduction is bitwise identical.
Trajectory ode_solve(const Params& p, double beta, const StateTriple& init, const TimeGrid& tg);
Trajectory ode_solve(const Params& p, std::span<const double> beta, const StateTriple& init, const TimeGrid& tg);

// The seven elementary population events: compartment increments and the
// rates at which they fire. Summing rate * increment recovers the reaction
// right-hand side exactly.
struct EventTable {
    static constexpr int count = 7;
    static constexpr std::array<std::array<int, 3>, 7> increments{{
        {{1, 0, 0}},   // birth of a susceptible
        {{-1, 0, 0}},  // susceptible death
        {{-1, 1, 0}},  // infection
        {{0, -1, 0}},  // infected death
        {{0, -1, 1}},  // recovery
        {{0, 0, -1}},  // recovered death
        {{1, 0, -1}},  // immunity loss
    }};
    static std::array<double, 7> rates(const Params& p, const StateTriple& s, double beta);
    static Vec3 drift(const Params& p, const StateTriple& s, double beta);
};

// Event-sourced covariance of the demographic fluctuations, in closed form.
Matrix3 variance_matrix(const Params& p, const StateTriple& s, double beta);

// 3x7 noise amplitude G with G G^T equal to variance_matrix: column j is
// sqrt(rate_j) times the j-th increment.
using NoiseMatrix = std::array<std::array<double, 7>, 3>;
NoiseMatrix ansatz_noise_matrix(const Params& p, const StateTriple& s, double beta);

struct SdeConfig {
    double rho = 0.0;        // noise intensity
    std::uint64_t seed = 0;
    int n_realizations = 1;
};

// Euler-Maruyama with seven independent Gaussian channels per step and
// post-step clamping at zero. rho = 0 reproduces ode_solve bitwise.
Trajectory sde_solve(const Params& p, double beta, const StateTriple& init, const TimeGrid& tg,
                     double rho, std::uint64_t seed);
Trajectory sde_solve(const Params& p, std::span<const double> beta, const StateTriple& init,
                     const TimeGrid& tg, double rho, std::uint64_t seed);

// Independent realizations with per-realization seeds derived from
// (cfg.seed, index); results do not depend on thread scheduling. Thread
// count comes from the SIRSFIT_THREADS environment variable (default 1).
std::vector<Trajectory> sde_ensemble(const Params& p, double beta, const StateTriple& init,
                                     const TimeGrid& tg, const SdeConfig& cfg);

struct EnsembleStats {
    std::vector<double> t;
    std::vector<double> mean1, sd1, mean2, sd2, mean3, sd3;
};
EnsembleStats ensemble_stats(const std::vector<Trajectory>& runs);

// Least-squares fit of constant parameters to an observed y2 series by
// Nelder-Mead. Free coordinates start from the values in the spec struct;
// fixed ones keep them.
struct ConstantFitSpec {
    double beta = 1.0, gamma = 1.0, y3_0 = 0.0;
    bool fit_beta = true, fit_gamma = true, fit_y3_0 = false;
    double y1_0 = 1000.0;  // y2_0 is taken from the first data sample
    int substeps = 4;      // ODE steps per unit of data time
    double tol = 1e-12;    // relative simplex spread tolerance
    int max_evals = 20000;
};
struct ConstantFitResult {
    double beta, gamma, y3_0;
    double residual;
    bool converged, degenerate;
    int evaluations, restarts;
};
ConstantFitResult fit_constant_params(std::span<const double> t, std::span<const double> v,
                                      const Params& base, const ConstantFitSpec& spec);

// Pointwise transmission-rate reconstruction from a positive incidence
// series on a uniform time grid: (dlog y2 + gamma + mu) * y_over_y1, with
// centered differences inside and one-sided differences at the ends.
std::vector<double> beta_ansatz(std::span<const double> y2d, double dt_data, const Params& p,
                                double y_over_y1 = 1.0);

} // namespace sirs
