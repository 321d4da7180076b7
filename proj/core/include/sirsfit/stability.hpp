#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "sirsfit/grid.hpp"
#include "sirsfit/model.hpp"

namespace sirs {

// A band of +-1e-9 around a zero largest real part is reported as marginal
// rather than forced to either side.
enum class Verdict { Stable, Marginal, Unstable };
const char* to_string(Verdict v);

// Linearized dynamics of one spatial mode: the matrix -lambda*D + J with J
// the frozen-total Jacobian at the equilibrium, its spectrum, and the
// classification both ways (eigenvalues and the cubic criterion).
struct ModeAnalysis {
    int j = 0, k = 0;
    double lambda = 0.0;
    Matrix3 matrix{};
    std::array<std::complex<double>, 3> eigenvalues{};  // descending real part
    double max_real = 0.0;
    Verdict verdict = Verdict::Stable;
    std::array<double, 3> char_coeffs{};  // monic cubic: a1, a2, a3
    bool rh_stable = false;

    bool stable() const { return max_real < 0.0; }
};

struct EquilibriumAnalysis {
    Equilibrium equilibrium;
    std::vector<ModeAnalysis> modes;  // increasing lambda, lexicographic (j,k) ties
    Verdict verdict = Verdict::Stable;  // worst mode
};

// Enumerates the n_modes lowest Neumann modes on (0,a)x(0,b) and classifies
// each. Requesting the endemic equilibrium needs r0 > 1.
EquilibriumAnalysis analyze_equilibrium(const Params& p, double beta, double y0,
                                        EquilibriumKind which, int n_modes = 50, double a = 1.0,
                                        double b = 1.0);

// True iff every root of eta^3 + a1*eta^2 + a2*eta + a3 has negative real
// part: a1 > 0, a3 > 0 and a1*a2 > a3.
bool routh_hurwitz_3(double a1, double a2, double a3);

// Coefficients (a1, a2, a3) of the monic characteristic cubic of m.
std::array<double, 3> characteristic_coefficients(const Matrix3& m);

struct SweepRow {
    double beta = 0.0;
    double r0 = 0.0;
    bool dfe_stable = false;
    bool endemic_exists = false;
    bool endemic_stable = false;
};

// Classification along a uniform beta range with the remaining parameters
// held at p. Stability flags use strict negativity of the largest real part
// across the first n_modes modes.
std::vector<SweepRow> stability_sweep(const Params& p, double y0, double beta_lo, double beta_hi,
                                      int n_beta, int n_modes = 50, double a = 1.0, double b = 1.0);

// CSV rendering: beta,r0,dfe_stable,endemic_exists,endemic_stable.
std::string sweep_csv(const std::vector<SweepRow>& rows);

} // namespace sirs
