#include "sirsfit/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>

#include "sirsfit/errors.hpp"

namespace sirs {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Marginal: return "marginal";
        case Verdict::Unstable: return "unstable";
    }
    return "unknown";
}

bool routh_hurwitz_3(double a1, double a2, double a3) {
    return a1 > 0.0 && a3 > 0.0 && a1 * a2 > a3;
}

std::array<double, 3> characteristic_coefficients(const Matrix3& m) {
    const double tr = m[0][0] + m[1][1] + m[2][2];
    // sum of principal 2x2 minors
    const double m12 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double m13 = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    const double m23 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    return {-tr, m12 + m13 + m23, -det};
}

namespace {

constexpr double kMarginalBand = 1e-9;

Verdict classify(double max_real) {
    if (max_real < -kMarginalBand) return Verdict::Stable;
    if (max_real > kMarginalBand) return Verdict::Unstable;
    return Verdict::Marginal;
}

Verdict worst(Verdict a, Verdict b) {
    return static_cast<int>(a) >= static_cast<int>(b) ? a : b;
}

struct ModeKey {
    int j, k;
    double lambda;
};

// n lowest Neumann modes; lambda grows in each index, so candidates from
// the n x n corner suffice.
std::vector<ModeKey> lowest_modes(int n, double a, double b) {
    std::vector<ModeKey> keys;
    keys.reserve(static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) keys.push_back({j, k, neumann_eigenpair(j, k, a, b).lambda});
    std::sort(keys.begin(), keys.end(), [](const ModeKey& l, const ModeKey& r) {
        if (l.lambda != r.lambda) return l.lambda < r.lambda;
        if (l.j != r.j) return l.j < r.j;
        return l.k < r.k;
    });
    keys.resize(n);
    return keys;
}

ModeAnalysis analyze_mode(const Params& p, const Equilibrium& eq, double beta, const ModeKey& key) {
    ModeAnalysis m;
    m.j = key.j;
    m.k = key.k;
    m.lambda = key.lambda;
    m.matrix = frozen_total_jacobian(p, eq.state, beta);
    const double d[3] = {p.d1, p.d2, p.d3};
    for (int i = 0; i < 3; ++i) m.matrix[i][i] -= key.lambda * d[i];

    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a(r, c) = m.matrix[r][c];
    Eigen::EigenSolver<Eigen::Matrix3d> solver(a, false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration failed");
    for (int i = 0; i < 3; ++i) m.eigenvalues[i] = solver.eigenvalues()(i);
    std::sort(m.eigenvalues.begin(), m.eigenvalues.end(),
              [](const std::complex<double>& l, const std::complex<double>& r) {
                  if (l.real() != r.real()) return l.real() > r.real();
                  return l.imag() < r.imag();
              });
    m.max_real = m.eigenvalues[0].real();
    m.verdict = classify(m.max_real);
    m.char_coeffs = characteristic_coefficients(m.matrix);
    m.rh_stable = routh_hurwitz_3(m.char_coeffs[0], m.char_coeffs[1], m.char_coeffs[2]);
    return m;
}

} // namespace

EquilibriumAnalysis analyze_equilibrium(const Params& p, double beta, double y0,
                                        EquilibriumKind which, int n_modes, double a, double b) {
    if (n_modes < 1) throw InputError("mode count must be at least 1");
    if (!(a > 0) || !(b > 0)) throw InputError("domain sides must be positive");
    const std::vector<Equilibrium> eqs = equilibria(p, beta, y0);
    const Equilibrium* eq = nullptr;
    for (const Equilibrium& e : eqs)
        if (e.kind == which) eq = &e;
    if (!eq) throw InputError("endemic equilibrium needs r0 > 1");

    EquilibriumAnalysis out{*eq, {}, Verdict::Stable};
    out.modes.reserve(n_modes);
    for (const ModeKey& key : lowest_modes(n_modes, a, b)) {
        out.modes.push_back(analyze_mode(p, *eq, beta, key));
        out.verdict = worst(out.verdict, out.modes.back().verdict);
    }
    return out;
}

std::vector<SweepRow> stability_sweep(const Params& p, double y0, double beta_lo, double beta_hi,
                                      int n_beta, int n_modes, double a, double b) {
    if (n_beta < 1) throw InputError("sweep needs at least one sample");
    if (!(beta_lo <= beta_hi) || !std::isfinite(beta_lo) || !std::isfinite(beta_hi))
        throw InputError("sweep range must be finite and ordered");
    std::vector<SweepRow> rows;
    rows.reserve(n_beta);
    for (int s = 0; s < n_beta; ++s) {
        const double beta =
            n_beta == 1 ? beta_lo : beta_lo + (beta_hi - beta_lo) * s / (n_beta - 1);
        SweepRow row;
        row.beta = beta;
        row.r0 = basic_reproductive_number(p, beta);
        const EquilibriumAnalysis dfe =
            analyze_equilibrium(p, beta, y0, EquilibriumKind::DiseaseFree, n_modes, a, b);
        bool all = true;
        for (const ModeAnalysis& m : dfe.modes) all = all && m.stable();
        row.dfe_stable = all;
        row.endemic_exists = row.r0 > 1.0;
        if (row.endemic_exists) {
            const EquilibriumAnalysis en =
                analyze_equilibrium(p, beta, y0, EquilibriumKind::Endemic, n_modes, a, b);
            all = true;
            for (const ModeAnalysis& m : en.modes) all = all && m.stable();
            row.endemic_stable = all;
        }
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "beta,r0,dfe_stable,endemic_exists,endemic_stable\n";
    char line[128];
    for (const SweepRow& r : rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%d,%d,%d\n", r.beta, r.r0,
                      r.dfe_stable ? 1 : 0, r.endemic_exists ? 1 : 0, r.endemic_stable ? 1 : 0);
        out += line;
    }
    return out;
}

} // namespace sirs
