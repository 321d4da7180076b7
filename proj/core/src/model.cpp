#include "sirsfit/model.hpp"

#include <cmath>
#include <string>

#include "sirsfit/errors.hpp"

namespace sirs {

void Params::validate() const {
    auto bad = [](const char* name) {
        throw InputError(std::string("invalid parameter: ") + name);
    };
    if (!(mu > 0) || !std::isfinite(mu)) bad("mu must be positive");
    if (!(gamma > 0) || !std::isfinite(gamma)) bad("gamma must be positive");
    if (!(kappa > 0) || !std::isfinite(kappa)) bad("kappa must be positive");
    if (d1 < 0 || d2 < 0 || d3 < 0) bad("diffusivities must be nonnegative");
    if (!std::isfinite(d1) || !std::isfinite(d2) || !std::isfinite(d3)) bad("diffusivities must be finite");
    if (!(beta_min <= beta_max)) bad("beta_min must not exceed beta_max");
    if (beta_min < 0) bad("beta_min must be nonnegative");
    if (!(omega > 0) || !std::isfinite(omega)) bad("omega must be positive");
}

StateTriple::StateTriple(double s, double i, double r) : y1(s), y2(i), y3(r), y(s + i + r) {
    if (y1 < 0 || y2 < 0 || y3 < 0)
        throw InputError("compartment values must be nonnegative");
    if (!std::isfinite(y))
        throw InputError("compartment values must be finite");
}

double infection_flux(double beta, double y1, double y2, double y) {
    if (y1 == 0.0 || y2 == 0.0) return 0.0;
    return beta * y1 * y2 / y;
}

Vec3 reaction_unchecked(const Params& p, double y1, double y2, double y3, double y, double beta) {
    const double births = p.mu * y;
    const double inf = infection_flux(beta, y1, y2, y);
    const double rec = p.gamma * y2;
    const double rel = p.kappa * y3;
    // kept in the same accumulation order as the event-table drift
    const double f1 = ((births - p.mu * y1) - inf) + rel;
    const double f2 = (inf - p.mu * y2) - rec;
    const double f3 = (rec - p.mu * y3) - rel;
    return {f1, f2, f3};
}

Vec3 reaction(const Params& p, const StateTriple& s, double beta) {
    return reaction_unchecked(p, s.y1, s.y2, s.y3, s.y, beta);
}

Matrix3 reaction_jacobian(const Params& p, const StateTriple& s, double beta) {
    double dphi1 = 0, dphi2 = 0, dphi3 = 0;  // flux partials in y1, y2, y3
    if (s.y > 0.0) {
        const double invy2 = 1.0 / (s.y * s.y);
        dphi1 = beta * s.y2 * (s.y - s.y1) * invy2;
        dphi2 = beta * s.y1 * (s.y - s.y2) * invy2;
        dphi3 = -beta * s.y1 * s.y2 * invy2;
    }
    Matrix3 j;
    j[0] = {-dphi1, p.mu - dphi2, p.mu + p.kappa - dphi3};
    j[1] = {dphi1, dphi2 - (p.gamma + p.mu), dphi3};
    j[2] = {0.0, p.gamma, -(p.kappa + p.mu)};
    return j;
}

Matrix3 frozen_total_jacobian(const Params& p, const StateTriple& s, double beta) {
    double dphi1 = 0, dphi2 = 0;  // flux partials with the denominator pinned
    if (s.y > 0.0) {
        dphi1 = beta * s.y2 / s.y;
        dphi2 = beta * s.y1 / s.y;
    }
    Matrix3 j;
    j[0] = {-p.mu - dphi1, -dphi2, p.kappa};
    j[1] = {dphi1, dphi2 - (p.gamma + p.mu), 0.0};
    j[2] = {0.0, p.gamma, -(p.kappa + p.mu)};
    return j;
}

double basic_reproductive_number(const Params& p, double beta) {
    return beta / (p.gamma + p.mu);
}

std::vector<Equilibrium> equilibria(const Params& p, double beta, double y0) {
    p.validate();
    if (!(y0 > 0) || !std::isfinite(y0)) throw InputError("y0 must be positive");
    if (beta < 0 || !std::isfinite(beta)) throw InputError("beta must be nonnegative");

    const double r0 = basic_reproductive_number(p, beta);
    std::vector<Equilibrium> out;
    out.push_back({EquilibriumKind::DiseaseFree, StateTriple(y0, 0.0, 0.0), r0});
    if (r0 > 1.0) {
        const double gm = p.gamma + p.mu;
        const double denom = beta * (gm + p.kappa);
        const double y1e = y0 * gm / beta;
        const double y2e = y0 * (p.kappa + p.mu) * (beta - gm) / denom;
        // third component closes the population exactly
        const double y3e = y0 - (y1e + y2e);
        out.push_back({EquilibriumKind::Endemic, StateTriple(y1e, y2e, y3e), r0});
    }
    return out;
}

} // namespace sirs
