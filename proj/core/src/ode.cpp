#include "sirsfit/ode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "sirsfit/errors.hpp"

namespace sirs {

void TimeGrid::validate() const {
    if (nt < 1) throw InputError("time grid needs at least one step");
    if (!(T > 0) || !std::isfinite(T)) throw InputError("horizon T must be positive");
}

namespace {

void check_ode_step(const Params& p, double beta_peak, double dt) {
    if (!(dt * (beta_peak + p.gamma + p.mu + p.kappa) < 1.0))
        throw InputError("time step too large for the explicit reaction step: "
                         "dt*(beta+gamma+mu+kappa) must stay below 1");
}

// clamp tiny negatives, reject real excursions
double clamp_floor(double v, double tol, int step, int comp) {
    if (v >= 0.0) return v;
    if (v < -tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "negative excursion %.3e at step %d, compartment y%d", v, step, comp);
        throw NumericalError(buf);
    }
    return 0.0;
}

template <class BetaAt>
Trajectory integrate(const Params& p, BetaAt&& beta_at, const StateTriple& init, const TimeGrid& tg,
                     double rho, std::mt19937_64* rng) {
    tg.validate();
    p.validate();
    const double dt = tg.dt();
    const double sq = rho * std::sqrt(dt);
    const double clamp_tol = 1e-9 * std::max(init.y, 1.0);

    Trajectory out;
    out.tg = tg;
    out.t.resize(tg.nt + 1);
    out.y1.resize(tg.nt + 1);
    out.y2.resize(tg.nt + 1);
    out.y3.resize(tg.nt + 1);
    out.t[0] = 0.0;
    out.y1[0] = init.y1;
    out.y2[0] = init.y2;
    out.y3[0] = init.y3;

    std::normal_distribution<double> gauss(0.0, 1.0);
    double y1v = init.y1, y2v = init.y2, y3v = init.y3;
    for (int n = 0; n < tg.nt; ++n) {
        const double bb = 0.5 * (beta_at(n) + beta_at(n + 1));
        const double yv = y1v + y2v + y3v;
        const Vec3 f = reaction_unchecked(p, y1v, y2v, y3v, yv, bb);
        double b1 = y1v + dt * f[0];
        double b2 = y2v + dt * f[1];
        double b3 = y3v + dt * f[2];
        if (rng) {
            const NoiseMatrix G = ansatz_noise_matrix(p, StateTriple(y1v, y2v, y3v), bb);
            double xi[7];
            for (double& x : xi) x = gauss(*rng);
            double n1 = 0, n2 = 0, n3 = 0;
            for (int j = 0; j < 7; ++j) {
                n1 += G[0][j] * xi[j];
                n2 += G[1][j] * xi[j];
                n3 += G[2][j] * xi[j];
            }
            b1 += sq * n1;
            b2 += sq * n2;
            b3 += sq * n3;
            // demographic noise may push through zero; clamp without reflection
            b1 = std::max(b1, 0.0);
            b2 = std::max(b2, 0.0);
            b3 = std::max(b3, 0.0);
        } else {
            b1 = clamp_floor(b1, clamp_tol, n + 1, 1);
            b2 = clamp_floor(b2, clamp_tol, n + 1, 2);
            b3 = clamp_floor(b3, clamp_tol, n + 1, 3);
        }
        if (!std::isfinite(b1) || !std::isfinite(b2) || !std::isfinite(b3)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "non-finite value at step %d", n + 1);
            throw NumericalError(buf);
        }
        y1v = b1;
        y2v = b2;
        y3v = b3;
        out.t[n + 1] = (n + 1) * dt;
        out.y1[n + 1] = y1v;
        out.y2[n + 1] = y2v;
        out.y3[n + 1] = y3v;
    }
    return out;
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(sq);
}

void check_beta_series(std::span<const double> beta, const TimeGrid& tg) {
    if (beta.size() != static_cast<size_t>(tg.nt) + 1)
        throw InputError("beta series must carry nt+1 values");
}

int env_thread_count() {
    const char* s = std::getenv("SIRSFIT_THREADS");
    if (!s) return 1;
    const int n = std::atoi(s);
    return std::clamp(n, 1, 256);
}

} // namespace

Trajectory ode_solve(const Params& p, double beta, const StateTriple& init, const TimeGrid& tg) {
    check_ode_step(p, beta, tg.dt());
    if (beta < 0) throw InputError("beta must be nonnegative");
    return integrate(p, [beta](int) { return beta; }, init, tg, 0.0, nullptr);
}

Trajectory ode_solve(const Params& p, std::span<const double> beta, const StateTriple& init, const TimeGrid& tg) {
    check_beta_series(beta, tg);
    const double peak = *std::max_element(beta.begin(), beta.end());
    if (*std::min_element(beta.begin(), beta.end()) < 0) throw InputError("beta must be nonnegative");
    check_ode_step(p, peak, tg.dt());
    return integrate(p, [beta](int n) { return beta[n]; }, init, tg, 0.0, nullptr);
}

std::array<double, 7> EventTable::rates(const Params& p, const StateTriple& s, double beta) {
    return {p.mu * s.y,  p.mu * s.y1, infection_flux(beta, s.y1, s.y2, s.y), p.mu * s.y2,
            p.gamma * s.y2, p.mu * s.y3, p.kappa * s.y3};
}

Vec3 EventTable::drift(const Params& p, const StateTriple& s, double beta) {
    const auto q = EventTable::rates(p, s, beta);
    Vec3 f{0.0, 0.0, 0.0};
    for (int j = 0; j < count; ++j)
        for (int c = 0; c < 3; ++c) {
            const int inc = increments[j][c];
            if (inc == 1)
                f[c] += q[j];
            else if (inc == -1)
                f[c] -= q[j];
        }
    return f;
}

Matrix3 variance_matrix(const Params& p, const StateTriple& s, double beta) {
    const auto q = EventTable::rates(p, s, beta);
    Matrix3 v{};
    v[0][0] = ((q[0] + q[1]) + q[2]) + q[6];
    v[0][1] = -q[2];
    v[0][2] = -q[6];
    v[1][0] = -q[2];
    v[1][1] = (q[2] + q[3]) + q[4];
    v[1][2] = -q[4];
    v[2][0] = -q[6];
    v[2][1] = -q[4];
    v[2][2] = (q[4] + q[5]) + q[6];
    return v;
}

NoiseMatrix ansatz_noise_matrix(const Params& p, const StateTriple& s, double beta) {
    const auto q = EventTable::rates(p, s, beta);
    NoiseMatrix g{};
    for (int j = 0; j < EventTable::count; ++j) {
        if (q[j] < 0.0) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "negative event rate %.3e in channel %d", q[j], j);
            throw NumericalError(buf);
        }
        const double r = std::sqrt(q[j]);
        for (int c = 0; c < 3; ++c) g[c][j] = r * EventTable::increments[j][c];
    }
    return g;
}

Trajectory sde_solve(const Params& p, double beta, const StateTriple& init, const TimeGrid& tg,
                     double rho, std::uint64_t seed) {
    if (rho < 0) throw InputError("rho must be nonnegative");
    if (beta < 0) throw InputError("beta must be nonnegative");
    check_ode_step(p, beta, tg.dt());
    auto rng = make_engine(seed, 0);
    return integrate(p, [beta](int) { return beta; }, init, tg, rho, &rng);
}

Trajectory sde_solve(const Params& p, std::span<const double> beta, const StateTriple& init,
                     const TimeGrid& tg, double rho, std::uint64_t seed) {
    if (rho < 0) throw InputError("rho must be nonnegative");
    check_beta_series(beta, tg);
    const double peak = *std::max_element(beta.begin(), beta.end());
    if (*std::min_element(beta.begin(), beta.end()) < 0) throw InputError("beta must be nonnegative");
    check_ode_step(p, peak, tg.dt());
    auto rng = make_engine(seed, 0);
    return integrate(p, [beta](int n) { return beta[n]; }, init, tg, rho, &rng);
}

std::vector<Trajectory> sde_ensemble(const Params& p, double beta, const StateTriple& init,
                                     const TimeGrid& tg, const SdeConfig& cfg) {
    if (cfg.n_realizations < 1) throw InputError("n_realizations must be at least 1");
    if (cfg.rho < 0) throw InputError("rho must be nonnegative");
    check_ode_step(p, beta, tg.dt());

    std::vector<Trajectory> runs(cfg.n_realizations);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= cfg.n_realizations) return;
            auto rng = make_engine(cfg.seed, static_cast<std::uint64_t>(r));
            runs[r] = integrate(p, [beta](int) { return beta; }, init, tg, cfg.rho, &rng);
        }
    };
    const int threads = std::min(env_thread_count(), cfg.n_realizations);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return runs;
}

EnsembleStats ensemble_stats(const std::vector<Trajectory>& runs) {
    if (runs.empty()) throw InputError("ensemble is empty");
    const size_t m = runs.front().t.size();
    for (const auto& r : runs)
        if (r.t.size() != m) throw InputError("ensemble trajectories differ in length");

    EnsembleStats st;
    st.t = runs.front().t;
    st.mean1.assign(m, 0.0);
    st.sd1.assign(m, 0.0);
    st.mean2.assign(m, 0.0);
    st.sd2.assign(m, 0.0);
    st.mean3.assign(m, 0.0);
    st.sd3.assign(m, 0.0);

    const double n = static_cast<double>(runs.size());
    auto accumulate = [&](auto sel, std::vector<double>& mean, std::vector<double>& sd) {
        for (const auto& r : runs) {
            const auto& y = sel(r);
            for (size_t k = 0; k < m; ++k) mean[k] += y[k];
        }
        for (size_t k = 0; k < m; ++k) mean[k] /= n;
        if (runs.size() > 1) {
            for (const auto& r : runs) {
                const auto& y = sel(r);
                for (size_t k = 0; k < m; ++k) {
                    const double d = y[k] - mean[k];
                    sd[k] += d * d;
                }
            }
            for (size_t k = 0; k < m; ++k) sd[k] = std::sqrt(sd[k] / (n - 1.0));
        }
    };
    accumulate([](const Trajectory& r) -> const std::vector<double>& { return r.y1; }, st.mean1, st.sd1);
    accumulate([](const Trajectory& r) -> const std::vector<double>& { return r.y2; }, st.mean2, st.sd2);
    accumulate([](const Trajectory& r) -> const std::vector<double>& { return r.y3; }, st.mean3, st.sd3);
    return st;
}

namespace {

// classic Nelder-Mead on n free coordinates
struct Simplex {
    std::vector<std::vector<double>> x;
    std::vector<double> f;
};

double sample_at(const Trajectory& tr, double tq) {
    const double dt = tr.tg.dt();
    const int n = tr.tg.nt;
    double pos = tq / dt;
    int k = static_cast<int>(pos);
    if (k < 0) k = 0;
    if (k >= n) return tr.y2.back();
    const double w = pos - k;
    return (1.0 - w) * tr.y2[k] + w * tr.y2[k + 1];
}

} // namespace

ConstantFitResult fit_constant_params(std::span<const double> t, std::span<const double> v,
                                      const Params& base, const ConstantFitSpec& spec) {
    if (t.size() != v.size() || t.size() < 2) throw InputError("fit needs matching t and value series, at least 2 samples");
    for (size_t k = 1; k < t.size(); ++k)
        if (!(t[k] > t[k - 1])) throw InputError("sample times must be strictly increasing");
    if (v[0] < 0) throw InputError("initial sample must be nonnegative");
    if (spec.y1_0 <= 0) throw InputError("y1_0 must be positive");

    const double t0 = t[0];
    const double horizon = t.back() - t0;
    TimeGrid tg{horizon, std::max(1, static_cast<int>(std::ceil(horizon * spec.substeps)))};

    std::vector<int> free_idx;  // 0 beta, 1 gamma, 2 y3_0
    if (spec.fit_beta) free_idx.push_back(0);
    if (spec.fit_gamma) free_idx.push_back(1);
    if (spec.fit_y3_0) free_idx.push_back(2);
    if (free_idx.empty()) throw InputError("at least one parameter must be free");

    int evals = 0;
    auto objective = [&](const std::vector<double>& x) -> double {
        ++evals;
        double beta = spec.beta, gamma = spec.gamma, y3_0 = spec.y3_0;
        for (size_t i = 0; i < free_idx.size(); ++i) {
            if (free_idx[i] == 0) beta = x[i];
            if (free_idx[i] == 1) gamma = x[i];
            if (free_idx[i] == 2) y3_0 = x[i];
        }
        if (beta <= 0 || gamma <= 0 || y3_0 < 0) return 1e300;
        Params p = base;
        p.gamma = gamma;
        try {
            const Trajectory tr = ode_solve(p, beta, StateTriple(spec.y1_0, v[0], y3_0), tg);
            double acc = 0.0;
            for (size_t k = 0; k < t.size(); ++k) {
                const double r = sample_at(tr, t[k] - t0) - v[k];
                acc += r * r;
            }
            return 0.5 * acc;
        } catch (const InputError&) {
            return 1e300;
        } catch (const NumericalError&) {
            return 1e300;
        }
    };

    const int n = static_cast<int>(free_idx.size());
    std::vector<double> start(n);
    for (int i = 0; i < n; ++i)
        start[i] = (free_idx[i] == 0) ? spec.beta : (free_idx[i] == 1) ? spec.gamma : spec.y3_0;

    auto run_simplex = [&](std::vector<double> x0) {
        Simplex s;
        s.x.assign(n + 1, x0);
        for (int i = 0; i < n; ++i) s.x[i + 1][i] += (x0[i] != 0.0) ? 0.05 * std::abs(x0[i]) : 0.05;
        s.f.resize(n + 1);
        for (int i = 0; i <= n; ++i) s.f[i] = objective(s.x[i]);

        while (evals < spec.max_evals) {
            // order
            std::vector<int> ord(n + 1);
            for (int i = 0; i <= n; ++i) ord[i] = i;
            std::sort(ord.begin(), ord.end(), [&](int a, int b) { return s.f[a] < s.f[b]; });
            Simplex t2;
            for (int i = 0; i <= n; ++i) {
                t2.x.push_back(s.x[ord[i]]);
                t2.f.push_back(s.f[ord[i]]);
            }
            s = std::move(t2);

            const double spread = std::abs(s.f[n] - s.f[0]);
            if (spread <= spec.tol * (1.0 + std::abs(s.f[0]))) break;

            std::vector<double> centroid(n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) centroid[j] += s.x[i][j] / n;

            auto blend = [&](double c) {
                std::vector<double> x(n);
                for (int j = 0; j < n; ++j) x[j] = centroid[j] + c * (centroid[j] - s.x[n][j]);
                return x;
            };
            auto xr = blend(1.0);
            const double fr = objective(xr);
            if (fr < s.f[0]) {
                auto xe = blend(2.0);
                const double fe = objective(xe);
                if (fe < fr) {
                    s.x[n] = xe;
                    s.f[n] = fe;
                } else {
                    s.x[n] = xr;
                    s.f[n] = fr;
                }
            } else if (fr < s.f[n - 1]) {
                s.x[n] = xr;
                s.f[n] = fr;
            } else {
                auto xc = blend(fr < s.f[n] ? 0.5 : -0.5);
                const double fc = objective(xc);
                if (fc < std::min(fr, s.f[n])) {
                    s.x[n] = xc;
                    s.f[n] = fc;
                } else {
                    // shrink toward the best point
                    for (int i = 1; i <= n; ++i) {
                        for (int j = 0; j < n; ++j) s.x[i][j] = s.x[0][j] + 0.5 * (s.x[i][j] - s.x[0][j]);
                        s.f[i] = objective(s.x[i]);
                    }
                }
            }
        }
        std::vector<int> ord(n + 1);
        for (int i = 0; i <= n; ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return s.f[a] < s.f[b]; });
        return std::pair{s.x[ord[0]], s.f[ord[0]]};
    };

    auto [best, fbest] = run_simplex(start);
    int restarts = 0;
    bool converged = evals < spec.max_evals;
    if (!converged) {
        // one restart from a perturbed point
        std::vector<double> again = best;
        for (double& c : again) c *= 1.10;
        evals = 0;
        restarts = 1;
        auto [b2, f2] = run_simplex(again);
        if (f2 < fbest) {
            best = b2;
            fbest = f2;
        }
        converged = evals < spec.max_evals;
    }

    ConstantFitResult res{spec.beta, spec.gamma, spec.y3_0, fbest, converged, false, evals, restarts};
    for (int i = 0; i < n; ++i) {
        if (free_idx[i] == 0) res.beta = best[i];
        if (free_idx[i] == 1) res.gamma = best[i];
        if (free_idx[i] == 2) res.y3_0 = best[i];
    }

    // flat-objective probe: nudging any free coordinate must move the residual
    bool flat = true;
    for (int i = 0; i < n && flat; ++i) {
        std::vector<double> probe = best;
        probe[i] = (probe[i] != 0.0) ? probe[i] * 1.05 : 0.05;
        if (std::abs(objective(probe) - fbest) > 1e-12 * (1.0 + std::abs(fbest))) flat = false;
    }
    res.degenerate = flat;
    return res;
}

std::vector<double> beta_ansatz(std::span<const double> y2d, double dt_data, const Params& p,
                                double y_over_y1) {
    if (y2d.size() < 2) throw InputError("need at least two samples for the rate ansatz");
    if (!(dt_data > 0)) throw InputError("data spacing must be positive");
    for (double v : y2d)
        if (!(v > 0)) throw InputError("rate ansatz needs strictly positive incidence samples");

    const size_t n = y2d.size();
    std::vector<double> beta(n);
    for (size_t k = 0; k < n; ++k) {
        double deriv;
        if (k == 0)
            deriv = (y2d[1] - y2d[0]) / dt_data;
        else if (k == n - 1)
            deriv = (y2d[n - 1] - y2d[n - 2]) / dt_data;
        else
            deriv = (y2d[k + 1] - y2d[k - 1]) / (2.0 * dt_data);
        beta[k] = (deriv / y2d[k] + p.gamma + p.mu) * y_over_y1;
    }
    return beta;
}

} // namespace sirs
