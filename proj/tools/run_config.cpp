#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/Core>

#include "sirsfit/data_io.hpp"
#include "sirsfit/errors.hpp"

#ifndef SIRSFIT_VERSION
#define SIRSFIT_VERSION "0.0.0"
#endif

namespace sirs {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
    return s.substr(b, e - b);
}

double as_double(const std::string& key, const std::string& v) {
    double out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        throw InputError(key + " wants a finite number, got '" + v + "'");
    return out;
}

int as_int(const std::string& key, const std::string& v) {
    int out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw InputError(key + " wants an integer, got '" + v + "'");
    return out;
}

std::uint64_t as_u64(const std::string& key, const std::string& v) {
    std::uint64_t out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw InputError(key + " wants a nonnegative integer, got '" + v + "'");
    return out;
}

bool as_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InputError(key + " wants true or false, got '" + v + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

} // namespace

RunConfig make_config() {
    RunConfig rc;
    rc.p.mu = 1.0 / 780.0;
    rc.p.gamma = 1.0 / 0.879;
    rc.p.kappa = 1.0 / 9.0;
    rc.p.d1 = 0.005;
    rc.p.d2 = 0.001;
    rc.p.d3 = 0.005;
    rc.p.beta_min = 0.0;
    rc.p.beta_max = 4.0;
    rc.p.omega = 1e-3;
    return rc;
}

void RunConfig::set(const std::string& key, const std::string& v) {
    if (key == "mu") p.mu = as_double(key, v);
    else if (key == "gamma") p.gamma = as_double(key, v);
    else if (key == "kappa") p.kappa = as_double(key, v);
    else if (key == "d1") p.d1 = as_double(key, v);
    else if (key == "d2") p.d2 = as_double(key, v);
    else if (key == "d3") p.d3 = as_double(key, v);
    else if (key == "beta_min") p.beta_min = as_double(key, v);
    else if (key == "beta_max") p.beta_max = as_double(key, v);
    else if (key == "omega") p.omega = as_double(key, v);
    else if (key == "y1_0") y1_0 = as_double(key, v);
    else if (key == "y2_0") y2_0 = as_double(key, v);
    else if (key == "y3_0") y3_0 = as_double(key, v);
    else if (key == "nx") nx = as_int(key, v);
    else if (key == "ny") ny = as_int(key, v);
    else if (key == "nt") nt = as_int(key, v);
    else if (key == "T") T = as_double(key, v);
    else if (key == "a") a = as_double(key, v);
    else if (key == "b") b = as_double(key, v);
    else if (key == "beta") beta = as_double(key, v);
    else if (key == "beta_init") beta_init = as_double(key, v);
    else if (key == "beta_mode") beta_mode = v;
    else if (key == "eps") eps = as_double(key, v);
    else if (key == "max_iter") max_iter = as_int(key, v);
    else if (key == "stall") stall = as_double(key, v);
    else if (key == "rho") rho = as_double(key, v);
    else if (key == "seed") seed = as_u64(key, v);
    else if (key == "n_realizations") n_realizations = as_int(key, v);
    else if (key == "stiffness") stiffness = as_double(key, v);
    else if (key == "max_lag") max_lag = as_int(key, v);
    else if (key == "lag_mode") lag_mode = v;
    else if (key == "n_modes") n_modes = as_int(key, v);
    else if (key == "beta_lo") beta_lo = as_double(key, v);
    else if (key == "beta_hi") beta_hi = as_double(key, v);
    else if (key == "n_beta") n_beta = as_int(key, v);
    else if (key == "ode_fit") ode_fit = v;
    else if (key == "substeps") substeps = as_int(key, v);
    else if (key == "fit_gamma") fit_gamma = as_bool(key, v);
    else if (key == "fit_y3_0") fit_y3_0 = as_bool(key, v);
    else if (key == "incidence") incidence = v;
    else if (key == "spatial") spatial = v;
    else if (key == "meteo") meteo = v;
    else if (key == "out_dir") out_dir = v;
    else throw InputError("unknown config key '" + key + "'");
    given.insert(key);
}

void RunConfig::validate_for(const std::string& subcommand) const {
    p.validate();
    if (beta_mode != "time" && beta_mode != "time-space")
        throw InputError("beta_mode must be time or time-space");
    if (lag_mode != "daily" && lag_mode != "monthly")
        throw InputError("lag_mode must be daily or monthly");
    if (ode_fit != "time-varying" && ode_fit != "constant")
        throw InputError("ode_fit must be time-varying or constant");
    if (y1_0 < 0 || y2_0 < 0 || y3_0 < 0)
        throw InputError("initial compartments must be nonnegative");
    if (out_dir.empty()) throw InputError("out_dir must not be empty");
    if (subcommand == "fit-pde" || subcommand == "gridfit") {
        if (spatial.empty()) throw InputError(subcommand + " needs a spatial CSV (key spatial)");
    }
    if (subcommand == "fit-ode" && incidence.empty())
        throw InputError("fit-ode needs an incidence CSV (key incidence)");
    if (subcommand == "correlate") {
        if (incidence.empty() || meteo.empty())
            throw InputError("correlate needs incidence and meteo CSVs");
    }
    if (subcommand == "simulate-sde") {
        if (n_realizations < 1) throw InputError("n_realizations must be at least 1");
        if (rho < 0 || !std::isfinite(rho)) throw InputError("rho must be nonnegative");
    }
}

void load_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open config " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError(path + " line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw InputError(path + " line " + std::to_string(lineno) + ": empty key or value");
        try {
            rc.set(key, value);
        } catch (const InputError& e) {
            throw InputError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    rc.config_path = path;
}

std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& rc) {
    return {
        {"mu", fmt(rc.p.mu)},
        {"gamma", fmt(rc.p.gamma)},
        {"kappa", fmt(rc.p.kappa)},
        {"d1", fmt(rc.p.d1)},
        {"d2", fmt(rc.p.d2)},
        {"d3", fmt(rc.p.d3)},
        {"beta_min", fmt(rc.p.beta_min)},
        {"beta_max", fmt(rc.p.beta_max)},
        {"omega", fmt(rc.p.omega)},
        {"y1_0", fmt(rc.y1_0)},
        {"y2_0", fmt(rc.y2_0)},
        {"y3_0", fmt(rc.y3_0)},
        {"nx", fmt(rc.nx)},
        {"ny", fmt(rc.ny)},
        {"nt", fmt(rc.nt)},
        {"T", fmt(rc.T)},
        {"a", fmt(rc.a)},
        {"b", fmt(rc.b)},
        {"beta", fmt(rc.beta)},
        {"beta_init", fmt(rc.beta_init)},
        {"beta_mode", rc.beta_mode},
        {"eps", fmt(rc.eps)},
        {"max_iter", fmt(rc.max_iter)},
        {"stall", fmt(rc.stall)},
        {"rho", fmt(rc.rho)},
        {"seed", fmt(rc.seed)},
        {"n_realizations", fmt(rc.n_realizations)},
        {"stiffness", fmt(rc.stiffness)},
        {"max_lag", fmt(rc.max_lag)},
        {"lag_mode", rc.lag_mode},
        {"n_modes", fmt(rc.n_modes)},
        {"beta_lo", fmt(rc.beta_lo)},
        {"beta_hi", fmt(rc.beta_hi)},
        {"n_beta", fmt(rc.n_beta)},
        {"ode_fit", rc.ode_fit},
        {"substeps", fmt(rc.substeps)},
        {"fit_gamma", fmt(rc.fit_gamma)},
        {"fit_y3_0", fmt(rc.fit_y3_0)},
        {"incidence", rc.incidence},
        {"spatial", rc.spatial},
        {"meteo", rc.meteo},
        {"out_dir", rc.out_dir},
    };
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const RunConfig& rc, double wall_seconds) {
    std::string out;
    out += "subcommand = " + subcommand + "\n";
    out += "sirsfit_version = " SIRSFIT_VERSION "\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "eigen_version = %d.%d.%d\n", EIGEN_WORLD_VERSION,
                  EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
    out += buf;
    out += "config_file = " + (rc.config_path.empty() ? "(none)" : rc.config_path) + "\n";
    std::snprintf(buf, sizeof buf, "wall_time_seconds = %.3f\n", wall_seconds);
    out += buf;
    out += "\n# resolved configuration\n";
    for (const auto& [key, value] : echo_config(rc)) out += key + " = " + value + "\n";
    write_text_atomic(out_dir + "/manifest.txt", out);
}

} // namespace sirs
