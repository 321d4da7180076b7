#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sirsfit/model.hpp"

namespace sirs {

// Everything a run can be told, preloaded with the default parameter set
// (monthly rates: 1/mu = 65 years, 1/gamma = 0.879 months, 1/kappa = 9
// months, d = 0.005 with the infected compartment at a fifth of that).
// Values come from three layers: built-in defaults, then the config file,
// then command-line flags.
struct RunConfig {
    Params p;

    double y1_0 = 200.0, y2_0 = 1.0, y3_0 = 3.0;

    int nx = 33, ny = 33, nt = 100;
    double T = 12.0, a = 1.0, b = 1.0;

    double beta = 2.0;       // constant rate for simulate-sde and stability
    double beta_init = 1.0;  // starting control for the fitting commands
    std::string beta_mode = "time-space";

    double eps = -1.0;
    int max_iter = 100;
    double stall = 1e-12;

    double rho = 0.0;
    std::uint64_t seed = 0;
    int n_realizations = 1;

    double stiffness = 1.0;

    int max_lag = 30;
    std::string lag_mode = "daily";

    int n_modes = 50;
    double beta_lo = 0.0, beta_hi = 4.0;
    int n_beta = 0;  // > 0 additionally emits a sweep

    std::string ode_fit = "time-varying";  // or "constant"
    int substeps = 4;
    bool fit_gamma = true, fit_y3_0 = false;

    std::string incidence, spatial, meteo;
    std::string out_dir = "out";
    std::string config_path;

    std::set<std::string> given;  // keys set by file or flag

    bool is_set(const std::string& key) const { return given.count(key) != 0; }
    void set(const std::string& key, const std::string& value);  // throws InputError
    void validate_for(const std::string& subcommand) const;
};

RunConfig make_config();  // defaults applied to p

// Flat key = value lines, # starts a comment, blank lines ignored.
void load_config_file(RunConfig& rc, const std::string& path);

// Every key with its resolved value, in a stable order.
std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& rc);

// manifest.txt beside the outputs: subcommand, versions, seed, wall time,
// and the full resolved configuration.
void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const RunConfig& rc, double wall_seconds);

} // namespace sirs
