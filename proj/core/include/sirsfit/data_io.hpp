#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sirsfit/grid.hpp"
#include "sirsfit/ode.hpp"

namespace sirs {

// Monthly case counts. t counts months since the first sample; ym holds the
// absolute month index year*12 + (month-1) when the file carries ISO months,
// and stays empty for fractional-year files.
struct IncidenceSeries {
    std::vector<double> t;
    std::vector<double> cases;
    std::vector<int> ym;
};

// Header t,cases with t either an ISO month (YYYY-MM) or a fractional year;
// one format per file. Case counts must be nonnegative.
IncidenceSeries load_incidence_csv(const std::string& path);

// Case counts at scattered locations for one time slice.
struct ScatteredData {
    std::vector<std::array<double, 2>> points;  // inside the unit square
    std::vector<double> values;
    double label = 0.0;  // slice time, e.g. year
};

// Header x1,x2,year,cases with coordinates already rescaled into [0,1]^2.
// Rows are grouped per year, ascending.
std::vector<ScatteredData> load_spatial_csv(const std::string& path);

// Contiguous daily values per variable. Missing cells (and wholly missing
// days) are forward-filled from the previous day; filled counts how many
// cells that touched per variable.
struct MeteoSeries {
    int first_day = 0;  // civil day number of the first row
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;  // [variable][day offset]
    std::vector<int> filled;

    int days() const { return names.empty() ? 0 : static_cast<int>(values[0].size()); }
};

// Header date,dewpoint,pressure,temperature,visibility,precipitation,
// windspeed with ISO dates, one row per day.
MeteoSeries load_meteo_csv(const std::string& path);

// Penalized least squares surface through scattered samples:
// min_S sum_i (B_i S - z_i)^2 + stiffness * ||L S||^2 with B_i the bilinear
// sample of the surface at point i and L the mirrored-boundary Laplacian
// (grid-scaled, the same stencil the solver uses). The SPD normal equations
// are solved by diagonally preconditioned conjugate gradients; points are
// accumulated in a canonical order, so the result is invariant under input
// permutation. Negative values are clamped to zero unless saturate is off.
Field gridfit(const ScatteredData& data, const Grid& g, double stiffness, bool saturate = true);

// Default mode shifts the daily series backward by the lag and takes
// monthly medians over each incidence month's window; the alternate mode
// aggregates calendar months first and shifts by the lag rounded to whole
// months.
enum class LagMode { ShiftDaily, ShiftMonthly };

struct LagCorrelation {
    std::string variable;
    int lag = 0;
    double correlation = 0.0;
};

// Pearson correlation of monthly incidence against each meteo variable at
// every lag 0..max_lag days. Requires ISO-dated incidence and meteo coverage
// of the incidence window extended max_lag days back.
std::vector<LagCorrelation> lagged_correlations(const MeteoSeries& meteo,
                                                const IncidenceSeries& inc, int max_lag,
                                                LagMode mode = LagMode::ShiftDaily);

// The row with the largest |correlation| per variable; earlier lag on ties.
// Input order of variables is preserved.
std::vector<LagCorrelation> best_lags(const std::vector<LagCorrelation>& all);

std::string correlations_csv(const std::vector<LagCorrelation>& rows);

// Sample Pearson correlation; both series need nonzero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// Days since 1970-01-01 of a civil date (proleptic Gregorian).
int days_from_civil(int y, int m, int d);

// Self-describing text matrix: header line nt nx ny T a b, then nt+1 blocks
// of nx*ny whitespace-separated values, row-major. Values are written with
// 17 significant digits and round-trip exactly.
struct FieldFile {
    int nt = 0, nx = 0, ny = 0;
    double T = 0, a = 0, b = 0;
    Field field;
};
void write_field_file(const std::string& path, const Field& f, double T, double a, double b);
FieldFile read_field_file(const std::string& path);

// Writes through a temporary in the same directory and renames over the
// target, so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

// Piecewise-linear interpolation of labeled slices onto the grid's time
// nodes; constant beyond the first and last labels. times must be strictly
// increasing and match slices.
Field interpolate_slices_in_time(const Grid& g, std::span<const double> times,
                                 const std::vector<Field>& slices);

// Piecewise-linear resampling of (t, v) onto the uniform time grid nodes,
// constant beyond the data range. t must be strictly increasing.
std::vector<double> interpolate_series(std::span<const double> t, std::span<const double> v,
                                       const TimeGrid& tg);

} // namespace sirs
