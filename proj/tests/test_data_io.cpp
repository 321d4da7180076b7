#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "sirsfit/data_io.hpp"
#include "sirsfit/errors.hpp"

using namespace sirs;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::filesystem::path p = std::filesystem::temp_directory_path() / name;
    std::ofstream os(p, std::ios::trunc);
    os << content;
    return p.string();
}

std::string read_all(const std::string& path) {
    std::ifstream is(path);
    std::string out((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return out;
}

bool throws_mentioning(const std::function<void()>& fn, const std::string& needle) {
    try {
        fn();
    } catch (const InputError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

// dense replica of the penalized least-squares system for tiny grids
Eigen::VectorXd dense_fit(const ScatteredData& d, const Grid& g, double tau) {
    const int n = g.nodes();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<int>(d.points.size()), n);
    Eigen::VectorXd z(static_cast<int>(d.points.size()));
    for (size_t q = 0; q < d.points.size(); ++q) {
        const double x1 = d.points[q][0], x2 = d.points[q][1];
        const int i = std::min(static_cast<int>(x1 / g.hx()), g.nx - 2);
        const int j = std::min(static_cast<int>(x2 / g.hy()), g.ny - 2);
        const double xi = x1 / g.hx() - i, eta = x2 / g.hy() - j;
        B(q, i * g.ny + j) = (1 - xi) * (1 - eta);
        B(q, (i + 1) * g.ny + j) = xi * (1 - eta);
        B(q, i * g.ny + j + 1) = (1 - xi) * eta;
        B(q, (i + 1) * g.ny + j + 1) = xi * eta;
        z(q) = d.values[q];
    }
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    const double cx = 1.0 / (g.hx() * g.hx()), cy = 1.0 / (g.hy() * g.hy());
    for (int i = 0; i < g.nx; ++i) {
        const int im = (i == 0) ? 1 : i - 1;
        const int ip = (i == g.nx - 1) ? g.nx - 2 : i + 1;
        for (int j = 0; j < g.ny; ++j) {
            const int jm = (j == 0) ? 1 : j - 1;
            const int jp = (j == g.ny - 1) ? g.ny - 2 : j + 1;
            const int r = i * g.ny + j;
            L(r, r) = -2.0 * cx - 2.0 * cy;
            L(r, im * g.ny + j) += cx;
            L(r, ip * g.ny + j) += cx;
            L(r, i * g.ny + jm) += cy;
            L(r, i * g.ny + jp) += cy;
        }
    }
    Eigen::MatrixXd N = B.transpose() * B + tau * L.transpose() * L;
    return N.ldlt().solve(B.transpose() * z);
}

} // namespace

TEST_SUITE("data_io") {

TEST_CASE("civil day numbering") {
    CHECK(days_from_civil(1970, 1, 1) == 0);
    CHECK(days_from_civil(1970, 1, 2) == 1);
    CHECK(days_from_civil(1969, 12, 31) == -1);
    // leap rules: divisible by 4, except centuries, except multiples of 400
    CHECK(days_from_civil(1972, 3, 1) - days_from_civil(1972, 2, 1) == 29);
    CHECK(days_from_civil(2000, 3, 1) - days_from_civil(2000, 2, 1) == 29);
    CHECK(days_from_civil(2100, 3, 1) - days_from_civil(2100, 2, 1) == 28);
    CHECK(days_from_civil(2011, 1, 1) - days_from_civil(2010, 1, 1) == 365);
}

TEST_CASE("incidence loads iso months") {
    const std::string path = write_temp("sirsfit_inc_iso.csv",
                                        "t,cases\n"
                                        "2009-01,12\n"
                                        "2009-02,8\n"
                                        "2009-04,0\n");
    IncidenceSeries s = load_incidence_csv(path);
    REQUIRE(s.t.size() == 3);
    CHECK(s.t[0] == 0.0);
    CHECK(s.t[1] == 1.0);
    CHECK(s.t[2] == 3.0);  // skipped month keeps calendar spacing
    CHECK(s.cases[0] == 12.0);
    CHECK(s.cases[1] == 8.0);
    CHECK(s.cases[2] == 0.0);
    REQUIRE(s.ym.size() == 3);
    CHECK(s.ym[0] == 2009 * 12 + 0);
    CHECK(s.ym[2] == 2009 * 12 + 3);
    std::filesystem::remove(path);
}

TEST_CASE("incidence loads fractional years in months since start") {
    const std::string path = write_temp("sirsfit_inc_frac.csv",
                                        "t,cases\n"
                                        "2009,5\n"
                                        "2009.25,7\n"
                                        "2009.5,1\n");
    IncidenceSeries s = load_incidence_csv(path);
    REQUIRE(s.t.size() == 3);
    CHECK(s.t[0] == 0.0);
    CHECK(s.t[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.t[2] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(s.ym.empty());
    std::filesystem::remove(path);
}

TEST_CASE("incidence rejects bad rows with the offending line") {
    const std::string neg = write_temp("sirsfit_inc_neg.csv",
                                       "t,cases\n"
                                       "2009-01,3\n"
                                       "2009-02,-1\n");
    CHECK(throws_mentioning([&] { load_incidence_csv(neg); }, "line 3"));
    std::filesystem::remove(neg);

    const std::string mixed = write_temp("sirsfit_inc_mixed.csv",
                                         "t,cases\n"
                                         "2009-01,3\n"
                                         "2009.5,4\n");
    CHECK(throws_mentioning([&] { load_incidence_csv(mixed); }, "mixed"));
    std::filesystem::remove(mixed);

    const std::string back = write_temp("sirsfit_inc_back.csv",
                                        "t,cases\n"
                                        "2009-03,3\n"
                                        "2009-02,4\n");
    CHECK(throws_mentioning([&] { load_incidence_csv(back); }, "increase"));
    std::filesystem::remove(back);

    const std::string header = write_temp("sirsfit_inc_hdr.csv", "time,count\n2009-01,3\n");
    CHECK_THROWS_AS(load_incidence_csv(header), InputError);
    std::filesystem::remove(header);

    CHECK_THROWS_AS(load_incidence_csv("/nonexistent/sirsfit.csv"), InputError);
}

TEST_CASE("spatial csv groups rows into ascending year slices") {
    const std::string path = write_temp("sirsfit_spatial.csv",
                                        "x1,x2,year,cases\n"
                                        "0.5,0.5,2010,4\n"
                                        "0.1,0.9,2009,2\n"
                                        "0.25,0.75,2010,0\n"
                                        "1,0,2009,7\n");
    std::vector<ScatteredData> slices = load_spatial_csv(path);
    REQUIRE(slices.size() == 2);
    CHECK(slices[0].label == 2009.0);
    CHECK(slices[1].label == 2010.0);
    REQUIRE(slices[0].points.size() == 2);
    REQUIRE(slices[1].points.size() == 2);
    CHECK(slices[0].points[0][0] == 0.1);
    CHECK(slices[0].points[1][1] == 0.0);
    CHECK(slices[0].values[1] == 7.0);
    CHECK(slices[1].values[0] == 4.0);
    for (const ScatteredData& s : slices)
        for (const auto& pt : s.points) {
            CHECK(pt[0] >= 0.0);
            CHECK(pt[0] <= 1.0);
            CHECK(pt[1] >= 0.0);
            CHECK(pt[1] <= 1.0);
        }
    std::filesystem::remove(path);

    const std::string bad = write_temp("sirsfit_spatial_bad.csv",
                                       "x1,x2,year,cases\n"
                                       "0.5,1.5,2010,4\n");
    CHECK(throws_mentioning([&] { load_spatial_csv(bad); }, "out of range"));
    std::filesystem::remove(bad);

    const std::string neg = write_temp("sirsfit_spatial_neg.csv",
                                       "x1,x2,year,cases\n"
                                       "0.5,0.5,2010,-4\n");
    CHECK(throws_mentioning([&] { load_spatial_csv(neg); }, "line 2"));
    std::filesystem::remove(neg);
}

TEST_CASE("meteo csv forward-fills missing cells and whole days") {
    const std::string path = write_temp("sirsfit_meteo.csv",
                                        "date,dewpoint,pressure,temperature,visibility,"
                                        "precipitation,windspeed\n"
                                        "2010-01-01,20,1010,28,9,0,3\n"
                                        "2010-01-02,21,NA,29,9,1,4\n"
                                        "2010-01-04,22,1012,30,,2,5\n");
    MeteoSeries m = load_meteo_csv(path);
    CHECK(m.first_day == days_from_civil(2010, 1, 1));
    REQUIRE(m.names.size() == 6);
    CHECK(m.names[0] == "dewpoint");
    CHECK(m.days() == 4);  // jan 3 synthesized
    // dewpoint: 20, 21, filled 21, 22
    CHECK(m.values[0][0] == 20.0);
    CHECK(m.values[0][1] == 21.0);
    CHECK(m.values[0][2] == 21.0);
    CHECK(m.values[0][3] == 22.0);
    // pressure: NA on day 2 takes day 1's value
    CHECK(m.values[1][1] == 1010.0);
    CHECK(m.values[1][3] == 1012.0);
    // visibility blank on the last row
    CHECK(m.values[3][3] == 9.0);
    CHECK(m.filled[0] == 1);  // only the gap day
    CHECK(m.filled[1] == 2);  // NA plus the gap day
    CHECK(m.filled[3] == 2);
    std::filesystem::remove(path);

    const std::string first = write_temp("sirsfit_meteo_first.csv",
                                         "date,dewpoint,pressure,temperature,visibility,"
                                         "precipitation,windspeed\n"
                                         "2010-01-01,,1010,28,9,0,3\n");
    CHECK(throws_mentioning([&] { load_meteo_csv(first); }, "first row"));
    std::filesystem::remove(first);

    const std::string order = write_temp("sirsfit_meteo_order.csv",
                                         "date,dewpoint,pressure,temperature,visibility,"
                                         "precipitation,windspeed\n"
                                         "2010-01-02,20,1010,28,9,0,3\n"
                                         "2010-01-01,20,1010,28,9,0,3\n");
    CHECK(throws_mentioning([&] { load_meteo_csv(order); }, "increase"));
    std::filesystem::remove(order);
}

TEST_CASE("constant data fits a constant surface") {
    Grid g;
    g.nx = 9;
    g.ny = 9;
    ScatteredData d;
    d.points = {{0.1, 0.2}, {0.5, 0.5}, {0.9, 0.3}, {0.33, 0.77}, {0.6, 0.05}};
    d.values.assign(5, 3.7);
    Field f = gridfit(d, g, 1.0);
    REQUIRE(f.steps() == 1);
    for (double v : f.data()) CHECK(v == doctest::Approx(3.7).epsilon(1e-9));
}

TEST_CASE("a single sample extrapolates as a constant") {
    Grid g;
    g.nx = 7;
    g.ny = 7;
    ScatteredData d;
    d.points = {{0.3, 0.4}};
    d.values = {5.0};
    // the constant 5 zeroes both terms, so it wins at any stiffness; very
    // large weights only amplify roundoff in the assembled penalty
    for (double tau : {1.0, 1e3}) {
        Field f = gridfit(d, g, tau);
        for (double v : f.data()) CHECK(v == doctest::Approx(5.0).epsilon(1e-8));
    }
}

TEST_CASE("vanishing stiffness interpolates samples on grid nodes") {
    Grid g;
    g.nx = 5;
    g.ny = 5;
    ScatteredData d;
    // exactly at nodes (1,1), (3,2), (2,3), (1,3) of the 5x5 lattice
    d.points = {{0.25, 0.25}, {0.75, 0.5}, {0.5, 0.75}, {0.25, 0.75}};
    d.values = {1.0, 2.0, 4.0, 3.0};
    Field f = gridfit(d, g, 1e-10, false);
    CHECK(f(0, 1, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f(0, 3, 2) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(f(0, 2, 3) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(f(0, 1, 3) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("surface matches a dense solve of the normal equations") {
    Grid g;
    g.nx = 6;
    g.ny = 5;
    ScatteredData d;
    d.points = {{0.12, 0.83}, {0.45, 0.22}, {0.7, 0.6}, {0.95, 0.1}, {0.31, 0.49}, {0.88, 0.92}};
    d.values = {2.0, 0.5, 3.1, 1.7, 0.0, 4.2};
    for (double tau : {0.03, 1.0, 40.0}) {
        Field f = gridfit(d, g, tau, false);
        Eigen::VectorXd x = dense_fit(d, g, tau);
        double scale = 1.0 + x.cwiseAbs().maxCoeff();
        auto lvl = f.level(0);
        for (int k = 0; k < g.nodes(); ++k) CHECK(std::fabs(lvl[k] - x[k]) <= 1e-8 * scale);
    }
}

TEST_CASE("fit is invariant under permutation of the samples") {
    Grid g;
    g.nx = 8;
    g.ny = 8;
    ScatteredData d;
    std::mt19937 rng(81u);
    std::uniform_real_distribution<double> coord(0.0, 1.0), val(0.0, 10.0);
    for (int q = 0; q < 12; ++q) {
        d.points.push_back({coord(rng), coord(rng)});
        d.values.push_back(val(rng));
    }
    Field base = gridfit(d, g, 0.5);
    ScatteredData shuffled = d;
    std::vector<size_t> idx(d.points.size());
    for (size_t q = 0; q < idx.size(); ++q) idx[q] = q;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (size_t q = 0; q < idx.size(); ++q) {
        shuffled.points[q] = d.points[idx[q]];
        shuffled.values[q] = d.values[idx[q]];
    }
    Field perm = gridfit(shuffled, g, 0.5);
    auto a = base.data();
    auto b = perm.data();
    for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("fit is linear in the data before saturation") {
    Grid g;
    g.nx = 6;
    g.ny = 6;
    ScatteredData d;
    d.points = {{0.2, 0.3}, {0.8, 0.7}, {0.5, 0.9}};
    d.values = {1.0, -2.0, 3.0};
    Field one = gridfit(d, g, 0.2, false);
    ScatteredData doubled = d;
    for (double& v : doubled.values) v *= 2.0;
    Field two = gridfit(doubled, g, 0.2, false);
    auto a = one.data();
    auto b = two.data();
    for (size_t k = 0; k < a.size(); ++k) CHECK(b[k] == 2.0 * a[k]);
}

TEST_CASE("stiffness trades roughness against misfit monotonically") {
    Grid g;
    g.nx = 7;
    g.ny = 7;
    ScatteredData d;
    std::mt19937 rng(82u);
    std::uniform_real_distribution<double> coord(0.05, 0.95), val(0.0, 8.0);
    for (int q = 0; q < 10; ++q) {
        d.points.push_back({coord(rng), coord(rng)});
        d.values.push_back(val(rng));
    }
    auto energies = [&](double tau) {
        Eigen::VectorXd x = dense_fit(d, g, tau);
        Field f = gridfit(d, g, tau, false);
        auto lvl = f.level(0);
        for (int k = 0; k < g.nodes(); ++k)
            REQUIRE(std::fabs(lvl[k] - x[k]) <= 1e-7 * (1.0 + x.cwiseAbs().maxCoeff()));
        // recompute both terms on the returned surface
        double misfit = 0.0, rough = 0.0;
        for (size_t q = 0; q < d.points.size(); ++q) {
            const double x1 = d.points[q][0], x2 = d.points[q][1];
            const int i = std::min(static_cast<int>(x1 / g.hx()), g.nx - 2);
            const int j = std::min(static_cast<int>(x2 / g.hy()), g.ny - 2);
            const double xi = x1 / g.hx() - i, eta = x2 / g.hy() - j;
            const double s = (1 - xi) * (1 - eta) * f(0, i, j) + xi * (1 - eta) * f(0, i + 1, j) +
                             (1 - xi) * eta * f(0, i, j + 1) + xi * eta * f(0, i + 1, j + 1);
            misfit += (s - d.values[q]) * (s - d.values[q]);
        }
        const double cx = 1.0 / (g.hx() * g.hx()), cy = 1.0 / (g.hy() * g.hy());
        for (int i = 0; i < g.nx; ++i) {
            const int im = (i == 0) ? 1 : i - 1;
            const int ip = (i == g.nx - 1) ? g.nx - 2 : i + 1;
            for (int j = 0; j < g.ny; ++j) {
                const int jm = (j == 0) ? 1 : j - 1;
                const int jp = (j == g.ny - 1) ? g.ny - 2 : j + 1;
                const double l = cx * (f(0, im, j) - 2.0 * f(0, i, j) + f(0, ip, j)) +
                                 cy * (f(0, i, jm) - 2.0 * f(0, i, j) + f(0, i, jp));
                rough += l * l;
            }
        }
        return std::pair<double, double>{misfit, rough};
    };
    double last_misfit = -1.0, last_rough = 1e300;
    for (double tau : {1e-4, 1e-2, 1.0, 1e2}) {
        auto [misfit, rough] = energies(tau);
        CHECK(misfit >= last_misfit - 1e-9);
        CHECK(rough <= last_rough + 1e-9);
        last_misfit = misfit;
        last_rough = rough;
    }
}

TEST_CASE("saturation clamps undershoot to zero") {
    Grid g;
    g.nx = 9;
    g.ny = 9;
    ScatteredData d;
    // steep descent toward the far edge makes the extrapolation dip negative
    d.points = {{0.1, 0.5}, {0.3, 0.5}};
    d.values = {10.0, 1.0};
    Field raw = gridfit(d, g, 1e-6, false);
    double raw_min = 1e300;
    for (double v : raw.data()) raw_min = std::min(raw_min, v);
    CHECK(raw_min < 0.0);
    Field sat = gridfit(d, g, 1e-6);
    double sat_min = 1e300;
    for (double v : sat.data()) sat_min = std::min(sat_min, v);
    CHECK(sat_min >= 0.0);
    // clamping touches only the negative values
    auto a = raw.data();
    auto b = sat.data();
    for (size_t k = 0; k < a.size(); ++k) CHECK(b[k] == (a[k] < 0.0 ? 0.0 : a[k]));
}

TEST_CASE("surface fit validates its inputs") {
    Grid g;
    g.nx = 5;
    g.ny = 5;
    ScatteredData d;
    d.points = {{0.5, 0.5}};
    d.values = {1.0};
    CHECK_THROWS_AS(gridfit(d, g, 0.0), InputError);
    CHECK_THROWS_AS(gridfit(d, g, -1.0), InputError);
    ScatteredData empty;
    CHECK_THROWS_AS(gridfit(empty, g, 1.0), InputError);
    ScatteredData outside;
    outside.points = {{1.5, 0.5}};
    outside.values = {1.0};
    CHECK_THROWS_AS(gridfit(outside, g, 1.0), InputError);
    ScatteredData mismatch;
    mismatch.points = {{0.5, 0.5}};
    CHECK_THROWS_AS(gridfit(mismatch, g, 1.0), InputError);
}

TEST_CASE("pearson correlation basics") {
    std::vector<double> a = {1, 2, 3, 4}, b = {2, 4, 5, 4};
    CHECK(pearson(a, b) == doctest::Approx(3.5 / std::sqrt(23.75)).epsilon(1e-15));
    CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-15));

    // affine invariance, sign flip under negative scale
    std::vector<double> scaled(a.size()), flipped(a.size());
    for (size_t k = 0; k < a.size(); ++k) {
        scaled[k] = 2.5 * a[k] + 7.0;
        flipped[k] = -1.5 * a[k] + 2.0;
    }
    CHECK(pearson(scaled, b) == doctest::Approx(pearson(a, b)).epsilon(1e-13));
    CHECK(pearson(flipped, b) == doctest::Approx(-pearson(a, b)).epsilon(1e-13));

    std::vector<double> flat = {3, 3, 3, 3};
    CHECK_THROWS_AS(pearson(flat, b), InputError);
    std::vector<double> shorter = {1, 2};
    CHECK_THROWS_AS(pearson(shorter, b), InputError);
}

TEST_CASE("meteo constant within each month correlates perfectly at lag zero") {
    std::mt19937 rng(83u);
    std::uniform_real_distribution<double> val(0.0, 50.0);
    IncidenceSeries inc;
    for (int r = 0; r < 12; ++r) {
        inc.ym.push_back(2010 * 12 + r);
        inc.t.push_back(r);
        inc.cases.push_back(std::floor(val(rng)));
    }
    MeteoSeries m;
    m.names = {"dewpoint"};
    m.values.resize(1);
    m.filled = {0};
    const int lead = 10;
    m.first_day = days_from_civil(2010, 1, 1) - lead;
    const int last = days_from_civil(2011, 1, 1);
    for (int day = m.first_day; day < last; ++day) {
        int q = 0;
        while (q < 11 && day >= days_from_civil(2010, q + 2, 1)) ++q;
        if (day < days_from_civil(2010, 1, 1)) q = 0;
        m.values[0].push_back(inc.cases[q]);
    }
    std::vector<LagCorrelation> all = lagged_correlations(m, inc, lead);
    REQUIRE(all.size() == static_cast<size_t>(lead + 1));
    CHECK(all.front().lag == 0);
    CHECK(all.front().correlation == doctest::Approx(1.0).epsilon(1e-13));
    for (const LagCorrelation& r : all) CHECK(std::fabs(r.correlation) <= 1.0 + 1e-15);
    std::vector<LagCorrelation> best = best_lags(all);
    REQUIRE(best.size() == 1);
    CHECK(best.front().variable == "dewpoint");
    CHECK(best.front().lag == 0);
}

TEST_CASE("a seven day lead is recovered as the best lag") {
    std::mt19937 rng(84u);
    std::uniform_real_distribution<double> noise(0.0, 1.0);
    const int start0 = days_from_civil(2010, 1, 1);
    const int stop_last = days_from_civil(2010, 12, 1);  // 11 months of incidence
    const int max_lag = 15;

    // noise-dominated daily signal, so shifting the window moves the monthly
    // medians; incidence takes the medians, the meteo variable carries the
    // same signal seven days early
    auto signal = [&](int) { return 10.0 + 8.0 * noise(rng); };
    std::vector<double> s;
    const int s_first = start0 - max_lag + 7;
    for (int day = s_first; day < stop_last + 7; ++day) s.push_back(signal(day));

    IncidenceSeries inc;
    for (int r = 0; r < 11; ++r) {
        const int d0 = days_from_civil(2010, r + 1, 1);
        const int d1 = days_from_civil(2010, r + 2, 1);
        std::vector<double> month(s.begin() + (d0 - s_first), s.begin() + (d1 - s_first));
        std::sort(month.begin(), month.end());
        const size_t n = month.size();
        inc.ym.push_back(2010 * 12 + r);
        inc.t.push_back(r);
        inc.cases.push_back(n % 2 ? month[n / 2] : 0.5 * (month[n / 2 - 1] + month[n / 2]));
    }

    MeteoSeries m;
    m.names = {"dewpoint"};
    m.values.resize(1);
    m.filled = {0};
    m.first_day = start0 - max_lag;
    for (int day = m.first_day; day < stop_last; ++day)
        m.values[0].push_back(s[day + 7 - s_first]);

    std::vector<LagCorrelation> all = lagged_correlations(m, inc, max_lag);
    std::vector<LagCorrelation> best = best_lags(all);
    REQUIRE(best.size() == 1);
    CHECK(best.front().lag == 7);
    CHECK(best.front().correlation == doctest::Approx(1.0).epsilon(1e-12));
    for (const LagCorrelation& r : all)
        if (r.lag != 7) CHECK(std::fabs(r.correlation) < 1.0 - 1e-6);
}

TEST_CASE("monthly mode shifts by whole months") {
    std::mt19937 rng(85u);
    std::uniform_real_distribution<double> val(0.0, 40.0);
    const int nm = 12;
    IncidenceSeries inc;
    for (int r = 0; r < nm; ++r) {
        inc.ym.push_back(2010 * 12 + r);
        inc.t.push_back(r);
        inc.cases.push_back(std::floor(val(rng)));
    }
    // meteo month q carries next month's incidence, so a one month shift wins
    MeteoSeries m;
    m.names = {"temperature"};
    m.values.resize(1);
    m.filled = {0};
    m.first_day = days_from_civil(2009, 12, 1);
    const int last = days_from_civil(2011, 1, 1);
    for (int day = m.first_day; day < last; ++day) {
        int q = (2009 * 12 + 11);
        while (q < 2010 * 12 + 11 && day >= days_from_civil((q + 1) / 12, (q + 1) % 12 + 1, 1))
            ++q;
        const int idx = std::min(q - inc.ym.front() + 1, nm - 1);
        m.values[0].push_back(inc.cases[std::max(idx, 0)]);
    }
    std::vector<LagCorrelation> all =
        lagged_correlations(m, inc, 30, LagMode::ShiftMonthly);
    // lags up to 14 round to no shift, 15..30 round to one month
    for (const LagCorrelation& r : all) {
        if (r.lag < 15) CHECK(r.correlation == all.front().correlation);
        else CHECK(r.correlation == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::vector<LagCorrelation> best = best_lags(all);
    REQUIRE(best.size() == 1);
    CHECK(best.front().lag == 15);  // earliest of the tied month-one lags
}

TEST_CASE("correlation window must be covered") {
    IncidenceSeries inc;
    for (int r = 0; r < 3; ++r) {
        inc.ym.push_back(2010 * 12 + r);
        inc.t.push_back(r);
        inc.cases.push_back(r + 1.0);
    }
    MeteoSeries m;
    m.names = {"dewpoint"};
    m.values.resize(1);
    m.filled = {0};
    m.first_day = days_from_civil(2010, 1, 1);  // no headroom for any lag
    for (int day = 0; day < 90; ++day) m.values[0].push_back(day);
    CHECK_THROWS_AS(lagged_correlations(m, inc, 5), InputError);

    IncidenceSeries frac;  // fractional-year incidence has no month anchors
    frac.t = {0.0, 1.0, 2.0};
    frac.cases = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(lagged_correlations(m, frac, 0), InputError);

    IncidenceSeries flat = inc;
    flat.cases = {2.0, 2.0, 2.0};
    MeteoSeries wide = m;
    wide.first_day = days_from_civil(2009, 12, 1);
    wide.values[0].assign(150, 1.0);
    for (int day = 0; day < 150; ++day) wide.values[0][day] = day * day % 17;
    CHECK_THROWS_AS(lagged_correlations(wide, flat, 2), InputError);
}

TEST_CASE("best lag ties prefer the earlier lag") {
    std::vector<LagCorrelation> all = {{"b", 0, 0.5},  {"b", 3, -0.9}, {"b", 5, 0.9},
                                       {"a", 0, 0.1},  {"a", 1, 0.1}, {"a", 2, -0.1}};
    std::vector<LagCorrelation> best = best_lags(all);
    REQUIRE(best.size() == 2);
    CHECK(best[0].variable == "b");  // input order preserved
    CHECK(best[0].lag == 3);
    CHECK(best[0].correlation == -0.9);
    CHECK(best[1].variable == "a");
    CHECK(best[1].lag == 0);

    std::string csv = correlations_csv(best);
    CHECK(csv.substr(0, csv.find('\n')) == "variable,lag,correlation");
    CHECK(csv.find("b,3,") != std::string::npos);
    CHECK(csv.find("a,0,") != std::string::npos);
}

TEST_CASE("field files round-trip bitwise") {
    std::mt19937 rng(86u);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    Field f(3, 4, 5);
    for (double& v : f.data()) v = val(rng);
    f(0, 0, 0) = 0.1 + 0.2;  // not exactly representable inputs
    f(1, 2, 3) = 1.0 / 3.0;
    f(2, 3, 4) = 1e-300;
    const std::string path =
        (std::filesystem::temp_directory_path() / "sirsfit_field.txt").string();
    write_field_file(path, f, 2.5, 1.0, 2.0);
    FieldFile ff = read_field_file(path);
    CHECK(ff.nt == 2);
    CHECK(ff.nx == 4);
    CHECK(ff.ny == 5);
    CHECK(ff.T == 2.5);
    CHECK(ff.a == 1.0);
    CHECK(ff.b == 2.0);
    auto a = f.data();
    auto b = ff.field.data();
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
    std::filesystem::remove(path);

    const std::string trunc = write_temp("sirsfit_field_trunc.txt", "2 4 5 2.5 1 1\n0 1 2\n");
    CHECK_THROWS_AS(read_field_file(trunc), InputError);
    std::filesystem::remove(trunc);
    const std::string hdr = write_temp("sirsfit_field_hdr.txt", "-3 4 5 2.5 1 1\n");
    CHECK_THROWS_AS(read_field_file(hdr), InputError);
    std::filesystem::remove(hdr);
    CHECK_THROWS_AS(read_field_file("/nonexistent/field.txt"), InputError);
}

TEST_CASE("atomic writes leave no temporary behind") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path();
    const std::string path = (dir / "sirsfit_atomic.txt").string();
    write_text_atomic(path, "first\n");
    CHECK(read_all(path) == "first\n");
    write_text_atomic(path, "second\n");  // overwrite in place
    CHECK(read_all(path) == "second\n");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(write_text_atomic("/nonexistent/dir/out.txt", "x"), InputError);
}

TEST_CASE("labeled slices interpolate linearly in time") {
    Grid g;
    g.nx = 3;
    g.ny = 3;
    g.nt = 4;
    g.T = 1.0;
    std::vector<Field> slices;
    slices.emplace_back(1, 3, 3, 1.0);
    slices.emplace_back(1, 3, 3, 3.0);
    const std::vector<double> times = {0.25, 0.75};
    Field f = interpolate_slices_in_time(g, times, slices);
    REQUIRE(f.steps() == 5);
    const double expect[5] = {1.0, 1.0, 2.0, 3.0, 3.0};
    for (int m = 0; m < 5; ++m)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(f(m, i, j) == doctest::Approx(expect[m]).epsilon(1e-15));

    std::vector<Field> bad;
    bad.emplace_back(1, 2, 3, 1.0);
    CHECK_THROWS_AS(interpolate_slices_in_time(g, std::vector<double>{0.5}, bad), InputError);
    std::vector<Field> two;
    two.emplace_back(1, 3, 3, 1.0);
    two.emplace_back(1, 3, 3, 2.0);
    CHECK_THROWS_AS(interpolate_slices_in_time(g, std::vector<double>{0.5, 0.5}, two),
                    InputError);
    CHECK_THROWS_AS(interpolate_slices_in_time(g, std::vector<double>{0.5}, two), InputError);
}

TEST_CASE("scalar series resample onto the time grid") {
    TimeGrid tg{2.0, 4};
    const std::vector<double> t = {0.0, 1.0};
    const std::vector<double> v = {0.0, 10.0};
    std::vector<double> out = interpolate_series(t, v, tg);
    REQUIRE(out.size() == 5);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 5.0);
    CHECK(out[2] == 10.0);
    CHECK(out[3] == 10.0);  // constant beyond the data range
    CHECK(out[4] == 10.0);

    std::vector<double> single = interpolate_series(std::vector<double>{0.5},
                                                    std::vector<double>{7.0}, tg);
    for (double s : single) CHECK(s == 7.0);

    CHECK_THROWS_AS(
        interpolate_series(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}, tg),
        InputError);
    CHECK_THROWS_AS(interpolate_series(t, std::vector<double>{1.0}, tg), InputError);
}

} // TEST_SUITE
