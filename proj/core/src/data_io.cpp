#include "sirsfit/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <utility>

#include <Eigen/Sparse>

#include "sirsfit/errors.hpp"

namespace sirs {

namespace {

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& msg) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s line %d: %s", path.c_str(), line, msg.c_str());
    throw InputError(buf);
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) != 0)) ++b;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) != 0)) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        const size_t c = line.find(',', pos);
        if (c == std::string::npos) {
            out.push_back(trim(line.substr(pos)));
            break;
        }
        out.push_back(trim(line.substr(pos, c - pos)));
        pos = c + 1;
    }
    return out;
}

struct CsvRow {
    int line;
    std::vector<std::string> fields;
};

// header plus data rows, blank lines skipped
std::pair<std::vector<std::string>, std::vector<CsvRow>> read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open " + path);
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (header.empty())
            header = split_csv(line);
        else
            rows.push_back({lineno, split_csv(line)});
    }
    if (header.empty()) throw InputError(path + ": empty file");
    return {std::move(header), std::move(rows)};
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && std::isfinite(out);
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (std::isdigit(static_cast<unsigned char>(c)) == 0) return false;
    return true;
}

// YYYY-MM
bool parse_iso_month(const std::string& s, int& y, int& mo) {
    if (s.size() != 7 || s[4] != '-') return false;
    const std::string ys = s.substr(0, 4), ms = s.substr(5, 2);
    if (!all_digits(ys) || !all_digits(ms)) return false;
    y = std::stoi(ys);
    mo = std::stoi(ms);
    return mo >= 1 && mo <= 12;
}

// YYYY-MM-DD
bool parse_iso_date(const std::string& s, int& y, int& mo, int& d) {
    if (s.size() != 10 || s[7] != '-') return false;
    if (!parse_iso_month(s.substr(0, 7), y, mo)) return false;
    const std::string ds = s.substr(8, 2);
    if (!all_digits(ds)) return false;
    d = std::stoi(ds);
    return d >= 1 && d <= 31;
}

void expect_header(const std::string& path, const std::vector<std::string>& got,
                   std::initializer_list<const char*> want) {
    bool ok = got.size() == want.size();
    if (ok) {
        size_t i = 0;
        for (const char* w : want) ok = ok && got[i++] == w;
    }
    if (!ok) {
        std::string w;
        for (const char* f : want) {
            if (!w.empty()) w += ',';
            w += f;
        }
        throw InputError(path + ": expected header " + w);
    }
}

bool missing_cell(const std::string& s) { return s.empty() || s == "NA" || s == "na"; }

double median_of(std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    const size_t n = buf.size();
    return n % 2 ? buf[n / 2] : 0.5 * (buf[n / 2 - 1] + buf[n / 2]);
}

} // namespace

int days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

IncidenceSeries load_incidence_csv(const std::string& path) {
    auto [header, rows] = read_csv(path);
    expect_header(path, header, {"t", "cases"});
    if (rows.empty()) throw InputError(path + ": no samples");

    IncidenceSeries out;
    bool iso = false;
    bool first = true;
    int ym0 = 0;
    double year0 = 0.0;
    for (const CsvRow& r : rows) {
        if (r.fields.size() != 2) fail_at(path, r.line, "expected 2 fields");
        int y = 0, mo = 0;
        double yearf = 0.0;
        const bool row_iso = parse_iso_month(r.fields[0], y, mo);
        if (!row_iso && !parse_double(r.fields[0], yearf))
            fail_at(path, r.line, "cannot parse time '" + r.fields[0] + "'");
        if (first) {
            iso = row_iso;
            first = false;
        } else if (row_iso != iso) {
            fail_at(path, r.line, "mixed time formats");
        }
        double t;
        if (iso) {
            const int ym = y * 12 + (mo - 1);
            if (out.t.empty()) ym0 = ym;
            out.ym.push_back(ym);
            t = ym - ym0;
        } else {
            if (out.t.empty()) year0 = yearf;
            t = (yearf - year0) * 12.0;
        }
        if (!out.t.empty() && t <= out.t.back()) fail_at(path, r.line, "time must increase");
        double cases;
        if (!parse_double(r.fields[1], cases)) fail_at(path, r.line, "cannot parse case count");
        if (cases < 0) fail_at(path, r.line, "negative case count");
        out.t.push_back(t);
        out.cases.push_back(cases);
    }
    return out;
}

std::vector<ScatteredData> load_spatial_csv(const std::string& path) {
    auto [header, rows] = read_csv(path);
    expect_header(path, header, {"x1", "x2", "year", "cases"});
    if (rows.empty()) throw InputError(path + ": no samples");

    std::vector<ScatteredData> out;
    for (const CsvRow& r : rows) {
        if (r.fields.size() != 4) fail_at(path, r.line, "expected 4 fields");
        double x1, x2, year, cases;
        if (!parse_double(r.fields[0], x1) || !parse_double(r.fields[1], x2))
            fail_at(path, r.line, "cannot parse coordinates");
        if (x1 < 0 || x1 > 1 || x2 < 0 || x2 > 1) fail_at(path, r.line, "coordinate out of range");
        if (!parse_double(r.fields[2], year)) fail_at(path, r.line, "cannot parse year");
        if (!parse_double(r.fields[3], cases)) fail_at(path, r.line, "cannot parse case count");
        if (cases < 0) fail_at(path, r.line, "negative case count");
        auto slice = std::find_if(out.begin(), out.end(),
                                  [year](const ScatteredData& s) { return s.label == year; });
        if (slice == out.end()) {
            out.push_back({{}, {}, year});
            slice = out.end() - 1;
        }
        slice->points.push_back({x1, x2});
        slice->values.push_back(cases);
    }
    std::sort(out.begin(), out.end(),
              [](const ScatteredData& a, const ScatteredData& b) { return a.label < b.label; });
    return out;
}

MeteoSeries load_meteo_csv(const std::string& path) {
    auto [header, rows] = read_csv(path);
    expect_header(path, header, {"date", "dewpoint", "pressure", "temperature", "visibility",
                                 "precipitation", "windspeed"});
    if (rows.empty()) throw InputError(path + ": no samples");

    MeteoSeries out;
    out.names.assign(header.begin() + 1, header.end());
    out.values.resize(6);
    out.filled.assign(6, 0);

    double prev[6] = {0, 0, 0, 0, 0, 0};
    int prev_day = 0;
    bool first = true;
    for (const CsvRow& r : rows) {
        if (r.fields.size() != 7) fail_at(path, r.line, "expected 7 fields");
        int y, mo, d;
        if (!parse_iso_date(r.fields[0], y, mo, d))
            fail_at(path, r.line, "cannot parse date '" + r.fields[0] + "'");
        const int day = days_from_civil(y, mo, d);
        if (first) {
            out.first_day = day;
        } else {
            if (day <= prev_day) fail_at(path, r.line, "dates must increase");
            for (int gap = prev_day + 1; gap < day; ++gap)  // wholly missing days
                for (int v = 0; v < 6; ++v) {
                    out.values[v].push_back(prev[v]);
                    ++out.filled[v];
                }
        }
        for (int v = 0; v < 6; ++v) {
            const std::string& cell = r.fields[v + 1];
            double val;
            if (missing_cell(cell)) {
                if (first) fail_at(path, r.line, "missing value in first row");
                val = prev[v];
                ++out.filled[v];
            } else if (!parse_double(cell, val)) {
                fail_at(path, r.line, "cannot parse " + out.names[v]);
            }
            out.values[v].push_back(val);
            prev[v] = val;
        }
        prev_day = day;
        first = false;
    }
    return out;
}

Field gridfit(const ScatteredData& data, const Grid& g, double stiffness, bool saturate) {
    g.validate();
    if (!(stiffness > 0) || !std::isfinite(stiffness))
        throw InputError("stiffness must be positive");
    const size_t npts = data.points.size();
    if (npts == 0) throw InputError("surface fit needs at least one data point");
    if (data.values.size() != npts) throw InputError("points and values count disagree");
    const int n = g.nodes();

    // canonical accumulation order makes the fit independent of input order
    std::vector<size_t> order(npts);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&data](size_t l, size_t r) {
        const auto& a = data.points[l];
        const auto& b = data.points[r];
        if (a[0] != b[0]) return a[0] < b[0];
        if (a[1] != b[1]) return a[1] < b[1];
        return data.values[l] < data.values[r];
    });

    std::vector<Eigen::Triplet<double>> btrip;
    btrip.reserve(npts * 4);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    int row = 0;
    for (size_t idx : order) {
        const double x1 = data.points[idx][0], x2 = data.points[idx][1];
        const double z = data.values[idx];
        if (x1 < 0 || x1 > g.a || x2 < 0 || x2 > g.b || !std::isfinite(z))
            throw InputError("data point outside the domain");
        int i = std::min(static_cast<int>(x1 / g.hx()), g.nx - 2);
        int j = std::min(static_cast<int>(x2 / g.hy()), g.ny - 2);
        const double xi = x1 / g.hx() - i;
        const double eta = x2 / g.hy() - j;
        const double w[4] = {(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta};
        const int node[4] = {i * g.ny + j, (i + 1) * g.ny + j, i * g.ny + j + 1,
                             (i + 1) * g.ny + j + 1};
        for (int c = 0; c < 4; ++c) {
            btrip.emplace_back(row, node[c], w[c]);
            rhs[node[c]] += w[c] * z;
        }
        ++row;
    }
    Eigen::SparseMatrix<double> B(static_cast<int>(npts), n);
    B.setFromTriplets(btrip.begin(), btrip.end());

    std::vector<Eigen::Triplet<double>> ltrip;
    ltrip.reserve(static_cast<size_t>(n) * 5);
    const double cx = 1.0 / (g.hx() * g.hx());
    const double cy = 1.0 / (g.hy() * g.hy());
    for (int i = 0; i < g.nx; ++i) {
        const int im = (i == 0) ? 1 : i - 1;
        const int ip = (i == g.nx - 1) ? g.nx - 2 : i + 1;
        for (int j = 0; j < g.ny; ++j) {
            const int jm = (j == 0) ? 1 : j - 1;
            const int jp = (j == g.ny - 1) ? g.ny - 2 : j + 1;
            const int rr = i * g.ny + j;
            ltrip.emplace_back(rr, rr, -2.0 * cx - 2.0 * cy);
            ltrip.emplace_back(rr, im * g.ny + j, cx);
            ltrip.emplace_back(rr, ip * g.ny + j, cx);
            ltrip.emplace_back(rr, i * g.ny + jm, cy);
            ltrip.emplace_back(rr, i * g.ny + jp, cy);
        }
    }
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(ltrip.begin(), ltrip.end());

    Eigen::SparseMatrix<double> N = Eigen::SparseMatrix<double>(B.transpose() * B) +
                                    stiffness * Eigen::SparseMatrix<double>(L.transpose() * L);

    // diagonally preconditioned conjugate gradients on the SPD normal system
    Eigen::VectorXd invd(n);
    for (int k = 0; k < n; ++k) {
        const double dk = N.coeff(k, k);
        if (!(dk > 0)) throw NumericalError("normal equations lost positive definiteness");
        invd[k] = 1.0 / dk;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = rhs;
    const double stop = 1e-12 * rhs.norm();
    if (r.norm() > stop) {
        Eigen::VectorXd z = invd.cwiseProduct(r);
        Eigen::VectorXd p = z;
        double rz = r.dot(z);
        bool done = false;
        const int max_iter = 10 * n + 100;
        for (int it = 0; it < max_iter; ++it) {
            const Eigen::VectorXd ap = N * p;
            const double pap = p.dot(ap);
            if (!(pap > 0)) throw NumericalError("normal equations lost positive definiteness");
            const double alpha = rz / pap;
            x += alpha * p;
            r -= alpha * ap;
            if (r.norm() <= stop) {
                done = true;
                break;
            }
            z = invd.cwiseProduct(r);
            const double rz1 = r.dot(z);
            p = z + (rz1 / rz) * p;
            rz = rz1;
        }
        if (!done) throw NumericalError("surface solve did not converge");
    }

    Field out = Field::slice(g);
    auto lvl = out.level(0);
    for (int k = 0; k < n; ++k) lvl[k] = (saturate && x[k] < 0.0) ? 0.0 : x[k];
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw InputError("correlation needs two series of equal length >= 2");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double ca = a[i] - ma, cb = b[i] - mb;
        sab += ca * cb;
        saa += ca * ca;
        sbb += cb * cb;
    }
    if (saa == 0.0 || sbb == 0.0) throw InputError("zero-variance series in correlation");
    return sab / std::sqrt(saa * sbb);
}

std::vector<LagCorrelation> lagged_correlations(const MeteoSeries& meteo,
                                                const IncidenceSeries& inc, int max_lag,
                                                LagMode mode) {
    if (max_lag < 0) throw InputError("max_lag must be nonnegative");
    if (inc.ym.empty()) throw InputError("correlation needs ISO-month incidence dates");
    if (inc.ym.size() < 2) throw InputError("correlation needs at least two months");
    if (meteo.names.empty() || meteo.days() == 0) throw InputError("empty meteo series");

    const int nm = static_cast<int>(inc.ym.size());
    std::vector<int> start(nm), stop(nm);  // civil day window [start, stop) of each month
    for (int r = 0; r < nm; ++r) {
        const int y = inc.ym[r] / 12, mo = inc.ym[r] % 12 + 1;
        start[r] = days_from_civil(y, mo, 1);
        stop[r] = mo == 12 ? days_from_civil(y + 1, 1, 1) : days_from_civil(y, mo + 1, 1);
    }
    int earliest;
    if (mode == LagMode::ShiftDaily) {
        earliest = start.front() - max_lag;
    } else {
        const int m = inc.ym.front() - (max_lag + 15) / 30;
        earliest = days_from_civil(m / 12, m % 12 + 1, 1);
    }
    if (earliest < meteo.first_day || stop.back() > meteo.first_day + meteo.days())
        throw InputError("meteo series does not cover the incidence window plus the lag");

    std::vector<LagCorrelation> out;
    out.reserve(meteo.names.size() * (max_lag + 1));
    std::vector<double> monthly(nm);
    std::vector<double> buf;
    for (size_t v = 0; v < meteo.names.size(); ++v) {
        for (int lag = 0; lag <= max_lag; ++lag) {
            const int shift_months = (lag + 15) / 30;
            for (int r = 0; r < nm; ++r) {
                int d0, d1;
                if (mode == LagMode::ShiftDaily) {
                    d0 = start[r] - lag;
                    d1 = stop[r] - lag;
                } else {
                    const int m = inc.ym[r] - shift_months;
                    const int y = m / 12, mo = m % 12 + 1;
                    d0 = days_from_civil(y, mo, 1);
                    d1 = mo == 12 ? days_from_civil(y + 1, 1, 1) : days_from_civil(y, mo + 1, 1);
                }
                const int o0 = d0 - meteo.first_day, o1 = d1 - meteo.first_day;
                if (o0 < 0 || o1 > meteo.days())
                    throw InputError("meteo series does not cover the shifted window");
                buf.assign(meteo.values[v].begin() + o0, meteo.values[v].begin() + o1);
                monthly[r] = median_of(buf);
            }
            out.push_back({meteo.names[v], lag, pearson(monthly, inc.cases)});
        }
    }
    return out;
}

std::vector<LagCorrelation> best_lags(const std::vector<LagCorrelation>& all) {
    std::vector<LagCorrelation> out;
    for (const LagCorrelation& row : all) {
        auto it = std::find_if(out.begin(), out.end(), [&row](const LagCorrelation& b) {
            return b.variable == row.variable;
        });
        if (it == out.end())
            out.push_back(row);
        else if (std::abs(row.correlation) > std::abs(it->correlation))
            *it = row;
    }
    return out;
}

std::string correlations_csv(const std::vector<LagCorrelation>& rows) {
    std::string out = "variable,lag,correlation\n";
    char line[128];
    for (const LagCorrelation& r : rows) {
        std::snprintf(line, sizeof line, "%s,%d,%.17g\n", r.variable.c_str(), r.lag,
                      r.correlation);
        out += line;
    }
    return out;
}

void write_field_file(const std::string& path, const Field& f, double T, double a, double b) {
    std::string out;
    out.reserve(static_cast<size_t>(f.steps()) * f.nx() * f.ny() * 26 + 64);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d %d %d %.17g %.17g %.17g\n", f.steps() - 1, f.nx(), f.ny(),
                  T, a, b);
    out += buf;
    for (int t = 0; t < f.steps(); ++t)
        for (int i = 0; i < f.nx(); ++i) {
            for (int j = 0; j < f.ny(); ++j) {
                std::snprintf(buf, sizeof buf, j + 1 == f.ny() ? "%.17g" : "%.17g ", f(t, i, j));
                out += buf;
            }
            out += '\n';
        }
    write_text_atomic(path, out);
}

FieldFile read_field_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open " + path);
    FieldFile ff;
    if (!(is >> ff.nt >> ff.nx >> ff.ny >> ff.T >> ff.a >> ff.b))
        throw InputError(path + ": malformed header");
    if (ff.nt < 0 || ff.nx < 1 || ff.ny < 1 || !(ff.T > 0) || !(ff.a > 0) || !(ff.b > 0))
        throw InputError(path + ": invalid dimensions");
    ff.field = Field(ff.nt + 1, ff.nx, ff.ny);
    for (double& v : ff.field.data())
        if (!(is >> v)) throw InputError(path + ": truncated value block");
    return ff;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InputError("cannot open " + tmp + " for writing");
        os << content;
        os.flush();
        if (!os) throw InputError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw InputError("cannot move " + tmp + " onto " + path);
}

Field interpolate_slices_in_time(const Grid& g, std::span<const double> times,
                                 const std::vector<Field>& slices) {
    g.validate();
    if (times.size() != slices.size() || times.empty())
        throw InputError("need one time label per slice");
    for (size_t s = 0; s < slices.size(); ++s) {
        if (slices[s].steps() != 1 || slices[s].nx() != g.nx || slices[s].ny() != g.ny)
            throw InputError("slice shape does not match the grid");
        if (s > 0 && !(times[s] > times[s - 1]))
            throw InputError("slice times must strictly increase");
    }
    Field out = Field::space_time(g);
    for (int m = 0; m <= g.nt; ++m) {
        const double tau = g.dt() * m;
        auto lvl = out.level(m);
        if (tau <= times.front() || times.size() == 1) {
            auto src = slices.front().level(0);
            std::copy(src.begin(), src.end(), lvl.begin());
        } else if (tau >= times.back()) {
            auto src = slices.back().level(0);
            std::copy(src.begin(), src.end(), lvl.begin());
        } else {
            size_t k = 0;
            while (times[k + 1] < tau) ++k;
            const double w = (tau - times[k]) / (times[k + 1] - times[k]);
            auto lo = slices[k].level(0);
            auto hi = slices[k + 1].level(0);
            for (size_t q = 0; q < lvl.size(); ++q) lvl[q] = (1.0 - w) * lo[q] + w * hi[q];
        }
    }
    return out;
}

std::vector<double> interpolate_series(std::span<const double> t, std::span<const double> v,
                                       const TimeGrid& tg) {
    tg.validate();
    if (t.size() != v.size() || t.empty()) throw InputError("need one value per sample time");
    for (size_t s = 1; s < t.size(); ++s)
        if (!(t[s] > t[s - 1])) throw InputError("sample times must strictly increase");
    std::vector<double> out(tg.nt + 1);
    for (int m = 0; m <= tg.nt; ++m) {
        const double tau = tg.dt() * m;
        if (tau <= t.front() || t.size() == 1) {
            out[m] = v.front();
        } else if (tau >= t.back()) {
            out[m] = v.back();
        } else {
            size_t k = 0;
            while (t[k + 1] < tau) ++k;
            const double w = (tau - t[k]) / (t[k + 1] - t[k]);
            out[m] = (1.0 - w) * v[k] + w * v[k + 1];
        }
    }
    return out;
}

} // namespace sirs
