#include "sirsfit/grid.hpp"

#include <cmath>
#include <numbers>

#include "sirsfit/errors.hpp"

namespace sirs {

void Grid::validate() const {
    if (nx < 2 || ny < 2) throw InputError("grid needs at least 2 nodes per axis");
    if (!(a > 0) || !(b > 0)) throw InputError("domain edges must be positive");
    if (nt < 1) throw InputError("grid needs at least one time step");
    if (!(T > 0)) throw InputError("horizon T must be positive");
}

Field::Field(int steps, int nx, int ny, double value)
    : steps_(steps), nx_(nx), ny_(ny), v_(static_cast<size_t>(steps) * nx * ny, value) {
    if (steps < 1 || nx < 1 || ny < 1) throw InputError("field dimensions must be positive");
}

void apply_laplacian(const Grid& g, std::span<const double> u, std::span<double> out) {
    const int nx = g.nx, ny = g.ny;
    if (u.size() != static_cast<size_t>(nx) * ny || out.size() != u.size())
        throw InputError("laplacian: slice size does not match grid");
    const double cx = 1.0 / (g.hx() * g.hx());
    const double cy = 1.0 / (g.hy() * g.hy());
    auto at = [&](int i, int j) { return u[static_cast<size_t>(i) * ny + j]; };
    for (int i = 0; i < nx; ++i) {
        // mirrored ghosts: u(-1)=u(1), u(nx)=u(nx-2)
        const int im = (i == 0) ? 1 : i - 1;
        const int ip = (i == nx - 1) ? nx - 2 : i + 1;
        for (int j = 0; j < ny; ++j) {
            const int jm = (j == 0) ? 1 : j - 1;
            const int jp = (j == ny - 1) ? ny - 2 : j + 1;
            const double uij = at(i, j);
            out[static_cast<size_t>(i) * ny + j] =
                cx * (at(im, j) - 2.0 * uij + at(ip, j)) + cy * (at(i, jm) - 2.0 * uij + at(i, jp));
        }
    }
}

Field laplacian_apply(const Grid& g, const Field& slice) {
    Field out(slice.steps(), slice.nx(), slice.ny());
    for (int t = 0; t < slice.steps(); ++t) apply_laplacian(g, slice.level(t), out.level(t));
    return out;
}

double node_weight(const Grid& g, int i, int j) {
    double w = g.hx() * g.hy();
    if (i == 0 || i == g.nx - 1) w *= 0.5;
    if (j == 0 || j == g.ny - 1) w *= 0.5;
    return w;
}

double integrate_slice(const Grid& g, std::span<const double> u) {
    if (u.size() != static_cast<size_t>(g.nx) * g.ny)
        throw InputError("integrate: slice size does not match grid");
    const int nx = g.nx, ny = g.ny;
    double total = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double wi = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
        double row = 0.0;
        for (int j = 0; j < ny; ++j) {
            const double wj = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
            row += wj * u[static_cast<size_t>(i) * ny + j];
        }
        total += wi * row;
    }
    return total * g.hx() * g.hy();
}

double NeumannEigenpair::operator()(double x1, double x2) const {
    using std::numbers::pi;
    return std::cos(j * pi * x1 / a) * std::cos(k * pi * x2 / b);
}

NeumannEigenpair neumann_eigenpair(int j, int k, double a, double b) {
    if (j < 0 || k < 0) throw InputError("mode indices must be nonnegative");
    if (!(a > 0) || !(b > 0)) throw InputError("domain edges must be positive");
    using std::numbers::pi;
    const double lambda = pi * pi * ((j / a) * (j / a) + (k / b) * (k / b));
    return {j, k, a, b, lambda};
}

} // namespace sirs
