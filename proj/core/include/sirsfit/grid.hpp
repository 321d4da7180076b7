#pragma once

#include <span>
#include <vector>

namespace sirs {

// Uniform node-centered grid on (0,a)x(0,b) including boundary nodes,
// plus a uniform partition of (0,T). Node (i,j) sits at (i*hx, j*hy).
struct Grid {
    int nx = 33, ny = 33;
    double a = 1.0, b = 1.0;
    int nt = 100;
    double T = 1.0;

    double hx() const { return a / (nx - 1); }
    double hy() const { return b / (ny - 1); }
    double dt() const { return T / nt; }
    int nodes() const { return nx * ny; }

    void validate() const;
    bool same_space(const Grid& o) const { return nx == o.nx && ny == o.ny && a == o.a && b == o.b; }
};

// Scalar values on the grid nodes, one block per stored time level.
// Either a single slice (steps() == 1) or a full space-time field with
// nt+1 levels. Storage is row-major over (time, x-index, y-index).
class Field {
public:
    Field() = default;
    Field(int steps, int nx, int ny, double value = 0.0);

    static Field space_time(const Grid& g, double value = 0.0) { return Field(g.nt + 1, g.nx, g.ny, value); }
    static Field slice(const Grid& g, double value = 0.0) { return Field(1, g.nx, g.ny, value); }
    // time-only control: one value per time level, broadcast in space
    static Field time_series(const Grid& g, double value = 0.0) { return Field(g.nt + 1, 1, 1, value); }

    int steps() const { return steps_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    bool same_shape(const Field& o) const { return steps_ == o.steps_ && nx_ == o.nx_ && ny_ == o.ny_; }

    double& operator()(int t, int i, int j) { return v_[(static_cast<size_t>(t) * nx_ + i) * ny_ + j]; }
    double operator()(int t, int i, int j) const { return v_[(static_cast<size_t>(t) * nx_ + i) * ny_ + j]; }

    std::span<double> level(int t) { return {v_.data() + static_cast<size_t>(t) * nx_ * ny_, static_cast<size_t>(nx_) * ny_}; }
    std::span<const double> level(int t) const { return {v_.data() + static_cast<size_t>(t) * nx_ * ny_, static_cast<size_t>(nx_) * ny_}; }

    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

private:
    int steps_ = 0, nx_ = 0, ny_ = 0;
    std::vector<double> v_;
};

// 5-point Laplacian with mirrored ghost nodes (homogeneous Neumann walls).
// Annihilates constants and sums to zero against the trapezoidal weights.
void apply_laplacian(const Grid& g, std::span<const double> u, std::span<double> out);
Field laplacian_apply(const Grid& g, const Field& slice);

// Trapezoidal quadrature over the domain for one slice.
double integrate_slice(const Grid& g, std::span<const double> u);
// Trapezoidal quadrature weight of node (i,j), i.e. hx*hy scaled by 1/2 per
// boundary face and 1/4 at corners.
double node_weight(const Grid& g, int i, int j);

// Laplace eigenpair for the Neumann rectangle: lambda = pi^2((j/a)^2+(k/b)^2)
// with the cosine product mode (unnormalized).
struct NeumannEigenpair {
    int j, k;
    double a, b;
    double lambda;
    double operator()(double x1, double x2) const;
};
NeumannEigenpair neumann_eigenpair(int j, int k, double a, double b);

} // namespace sirs
