#pragma once

// Internal: backward-Euler diffusion solve (I - coef*L) u = rhs with the
// mirrored-ghost Neumann Laplacian, factored once per coefficient.

#include <span>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "sirsfit/errors.hpp"
#include "sirsfit/grid.hpp"
#include "sirsfit/pde.hpp"

namespace sirs {

class DiffusionOp {
public:
    DiffusionOp(const Grid& g, double coef) : n_(g.nodes()), identity_(coef == 0.0) {
        if (identity_) return;
        const int nx = g.nx, ny = g.ny;
        const double cx = coef / (g.hx() * g.hx());
        const double cy = coef / (g.hy() * g.hy());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(n_) * 5);
        auto idx = [ny](int i, int j) { return i * ny + j; };
        for (int i = 0; i < nx; ++i) {
            const int im = (i == 0) ? 1 : i - 1;
            const int ip = (i == nx - 1) ? nx - 2 : i + 1;
            for (int j = 0; j < ny; ++j) {
                const int jm = (j == 0) ? 1 : j - 1;
                const int jp = (j == ny - 1) ? ny - 2 : j + 1;
                const int row = idx(i, j);
                trip.emplace_back(row, row, 1.0 + 2.0 * cx + 2.0 * cy);
                // mirrored neighbors can coincide, triplets accumulate
                trip.emplace_back(row, idx(im, j), -cx);
                trip.emplace_back(row, idx(ip, j), -cx);
                trip.emplace_back(row, idx(i, jm), -cy);
                trip.emplace_back(row, idx(i, jp), -cy);
            }
        }
        Eigen::SparseMatrix<double> A(n_, n_);
        A.setFromTriplets(trip.begin(), trip.end());
        lu_.compute(A);
        if (lu_.info() != Eigen::Success)
            throw NumericalError("diffusion operator factorization failed");
    }

    void solve(std::span<double> u) const {
        if (identity_) return;
        Eigen::Map<Eigen::VectorXd> v(u.data(), n_);
        v = lu_.solve(v);
    }

private:
    int n_;
    bool identity_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

struct PdeWorkspace::Impl {
    Grid grid;
    DiffusionOp op1, op2, op3;
    Impl(const Grid& g, const Params& p)
        : grid(g), op1(g, g.dt() * p.d1), op2(g, g.dt() * p.d2), op3(g, g.dt() * p.d3) {}
};

} // namespace sirs
