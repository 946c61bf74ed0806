#pragma once

// Test-only reference implementations. They deliberately avoid the library's
// fast paths (ray traversal, offset tables, Cholesky reuse) so they can check them.

#include "gptomo/geometry.hpp"
#include "gptomo/kernels.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace oracle {

using gptomo::Grid;
using gptomo::Matrix;
using gptomo::Vector;

/// Pixel containing point (x, y), or -1 outside the grid.
inline long locate(const Grid& grid, double x, double y) {
    const double h = 0.5 * grid.side_length();
    const double p = grid.pixel_size();
    if (x < -h || x >= h || y <= -h || y > h) return -1;
    const auto col = static_cast<long>(std::floor((x + h) / p));
    const auto row = static_cast<long>(std::floor((h - y) / p));
    if (col < 0 || col >= grid.n() || row < 0 || row >= grid.n()) return -1;
    return row * grid.n() + col;
}

/// Numerical line integral of every pixel indicator along one beam.
///
/// Samples `samples` points uniformly over a segment that covers the grid,
/// then refines every interval whose end points lie in different pixels by
/// bisection until it is shorter than `resolution`. Because a line meets each
/// convex pixel in one interval, intervals with equal end labels are interior.
inline std::map<long, double> integrate_beam(const Grid& grid, double angle, double offset, int samples = 10000,
                                             double resolution = 1e-13) {
    const double nx = std::cos(angle), ny = std::sin(angle);
    const double ux = -ny, uy = nx;
    const double half = grid.side_length();  // > half diagonal
    auto at = [&](double s) { return locate(grid, offset * nx + s * ux, offset * ny + s * uy); };
    std::map<long, double> lengths;
    auto add = [&](long pix, double len) {
        if (pix >= 0 && len > 0) lengths[pix] += len;
    };
    auto refine = [&](auto&& self, double a, long la, double b, long lb) -> void {
        if (la == lb) {
            add(la, b - a);
            return;
        }
        if (b - a < resolution * grid.pixel_size()) {
            add(la, 0.5 * (b - a));
            add(lb, 0.5 * (b - a));
            return;
        }
        const double mid = 0.5 * (a + b);
        const long lm = at(mid);
        self(self, a, la, mid, lm);
        self(self, mid, lm, b, lb);
    };
    const double ds = 2.0 * half / samples;
    double s0 = -half;
    long l0 = at(s0);
    for (int k = 1; k <= samples; ++k) {
        const double s1 = -half + k * ds;
        const long l1 = at(s1);
        refine(refine, s0, l0, s1, l1);
        s0 = s1;
        l0 = l1;
    }
    return lengths;
}

/// Dense K_ij = k(||x_i - x_j|| / p) straight from composite_value.
inline Matrix dense_prior(const Grid& grid, const gptomo::KernelSpec& spec) {
    const long big = grid.num_pixels();
    Matrix k(big, big);
    for (long i = 0; i < big; ++i) {
        for (long j = 0; j < big; ++j) {
            const double d = (grid.center(i) - grid.center(j)).norm() / grid.pixel_size();
            k(i, j) = gptomo::composite_value(spec, d);
        }
    }
    return k;
}

struct DenseGp {
    Vector mean;
    Matrix cov;
    double nll;
};

/// Posterior and NLL through explicit inverse and determinant.
inline DenseGp dense_posterior(const Matrix& a, const Matrix& k, const Vector& noise_var, const Vector& y, double c) {
    const long m = a.rows();
    const Matrix ky = a * k * a.transpose() + Matrix(noise_var.asDiagonal());
    const Matrix inv = ky.inverse();
    const Vector prior_mean = Vector::Constant(k.rows(), c);
    const Vector r = y - a * prior_mean;
    DenseGp out;
    out.mean = prior_mean + k * a.transpose() * inv * r;
    out.cov = k - k * a.transpose() * inv * a * k;
    out.nll = 0.5 * r.dot(inv * r) + 0.5 * std::log(ky.determinant()) + 0.5 * m * std::log(2 * std::numbers::pi);
    return out;
}

inline double rel_err(const Vector& a, const Vector& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

inline gptomo::KernelSpec random_spec(std::mt19937_64& rng, gptomo::KernelFamily family, int nk) {
    std::uniform_real_distribution<double> sig(0.5, 2.0), len(0.7, 3.0), mean(-0.5, 0.5);
    gptomo::KernelSpec spec;
    spec.family = family;
    for (int i = 0; i < nk; ++i) {
        spec.sigma_f.push_back(sig(rng));
        spec.length.push_back(len(rng));
    }
    spec.mean = mean(rng);
    return spec;
}

}  // namespace oracle
