#pragma once

#include "gptomo/geometry.hpp"

#include <vector>

namespace gptomo {

struct L2Options {
    int iterations = 200;
};

/// Least squares min 1/2 ||A f - y||^2 by CGLS from f = 0 with a fixed
/// iteration budget (early termination only on an exactly zero gradient).
/// `residual_norms`, if given, receives ||A f_k - y|| for k = 0..iterations.
Vector reconstruct_l2(const SystemMatrix& a, const Vector& y, const L2Options& options = {},
                      std::vector<double>* residual_norms = nullptr);

/// Isotropic discrete TV with forward differences and reflexive boundaries:
/// sum_ij sqrt((f[i+1,j] - f[i,j])^2 + (f[i,j+1] - f[i,j])^2), with the
/// difference across the last row or column taken as 0.
double total_variation(const Vector& f, int n);

struct TvConfig {
    std::vector<double> lambdas = default_lambda_grid();
    /// Accelerated proximal-gradient iterations per solve.
    int iterations = 500;
    /// Dual projected-gradient iterations for each TV proximal step (warm started).
    int prox_iterations = 20;
    /// Power iterations for the Lipschitz constant of A^T A.
    int power_iterations = 60;

    static std::vector<double> default_lambda_grid();
    void validate() const;
};

struct TvResult {
    Vector f;
    /// Objective 1/2||Af - y||^2 + lambda TV(f) after every iteration.
    std::vector<double> objective;
};

/// Monotone FISTA on 1/2||Af - y||^2 + lambda TV(f) from f = 0.
TvResult reconstruct_tv(const SystemMatrix& a, const Vector& y, int n, double lambda, const TvConfig& cfg = {});

/// Largest eigenvalue of A^T A by power iteration (deterministic start).
double lipschitz_constant(const SystemMatrix& a, int iterations);

/// Solves min_x 1/2||x - b||^2 + mu TV(x); `dual` (2 n^2, may be empty) is the
/// warm start and receives the final dual field.
Vector tv_prox(const Vector& b, int n, double mu, int iterations, Vector* dual = nullptr);

struct LambdaPoint {
    double lambda;
    double e_norm;
};

struct TvSearchResult {
    double lambda_star = 0.0;
    Vector f_best;
    std::vector<LambdaPoint> curve;
};

/// Oracle-tuned TV: solves for every grid lambda and keeps the lowest E_norm.
TvSearchResult tv_grid_search(const SystemMatrix& a, const Vector& y, int n, const Vector& f_star, const TvConfig& cfg = {});

}  // namespace gptomo
