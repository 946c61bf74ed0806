#pragma once

#include "gptomo/geometry.hpp"
#include "gptomo/gp.hpp"
#include "gptomo/kernels.hpp"

namespace gptomo {

struct NllEvaluation {
    double value = 0.0;
    Vector grad;      // empty unless a gradient was requested
    Vector residual;  // r = y - c A 1
    Vector alpha;     // K_y^{-1} r
};

/// Negative log marginal likelihood of a sinogram under the GP prior,
///
///   J = 1/2 r^T K_y^{-1} r + 1/2 log|K_y| + m/2 log(2 pi),
///
/// as a function of beta = [c, log sigma_f, log l]. The gradient uses one
/// Cholesky factorisation of K_y and the offset structure of the stationary
/// kernel: dK/dbeta_i depends on pixel pairs only through their (|dr|, |dc|)
/// offsets, so the trace terms reduce to sums over an n x n table.
class MarginalLikelihood {
public:
    MarginalLikelihood(const Grid& grid, const SystemMatrix& a, NoiseCovariance noise, Vector y, KernelFamily family);

    [[nodiscard]] NllEvaluation evaluate(const Vector& beta, bool with_gradient) const;

    /// c solving dJ/dc = 0 for the kernel parameters in `spec` (mean ignored).
    [[nodiscard]] double initial_mean(const KernelSpec& spec) const;

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] const SystemMatrix& system() const noexcept { return a_; }
    [[nodiscard]] const NoiseCovariance& noise() const noexcept { return noise_; }
    [[nodiscard]] const Vector& data() const noexcept { return y_; }
    [[nodiscard]] KernelFamily family() const noexcept { return family_; }
    [[nodiscard]] long num_measurements() const noexcept { return y_.size(); }

private:
    Grid grid_;
    SystemMatrix a_;
    ActiveRows rows_;
    NoiseCovariance noise_;
    Vector y_;
    Vector row_sums_;
    KernelFamily family_;
};

NllEvaluation nll(KernelFamily family, const Vector& beta, const SystemMatrix& a, const Grid& grid,
                  const NoiseCovariance& noise, const Vector& y);
NllEvaluation nll_grad(KernelFamily family, const Vector& beta, const SystemMatrix& a, const Grid& grid,
                       const NoiseCovariance& noise, const Vector& y);

/// c = (1^T A^T K_y^{-1} y) / (1^T A^T K_y^{-1} A 1); 0 (with a warning) when
/// the denominator is below 1e-300 in magnitude.
double solve_initial_c(const SystemMatrix& a, const KyFactor& ky, const Vector& y);

/// Sum of W_ij over pixel pairs grouped by offset: out(a, b) collects pairs with
/// |row_i - row_j| = a and |col_i - col_j| = b.
Matrix offset_sums(const Matrix& w, int n);
/// Same for the rank-one matrix u u^T.
Matrix offset_sums_outer(const Vector& u, int n);

}  // namespace gptomo
