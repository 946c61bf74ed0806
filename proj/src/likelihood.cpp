#include "gptomo/likelihood.hpp"

#include "gptomo/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>
#include <vector>

namespace gptomo {

namespace {

// Q = P A for dense P (m x m) and sparse A (m x N). Rows of P are processed
// in short blocks so the touched slices of P and Q stay in cache.
Matrix dense_times_sparse(const Matrix& p, const SystemMatrix& a) {
    const auto& csc = a.csc();
    const long m = p.rows();
    Matrix q = Matrix::Zero(m, a.cols());
    constexpr long kRows = 64;
    for (long r0 = 0; r0 < m; r0 += kRows) {
        const long bs = std::min(kRows, m - r0);
        for (long i = 0; i < a.cols(); ++i) {
            double* dst = q.col(i).data() + r0;
            for (SystemMatrix::ColMajor::InnerIterator it(csc, i); it; ++it) {
                const double* src = p.col(it.row()).data() + r0;
                const double v = it.value();
                for (long k = 0; k < bs; ++k) dst[k] += v * src[k];
            }
        }
    }
    return q;
}

// Offset sums of W = A^T Q given qt = Q^T (N x m): for every beam s, the
// footprint A_s is cross-correlated with the image Q_s into a signed
// (2n-1) x (2n-1) lag table, which is folded onto |lags| at the end.
Matrix offset_sums_of_product(const SystemMatrix& a, const Matrix& qt, int n) {
    const long w = 2L * n - 1;
    std::vector<double> lag(static_cast<size_t>(w * w), 0.0);
    const auto& csr = a.csr();
    for (long s = 0; s < a.rows(); ++s) {
        const double* img = qt.col(s).data();
        for (SystemMatrix::RowMajor::InnerIterator it(csr, s); it; ++it) {
            const long ri = it.col() / n, ci = it.col() % n;
            const double v = it.value();
            for (long rj = 0; rj < n; ++rj) {
                double* dst = lag.data() + (rj - ri + n - 1) * w + (n - 1 - ci);
                const double* src = img + rj * n;
                for (long cj = 0; cj < n; ++cj) dst[cj] += v * src[cj];
            }
        }
    }
    Matrix out = Matrix::Zero(n, n);
    for (long dr = -(n - 1); dr < n; ++dr) {
        for (long dc = -(n - 1); dc < n; ++dc) out(std::abs(dr), std::abs(dc)) += lag[static_cast<size_t>((dr + n - 1) * w + dc + n - 1)];
    }
    return out;
}

double table_dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace

Matrix offset_sums(const Matrix& w, int n) {
    const long big = static_cast<long>(n) * n;
    if (w.rows() != big || w.cols() != big) throw InvalidArgument("offset_sums: matrix does not match grid");
    // Row-major accumulator so the inner loop over columns is contiguous.
    std::vector<double> acc(static_cast<size_t>(big), 0.0);
    for (int r2 = 0; r2 < n; ++r2) {
        for (int c2 = 0; c2 < n; ++c2) {
            const double* col = w.col(static_cast<long>(r2) * n + c2).data();
            for (int r1 = 0; r1 < n; ++r1) {
                double* row = acc.data() + static_cast<long>(std::abs(r1 - r2)) * n;
                const double* src = col + static_cast<long>(r1) * n;
                for (int c1 = 0; c1 < c2; ++c1) row[c2 - c1] += src[c1];
                for (int c1 = c2; c1 < n; ++c1) row[c1 - c2] += src[c1];
            }
        }
    }
    Matrix out(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) out(a, b) = acc[static_cast<size_t>(a) * n + b];
    }
    return out;
}

Matrix offset_sums_outer(const Vector& u, int n) {
    const long big = static_cast<long>(n) * n;
    if (u.size() != big) throw InvalidArgument("offset_sums_outer: vector does not match grid");
    Matrix out = Matrix::Zero(n, n);
    // Correlate image rows: sum over (r1, r2) with |r1 - r2| = a of the
    // 1D cross-correlation of those two rows at lag b.
    for (int r1 = 0; r1 < n; ++r1) {
        const double* x = u.data() + static_cast<long>(r1) * n;
        for (int r2 = 0; r2 < n; ++r2) {
            const double* z = u.data() + static_cast<long>(r2) * n;
            const int a = std::abs(r1 - r2);
            for (int b = 0; b < n; ++b) {
                double s = 0.0;
                for (int c = 0; c + b < n; ++c) s += x[c] * z[c + b];
                if (b > 0) {
                    for (int c = 0; c + b < n; ++c) s += x[c + b] * z[c];
                }
                out(a, b) += s;
            }
        }
    }
    return out;
}

MarginalLikelihood::MarginalLikelihood(const Grid& grid, const SystemMatrix& a, NoiseCovariance noise, Vector y,
                                       KernelFamily family)
    : grid_(grid), a_(a), rows_(split_active_rows(a)), noise_(std::move(noise)), y_(std::move(y)), family_(family) {
    if (a_.cols() != grid_.num_pixels()) throw InvalidArgument("likelihood: system matrix does not match grid");
    if (y_.size() != a_.rows()) throw InvalidArgument("likelihood: sinogram length does not match system matrix");
    if (noise_.size() != a_.rows()) throw InvalidArgument("likelihood: noise model length does not match sinogram");
    row_sums_ = a_.row_sums();
}

NllEvaluation MarginalLikelihood::evaluate(const Vector& beta, bool with_gradient) const {
    if (!beta.allFinite()) throw InvalidArgument("likelihood: non-finite hyperparameters");
    const KernelSpec spec = from_hyper(family_, beta);
    const int n = grid_.n();
    const double c = beta(0);

    std::optional<KyFactor> ky;
    ky.emplace(rows_, project_stationary(rows_.a_active, offset_table(spec, n)), noise_);

    NllEvaluation out;
    out.residual = y_ - c * row_sums_;
    out.alpha = ky->solve(out.residual);
    const double m = static_cast<double>(y_.size());
    out.value = 0.5 * out.residual.dot(out.alpha) + 0.5 * ky->log_det() + 0.5 * m * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(out.value)) throw NumericalError("likelihood: non-finite value");
    if (!with_gradient) return out;

    const auto nk = static_cast<long>(spec.num_components());
    out.grad = Vector::Zero(2 * nk + 1);
    out.grad(0) = -row_sums_.dot(out.alpha);

    // dJ/dbeta_i = 1/2 tr[(K_y^{-1} - alpha alpha^T) A dK_i A^T]
    //            = 1/2 sum_ab dk_i(a,b) * (S_W - S_u)(a,b),
    // W = A^T K_y^{-1} A, u = A^T alpha, S_* their offset sums.
    const Vector u = a_.adjoint(out.alpha);
    Matrix qt;
    {
        const Matrix& p_inv = ky->invert_active_inplace();
        const Matrix q = dense_times_sparse(p_inv, rows_.a_active);
        ky.reset();
        qt = q.transpose();
    }
    const Matrix s = offset_sums_of_product(rows_.a_active, qt, n) - offset_sums_outer(u, n);
    for (long i = 0; i < nk; ++i) {
        const auto comp = static_cast<std::size_t>(i);
        out.grad(1 + i) = 0.5 * table_dot(offset_table_dlog_sigma(spec, n, comp), s);
        out.grad(1 + nk + i) = 0.5 * table_dot(offset_table_dlog_length(spec, n, comp), s);
    }
    return out;
}

double MarginalLikelihood::initial_mean(const KernelSpec& spec) const {
    const KyFactor ky(rows_, project_stationary(rows_.a_active, offset_table(spec, grid_.n())), noise_);
    return solve_initial_c(a_, ky, y_);
}

NllEvaluation nll(KernelFamily family, const Vector& beta, const SystemMatrix& a, const Grid& grid,
                  const NoiseCovariance& noise, const Vector& y) {
    return MarginalLikelihood(grid, a, noise, y, family).evaluate(beta, false);
}

NllEvaluation nll_grad(KernelFamily family, const Vector& beta, const SystemMatrix& a, const Grid& grid,
                       const NoiseCovariance& noise, const Vector& y) {
    return MarginalLikelihood(grid, a, noise, y, family).evaluate(beta, true);
}

double solve_initial_c(const SystemMatrix& a, const KyFactor& ky, const Vector& y) {
    const Vector a1 = a.row_sums();
    const Vector z = ky.solve(a1);
    const double num = z.dot(y);
    const double den = z.dot(a1);
    if (std::abs(den) < 1e-300) {
        std::clog << "warning: initial mean is undetermined (1^T A^T K_y^-1 A 1 = " << den << "); using c = 0\n";
        return 0.0;
    }
    return num / den;
}

}  // namespace gptomo
