#pragma once

#include "gptomo/geometry.hpp"
#include "gptomo/kernels.hpp"

#include <optional>
#include <vector>

namespace gptomo {

/// Diagonal measurement-noise covariance, stored as per-measurement std.
class NoiseCovariance {
public:
    static NoiseCovariance homoskedastic(long m, double sigma);
    static NoiseCovariance heteroskedastic(Vector sigma);

    [[nodiscard]] bool is_homoskedastic() const noexcept { return homoskedastic_; }
    [[nodiscard]] long size() const noexcept { return sigma_.size(); }
    [[nodiscard]] const Vector& sigma() const noexcept { return sigma_; }
    [[nodiscard]] Vector variance() const { return sigma_.array().square().matrix(); }

private:
    NoiseCovariance(Vector sigma, bool homoskedastic);
    Vector sigma_;
    bool homoskedastic_ = true;
};

/// Split of the rows of A into beams that touch the grid and beams that miss it.
///
/// Rows of A that are identically zero decouple: their block of K_y is the
/// diagonal noise variance, so only the coupled rows are factorised densely.
struct ActiveRows {
    std::vector<long> active;
    std::vector<long> inactive;
    SystemMatrix a_active;
    long total = 0;
};
ActiveRows split_active_rows(const SystemMatrix& a);

/// Cholesky factorisation of K_y = A K A^T + Sigma.
class KyFactor {
public:
    /// Factorise; `ak_t` is (A_active K)^T, n^2 x m_active, which callers
    /// usually keep for the posterior mean.
    KyFactor(const ActiveRows& rows, const Matrix& ak_t, const NoiseCovariance& noise);

    [[nodiscard]] long size() const noexcept { return m_; }
    [[nodiscard]] const std::vector<long>& active_rows() const noexcept { return active_; }
    [[nodiscard]] const std::vector<long>& inactive_rows() const noexcept { return inactive_; }
    /// Lower Cholesky factor of the active block (upper triangle undefined).
    [[nodiscard]] const Matrix& factor() const noexcept { return l_; }
    [[nodiscard]] Matrix& factor() noexcept { return l_; }

    [[nodiscard]] Vector solve(const Vector& r) const;
    [[nodiscard]] double log_det() const;
    /// Dense K_y rebuilt from the factor (tests and small problems only).
    [[nodiscard]] Matrix dense() const;

    /// Solve L X = B in place for an active-row block B (m_active x k).
    void lower_solve_inplace(Matrix& b) const;

    /// Replace the factor by the inverse of the active block (invalidates
    /// solve/log_det; used once per gradient evaluation).
    Matrix& invert_active_inplace();

private:
    long m_ = 0;
    std::vector<long> active_;
    std::vector<long> inactive_;
    Vector inactive_var_;
    Matrix l_;
    double log_det_ = 0.0;
    bool inverted_ = false;
};

/// Builds (A_active K)^T = K A_active^T column by column.
Matrix project_covariance(const SystemMatrix& a_active, const Matrix& k);
/// Same product for the stationary K described by an offset table, without forming K.
Matrix project_stationary(const SystemMatrix& a_active, const Matrix& table);

/// Lower triangle (or full) of A_active X for X n^2 x m_active.
Matrix sandwich_lower(const SystemMatrix& a_active, const Matrix& x);

/// K_y and its factorisation in one step.
KyFactor assemble_ky(const SystemMatrix& a, const Matrix& k, const NoiseCovariance& noise);

struct PosteriorOptions {
    bool full_covariance = false;
    /// Largest n for which the full n^2 x n^2 K* may be formed.
    int full_covariance_max_n = 48;
    double eps_rsd = 1.0;
    long column_block = 512;
};

struct PosteriorResult {
    Vector mean;
    Vector variance;
    Vector rsd;
    std::optional<Matrix> full_covariance;
    double nll_at_fit = 0.0;
    KernelSpec spec;
};

/// Posterior mean m* = c1 + K A^T K_y^{-1}(y - A c1), diag(K*) and RSD map.
PosteriorResult posterior(const SystemMatrix& a, const Matrix& k, const NoiseCovariance& noise, const Vector& y,
                          double c, const PosteriorOptions& options = {});

/// Convenience: build K from `spec` on `grid` first (spec.mean is used as c).
PosteriorResult posterior(const Grid& grid, const SystemMatrix& a, const KernelSpec& spec,
                          const NoiseCovariance& noise, const Vector& y, const PosteriorOptions& options = {});

/// sqrt(var_i) / (|mean_i| + eps).
Vector rsd_map(const Vector& mean, const Vector& variance, double eps_rsd);
Vector rsd_map(const PosteriorResult& result, double eps_rsd);

}  // namespace gptomo
