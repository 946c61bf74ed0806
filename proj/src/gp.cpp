#include "gptomo/gp.hpp"

#include "gptomo/error.hpp"
#include "gptomo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace gptomo {

NoiseCovariance::NoiseCovariance(Vector sigma, bool homoskedastic)
    : sigma_(std::move(sigma)), homoskedastic_(homoskedastic) {
    for (long t = 0; t < sigma_.size(); ++t) {
        if (!(sigma_(t) > 0.0) || !std::isfinite(sigma_(t))) {
            throw InvalidArgument("noise: standard deviations must be positive and finite (entry " +
                                  std::to_string(t) + ")");
        }
    }
}

NoiseCovariance NoiseCovariance::homoskedastic(long m, double sigma) {
    return NoiseCovariance(Vector::Constant(m, sigma), true);
}

NoiseCovariance NoiseCovariance::heteroskedastic(Vector sigma) { return NoiseCovariance(std::move(sigma), false); }

ActiveRows split_active_rows(const SystemMatrix& a) {
    ActiveRows rows;
    rows.total = a.rows();
    rows.active = a.nonempty_rows();
    std::vector<char> is_active(static_cast<size_t>(a.rows()), 0);
    for (long t : rows.active) is_active[static_cast<size_t>(t)] = 1;
    for (long t = 0; t < a.rows(); ++t) {
        if (!is_active[static_cast<size_t>(t)]) rows.inactive.push_back(t);
    }
    rows.a_active = a.select_rows(rows.active);
    return rows;
}

Matrix project_covariance(const SystemMatrix& a_active, const Matrix& k) {
    const auto& csr = a_active.csr();
    const long big = k.rows();
    Matrix out = Matrix::Zero(big, a_active.rows());
    for (long t = 0; t < a_active.rows(); ++t) {
        auto col = out.col(t);
        for (SystemMatrix::RowMajor::InnerIterator it(csr, t); it; ++it) col.noalias() += it.value() * k.col(it.col());
    }
    return out;
}

Matrix project_stationary(const SystemMatrix& a_active, const Matrix& table) {
    const auto n = static_cast<int>(table.rows());
    if (a_active.cols() != static_cast<long>(n) * n) throw InvalidArgument("projection: table does not match grid");
    // Every column of K, viewed as an n x n image, is an n x n window of the
    // (2n-1) x (2n-1) mirrored table; that table stays in cache.
    const long w = 2L * n - 1;
    std::vector<double> ext(static_cast<size_t>(w * w));
    for (int dr = -(n - 1); dr < n; ++dr) {
        for (int dc = -(n - 1); dc < n; ++dc) ext[static_cast<size_t>((dr + n - 1) * w + dc + n - 1)] = table(std::abs(dr), std::abs(dc));
    }
    const auto& csr = a_active.csr();
    Matrix out = Matrix::Zero(a_active.cols(), a_active.rows());
    for (long t = 0; t < a_active.rows(); ++t) {
        double* col = out.col(t).data();
        for (SystemMatrix::RowMajor::InnerIterator it(csr, t); it; ++it) {
            const long rq = it.col() / n, cq = it.col() % n;
            const double v = it.value();
            for (long r = 0; r < n; ++r) {
                const double* src = ext.data() + (r - rq + n - 1) * w + (n - 1 - cq);
                double* dst = col + r * n;
                for (long c = 0; c < n; ++c) dst[c] += v * src[c];
            }
        }
    }
    return out;
}

Matrix sandwich_lower(const SystemMatrix& a_active, const Matrix& x) {
    const auto& csr = a_active.csr();
    const long m = a_active.rows();
    const long big = x.rows();
    Matrix out(m, m);
    const int* outer = csr.outerIndexPtr();
    const int* inner = csr.innerIndexPtr();
    const double* vals = csr.valuePtr();
    // Columns of X are handled kPanel at a time through a pixel-major copy,
    // so each sparse entry gathers one contiguous run instead of kPanel
    // scattered values.
    constexpr long kPanel = 8;
    std::vector<double> panel(static_cast<size_t>(big * kPanel));
    for (long t0 = 0; t0 < m; t0 += kPanel) {
        const long pw = std::min(kPanel, m - t0);
        for (long b = 0; b < pw; ++b) {
            const double* xc = x.col(t0 + b).data();
            for (long i = 0; i < big; ++i) panel[static_cast<size_t>(i * kPanel + b)] = xc[i];
        }
        for (long s = t0; s < m; ++s) {
            double acc[kPanel] = {};
            for (int q = outer[s]; q < outer[s + 1]; ++q) {
                const double v = vals[q];
                const double* src = panel.data() + static_cast<long>(inner[q]) * kPanel;
                for (long b = 0; b < kPanel; ++b) acc[b] += v * src[b];
            }
            for (long b = 0; b < pw; ++b) out(s, t0 + b) = acc[b];
        }
    }
    return out;
}

KyFactor::KyFactor(const ActiveRows& rows, const Matrix& ak_t, const NoiseCovariance& noise)
    : m_(rows.total), active_(rows.active), inactive_(rows.inactive) {
    if (noise.size() != m_) throw InvalidArgument("K_y: noise model size does not match the number of measurements");
    if (ak_t.cols() != static_cast<long>(active_.size())) throw InvalidArgument("K_y: projected covariance has wrong width");
    const Vector var = noise.variance();
    inactive_var_.resize(static_cast<long>(inactive_.size()));
    for (size_t q = 0; q < inactive_.size(); ++q) {
        inactive_var_(static_cast<long>(q)) = var(inactive_[q]);
        log_det_ += std::log(var(inactive_[q]));
    }
    l_ = sandwich_lower(rows.a_active, ak_t);
    for (size_t q = 0; q < active_.size(); ++q) {
        const auto i = static_cast<long>(q);
        l_(i, i) += var(active_[q]);
    }
    linalg::cholesky_lower_inplace(l_, "K_y");
    for (long i = 0; i < l_.rows(); ++i) log_det_ += 2.0 * std::log(l_(i, i));
}

Vector KyFactor::solve(const Vector& r) const {
    if (inverted_) throw NumericalError("K_y factor was consumed by inversion");
    if (r.size() != m_) throw InvalidArgument("K_y solve: dimension mismatch");
    Vector out(m_);
    for (size_t q = 0; q < inactive_.size(); ++q) {
        out(inactive_[q]) = r(inactive_[q]) / inactive_var_(static_cast<long>(q));
    }
    Vector ra(static_cast<long>(active_.size()));
    for (size_t q = 0; q < active_.size(); ++q) ra(static_cast<long>(q)) = r(active_[q]);
    if (ra.size() > 0) {
        l_.triangularView<Eigen::Lower>().solveInPlace(ra);
        l_.triangularView<Eigen::Lower>().transpose().solveInPlace(ra);
    }
    for (size_t q = 0; q < active_.size(); ++q) out(active_[q]) = ra(static_cast<long>(q));
    return out;
}

double KyFactor::log_det() const { return log_det_; }

Matrix KyFactor::dense() const {
    if (inverted_) throw NumericalError("K_y factor was consumed by inversion");
    Matrix out = Matrix::Zero(m_, m_);
    const Matrix lower = l_.triangularView<Eigen::Lower>();
    const Matrix block = lower * lower.transpose();
    for (size_t i = 0; i < active_.size(); ++i) {
        for (size_t j = 0; j < active_.size(); ++j) {
            out(active_[i], active_[j]) = block(static_cast<long>(i), static_cast<long>(j));
        }
    }
    for (size_t q = 0; q < inactive_.size(); ++q) out(inactive_[q], inactive_[q]) = inactive_var_(static_cast<long>(q));
    return out;
}

void KyFactor::lower_solve_inplace(Matrix& b) const {
    if (inverted_) throw NumericalError("K_y factor was consumed by inversion");
    l_.triangularView<Eigen::Lower>().solveInPlace(b);
}

Matrix& KyFactor::invert_active_inplace() {
    if (!inverted_) linalg::cholesky_inverse_inplace(l_);
    inverted_ = true;
    return l_;
}

KyFactor assemble_ky(const SystemMatrix& a, const Matrix& k, const NoiseCovariance& noise) {
    if (k.rows() != a.cols() || k.cols() != a.cols()) throw InvalidArgument("K_y: prior covariance size mismatch");
    const ActiveRows rows = split_active_rows(a);
    return KyFactor(rows, project_covariance(rows.a_active, k), noise);
}

Vector rsd_map(const Vector& mean, const Vector& variance, double eps_rsd) {
    if (!(eps_rsd > 0.0)) throw InvalidArgument("rsd: eps must be positive");
    if (mean.size() != variance.size()) throw InvalidArgument("rsd: mean/variance size mismatch");
    return (variance.array().max(0.0).sqrt() / (mean.array().abs() + eps_rsd)).matrix();
}

Vector rsd_map(const PosteriorResult& result, double eps_rsd) { return rsd_map(result.mean, result.variance, eps_rsd); }

namespace {

// Shared posterior path. `k_diag` is diag(K); `full_k` builds K on demand for
// the optional full covariance.
template <typename FullK>
PosteriorResult posterior_from_projection(const SystemMatrix& a, const ActiveRows& rows, const Matrix& ak_t,
                                          const Vector& k_diag, FullK&& full_k, const NoiseCovariance& noise,
                                          const Vector& y, double c, const PosteriorOptions& options) {
    const long big = a.cols();
    if (y.size() != a.rows()) throw InvalidArgument("posterior: measurement vector size mismatch");
    const bool want_full = options.full_covariance;
    if (want_full) {
        const long n = std::lround(std::sqrt(static_cast<double>(big)));
        if (n > options.full_covariance_max_n) {
            throw ResourceError("posterior: full covariance requested for n=" + std::to_string(n) + " above the cap of " +
                                std::to_string(options.full_covariance_max_n));
        }
    }
    KyFactor ky(rows, ak_t, noise);

    const Vector r = y - c * a.row_sums();
    const Vector alpha = ky.solve(r);
    Vector alpha_active(static_cast<long>(rows.active.size()));
    for (size_t q = 0; q < rows.active.size(); ++q) alpha_active(static_cast<long>(q)) = alpha(rows.active[q]);

    PosteriorResult out;
    out.mean = Vector::Constant(big, c) + ak_t * alpha_active;
    out.nll_at_fit = 0.5 * r.dot(alpha) + 0.5 * ky.log_det() + 0.5 * static_cast<double>(a.rows()) * std::log(2.0 * std::numbers::pi);

    // diag(K*) = K_ii - ||L^{-1} (A K)_{:,i}||^2, streamed over pixel blocks.
    out.variance = k_diag;
    Matrix v_full;
    if (want_full) v_full.resize(ak_t.cols(), big);
    if (ak_t.cols() > 0) {
        const long block = std::max<long>(1, options.column_block);
        for (long i0 = 0; i0 < big; i0 += block) {
            const long bs = std::min(block, big - i0);
            Matrix v = ak_t.middleRows(i0, bs).transpose();
            ky.lower_solve_inplace(v);
            out.variance.segment(i0, bs) -= v.colwise().squaredNorm().transpose();
            if (want_full) v_full.middleCols(i0, bs) = v;
        }
    }
    out.variance = out.variance.cwiseMax(0.0);
    if (want_full) {
        Matrix kstar = full_k();
        if (v_full.rows() > 0) kstar.noalias() -= v_full.transpose() * v_full;
        out.full_covariance = std::move(kstar);
    }
    out.rsd = rsd_map(out.mean, out.variance, options.eps_rsd);
    out.spec.mean = c;
    return out;
}

}  // namespace

PosteriorResult posterior(const SystemMatrix& a, const Matrix& k, const NoiseCovariance& noise, const Vector& y,
                          double c, const PosteriorOptions& options) {
    const long big = a.cols();
    if (k.rows() != big || k.cols() != big) throw InvalidArgument("posterior: prior covariance size mismatch");
    const ActiveRows rows = split_active_rows(a);
    return posterior_from_projection(a, rows, project_covariance(rows.a_active, k), k.diagonal(), [&] { return k; },
                                     noise, y, c, options);
}

PosteriorResult posterior(const Grid& grid, const SystemMatrix& a, const KernelSpec& spec,
                          const NoiseCovariance& noise, const Vector& y, const PosteriorOptions& options) {
    if (a.cols() != grid.num_pixels()) throw InvalidArgument("posterior: system matrix does not match grid");
    const Matrix table = offset_table(spec, grid.n());
    const ActiveRows rows = split_active_rows(a);
    PosteriorResult out = posterior_from_projection(
        a, rows, project_stationary(rows.a_active, table), Vector::Constant(grid.num_pixels(), table(0, 0)),
        [&] { return build_prior_covariance(grid, spec); }, noise, y, spec.mean, options);
    out.spec = spec;
    return out;
}

}  // namespace gptomo
