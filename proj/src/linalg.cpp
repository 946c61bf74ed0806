#include "gptomo/linalg.hpp"

#include "gptomo/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gptomo::linalg {

namespace {

constexpr long kBlock = 512;

}  // namespace

void cholesky_lower_inplace(Matrix& a, const std::string& what) {
    const long n = a.rows();
    if (n == 0) return;
    const Eigen::Index fail = Eigen::internal::llt_inplace<double, Eigen::Lower>::blocked(a);
    if (fail < 0) return;
    // Eigen stops at the first non-positive pivot; columns before it hold valid L.
    double smallest = std::numeric_limits<double>::infinity();
    for (long j = 0; j < fail; ++j) smallest = std::min(smallest, a(j, j) * a(j, j));
    if (fail == 0) smallest = 0.0;
    throw IllConditioned(what + ": Cholesky failed at pivot " + std::to_string(fail) + " of " + std::to_string(n) +
                             " (smallest accepted pivot " + std::to_string(smallest) +
                             "); increase the noise/nugget level",
                         static_cast<long>(fail), smallest);
}

void invert_lower_inplace(Matrix& a) {
    const long n = a.rows();
    // Backward over diagonal blocks: with the trailing part already inverted,
    // A21 <- -inv(A22) * A21 * inv(A11), then invert A11.
    long start = ((n - 1) / kBlock) * kBlock;
    for (long j = start; j >= 0; j -= kBlock) {
        const long jb = std::min(kBlock, n - j);
        const long rest = n - j - jb;
        auto a11 = a.block(j, j, jb, jb);
        if (rest > 0) {
            auto a21 = a.block(j + jb, j, rest, jb);
            Matrix tmp = a.block(j + jb, j + jb, rest, rest).triangularView<Eigen::Lower>() * a21;
            a11.triangularView<Eigen::Lower>().solveInPlace<Eigen::OnTheRight>(tmp);
            a21 = -tmp;
        }
        Matrix inv = Matrix::Identity(jb, jb);
        a11.triangularView<Eigen::Lower>().solveInPlace(inv);
        a11.triangularView<Eigen::Lower>() = inv;
    }
}

void lower_gram_inplace(Matrix& a) {
    const long n = a.rows();
    for (long i = 0; i < n; i += kBlock) {
        const long ib = std::min(kBlock, n - i);
        const long rest = n - i - ib;
        auto a11 = a.block(i, i, ib, ib);
        if (i > 0) {
            auto a10 = a.block(i, 0, ib, i);
            Matrix tmp = a11.triangularView<Eigen::Lower>().transpose() * a10;
            a10 = tmp;
        }
        Matrix l11 = a11.triangularView<Eigen::Lower>();
        Matrix g11 = l11.transpose() * l11;
        if (rest > 0) {
            auto a21 = a.block(i + ib, i, rest, ib);
            if (i > 0) a.block(i, 0, ib, i).noalias() += a21.transpose() * a.block(i + ib, 0, rest, i);
            g11.noalias() += a21.transpose() * a21;
        }
        a11.triangularView<Eigen::Lower>() = g11;
    }
}

void symmetrize_from_lower(Matrix& a) {
    const long n = a.rows();
    for (long j = 0; j < n; ++j) {
        for (long i = j + 1; i < n; ++i) a(j, i) = a(i, j);
    }
}

void cholesky_inverse_inplace(Matrix& a) {
    invert_lower_inplace(a);
    lower_gram_inplace(a);
    symmetrize_from_lower(a);
}

}  // namespace gptomo::linalg
