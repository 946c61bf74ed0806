#pragma once

#include "gptomo/geometry.hpp"

#include <string>

namespace gptomo::linalg {

/// In-place lower Cholesky of the symmetric matrix whose lower triangle is
/// stored in `a`. Throws IllConditioned naming the failing pivot index and
/// the smallest pivot seen before it.
void cholesky_lower_inplace(Matrix& a, const std::string& what);

/// Replace the lower-triangular factor L (lower triangle of `a`) by L^{-1}.
void invert_lower_inplace(Matrix& a);

/// Replace lower-triangular X (lower triangle of `a`) by the lower triangle of X^T X.
void lower_gram_inplace(Matrix& a);

/// Copy the lower triangle onto the upper one.
void symmetrize_from_lower(Matrix& a);

/// Given the Cholesky factor L in the lower triangle of `a`, overwrite `a`
/// with the full symmetric inverse (L L^T)^{-1}.
void cholesky_inverse_inplace(Matrix& a);

}  // namespace gptomo::linalg
