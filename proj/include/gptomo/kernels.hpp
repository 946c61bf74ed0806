#pragma once

#include "gptomo/geometry.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gptomo {

enum class KernelFamily { SquaredExponential, Matern32, Matern52 };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Homogeneous composite stationary kernel plus constant prior mean.
///
///   k(d) = sum_i sigma_f[i]^2 * g(d / length[i])
///
/// with g the unit-variance correlation of `family`. Lengths are in pixel units.
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern32;
    std::vector<double> sigma_f;
    std::vector<double> length;
    double mean = 0.0;

    [[nodiscard]] std::size_t num_components() const noexcept { return sigma_f.size(); }
    [[nodiscard]] double variance() const noexcept;  // k(0)
    void validate() const;
};

/// Log-reparameterised hyperparameters [c, log sigma_f (N_k), log l (N_k)].
Vector to_hyper(const KernelSpec& spec);
KernelSpec from_hyper(KernelFamily family, const Vector& beta);
inline long hyper_size(std::size_t num_components) { return 2 * static_cast<long>(num_components) + 1; }

/// Unit-variance correlation g(r) and its derivative dg/dr.
double unit_correlation(KernelFamily family, double r);
double unit_correlation_slope(KernelFamily family, double r);

double kernel_value(KernelFamily family, double sigma_f, double length, double d);
double composite_value(const KernelSpec& spec, double d);

struct KernelGrad {
    double d_log_sigma;
    double d_log_length;
};
/// Derivatives of component `component`'s contribution to k(d).
KernelGrad kernel_grad(const KernelSpec& spec, double d, std::size_t component);

/// Kernel sampled on pixel offsets: table(a, b) = k(sqrt(a^2 + b^2)) for
/// a = |row difference|, b = |column difference| in 0..n-1.
Matrix offset_table(const KernelSpec& spec, int n);
/// Same layout for d k / d log sigma_i and d k / d log l_i.
Matrix offset_table_dlog_sigma(const KernelSpec& spec, int n, std::size_t component);
Matrix offset_table_dlog_length(const KernelSpec& spec, int n, std::size_t component);

/// Dense n^2 x n^2 matrix K_ij = table(|r_i - r_j|, |c_i - c_j|).
Matrix expand_offset_table(const Matrix& table);

/// Default cap on the dense prior covariance size (bytes).
inline constexpr std::size_t kDefaultCovarianceBudget = std::size_t{3} << 30;

/// Prior covariance over grid pixels; distances are measured in pixel units.
/// Throws ResourceError if n^4 doubles exceed `budget_bytes`.
Matrix build_prior_covariance(const Grid& grid, const KernelSpec& spec,
                              std::size_t budget_bytes = kDefaultCovarianceBudget);

std::size_t covariance_bytes(int n);

}  // namespace gptomo
