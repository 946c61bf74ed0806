#include "gptomo/kernels.hpp"

#include "gptomo/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace gptomo {

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);

void check_distance(double d) {
    if (!(d >= 0.0)) throw InvalidArgument("kernel: distance must be non-negative");
}

void check_params(double sigma_f, double length) {
    if (!(sigma_f > 0.0) || !(length > 0.0)) throw InvalidArgument("kernel: sigma_f and length must be positive");
}

template <typename Fn>
Matrix tabulate(int n, Fn&& fn) {
    Matrix t(n, n);
    for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) t(a, b) = fn(std::hypot(static_cast<double>(a), static_cast<double>(b)));
    }
    return t;
}

}  // namespace

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "SE";
        case KernelFamily::Matern32: return "MK32";
        case KernelFamily::Matern52: return "MK52";
    }
    return "?";
}

KernelFamily parse_kernel_family(std::string_view name) {
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "SE") return KernelFamily::SquaredExponential;
    if (up == "MK32" || up == "MATERN32") return KernelFamily::Matern32;
    if (up == "MK52" || up == "MATERN52") return KernelFamily::Matern52;
    throw InvalidArgument("unknown kernel family '" + std::string(name) + "' (expected SE, MK32 or MK52)");
}

double KernelSpec::variance() const noexcept {
    double v = 0.0;
    for (double s : sigma_f) v += s * s;
    return v;
}

void KernelSpec::validate() const {
    if (sigma_f.empty()) throw InvalidArgument("kernel spec: need at least one component");
    if (sigma_f.size() != length.size()) throw InvalidArgument("kernel spec: sigma_f and length sizes differ");
    for (std::size_t i = 0; i < sigma_f.size(); ++i) check_params(sigma_f[i], length[i]);
    if (!std::isfinite(mean)) throw InvalidArgument("kernel spec: mean must be finite");
}

Vector to_hyper(const KernelSpec& spec) {
    spec.validate();
    const auto nk = static_cast<long>(spec.num_components());
    Vector beta(2 * nk + 1);
    beta(0) = spec.mean;
    for (long i = 0; i < nk; ++i) {
        beta(1 + i) = std::log(spec.sigma_f[static_cast<std::size_t>(i)]);
        beta(1 + nk + i) = std::log(spec.length[static_cast<std::size_t>(i)]);
    }
    return beta;
}

KernelSpec from_hyper(KernelFamily family, const Vector& beta) {
    if (beta.size() < 3 || beta.size() % 2 == 0) throw InvalidArgument("hyper vector must have length 2*N_k+1");
    const long nk = (beta.size() - 1) / 2;
    KernelSpec spec;
    spec.family = family;
    spec.mean = beta(0);
    spec.sigma_f.resize(static_cast<std::size_t>(nk));
    spec.length.resize(static_cast<std::size_t>(nk));
    for (long i = 0; i < nk; ++i) {
        spec.sigma_f[static_cast<std::size_t>(i)] = std::exp(beta(1 + i));
        spec.length[static_cast<std::size_t>(i)] = std::exp(beta(1 + nk + i));
    }
    return spec;
}

double unit_correlation(KernelFamily family, double r) {
    switch (family) {
        case KernelFamily::SquaredExponential: return std::exp(-0.5 * r * r);
        case KernelFamily::Matern32: {
            const double a = kSqrt3 * r;
            return (1.0 + a) * std::exp(-a);
        }
        case KernelFamily::Matern52: {
            const double a = kSqrt5 * r;
            return (1.0 + a + a * a / 3.0) * std::exp(-a);
        }
    }
    return 0.0;
}

double unit_correlation_slope(KernelFamily family, double r) {
    switch (family) {
        case KernelFamily::SquaredExponential: return -r * std::exp(-0.5 * r * r);
        case KernelFamily::Matern32: return -3.0 * r * std::exp(-kSqrt3 * r);
        case KernelFamily::Matern52: {
            const double a = kSqrt5 * r;
            return -(5.0 / 3.0) * r * (1.0 + a) * std::exp(-a);
        }
    }
    return 0.0;
}

double kernel_value(KernelFamily family, double sigma_f, double length, double d) {
    check_distance(d);
    check_params(sigma_f, length);
    return sigma_f * sigma_f * unit_correlation(family, d / length);
}

double composite_value(const KernelSpec& spec, double d) {
    check_distance(d);
    spec.validate();
    double k = 0.0;
    for (std::size_t i = 0; i < spec.num_components(); ++i) {
        k += spec.sigma_f[i] * spec.sigma_f[i] * unit_correlation(spec.family, d / spec.length[i]);
    }
    return k;
}

KernelGrad kernel_grad(const KernelSpec& spec, double d, std::size_t component) {
    check_distance(d);
    if (component >= spec.num_components()) throw InvalidArgument("kernel_grad: component out of range");
    const double s2 = spec.sigma_f[component] * spec.sigma_f[component];
    const double r = d / spec.length[component];
    return {2.0 * s2 * unit_correlation(spec.family, r), -s2 * unit_correlation_slope(spec.family, r) * r};
}

Matrix offset_table(const KernelSpec& spec, int n) {
    spec.validate();
    Matrix t = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < spec.num_components(); ++i) {
        const double s2 = spec.sigma_f[i] * spec.sigma_f[i];
        const double l = spec.length[i];
        t += tabulate(n, [&](double d) { return s2 * unit_correlation(spec.family, d / l); });
    }
    return t;
}

Matrix offset_table_dlog_sigma(const KernelSpec& spec, int n, std::size_t component) {
    return tabulate(n, [&](double d) { return kernel_grad(spec, d, component).d_log_sigma; });
}

Matrix offset_table_dlog_length(const KernelSpec& spec, int n, std::size_t component) {
    return tabulate(n, [&](double d) { return kernel_grad(spec, d, component).d_log_length; });
}

Matrix expand_offset_table(const Matrix& table) {
    const auto n = static_cast<int>(table.rows());
    const long big = static_cast<long>(n) * n;
    Matrix k(big, big);
    for (int r2 = 0; r2 < n; ++r2) {
        for (int c2 = 0; c2 < n; ++c2) {
            double* col = k.col(static_cast<long>(r2) * n + c2).data();
            for (int r1 = 0; r1 < n; ++r1) {
                const int a = std::abs(r1 - r2);
                double* dst = col + static_cast<long>(r1) * n;
                for (int c1 = 0; c1 < n; ++c1) dst[c1] = table(a, std::abs(c1 - c2));
            }
        }
    }
    return k;
}

std::size_t covariance_bytes(int n) {
    const auto big = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    return big * big * sizeof(double);
}

Matrix build_prior_covariance(const Grid& grid, const KernelSpec& spec, std::size_t budget_bytes) {
    const std::size_t need = covariance_bytes(grid.n());
    if (need > budget_bytes) {
        throw ResourceError("prior covariance for n=" + std::to_string(grid.n()) + " needs " +
                            std::to_string(need >> 20) + " MiB, over the " + std::to_string(budget_bytes >> 20) +
                            " MiB budget; reduce n or raise the memory budget");
    }
    return expand_offset_table(offset_table(spec, grid.n()));
}

}  // namespace gptomo
