#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gptomo/error.hpp"
#include "gptomo/kernels.hpp"
#include "gptomo/linalg.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace gptomo;

namespace {

constexpr KernelFamily kFamilies[] = {KernelFamily::SquaredExponential, KernelFamily::Matern32, KernelFamily::Matern52};

// Defining expressions written independently of the library's factored forms.
double reference_kernel(KernelFamily f, double s, double l, double d) {
    const double r = d / l;
    switch (f) {
        case KernelFamily::SquaredExponential: return s * s * std::exp(-0.5 * r * r);
        case KernelFamily::Matern32: return s * s * (1.0 + std::sqrt(3.0) * r) * std::exp(-std::sqrt(3.0) * r);
        case KernelFamily::Matern52:
            return s * s * (1.0 + std::sqrt(5.0) * r + 5.0 * r * r / 3.0) * std::exp(-std::sqrt(5.0) * r);
    }
    return 0.0;
}

KernelSpec single(KernelFamily f, double s, double l) {
    KernelSpec spec;
    spec.family = f;
    spec.sigma_f = {s};
    spec.length = {l};
    return spec;
}

}  // namespace

TEST_CASE("closed-form values") {
    for (auto f : kFamilies) CHECK(kernel_value(f, 1.7, 2.3, 0.0) == doctest::Approx(1.7 * 1.7).epsilon(1e-15));
    CHECK(kernel_value(KernelFamily::SquaredExponential, 1, 1, 1) == doctest::Approx(0.6065306597126334).epsilon(1e-14));
    CHECK(kernel_value(KernelFamily::Matern32, 1, 1, 1) == doctest::Approx(0.4833577245965077).epsilon(1e-14));
    CHECK(kernel_value(KernelFamily::Matern52, 1, 1, 1) ==
          doctest::Approx((1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0))).epsilon(1e-14));
    CHECK_THROWS_AS(kernel_value(KernelFamily::Matern32, 1, 1, -0.1), InvalidArgument);
}

TEST_CASE("closed forms agree with the defining expressions") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> s(0.1, 3.0), l(0.2, 20.0), d(0.0, 40.0);
    for (auto f : kFamilies) {
        for (int i = 0; i < 100; ++i) {
            const double sv = s(rng), lv = l(rng), dv = d(rng);
            const double ref = reference_kernel(f, sv, lv, dv);
            CHECK(std::abs(kernel_value(f, sv, lv, dv) - ref) <= 1e-14 * std::max(ref, 1e-300) + 1e-300);
        }
    }
}

TEST_CASE("composite kernels") {
    KernelSpec one = single(KernelFamily::Matern52, 1.3, 2.0);
    CHECK(composite_value(one, 1.5) == doctest::Approx(kernel_value(KernelFamily::Matern52, 1.3, 2.0, 1.5)));
    KernelSpec two = one;
    two.sigma_f.push_back(1.3);
    two.length.push_back(2.0);
    CHECK(composite_value(two, 1.5) == doctest::Approx(2.0 * composite_value(one, 1.5)));
    CHECK(two.variance() == doctest::Approx(2 * 1.3 * 1.3));

    for (auto f : kFamilies) {
        KernelSpec spec;
        spec.family = f;
        spec.sigma_f = {1.0, 0.5};
        spec.length = {3.0, 0.7};
        const double far = 50.0 * 3.0;
        CHECK(composite_value(spec, far) < 1e-12 * spec.variance());
        double prev = composite_value(spec, 0.0);
        for (int i = 1; i <= 4000; ++i) {
            const double v = composite_value(spec, i * far / 4000);
            CHECK(v <= prev);
            CHECK(v >= 0.0);
            prev = v;
        }
    }
}

TEST_CASE("spec validation and hyper round trip") {
    KernelSpec bad = single(KernelFamily::SquaredExponential, -1.0, 1.0);
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = single(KernelFamily::SquaredExponential, 1.0, 0.0);
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    KernelSpec empty;
    CHECK_THROWS_AS(empty.validate(), InvalidArgument);

    std::mt19937_64 rng(2);
    const KernelSpec spec = oracle::random_spec(rng, KernelFamily::Matern32, 3);
    const Vector beta = to_hyper(spec);
    REQUIRE(beta.size() == hyper_size(3));
    CHECK(beta(0) == spec.mean);
    const KernelSpec back = from_hyper(KernelFamily::Matern32, beta);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.sigma_f[i] == doctest::Approx(spec.sigma_f[i]).epsilon(1e-15));
        CHECK(back.length[i] == doctest::Approx(spec.length[i]).epsilon(1e-15));
    }
    // Any finite beta maps to strictly positive parameters.
    Vector wild(5);
    wild << 3.0, -40.0, 40.0, -30.0, 5.0;
    const KernelSpec w = from_hyper(KernelFamily::Matern52, wild);
    for (double s : w.sigma_f) CHECK(s > 0.0);
    for (double l : w.length) CHECK(l > 0.0);
    CHECK_THROWS_AS(from_hyper(KernelFamily::Matern52, Vector::Zero(4)), InvalidArgument);

    CHECK(parse_kernel_family("SE") == KernelFamily::SquaredExponential);
    CHECK(parse_kernel_family("mk32") == KernelFamily::Matern32);
    CHECK(parse_kernel_family("MK52") == KernelFamily::Matern52);
    CHECK(to_string(KernelFamily::Matern52) == "MK52");
    CHECK_THROWS_AS(parse_kernel_family("gibbs"), InvalidArgument);
}

TEST_CASE("log-parameter derivatives") {
    const KernelSpec se = single(KernelFamily::SquaredExponential, 1.0, 1.0);
    const KernelGrad g0 = kernel_grad(se, 0.0, 0);
    CHECK(g0.d_log_sigma == doctest::Approx(2.0));
    CHECK(g0.d_log_length == 0.0);
    CHECK(kernel_grad(se, 1.0, 0).d_log_length == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> s(0.3, 2.5), l(0.5, 8.0), d(0.05, 20.0);
    const double h = 1e-6;
    for (auto f : kFamilies) {
        for (int i = 0; i < 100; ++i) {
            const double sv = s(rng), lv = l(rng), dv = d(rng);
            const KernelGrad g = kernel_grad(single(f, sv, lv), dv, 0);
            const double fd_s = (kernel_value(f, sv * std::exp(h), lv, dv) - kernel_value(f, sv * std::exp(-h), lv, dv)) / (2 * h);
            const double fd_l = (kernel_value(f, sv, lv * std::exp(h), dv) - kernel_value(f, sv, lv * std::exp(-h), dv)) / (2 * h);
            CHECK(std::abs(g.d_log_sigma - fd_s) <= 1e-6 * std::abs(fd_s) + 1e-13);
            CHECK(std::abs(g.d_log_length - fd_l) <= 1e-6 * std::abs(fd_l) + 1e-13);
        }
    }
}

TEST_CASE("offset tables reproduce pairwise kernels") {
    std::mt19937_64 rng(9);
    for (auto f : kFamilies) {
        const KernelSpec spec = oracle::random_spec(rng, f, 2);
        const Grid g(5, 0.3);
        const Matrix k = build_prior_covariance(g, spec);
        CHECK((k - oracle::dense_prior(g, spec)).cwiseAbs().maxCoeff() < 1e-14);
        const Matrix ds = expand_offset_table(offset_table_dlog_sigma(spec, 5, 1));
        const Matrix dl = expand_offset_table(offset_table_dlog_length(spec, 5, 1));
        for (long i = 0; i < 25; ++i) {
            for (long j = 0; j < 25; ++j) {
                const KernelGrad kg = kernel_grad(spec, (g.center(i) - g.center(j)).norm() / g.pixel_size(), 1);
                CHECK(ds(i, j) == doctest::Approx(kg.d_log_sigma).epsilon(1e-13));
                CHECK(dl(i, j) == doctest::Approx(kg.d_log_length).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("prior covariance") {
    // One pixel: a 1 x 1 offset table holds k(0).
    KernelSpec spec;
    spec.family = KernelFamily::Matern32;
    spec.sigma_f = {0.7, 1.1};
    spec.length = {1.0, 4.0};
    const Matrix k1 = expand_offset_table(offset_table(spec, 1));
    REQUIRE(k1.size() == 1);
    CHECK(k1(0, 0) == doctest::Approx(0.49 + 1.21));

    const Matrix k2 = build_prior_covariance(Grid(2, 1.0), single(KernelFamily::SquaredExponential, 1.0, 1.0));
    CHECK(k2(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(k2(0, 2) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(k2(0, 3) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    // Distances are in pixel units, so p does not change K.
    const Matrix ka = build_prior_covariance(Grid(4, 1.0), spec);
    const Matrix kb = build_prior_covariance(Grid(4, 1e-3), spec);
    CHECK((ka - kb).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(4);
    for (auto f : kFamilies) {
        const KernelSpec rs = oracle::random_spec(rng, f, 2);
        Matrix k = build_prior_covariance(Grid(8, 0.5), rs);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK((k.diagonal().array() - rs.variance()).abs().maxCoeff() < 1e-14);
        k.diagonal().array() += 1e-10 * rs.variance();
        CHECK_NOTHROW(linalg::cholesky_lower_inplace(k, "K"));

        const Matrix k16 = build_prior_covariance(Grid(16, 1.0), rs);
        const Eigen::SelfAdjointEigenSolver<Matrix> es(k16, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8 * rs.variance());
    }
}

TEST_CASE("covariance memory budget") {
    CHECK(covariance_bytes(100) == std::size_t{800000000});
    KernelSpec spec = single(KernelFamily::Matern32, 1.0, 3.0);
    CHECK_THROWS_AS(build_prior_covariance(Grid(64, 1.0), spec, 1000), ResourceError);
}
