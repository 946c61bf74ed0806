#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gptomo/error.hpp"
#include "gptomo/noise.hpp"

#include <cmath>

using namespace gptomo;

namespace {

Vector synthetic_clean(long m) {
    Vector y(m);
    for (long t = 0; t < m; ++t) y(t) = 1.0 + std::sin(0.001 * static_cast<double>(t)) + 0.5 * std::cos(0.37 * t);
    return y;
}

NoiseCase make_case(NoiseCaseId id, std::uint64_t seed) {
    NoiseCase c;
    c.id = id;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("rms") {
    CHECK(rms(Vector::Constant(7, -2.5)) == doctest::Approx(2.5).epsilon(1e-15));
    Vector v(2);
    v << 3, 4;
    CHECK(rms(v) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    const Vector w = synthetic_clean(50);
    CHECK(rms(-3.0 * w) == doctest::Approx(3.0 * rms(w)).epsilon(1e-14));
    CHECK_THROWS_AS(rms(Vector(0)), InvalidArgument);
}

TEST_CASE("counter-based generator") {
    const CounterRng a(5), b(5), c(6);
    CHECK(a.bits(1, 10) == b.bits(1, 10));
    CHECK(a.bits(1, 10) != c.bits(1, 10));
    CHECK(a.bits(1, 10) != a.bits(2, 10));
    double mean = 0, sq = 0;
    int out_of_range = 0;
    const int count = 200000;
    for (int i = 0; i < count; ++i) {
        const double u = a.uniform(3, i);
        out_of_range += (u < 0.0 || u >= 1.0);
        const double z = a.normal(4, i);
        mean += z;
        sq += z * z;
    }
    CHECK(out_of_range == 0);
    mean /= count;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(count));
    CHECK(std::abs(sq / count - 1.0) < 0.02);
}

TEST_CASE("case parsing and validation") {
    CHECK(parse_noise_case("III") == NoiseCaseId::III);
    CHECK(parse_noise_case("4") == NoiseCaseId::IV);
    CHECK(to_string(NoiseCaseId::II) == "II");
    CHECK_THROWS_AS(parse_noise_case("V"), InvalidArgument);
    NoiseCase c;
    c.alpha_lo = 0.3;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = NoiseCase{};
    c.fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("case I adds nothing") {
    const Vector y = synthetic_clean(100);
    const CorruptedSinogram r = corrupt(y, make_case(NoiseCaseId::I, 1));
    CHECK(r.y == y);
    CHECK(r.sigma_true.isZero(0.0));
    const NoiseCovariance model = assumed_noise_model(make_case(NoiseCaseId::I, 1), y, r.sigma_true);
    CHECK(model.is_homoskedastic());
    CHECK(model.variance().isApprox(Vector::Constant(100, 1e-6)));
}

TEST_CASE("case II noise level") {
    const Vector y = synthetic_clean(100000);
    const CorruptedSinogram r = corrupt(y, make_case(NoiseCaseId::II, 11));
    const Vector d = r.y - y;
    const double sd = std::sqrt((d.array() - d.mean()).square().sum() / static_cast<double>(d.size() - 1));
    CHECK(std::abs(sd - 0.1 * rms(y)) <= 0.01 * 0.1 * rms(y));
    CHECK((r.sigma_true.array() == 0.1 * rms(y)).all());
    const NoiseCovariance model = assumed_noise_model(make_case(NoiseCaseId::II, 11), y, r.sigma_true);
    CHECK(model.is_homoskedastic());
    CHECK((model.variance().array() == model.variance()(0)).all());
}

TEST_CASE("case III alphas and matched model") {
    const Vector y = synthetic_clean(100000);
    const NoiseCase c = make_case(NoiseCaseId::III, 12);
    const CorruptedSinogram r = corrupt(y, c);
    REQUIRE(r.alpha.size() == y.size());
    CHECK(std::abs(r.alpha.mean() - 0.15) <= 0.02 * 0.15);
    CHECK(r.alpha.minCoeff() > 0.05);
    CHECK(r.alpha.maxCoeff() < 0.25);
    CHECK(r.sigma_true.isApprox(r.alpha * rms(y), 1e-15));
    const NoiseCovariance model = assumed_noise_model(c, y, r.sigma_true);
    CHECK(model.sigma() == r.sigma_true);

    // Standardised residuals are unit normal.
    const Vector z = ((r.y - y).array() / r.sigma_true.array()).matrix();
    CHECK(std::abs(z.squaredNorm() / static_cast<double>(z.size()) - 1.0) < 0.02);
}

TEST_CASE("case IV shares case III's generation but not its model") {
    const Vector y = synthetic_clean(1000);
    const CorruptedSinogram r3 = corrupt(y, make_case(NoiseCaseId::III, 99));
    const CorruptedSinogram r4 = corrupt(y, make_case(NoiseCaseId::IV, 99));
    CHECK(r3.y == r4.y);
    CHECK(r3.sigma_true == r4.sigma_true);
    const NoiseCase c4 = make_case(NoiseCaseId::IV, 99);
    const NoiseCovariance m1 = assumed_noise_model(c4, y, r4.sigma_true);
    const NoiseCovariance m2 = assumed_noise_model(c4, y, 3.0 * r4.sigma_true);
    CHECK(m1.variance() == m2.variance());
    CHECK(m1.is_homoskedastic());
    CHECK(m1.variance()(0) == doctest::Approx(std::pow(0.1 * rms(y), 2)).epsilon(1e-14));
}

TEST_CASE("per-measurement scale switch") {
    const Vector y = synthetic_clean(500);
    NoiseCase c = make_case(NoiseCaseId::III, 3);
    c.per_measurement_scale = true;
    const CorruptedSinogram r = corrupt(y, c);
    CHECK(r.sigma_true.isApprox((r.alpha.array() * y.array().abs()).matrix(), 1e-15));
}

TEST_CASE("reproducible and unbiased") {
    const Vector y = synthetic_clean(8);
    for (auto id : {NoiseCaseId::II, NoiseCaseId::III}) {
        CHECK(corrupt(y, make_case(id, 42)).y == corrupt(y, make_case(id, 42)).y);
        CHECK(corrupt(y, make_case(id, 42)).y != corrupt(y, make_case(id, 43)).y);
        const int seeds = 1000;
        Vector sum = Vector::Zero(8), sum_var = Vector::Zero(8);
        for (int s = 0; s < seeds; ++s) {
            const CorruptedSinogram r = corrupt(y, make_case(id, static_cast<std::uint64_t>(s)));
            sum += r.y - y;
            sum_var += r.sigma_true.cwiseAbs2();
        }
        const Vector mean = sum / seeds;
        const Vector se = (sum_var / seeds).cwiseSqrt() / std::sqrt(static_cast<double>(seeds));
        for (long t = 0; t < 8; ++t) CHECK(std::abs(mean(t)) <= 3.0 * se(t));
    }
}
