#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gptomo/error.hpp"
#include "gptomo/noise.hpp"
#include "gptomo/optimize.hpp"
#include "gptomo/phantom.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <sstream>

using namespace gptomo;

namespace {

Objective quadratic(const Matrix& h, const Vector& b) {
    return [h, b](const Vector& x, bool grad) {
        ObjectiveValue v{0.5 * x.dot(h * x) - b.dot(x), {}};
        if (grad) v.grad = h * x - b;
        return v;
    };
}

ObjectiveValue rosenbrock(const Vector& x, bool grad) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    ObjectiveValue v{a * a + 100.0 * b * b, {}};
    if (grad) {
        v.grad.resize(2);
        v.grad << -2.0 * a - 400.0 * x(0) * b, 200.0 * b;
    }
    return v;
}

}  // namespace

TEST_CASE("convex quadratic reaches the analytic minimiser") {
    Matrix m(5, 5);
    m << 4, 1, 0, 0, 1, 1, 3, 1, 0, 0, 0, 1, 5, 1, 0, 0, 0, 1, 2, 0.5, 1, 0, 0, 0.5, 6;
    Vector b(5);
    b << 1, -2, 0.5, 3, -1;
    OptimizerConfig cfg;
    cfg.gradient_tolerance = 1e-12;
    cfg.max_step = 100.0;
    const MinimizeResult r = minimize(quadratic(m, b), Vector::Zero(5), cfg);
    const Vector exact = m.ldlt().solve(b);
    CHECK((r.x - exact).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(r.status == OptimizerStatus::Converged);
}

TEST_CASE("Rosenbrock from the standard start") {
    for (auto scheme : {HessianVectorScheme::Forward, HessianVectorScheme::Central}) {
        OptimizerConfig cfg;
        cfg.hessian_vector = scheme;
        cfg.gradient_tolerance = 1e-9;
        cfg.max_iterations = 500;
        Vector x0(2);
        x0 << -1.2, 1.0;
        std::vector<double> values;
        cfg.trace = [&](const TraceRecord& t) { values.push_back(t.value); };
        const MinimizeResult r = minimize(rosenbrock, x0, cfg);
        CHECK(r.value < 1e-10);
        CHECK(std::abs(r.x(0) - 1.0) < 1e-4);
        CHECK(std::abs(r.x(1) - 1.0) < 1e-4);
        // Monotone line search.
        for (size_t i = 1; i < values.size(); ++i) CHECK(values[i] <= values[i - 1]);
        CHECK(values.front() == doctest::Approx(24.2));
    }
}

TEST_CASE("start validation and failure handling") {
    const Objective bad = [](const Vector&, bool) { return ObjectiveValue{std::numeric_limits<double>::quiet_NaN(), Vector::Zero(1)}; };
    CHECK_THROWS_AS(minimize(bad, Vector::Zero(1)), InvalidStart);
    OptimizerConfig cfg;
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(minimize(rosenbrock, Vector::Zero(2), cfg), InvalidArgument);

    // The objective is only defined for x < 1; trial points beyond it are rejected.
    const Objective wall = [](const Vector& x, bool grad) {
        if (x(0) >= 1.0) throw NumericalError("outside domain");
        ObjectiveValue v{-std::log(1.0 - x(0)) + x(0) * x(0), {}};
        if (grad) v.grad = Vector::Constant(1, 1.0 / (1.0 - x(0)) + 2.0 * x(0));
        return v;
    };
    OptimizerConfig wcfg;
    wcfg.gradient_tolerance = 1e-10;
    const MinimizeResult r = minimize(wall, Vector::Constant(1, 0.9), wcfg);
    // Minimiser of -log(1 - x) + x^2: 2x(1 - x) = -1 => x = (1 - sqrt(3)) / 2.
    CHECK(r.x(0) == doctest::Approx((1.0 - std::sqrt(3.0)) / 2.0).epsilon(1e-8));
    CHECK(r.value <= wall(Vector::Constant(1, 0.9), false).value);
}

TEST_CASE("deterministic output") {
    Vector x0(2);
    x0 << -1.2, 1.0;
    const MinimizeResult a = minimize(rosenbrock, x0), b = minimize(rosenbrock, x0);
    CHECK(a.x == b.x);
    CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("trace CSV") {
    std::ostringstream os;
    CsvTrace trace(os, "k1");
    OptimizerConfig cfg;
    cfg.trace = [&](const TraceRecord& t) { trace(t); };
    Vector x0(2);
    x0 << -1.2, 1.0;
    const MinimizeResult r = minimize(rosenbrock, x0, cfg);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "stage,iteration,value,grad_inf,step,evaluations");
    int rows = 0;
    while (std::getline(is, line)) {
        CHECK(line.rfind("k1,", 0) == 0);
        ++rows;
    }
    CHECK(rows == r.iterations + 1);
}

TEST_CASE("GP fit on a small Shepp-Logan problem converges") {
    const Grid g(16, 0.08 / 16);
    const ObjectField f = shepp_logan(g);
    const SystemMatrix a = build_system_matrix(g, default_scan(g, 10));
    NoiseCase nc;
    nc.id = NoiseCaseId::I;
    const Vector y = a.forward(f.values);
    const CorruptedSinogram cs = corrupt(y, nc);
    const MarginalLikelihood lik(g, a, assumed_noise_model(nc, y, cs.sigma_true), cs.y, KernelFamily::SquaredExponential);
    OptimizerConfig cfg;
    cfg.gradient_tolerance = 1e-7;
    const FitReport rep = fit_sequential(lik, 1, cfg);
    REQUIRE(rep.stages.size() == 1);
    CHECK(rep.stages[0].grad_norm < 1e-4);
    CHECK(rep.converged());

    // A single stage equals a single minimize call.
    const KernelSpec start = default_initial_spec(lik);
    const MinimizeResult direct = minimize(likelihood_objective(lik), to_hyper(start), cfg);
    CHECK(direct.value == rep.stages[0].nll);
    for (double s : rep.spec.sigma_f) CHECK(s > 0.0);
    for (double l : rep.spec.length) CHECK(l > 0.0);
}

TEST_CASE("two-component fit on a synthetic prior draw") {
    const Grid g(16, 1.0);
    KernelSpec truth;
    truth.family = KernelFamily::Matern52;
    truth.mean = 0.5;
    truth.sigma_f = {1.0, 0.3};
    truth.length = {5.0, 1.0};
    Matrix k = build_prior_covariance(g, truth);
    k.diagonal().array() += 1e-10;
    const Eigen::LLT<Matrix> llt(k);
    REQUIRE(llt.info() == Eigen::Success);
    const CounterRng rng(2024);
    Vector z(g.num_pixels());
    for (long i = 0; i < z.size(); ++i) z(i) = rng.normal(7, static_cast<std::uint64_t>(i));
    const Vector f = Vector::Constant(z.size(), truth.mean) + llt.matrixL() * z;

    const SystemMatrix a = build_system_matrix(g, default_scan(g, 40));
    const double sigma = 0.01;
    Vector y = a.forward(f);
    for (long t = 0; t < y.size(); ++t) y(t) += sigma * rng.normal(8, static_cast<std::uint64_t>(t));
    const MarginalLikelihood lik(g, a, NoiseCovariance::homoskedastic(y.size(), sigma), y, truth.family);
    const double j_true = lik.evaluate(to_hyper(truth), false).value;

    const FitReport rep = fit_sequential(lik, 2);
    const std::vector<double> stage = rep.stage_nll();
    REQUIRE(!stage.empty());
    for (size_t i = 1; i < stage.size(); ++i) CHECK(stage[i] <= stage[i - 1] + 1e-6);
    const double j_fit = lik.evaluate(to_hyper(rep.spec), false).value;
    CHECK(std::abs(j_fit - j_true) <= 0.01 * std::abs(j_true));
    CHECK(j_fit <= j_true + 1e-6);
}

TEST_CASE("fit_sequential validation") {
    const Grid g(4, 1.0);
    const SystemMatrix a = build_system_matrix(g, default_scan(g, 2));
    const MarginalLikelihood lik(g, a, NoiseCovariance::homoskedastic(a.rows(), 0.1), Vector::Ones(a.rows()),
                                 KernelFamily::Matern32);
    CHECK_THROWS_AS(fit_sequential(lik, 0), InvalidArgument);
}
