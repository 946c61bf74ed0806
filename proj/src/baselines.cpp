#include "gptomo/baselines.hpp"

#include "gptomo/error.hpp"
#include "gptomo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gptomo {

Vector reconstruct_l2(const SystemMatrix& a, const Vector& y, const L2Options& options,
                      std::vector<double>* residual_norms) {
    if (y.size() != a.rows()) throw InvalidArgument("l2: sinogram length does not match the system matrix");
    if (options.iterations < 0) throw InvalidArgument("l2: negative iteration budget");
    Vector f = Vector::Zero(a.cols());
    Vector r = y;
    Vector s = a.adjoint(r);
    Vector p = s;
    double gamma = s.squaredNorm();
    if (residual_norms) residual_norms->assign(1, r.norm());
    for (int k = 0; k < options.iterations; ++k) {
        if (gamma == 0.0) {
            if (residual_norms) residual_norms->push_back(r.norm());
            continue;
        }
        const Vector q = a.forward(p);
        const double qq = q.squaredNorm();
        if (qq == 0.0) break;
        const double alpha = gamma / qq;
        f += alpha * p;
        r -= alpha * q;
        s = a.adjoint(r);
        const double gamma_new = s.squaredNorm();
        p = s + (gamma_new / gamma) * p;
        gamma = gamma_new;
        if (residual_norms) residual_norms->push_back(r.norm());
    }
    return f;
}

namespace {

// Forward differences with a zero difference across the far boundary.
void gradient(const Vector& f, int n, Vector& gx, Vector& gy) {
    gx.resize(f.size());
    gy.resize(f.size());
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const long i = static_cast<long>(r) * n + c;
            gx(i) = c + 1 < n ? f(i + 1) - f(i) : 0.0;
            gy(i) = r + 1 < n ? f(i + n) - f(i) : 0.0;
        }
    }
}

// Negative adjoint of `gradient`.
Vector divergence(const Vector& px, const Vector& py, int n) {
    Vector d(px.size());
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const long i = static_cast<long>(r) * n + c;
            double v = 0.0;
            if (c + 1 < n) v += px(i);
            if (c > 0) v -= px(i - 1);
            if (r + 1 < n) v += py(i);
            if (r > 0) v -= py(i - n);
            d(i) = v;
        }
    }
    return d;
}

double objective(const SystemMatrix& a, const Vector& y, const Vector& f, int n, double lambda) {
    return 0.5 * (a.forward(f) - y).squaredNorm() + lambda * total_variation(f, n);
}

}  // namespace

double total_variation(const Vector& f, int n) {
    if (f.size() != static_cast<long>(n) * n) throw InvalidArgument("tv: image size does not match n");
    Vector gx, gy;
    gradient(f, n, gx, gy);
    return (gx.array().square() + gy.array().square()).sqrt().sum();
}

Vector tv_prox(const Vector& b, int n, double mu, int iterations, Vector* dual) {
    const long big = static_cast<long>(n) * n;
    if (b.size() != big) throw InvalidArgument("tv prox: image size does not match n");
    if (mu <= 0.0) return b;
    // Fast gradient projection on the dual: x = b + mu div p, |p_i| <= 1.
    Vector px = Vector::Zero(big), py = Vector::Zero(big);
    if (dual && dual->size() == 2 * big) {
        px = dual->head(big);
        py = dual->tail(big);
    }
    Vector qx = px, qy = py, gx, gy;
    double t = 1.0;
    const double step = 1.0 / (8.0 * mu);
    for (int k = 0; k < iterations; ++k) {
        const Vector x = b + mu * divergence(qx, qy, n);
        gradient(x, n, gx, gy);
        Vector nx = qx + step * gx, ny = qy + step * gy;
        const Eigen::ArrayXd mag = (nx.array().square() + ny.array().square()).sqrt().max(1.0);
        nx.array() /= mag;
        ny.array() /= mag;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        qx = nx + ((t - 1.0) / t_next) * (nx - px);
        qy = ny + ((t - 1.0) / t_next) * (ny - py);
        px = std::move(nx);
        py = std::move(ny);
        t = t_next;
    }
    if (dual) {
        dual->resize(2 * big);
        dual->head(big) = px;
        dual->tail(big) = py;
    }
    return b + mu * divergence(px, py, n);
}

double lipschitz_constant(const SystemMatrix& a, int iterations) {
    Vector v = Vector::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
    double lambda = 0.0;
    for (int k = 0; k < iterations; ++k) {
        Vector w = a.adjoint(a.forward(v));
        lambda = w.norm();
        if (lambda == 0.0) return 0.0;
        v = w / lambda;
    }
    return lambda;
}

std::vector<double> TvConfig::default_lambda_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 12; ++k) grid.push_back(std::pow(10.0, -8.0 + 0.5 * k));
    return grid;
}

void TvConfig::validate() const {
    if (iterations < 1 || prox_iterations < 1 || power_iterations < 1) throw InvalidArgument("tv: iteration counts must be positive");
    for (size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) throw InvalidArgument("tv: lambda grid must be positive");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw InvalidArgument("tv: lambda grid must be ascending");
    }
}

TvResult reconstruct_tv(const SystemMatrix& a, const Vector& y, int n, double lambda, const TvConfig& cfg) {
    if (!(lambda > 0.0)) throw InvalidArgument("tv: lambda must be positive");
    if (y.size() != a.rows()) throw InvalidArgument("tv: sinogram length does not match the system matrix");
    if (a.cols() != static_cast<long>(n) * n) throw InvalidArgument("tv: system matrix does not match n");
    cfg.validate();
    TvResult out;
    // 1% head room on the power-iteration estimate keeps the step below 1/L.
    const double lip = 1.01 * lipschitz_constant(a, cfg.power_iterations);
    Vector x = Vector::Zero(a.cols());
    if (lip == 0.0) {
        out.f = x;
        return out;
    }
    Vector z = x, dual;
    double t = 1.0;
    double fx = objective(a, y, x, n, lambda);
    for (int k = 0; k < cfg.iterations; ++k) {
        const Vector grad = a.adjoint(a.forward(z) - y);
        const Vector u = tv_prox(z - grad / lip, n, lambda / lip, cfg.prox_iterations, &dual);
        const double fu = objective(a, y, u, n, lambda);
        const Vector x_prev = x;
        if (fu <= fx) {
            x = u;
            fx = fu;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = x + (t / t_next) * (u - x) + ((t - 1.0) / t_next) * (x - x_prev);
        t = t_next;
        out.objective.push_back(fx);
    }
    out.f = std::move(x);
    return out;
}

TvSearchResult tv_grid_search(const SystemMatrix& a, const Vector& y, int n, const Vector& f_star, const TvConfig& cfg) {
    cfg.validate();
    if (cfg.lambdas.empty()) throw InvalidArgument("tv: empty lambda grid");
    TvSearchResult out;
    double best = std::numeric_limits<double>::infinity();
    for (double lambda : cfg.lambdas) {
        Vector f = reconstruct_tv(a, y, n, lambda, cfg).f;
        const double e = e_norm(f, f_star);
        out.curve.push_back({lambda, e});
        if (e < best) {
            best = e;
            out.lambda_star = lambda;
            out.f_best = std::move(f);
        }
    }
    return out;
}

}  // namespace gptomo
