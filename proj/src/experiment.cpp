#include "gptomo/experiment.hpp"

#include "gptomo/error.hpp"
#include "gptomo/image_io.hpp"

#include <chrono>
#include <cmath>

namespace gptomo {

ObjectField make_ground_truth(const RunConfig& cfg) {
    const Grid grid = cfg.grid();
    if (cfg.source == "shepp-logan") return shepp_logan(grid, cfg.variant, cfg.supersample);
    return load_grayscale(cfg.source, grid);
}

Problem make_problem(const RunConfig& cfg) { return make_problem(cfg, make_ground_truth(cfg)); }

Problem make_problem(const RunConfig& cfg, ObjectField truth) {
    ScanConfig scan = default_scan(truth.grid, cfg.n_theta);
    SystemMatrix a = build_system_matrix(truth.grid, scan);
    Vector y = a.forward(truth.values);
    CorruptedSinogram measured = corrupt(y, cfg.noise);
    NoiseCovariance model = assumed_noise_model(cfg.noise, y, measured.sigma_true);
    return {std::move(truth), std::move(scan), std::move(a), std::move(y), std::move(measured), std::move(model)};
}

Reconstruction reconstruct(const RunConfig& cfg, const SystemMatrix& a, const Vector& y, const NoiseCovariance& model,
                           const ObjectField& truth) {
    const auto start = std::chrono::steady_clock::now();
    Reconstruction rec;
    rec.method = cfg.method;
    const int n = truth.grid.n();
    switch (cfg.method) {
        case Method::Gp: {
            const MarginalLikelihood lik(truth.grid, a, model, y, cfg.family);
            FitReport fit = fit_sequential(lik, cfg.n_k, cfg.optimizer);
            PosteriorOptions opts;
            opts.eps_rsd = cfg.eps_rsd;
            PosteriorResult post = posterior(truth.grid, a, fit.spec, model, y, opts);
            rec.f = std::move(post.mean);
            rec.variance = std::move(post.variance);
            rec.rsd = std::move(post.rsd);
            rec.fit = std::move(fit);
            break;
        }
        case Method::L2: rec.f = reconstruct_l2(a, y, cfg.l2); break;
        case Method::Tv: {
            if (cfg.tv_lambda > 0.0) {
                rec.lambda = cfg.tv_lambda;
                rec.f = reconstruct_tv(a, y, n, cfg.tv_lambda, cfg.tv).f;
            } else {
                TvSearchResult search = tv_grid_search(a, y, n, truth.values, cfg.tv);
                rec.lambda = search.lambda_star;
                rec.f = search.f_best;
                rec.tv_search = std::move(search);
            }
            break;
        }
    }
    rec.e_norm = e_norm(rec.f, truth.values);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

Reconstruction reconstruct(const RunConfig& cfg, const Problem& problem) {
    return reconstruct(cfg, problem.a, problem.measured.y, problem.model, problem.truth);
}

MetricRecord make_record(const RunConfig& cfg, const Reconstruction& rec) {
    MetricRecord r;
    r.method = to_string(rec.method);
    r.noise_case = to_string(cfg.noise.id);
    r.n = cfg.n;
    r.n_theta = cfg.n_theta;
    r.n_k = rec.method == Method::Gp && rec.fit ? static_cast<int>(rec.fit->spec.num_components()) : 0;
    r.family = rec.method == Method::Gp ? to_string(cfg.family) : "-";
    r.seed = cfg.noise.seed;
    r.e_norm = rec.e_norm;
    r.seconds = cfg.timing ? rec.seconds : 0.0;
    return r;
}

double estimate_gp_memory(const RunConfig& cfg) {
    const double n2 = static_cast<double>(cfg.n) * cfg.n;
    const double m = static_cast<double>(cfg.n_theta) * default_beamlet_count(cfg.n);
    // K_y and its inverse share one m x m buffer; (A K)^T and P A are n^2 x m.
    return 8.0 * (m * m + 2.0 * n2 * m + 4.0 * n2);
}

}  // namespace gptomo
