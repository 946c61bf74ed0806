#pragma once

#include "gptomo/baselines.hpp"
#include "gptomo/config.hpp"
#include "gptomo/gp.hpp"
#include "gptomo/metrics.hpp"
#include "gptomo/noise.hpp"
#include "gptomo/optimize.hpp"
#include "gptomo/phantom.hpp"

#include <optional>

namespace gptomo {

/// Ground truth named by the config (rendered phantom or resampled image).
ObjectField make_ground_truth(const RunConfig& cfg);

/// Ground truth, projector and simulated measurements for one run.
struct Problem {
    ObjectField truth;
    ScanConfig scan;
    SystemMatrix a;
    Vector y_clean;
    CorruptedSinogram measured;
    NoiseCovariance model;
};

Problem make_problem(const RunConfig& cfg);
Problem make_problem(const RunConfig& cfg, ObjectField truth);

struct Reconstruction {
    Method method = Method::Gp;
    Vector f;
    // GP only.
    std::optional<Vector> variance;
    std::optional<Vector> rsd;
    std::optional<FitReport> fit;
    // TV only: the lambda used and, for the oracle search, the full curve.
    double lambda = 0.0;
    std::optional<TvSearchResult> tv_search;
    double e_norm = 0.0;
    double seconds = 0.0;
};

/// Runs the configured method on measurements `y` with noise model `model`.
/// `truth` supplies E_norm and the oracle for the TV grid search.
Reconstruction reconstruct(const RunConfig& cfg, const SystemMatrix& a, const Vector& y, const NoiseCovariance& model,
                           const ObjectField& truth);
Reconstruction reconstruct(const RunConfig& cfg, const Problem& problem);

/// Metrics row for a reconstruction (seconds only when cfg.timing is set).
MetricRecord make_record(const RunConfig& cfg, const Reconstruction& rec);

/// Rough peak memory of a GP reconstruction in bytes.
double estimate_gp_memory(const RunConfig& cfg);

}  // namespace gptomo
