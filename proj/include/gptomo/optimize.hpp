#pragma once

#include "gptomo/kernels.hpp"
#include "gptomo/likelihood.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace gptomo {

/// Objective value with an optional gradient (empty when not requested).
struct ObjectiveValue {
    double value = 0.0;
    Vector grad;
};

using Objective = std::function<ObjectiveValue(const Vector& x, bool want_gradient)>;

enum class HessianVectorScheme { Forward, Central };

struct TraceRecord {
    int iteration = 0;
    double value = 0.0;
    double grad_norm = 0.0;  // infinity norm
    double step = 0.0;       // accepted step length along the search direction
    int evaluations = 0;     // objective calls so far
};

/// Truncated-Newton (Newton-CG) settings.
struct OptimizerConfig {
    int max_iterations = 200;
    /// Converged when ||g||_inf <= gradient_tolerance * max(1, |J|).
    double gradient_tolerance = 1e-6;
    /// Inner CG cap; 0 means the problem dimension.
    int max_cg_iterations = 0;
    double armijo_c1 = 1e-4;
    double backtrack_factor = 0.5;
    int max_backtracks = 40;
    /// Largest allowed |step| in any coordinate; keeps log-parameters from
    /// jumping by many orders of magnitude in one iteration.
    double max_step = 2.0;
    HessianVectorScheme hessian_vector = HessianVectorScheme::Forward;
    /// Relative difference step for Hessian-vector products.
    double fd_step = 1e-6;
    std::function<void(const TraceRecord&)> trace;

    void validate() const;
};

enum class OptimizerStatus { Converged, MaxIterations, LineSearchFailed };
std::string to_string(OptimizerStatus status);

struct MinimizeResult {
    Vector x;
    double value = 0.0;
    Vector grad;
    int iterations = 0;
    int evaluations = 0;
    OptimizerStatus status = OptimizerStatus::MaxIterations;
};

/// Minimize `objective` from `x0`. Trial points where the objective throws
/// NumericalError or returns a non-finite value are rejected by the line
/// search. Throws InvalidStart if the objective is not finite at x0.
MinimizeResult minimize(const Objective& objective, const Vector& x0, const OptimizerConfig& cfg = {});

/// Objective wrapper around a marginal likelihood.
Objective likelihood_objective(const MarginalLikelihood& likelihood);

struct StageResult {
    int num_components = 0;
    KernelSpec spec;
    double nll = 0.0;
    int iterations = 0;
    int evaluations = 0;
    OptimizerStatus status = OptimizerStatus::MaxIterations;
    double grad_norm = 0.0;
    /// True when the stage used the nested restart instead of the duplicated start.
    bool nested_restart = false;
};

struct FitReport {
    KernelSpec spec;  // best (last accepted) stage
    std::vector<StageResult> stages;
    bool stopped_early = false;
    std::string message;

    [[nodiscard]] std::vector<double> stage_nll() const;
    [[nodiscard]] bool converged() const;
};

/// Starting point used for the first stage when none is given:
/// l = n/10 pixels, sigma_f = std(y) / mean(A 1), c solving dJ/dc = 0.
KernelSpec default_initial_spec(const MarginalLikelihood& likelihood);

/// Sequential composite-kernel fit: stage k optimises all 2k+1 parameters,
/// starting from stage k-1's optimum plus a new component initialised at the
/// previous stage's last component (with a 1e-3 relative offset). If that
/// start ends above the previous stage's NLL, the stage is rerun from the
/// nested start where the new component has negligible variance. A stage
/// that fails to lower J by more than 1e-6 ends the schedule.
FitReport fit_sequential(const MarginalLikelihood& likelihood, int max_components, const OptimizerConfig& cfg = {},
                         const KernelSpec* initial = nullptr);

/// CSV sink for TraceRecord rows (header written on construction).
class CsvTrace {
public:
    explicit CsvTrace(std::ostream& out, std::string stage_label = "");
    void set_stage(std::string label) { stage_ = std::move(label); }
    void operator()(const TraceRecord& rec) const;

private:
    std::ostream* out_;
    std::string stage_;
};

}  // namespace gptomo
