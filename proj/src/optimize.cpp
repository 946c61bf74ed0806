#include "gptomo/optimize.hpp"

#include "gptomo/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace gptomo {

namespace {

// Objective calls that fail numerically count as +inf for the line search.
struct Counted {
    const Objective& f;
    int calls = 0;

    bool try_eval(const Vector& x, bool grad, ObjectiveValue& out) {
        ++calls;
        try {
            out = f(x, grad);
        } catch (const NumericalError&) {
            return false;
        }
        if (!std::isfinite(out.value)) return false;
        if (grad && !out.grad.allFinite()) return false;
        return true;
    }
};

struct Direction {
    Vector p;
    bool steepest = false;
};

// Inexact Newton direction from CG on H p = -g with finite-difference
// Hessian-vector products.
Direction newton_cg(Counted& obj, const Vector& x, const Vector& g, const OptimizerConfig& cfg) {
    const long dim = x.size();
    const int cap = cfg.max_cg_iterations > 0 ? cfg.max_cg_iterations : static_cast<int>(dim);
    const double gnorm = g.norm();
    const double eta = std::min(0.5, std::sqrt(gnorm));
    const double h = cfg.fd_step * std::max(1.0, x.norm());

    auto hess_vec = [&](const Vector& v, Vector& out) {
        const double vn = v.norm();
        const Vector u = v / vn;
        ObjectiveValue plus;
        if (!obj.try_eval(x + h * u, true, plus)) return false;
        if (cfg.hessian_vector == HessianVectorScheme::Central) {
            ObjectiveValue minus;
            if (!obj.try_eval(x - h * u, true, minus)) return false;
            out = (plus.grad - minus.grad) * (vn / (2.0 * h));
        } else {
            out = (plus.grad - g) * (vn / h);
        }
        return true;
    };

    Vector p = Vector::Zero(dim);
    Vector r = -g;
    Vector d = r;
    double rr = r.squaredNorm();
    for (int j = 0; j < cap; ++j) {
        Vector hd;
        if (!hess_vec(d, hd)) break;
        const double curv = d.dot(hd);
        if (!(curv > 1e-14 * d.squaredNorm())) {
            // Negative curvature: move along d as far as the step cap allows and
            // let the line search pull back.
            const double dinf = d.lpNorm<Eigen::Infinity>();
            if (dinf > 0.0) p += (d.dot(g) <= 0.0 ? 1.0 : -1.0) * (cfg.max_step / dinf) * d;
            break;
        }
        const double a = rr / curv;
        p += a * d;
        r -= a * hd;
        const double rr_new = r.squaredNorm();
        if (std::sqrt(rr_new) <= eta * gnorm) break;
        d = r + (rr_new / rr) * d;
        rr = rr_new;
    }
    Direction dir{p, false};
    if (!(p.dot(g) < 0.0) || !p.allFinite()) dir = {-g, true};
    return dir;
}

void cap_step(Vector& p, double max_step) {
    const double s = p.lpNorm<Eigen::Infinity>();
    if (s > max_step) p *= max_step / s;
}

}  // namespace

void OptimizerConfig::validate() const {
    if (max_iterations < 1 || max_backtracks < 1 || max_cg_iterations < 0) {
        throw InvalidArgument("optimizer: iteration caps must be at least 1");
    }
    if (!(gradient_tolerance > 0.0) || !(fd_step > 0.0) || !(max_step > 0.0)) {
        throw InvalidArgument("optimizer: tolerances and steps must be positive");
    }
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0) || !(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
        throw InvalidArgument("optimizer: line-search parameters must lie in (0, 1)");
    }
}

std::string to_string(OptimizerStatus status) {
    switch (status) {
        case OptimizerStatus::Converged: return "converged";
        case OptimizerStatus::MaxIterations: return "max_iterations";
        case OptimizerStatus::LineSearchFailed: return "line_search_failed";
    }
    return "?";
}

MinimizeResult minimize(const Objective& objective, const Vector& x0, const OptimizerConfig& cfg) {
    cfg.validate();
    Counted obj{objective};
    ObjectiveValue cur;
    if (!obj.try_eval(x0, true, cur)) throw InvalidStart("optimizer: objective is not finite at the starting point");

    MinimizeResult res;
    res.x = x0;
    res.value = cur.value;
    res.grad = cur.grad;
    auto emit = [&](int it, double step) {
        if (cfg.trace) cfg.trace({it, res.value, res.grad.lpNorm<Eigen::Infinity>(), step, obj.calls});
    };
    emit(0, 0.0);

    for (int it = 1;; ++it) {
        if (res.grad.lpNorm<Eigen::Infinity>() <= cfg.gradient_tolerance * std::max(1.0, std::abs(res.value))) {
            res.status = OptimizerStatus::Converged;
            break;
        }
        if (it > cfg.max_iterations) {
            res.status = OptimizerStatus::MaxIterations;
            break;
        }
        Direction dir = newton_cg(obj, res.x, res.grad, cfg);

        bool accepted = false;
        double step = 1.0;
        ObjectiveValue trial;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                if (dir.steepest) break;
                dir = {-res.grad, true};
            }
            cap_step(dir.p, cfg.max_step);
            const double slope = res.grad.dot(dir.p);
            step = 1.0;
            for (int k = 0; k <= cfg.max_backtracks; ++k) {
                // The full step is usually accepted, so its gradient is computed up front.
                const Vector xt = res.x + step * dir.p;
                if (obj.try_eval(xt, k == 0, trial) && trial.value <= res.value + cfg.armijo_c1 * step * slope) {
                    if (trial.grad.size() == 0 && !obj.try_eval(xt, true, trial)) break;
                    res.x = xt;
                    accepted = true;
                    break;
                }
                step *= cfg.backtrack_factor;
            }
        }
        if (!accepted) {
            res.status = OptimizerStatus::LineSearchFailed;
            res.iterations = it - 1;
            break;
        }
        res.value = trial.value;
        res.grad = trial.grad;
        res.iterations = it;
        emit(it, step);
    }
    res.evaluations = obj.calls;
    return res;
}

Objective likelihood_objective(const MarginalLikelihood& likelihood) {
    return [&likelihood](const Vector& beta, bool grad) {
        NllEvaluation ev = likelihood.evaluate(beta, grad);
        return ObjectiveValue{ev.value, std::move(ev.grad)};
    };
}

std::vector<double> FitReport::stage_nll() const {
    std::vector<double> out;
    for (const auto& s : stages) out.push_back(s.nll);
    return out;
}

bool FitReport::converged() const {
    return !stages.empty() && std::all_of(stages.begin(), stages.end(), [](const StageResult& s) {
        return s.status == OptimizerStatus::Converged;
    });
}

KernelSpec default_initial_spec(const MarginalLikelihood& likelihood) {
    const Vector& y = likelihood.data();
    const Vector rs = likelihood.system().row_sums();
    KernelSpec spec;
    spec.family = likelihood.family();
    double sd = 0.0;
    if (y.size() > 1) sd = std::sqrt((y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1));
    const double mean_rs = rs.size() > 0 ? rs.mean() : 0.0;
    double sigma = mean_rs > 0.0 ? sd / mean_rs : 0.0;
    if (!(sigma > 0.0) || !std::isfinite(sigma)) sigma = 1.0;
    spec.sigma_f = {sigma};
    spec.length = {likelihood.grid().n() / 10.0};
    spec.mean = likelihood.initial_mean(spec);
    return spec;
}

namespace {

StageResult run_stage(const MarginalLikelihood& lik, const KernelSpec& start, const OptimizerConfig& cfg) {
    const MinimizeResult r = minimize(likelihood_objective(lik), to_hyper(start), cfg);
    StageResult s;
    s.num_components = static_cast<int>(start.num_components());
    s.spec = from_hyper(lik.family(), r.x);
    s.nll = r.value;
    s.iterations = r.iterations;
    s.evaluations = r.evaluations;
    s.status = r.status;
    s.grad_norm = r.grad.lpNorm<Eigen::Infinity>();
    return s;
}

}  // namespace

FitReport fit_sequential(const MarginalLikelihood& likelihood, int max_components, const OptimizerConfig& cfg,
                         const KernelSpec* initial) {
    if (max_components < 1) throw InvalidArgument("fit_sequential: need at least one component");
    constexpr double kMinGain = 1e-6;
    constexpr double kJitter = 1e-3;
    FitReport report;
    KernelSpec start = initial ? *initial : default_initial_spec(likelihood);
    if (start.num_components() != 1) throw InvalidArgument("fit_sequential: the initial spec must have one component");
    start.family = likelihood.family();
    report.stages.push_back(run_stage(likelihood, start, cfg));
    report.spec = report.stages.back().spec;

    for (int k = 2; k <= max_components; ++k) {
        const StageResult& prev = report.stages.back();
        const double s_last = prev.spec.sigma_f.back();
        const double l_last = prev.spec.length.back();

        KernelSpec dup = prev.spec;
        dup.sigma_f.push_back(s_last * (1.0 + kJitter));
        dup.length.push_back(l_last * (1.0 + kJitter));
        StageResult best = run_stage(likelihood, dup, cfg);

        if (!(best.nll <= prev.nll - kMinGain)) {
            KernelSpec nested = prev.spec;
            nested.sigma_f.push_back(s_last * kJitter);
            nested.length.push_back(l_last * (1.0 + kJitter));
            StageResult alt = run_stage(likelihood, nested, cfg);
            alt.nested_restart = true;
            if (alt.nll < best.nll) best = alt;
        }
        const double prev_nll = prev.nll;
        report.stages.push_back(best);
        if (!(best.nll <= prev_nll - kMinGain)) {
            report.stopped_early = true;
            report.message = "stage " + std::to_string(k) + " did not lower the NLL by more than 1e-6; keeping " +
                             std::to_string(k - 1) + " component(s)";
            break;
        }
        report.spec = best.spec;
    }
    return report;
}

CsvTrace::CsvTrace(std::ostream& out, std::string stage_label) : out_(&out), stage_(std::move(stage_label)) {
    *out_ << "stage,iteration,value,grad_inf,step,evaluations\n";
}

void CsvTrace::operator()(const TraceRecord& rec) const {
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%d,%.17g,%.17g,%.17g,%d\n", rec.iteration, rec.value, rec.grad_norm, rec.step,
                  rec.evaluations);
    *out_ << stage_ << buf;
}

}  // namespace gptomo
