#include "gptomo/baselines.hpp"
#include "gptomo/config.hpp"
#include "gptomo/error.hpp"
#include "gptomo/experiment.hpp"
#include "gptomo/likelihood.hpp"
#include "gptomo/metrics.hpp"
#include "gptomo/noise.hpp"
#include "gptomo/optimize.hpp"
#include "gptomo/phantom.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gptomo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Projector bundled with the grid it was built on.
struct Tomo {
    Grid grid;
    ScanConfig scan;
    SystemMatrix a;
};

Vector flat(const Array& x) {
    Vector v(x.size());
    std::copy(x.data(), x.data() + x.size(), v.data());
    return v;
}

Array image(const Vector& v, int n) {
    Array out({n, n});
    std::copy(v.data(), v.data() + v.size(), out.mutable_data());
    return out;
}

Vector as_pixels(const Tomo& t, const Array& img) {
    if (img.size() != t.grid.num_pixels()) throw InvalidArgument("image must have n*n values");
    return flat(img);
}

NoiseCovariance noise_of(const py::object& sigma, long m) {
    if (py::isinstance<py::float_>(sigma) || py::isinstance<py::int_>(sigma)) return NoiseCovariance::homoskedastic(m, sigma.cast<double>());
    Vector s = flat(sigma.cast<Array>());
    if (s.size() != m) throw InvalidArgument("sigma must be a scalar or have one entry per measurement");
    return NoiseCovariance::heteroskedastic(std::move(s));
}

py::dict fit_dict(const FitReport& fit) {
    py::list stages;
    for (const auto& s : fit.stages) {
        py::dict d;
        d["num_components"] = s.num_components;
        d["nll"] = s.nll;
        d["iterations"] = s.iterations;
        d["status"] = to_string(s.status);
        d["grad_inf"] = s.grad_norm;
        d["nested_restart"] = s.nested_restart;
        d["spec"] = s.spec;
        stages.append(d);
    }
    py::dict out;
    out["spec"] = fit.spec;
    out["stages"] = stages;
    out["stage_nll"] = fit.stage_nll();
    out["stopped_early"] = fit.stopped_early;
    out["message"] = fit.message;
    return out;
}

}  // namespace

PYBIND11_MODULE(_gptomo, m) {
    m.doc() = "Gaussian-process tomographic reconstruction";
#ifdef GPTOMO_VERSION
    m.attr("__version__") = GPTOMO_VERSION;
#else
    m.attr("__version__") = "0.1.0";
#endif

    static py::exception<ConfigError> config_error(m, "ConfigError");
    static py::exception<NumericalError> numerical_error(m, "NumericalError");
    static py::exception<IoError> io_error(m, "IoError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical_error, e.what());
        } catch (const IoError& e) {
            py::set_error(io_error, e.what());
        } catch (const InvalidArgument& e) {
            py::set_error(PyExc_ValueError, e.what());
        } catch (const ResourceError& e) {
            py::set_error(PyExc_MemoryError, e.what());
        }
    });

    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init([](const std::string& family, std::vector<double> sigma_f, std::vector<double> length, double mean) {
                 KernelSpec s;
                 s.family = parse_kernel_family(family);
                 s.sigma_f = std::move(sigma_f);
                 s.length = std::move(length);
                 s.mean = mean;
                 s.validate();
                 return s;
             }),
             py::arg("family"), py::arg("sigma_f"), py::arg("length"), py::arg("mean") = 0.0)
        .def_property_readonly("family", [](const KernelSpec& s) { return to_string(s.family); })
        .def_readwrite("sigma_f", &KernelSpec::sigma_f)
        .def_readwrite("length", &KernelSpec::length)
        .def_readwrite("mean", &KernelSpec::mean)
        .def("to_hyper", [](const KernelSpec& s) { return to_hyper(s); })
        .def("__repr__", [](const KernelSpec& s) {
            std::string r = "KernelSpec(" + to_string(s.family) + ", c=" + std::to_string(s.mean);
            for (size_t i = 0; i < s.sigma_f.size(); ++i) {
                r += ", (" + std::to_string(s.sigma_f[i]) + ", " + std::to_string(s.length[i]) + ")";
            }
            return r + ")";
        });

    py::class_<Tomo>(m, "SystemMatrix")
        .def_property_readonly("n", [](const Tomo& t) { return t.grid.n(); })
        .def_property_readonly("pixel_size", [](const Tomo& t) { return t.grid.pixel_size(); })
        .def_property_readonly("n_theta", [](const Tomo& t) { return t.scan.num_angles(); })
        .def_property_readonly("n_tau", [](const Tomo& t) { return t.scan.num_offsets(); })
        .def_property_readonly("shape", [](const Tomo& t) { return py::make_tuple(t.a.rows(), t.a.cols()); })
        .def_property_readonly("nnz", [](const Tomo& t) { return t.a.nonzeros(); })
        .def("forward", [](const Tomo& t, const Array& img) { return Vector(t.a.forward(as_pixels(t, img))); })
        .def("adjoint", [](const Tomo& t, const Array& y) { return image(t.a.adjoint(flat(y)), t.grid.n()); })
        .def("triplets", [](const Tomo& t) {
            std::vector<long> rows, cols;
            std::vector<double> vals;
            const auto& csr = t.a.csr();
            for (int r = 0; r < csr.outerSize(); ++r) {
                for (SystemMatrix::RowMajor::InnerIterator it(csr, r); it; ++it) {
                    rows.push_back(r);
                    cols.push_back(it.col());
                    vals.push_back(it.value());
                }
            }
            return py::make_tuple(rows, cols, vals);
        });

    m.def(
        "build_system_matrix",
        [](int n, int n_theta, double pixel_size) {
            const Grid g(n, pixel_size > 0 ? pixel_size : 0.08 / n);
            ScanConfig scan = default_scan(g, n_theta);
            SystemMatrix a = build_system_matrix(g, scan);
            return Tomo{g, std::move(scan), std::move(a)};
        },
        py::arg("n"), py::arg("n_theta"), py::arg("pixel_size") = 0.0,
        "Parallel-beam projector over n_theta angles in [0, pi); pixel_size 0 means 0.08 / n.");

    m.def(
        "shepp_logan",
        [](int n, double pixel_size, const std::string& variant, int supersample) {
            const Grid g(n, pixel_size > 0 ? pixel_size : 0.08 / n);
            return image(shepp_logan(g, parse_shepp_logan_variant(variant), supersample).values, n);
        },
        py::arg("n"), py::arg("pixel_size") = 0.0, py::arg("variant") = "standard", py::arg("supersample") = 1);

    m.def(
        "corrupt",
        [](const Array& y_clean, const std::string& noise_case, std::uint64_t seed) {
            NoiseCase c;
            c.id = parse_noise_case(noise_case);
            c.seed = seed;
            const Vector y = flat(y_clean);
            const CorruptedSinogram r = corrupt(y, c);
            const NoiseCovariance model = assumed_noise_model(c, y, r.sigma_true);
            py::dict out;
            out["y"] = r.y;
            out["sigma_true"] = r.sigma_true;
            out["alpha"] = r.alpha;
            out["model_sigma"] = model.sigma();
            return out;
        },
        py::arg("y_clean"), py::arg("case"), py::arg("seed") = 0,
        "Adds the noise of case I-IV; also returns the noise std assumed at reconstruction.");

    m.def(
        "nll",
        [](const Tomo& t, const Array& y, const py::object& sigma, const std::string& family, const Vector& beta,
           bool gradient) {
            const Vector yv = flat(y);
            const MarginalLikelihood lik(t.grid, t.a, noise_of(sigma, yv.size()), yv, parse_kernel_family(family));
            const NllEvaluation ev = lik.evaluate(beta, gradient);
            return py::make_tuple(ev.value, ev.grad);
        },
        py::arg("a"), py::arg("y"), py::arg("sigma"), py::arg("family"), py::arg("beta"), py::arg("gradient") = false,
        "Negative log marginal likelihood at beta = [c, log sigma_f..., log l...].");

    m.def(
        "fit_sequential",
        [](const Tomo& t, const Array& y, const py::object& sigma, const std::string& family, int n_k,
           int max_iterations, double gradient_tolerance) {
            const Vector yv = flat(y);
            const MarginalLikelihood lik(t.grid, t.a, noise_of(sigma, yv.size()), yv, parse_kernel_family(family));
            OptimizerConfig cfg;
            cfg.max_iterations = max_iterations;
            cfg.gradient_tolerance = gradient_tolerance;
            FitReport fit;
            {
                py::gil_scoped_release release;
                fit = fit_sequential(lik, n_k, cfg);
            }
            return fit_dict(fit);
        },
        py::arg("a"), py::arg("y"), py::arg("sigma"), py::arg("family") = "MK32", py::arg("n_k") = 1,
        py::arg("max_iterations") = 200, py::arg("gradient_tolerance") = 1e-6);

    m.def(
        "posterior",
        [](const Tomo& t, const Array& y, const py::object& sigma, const KernelSpec& spec, double eps_rsd) {
            const Vector yv = flat(y);
            PosteriorOptions opts;
            opts.eps_rsd = eps_rsd;
            const PosteriorResult r = posterior(t.grid, t.a, spec, noise_of(sigma, yv.size()), yv, opts);
            const int n = t.grid.n();
            py::dict out;
            out["mean"] = image(r.mean, n);
            out["variance"] = image(r.variance, n);
            out["rsd"] = image(r.rsd, n);
            out["nll"] = r.nll_at_fit;
            return out;
        },
        py::arg("a"), py::arg("y"), py::arg("sigma"), py::arg("spec"), py::arg("eps_rsd") = 1.0);

    m.def(
        "reconstruct_l2",
        [](const Tomo& t, const Array& y, int iterations) {
            return image(reconstruct_l2(t.a, flat(y), L2Options{iterations}), t.grid.n());
        },
        py::arg("a"), py::arg("y"), py::arg("iterations") = 200);

    m.def(
        "reconstruct_tv",
        [](const Tomo& t, const Array& y, double lam, int iterations) {
            TvConfig cfg;
            cfg.iterations = iterations;
            return image(reconstruct_tv(t.a, flat(y), t.grid.n(), lam, cfg).f, t.grid.n());
        },
        py::arg("a"), py::arg("y"), py::arg("lam"), py::arg("iterations") = 500);

    m.def(
        "tv_grid_search",
        [](const Tomo& t, const Array& y, const Array& truth) {
            const TvSearchResult r = tv_grid_search(t.a, flat(y), t.grid.n(), as_pixels(t, truth));
            py::list curve;
            for (const auto& p : r.curve) curve.append(py::make_tuple(p.lambda, p.e_norm));
            py::dict out;
            out["lambda_star"] = r.lambda_star;
            out["f"] = image(r.f_best, t.grid.n());
            out["curve"] = curve;
            return out;
        },
        py::arg("a"), py::arg("y"), py::arg("truth"));

    m.def("e_norm", [](const Array& f_r, const Array& f_star) { return e_norm(flat(f_r), flat(f_star)); });

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_static("from_ini", &RunConfig::from_ini_string)
        .def_static("keys", &RunConfig::keys)
        .def("set", &RunConfig::set)
        .def("to_ini", &RunConfig::to_ini)
        .def("to_dict", &RunConfig::to_map)
        .def("validate", &RunConfig::validate);

    m.def(
        "run_experiment",
        [](const RunConfig& cfg) {
            cfg.validate();
            Problem pr = make_problem(cfg);
            Reconstruction rec;
            {
                py::gil_scoped_release release;
                rec = reconstruct(cfg, pr);
            }
            const int n = cfg.n;
            py::dict out;
            out["e_norm"] = rec.e_norm;
            out["truth"] = image(pr.truth.values, n);
            out["recon"] = image(rec.f, n);
            out["y"] = pr.measured.y;
            out["y_clean"] = pr.y_clean;
            if (rec.rsd) out["rsd"] = image(*rec.rsd, n);
            if (rec.variance) out["variance"] = image(*rec.variance, n);
            if (rec.fit) out["fit"] = fit_dict(*rec.fit);
            if (rec.method == Method::Tv) out["lambda"] = rec.lambda;
            return out;
        },
        py::arg("config"), "Simulate and reconstruct one configured run.");
}
