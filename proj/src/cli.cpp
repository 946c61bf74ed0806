#include "gptomo/cli.hpp"

#include "gptomo/error.hpp"
#include "gptomo/experiment.hpp"
#include "gptomo/image_io.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef GPTOMO_VERSION
#define GPTOMO_VERSION "0.0.0"
#endif

namespace gptomo::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "gptomo-manifest/1";

std::string out_path(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); }

std::string image_name(const RunConfig& cfg, const std::string& stem) { return stem + "." + cfg.image_format; }

std::string sinogram_name(const RunConfig& cfg, const std::string& stem) {
    return stem + (cfg.sinogram_format == "csv" ? ".csv" : ".bin");
}

void write_sinogram(const RunConfig& cfg, const Sinogram& s, const std::string& path) {
    if (cfg.sinogram_format == "csv") {
        write_sinogram_csv(s, path);
    } else {
        write_sinogram_binary(s, path);
    }
}

Json base_manifest(const std::string& command, const RunConfig& cfg) {
    Json m;
    m["format"] = kManifestFormat;
    m["command"] = command;
    m["version"] = GPTOMO_VERSION;
    m["config"] = cfg.to_map();
    m["formats"] = {{"image", cfg.image_format + " " + std::to_string(cfg.bit_depth) + "-bit"},
                    {"sinogram", cfg.sinogram_format == "csv" ? "csv theta_index,tau_index,value" : "GPTSINO1 binary"},
                    {"raw", "little-endian float64, row-major"},
                    {"metrics", metrics_csv_header()}};
    m["outputs"] = Json::object();
    return m;
}

void record_output(Json& m, const std::string& key, const RunConfig& cfg, const std::string& name) {
    m["outputs"][key] = {{"file", name}, {"fnv1a64", file_digest(out_path(cfg, name))}};
}

void write_manifest(const RunConfig& cfg, const Json& m) {
    write_file_atomic(out_path(cfg, m["command"].get<std::string>() + ".manifest.json"), m.dump(2) + "\n");
}

Json scaling_json(const std::pair<double, double>& range) { return {{"mode", "minmax"}, {"lo", range.first}, {"hi", range.second}}; }

Json spec_json(const KernelSpec& s) {
    return {{"family", to_string(s.family)}, {"mean", s.mean}, {"sigma_f", s.sigma_f}, {"length", s.length}};
}

Json fit_json(const FitReport& fit) {
    Json stages = Json::array();
    for (const auto& s : fit.stages) {
        stages.push_back({{"num_components", s.num_components},
                          {"nll", s.nll},
                          {"iterations", s.iterations},
                          {"evaluations", s.evaluations},
                          {"status", to_string(s.status)},
                          {"grad_inf", s.grad_norm},
                          {"nested_restart", s.nested_restart},
                          {"spec", spec_json(s.spec)}});
    }
    return {{"spec", spec_json(fit.spec)},
            {"stages", stages},
            {"stopped_early", fit.stopped_early},
            {"message", fit.message},
            {"converged", fit.converged()}};
}

void print_memory_estimate(const RunConfig& cfg) {
    if (cfg.method != Method::Gp || cfg.n <= RunConfig::kDeskScale) return;
    std::fprintf(stderr, "gptomo: paper-scale run n=%d, N_theta=%d needs roughly %.0f MiB\n", cfg.n, cfg.n_theta,
                 estimate_gp_memory(cfg) / (1024.0 * 1024.0));
}

// Captures the optimizer trace as CSV; each minimize call becomes one "run".
struct TraceCapture {
    std::ostringstream out;
    CsvTrace csv{out};
    int run = 0;

    void attach(RunConfig& cfg) {
        cfg.optimizer.trace = [this](const TraceRecord& t) {
            if (t.iteration == 0) csv.set_stage("run" + std::to_string(++run));
            csv(t);
        };
    }
};

std::string metrics_text(const std::vector<MetricRecord>& recs) {
    std::ostringstream os;
    write_metrics_csv(os, recs);
    return os.str();
}

void check_sinogram_shape(const Sinogram& s, const RunConfig& cfg, const std::string& path) {
    const int n_tau = default_beamlet_count(cfg.n);
    if (s.n_theta != cfg.n_theta || s.n_tau != n_tau) {
        throw ConfigError("sinogram '" + path + "' is " + std::to_string(s.n_theta) + " x " + std::to_string(s.n_tau) +
                          " but the config expects " + std::to_string(cfg.n_theta) + " x " + std::to_string(n_tau));
    }
}

// Runs body(i) for i in [0, count) on a small pool; results are stored by index.
template <class F>
void parallel_for(int count, F body) {
    const int workers = std::max(1, std::min(sweep_threads(), count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < count;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string file_digest(const std::string& path) {
    const std::string bytes = read_file(path);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int sweep_threads() {
    if (const char* env = std::getenv("GPTOMO_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Json cmd_phantom(const RunConfig& cfg) {
    cfg.validate();
    const ObjectField truth = make_ground_truth(cfg);
    Json m = base_manifest("phantom", cfg);
    const auto range = save_image(truth.values, cfg.n, out_path(cfg, image_name(cfg, "truth")), ImageScaling::minmax(),
                                  cfg.bit_depth);
    write_raw(truth.values, out_path(cfg, "truth.raw"));
    record_output(m, "image", cfg, image_name(cfg, "truth"));
    record_output(m, "raw", cfg, "truth.raw");
    m["image_scaling"] = scaling_json(range);
    m["stats"] = {{"mean", truth.mean()},
                  {"std", truth.stddev()},
                  {"min", truth.values.minCoeff()},
                  {"max", truth.values.maxCoeff()},
                  {"pixel_size", truth.grid.pixel_size()}};
    write_manifest(cfg, m);
    return m;
}

Json cmd_sinogram(const RunConfig& cfg) {
    cfg.validate();
    const Problem pr = make_problem(cfg);
    const int n_tau = static_cast<int>(pr.scan.num_offsets());
    const int n_theta = static_cast<int>(pr.scan.num_angles());
    Json m = base_manifest("sinogram", cfg);
    const std::string clean = sinogram_name(cfg, "sinogram_clean"), noisy = sinogram_name(cfg, "sinogram"),
                      sigma = sinogram_name(cfg, "sigma_true");
    write_sinogram(cfg, {n_theta, n_tau, pr.y_clean}, out_path(cfg, clean));
    write_sinogram(cfg, {n_theta, n_tau, pr.measured.y}, out_path(cfg, noisy));
    write_sinogram(cfg, {n_theta, n_tau, pr.measured.sigma_true}, out_path(cfg, sigma));
    record_output(m, "sinogram_clean", cfg, clean);
    record_output(m, "sinogram", cfg, noisy);
    record_output(m, "sigma_true", cfg, sigma);
    Json model = {{"kind", pr.model.is_homoskedastic() ? "homoskedastic" : "heteroskedastic"}};
    if (pr.model.is_homoskedastic() && pr.model.size() > 0) {
        model["sigma"] = pr.model.sigma()(0);
    } else {
        model["sigma"] = "per measurement, see sigma_true";
    }
    m["measurements"] = {{"m", pr.scan.num_measurements()},
                         {"n_theta", n_theta},
                         {"n_tau", n_tau},
                         {"order", "angle-major: t = theta_index * n_tau + tau_index"},
                         {"pixel_size", pr.truth.grid.pixel_size()},
                         {"nonzeros", pr.a.nonzeros()}};
    m["noise"] = {{"case", to_string(cfg.noise.id)},
                  {"seed", cfg.noise.seed},
                  {"rng", "splitmix64 counter-based; stream 1 alpha, stream 2 normals (Box-Muller)"},
                  {"nugget", cfg.noise.nugget},
                  {"fraction", cfg.noise.fraction},
                  {"alpha_range", {cfg.noise.alpha_lo, cfg.noise.alpha_hi}},
                  {"per_measurement_scale", cfg.noise.per_measurement_scale},
                  {"rms_clean", rms(pr.y_clean)},
                  {"assumed_model", model}};
    write_manifest(cfg, m);
    return m;
}

Json cmd_reconstruct(const RunConfig& cfg_in, const std::optional<std::string>& input_dir) {
    cfg_in.validate();
    RunConfig cfg = cfg_in;
    const fs::path in_dir = fs::absolute(input_dir.value_or(cfg.out_dir));
    const std::string noisy_path = (in_dir / sinogram_name(cfg, "sinogram")).string();
    if (!fs::exists(noisy_path)) {
        throw IoError("no sinogram at '" + noisy_path + "'; run `gptomo sinogram` with the same config first");
    }
    const std::string clean_path = (in_dir / sinogram_name(cfg, "sinogram_clean")).string();
    const std::string sigma_path = (in_dir / sinogram_name(cfg, "sigma_true")).string();
    const Sinogram noisy = read_sinogram(noisy_path), clean = read_sinogram(clean_path), sigma = read_sinogram(sigma_path);
    check_sinogram_shape(noisy, cfg, noisy_path);
    check_sinogram_shape(clean, cfg, clean_path);
    check_sinogram_shape(sigma, cfg, sigma_path);

    print_memory_estimate(cfg);
    const ObjectField truth = make_ground_truth(cfg);
    const SystemMatrix a = build_system_matrix(truth.grid, default_scan(truth.grid, cfg.n_theta));
    const NoiseCovariance model = assumed_noise_model(cfg.noise, clean.values, sigma.values);
    TraceCapture trace;
    if (cfg.method == Method::Gp) trace.attach(cfg);
    const Reconstruction rec = reconstruct(cfg, a, noisy.values, model, truth);

    Json m = base_manifest("reconstruct", cfg_in);
    m["inputs"] = {{"dir", in_dir.string()},
                   {"sinogram", {{"file", noisy_path}, {"fnv1a64", file_digest(noisy_path)}}},
                   {"sinogram_clean", {{"file", clean_path}, {"fnv1a64", file_digest(clean_path)}}},
                   {"sigma_true", {{"file", sigma_path}, {"fnv1a64", file_digest(sigma_path)}}}};
    const auto range = save_image(rec.f, cfg.n, out_path(cfg, image_name(cfg, "recon")), ImageScaling::minmax(),
                                  cfg.bit_depth);
    write_raw(rec.f, out_path(cfg, "recon.raw"));
    record_output(m, "image", cfg, image_name(cfg, "recon"));
    record_output(m, "raw", cfg, "recon.raw");
    m["image_scaling"] = scaling_json(range);
    if (rec.fit) {
        const auto rsd_range = save_image(*rec.rsd, cfg.n, out_path(cfg, image_name(cfg, "rsd")), ImageScaling::minmax(),
                                          cfg.bit_depth);
        write_raw(*rec.rsd, out_path(cfg, "rsd.raw"));
        write_raw(*rec.variance, out_path(cfg, "variance.raw"));
        write_file_atomic(out_path(cfg, "trace.csv"), trace.out.str());
        record_output(m, "rsd_image", cfg, image_name(cfg, "rsd"));
        record_output(m, "rsd_raw", cfg, "rsd.raw");
        record_output(m, "variance_raw", cfg, "variance.raw");
        record_output(m, "trace", cfg, "trace.csv");
        m["rsd_scaling"] = scaling_json(rsd_range);
        m["rsd_mean"] = rec.rsd->mean();
        m["fit_report"] = fit_json(*rec.fit);
    }
    if (rec.method == Method::Tv) {
        m["lambda"] = rec.lambda;
        if (rec.tv_search) {
            std::string curve = "lambda,e_norm\n";
            for (const auto& p : rec.tv_search->curve) curve += fmt17(p.lambda) + "," + fmt17(p.e_norm) + "\n";
            write_file_atomic(out_path(cfg, "tv_curve.csv"), curve);
            record_output(m, "tv_curve", cfg, "tv_curve.csv");
        }
    }
    write_file_atomic(out_path(cfg, "metrics.csv"), metrics_text({make_record(cfg, rec)}));
    record_output(m, "metrics", cfg, "metrics.csv");
    m["e_norm"] = rec.e_norm;
    write_manifest(cfg, m);
    return m;
}

Json cmd_sweep(const RunConfig& cfg) {
    cfg.validate();
    std::vector<double> values = cfg.sweep_values;
    Json m = base_manifest("sweep", cfg);
    std::vector<MetricRecord> rows;
    switch (cfg.sweep_axis) {
        case SweepAxis::NTheta:
        case SweepAxis::Snr: {
            if (cfg.sweep_axis == SweepAxis::Snr &&
                (cfg.noise.id == NoiseCaseId::I || cfg.noise.id == NoiseCaseId::III)) {
                throw ConfigError("config key 'sweep.axis': the snr axis varies noise.fraction, which only cases II and IV use");
            }
            if (values.empty()) {
                values = cfg.sweep_axis == SweepAxis::NTheta ? std::vector<double>{20, 40, 60, 90}
                                                             : std::vector<double>{0.02, 0.05, 0.1, 0.2, 0.4};
            }
            print_memory_estimate(cfg);
            rows.resize(values.size());
            parallel_for(static_cast<int>(values.size()), [&](int i) {
                RunConfig point = cfg;
                point.optimizer.trace = nullptr;
                if (cfg.sweep_axis == SweepAxis::NTheta) {
                    point.n_theta = static_cast<int>(values[static_cast<size_t>(i)]);
                } else {
                    point.noise.fraction = values[static_cast<size_t>(i)];
                }
                const Problem pr = make_problem(point);
                rows[static_cast<size_t>(i)] = make_record(point, reconstruct(point, pr));
            });
            break;
        }
        case SweepAxis::NK: {
            if (cfg.method != Method::Gp) throw ConfigError("config key 'sweep.axis': the n_k axis needs method.name = gp");
            int k_max = cfg.n_k;
            for (double v : values) k_max = std::max(k_max, static_cast<int>(v));
            if (values.empty()) {
                for (int k = 1; k <= k_max; ++k) values.push_back(k);
            }
            print_memory_estimate(cfg);
            const Problem pr = make_problem(cfg);
            const MarginalLikelihood lik(pr.truth.grid, pr.a, pr.model, pr.measured.y, cfg.family);
            const FitReport fit = fit_sequential(lik, k_max, cfg.optimizer);
            std::string nll = "n_k,nll,iterations,status,nested_restart\n";
            for (const auto& st : fit.stages) {
                nll += std::to_string(st.num_components) + "," + fmt17(st.nll) + "," + std::to_string(st.iterations) + "," +
                       to_string(st.status) + "," + (st.nested_restart ? "true" : "false") + "\n";
                if (std::find(values.begin(), values.end(), st.num_components) == values.end()) continue;
                PosteriorOptions opts;
                opts.eps_rsd = cfg.eps_rsd;
                Reconstruction rec;
                rec.method = Method::Gp;
                rec.f = posterior(pr.truth.grid, pr.a, st.spec, pr.model, pr.measured.y, opts).mean;
                rec.e_norm = e_norm(rec.f, pr.truth.values);
                MetricRecord r = make_record(cfg, rec);
                r.n_k = st.num_components;
                rows.push_back(r);
            }
            write_file_atomic(out_path(cfg, "nll.csv"), nll);
            record_output(m, "nll", cfg, "nll.csv");
            m["fit_report"] = fit_json(fit);
            break;
        }
        case SweepAxis::Lambda: {
            if (values.empty()) values = cfg.tv.lambdas;
            const Problem pr = make_problem(cfg);
            std::vector<double> errors(values.size());
            parallel_for(static_cast<int>(values.size()), [&](int i) {
                const Vector f = reconstruct_tv(pr.a, pr.measured.y, cfg.n, values[static_cast<size_t>(i)], cfg.tv).f;
                errors[static_cast<size_t>(i)] = e_norm(f, pr.truth.values);
            });
            std::string curve = "lambda,e_norm\n";
            for (size_t i = 0; i < values.size(); ++i) {
                curve += fmt17(values[i]) + "," + fmt17(errors[i]) + "\n";
                MetricRecord r;
                r.method = "tv(lambda=" + fmt17(values[i]) + ")";
                r.noise_case = to_string(cfg.noise.id);
                r.n = cfg.n;
                r.n_theta = cfg.n_theta;
                r.family = "-";
                r.seed = cfg.noise.seed;
                r.e_norm = errors[i];
                rows.push_back(r);
            }
            write_file_atomic(out_path(cfg, "tv_curve.csv"), curve);
            record_output(m, "tv_curve", cfg, "tv_curve.csv");
            break;
        }
    }
    write_file_atomic(out_path(cfg, "sweep.csv"), metrics_text(rows));
    write_file_atomic(out_path(cfg, "summary.csv"), summarize(rows));
    record_output(m, "metrics", cfg, "sweep.csv");
    record_output(m, "summary", cfg, "summary.csv");
    m["axis"] = to_string(cfg.sweep_axis);
    m["values"] = values;
    write_manifest(cfg, m);
    return m;
}

std::string cmd_report(const std::vector<std::string>& metrics_files) {
    std::vector<MetricRecord> all;
    for (const auto& path : metrics_files) {
        std::istringstream in(read_file(path));
        const auto recs = read_metrics_csv(in);
        all.insert(all.end(), recs.begin(), recs.end());
    }
    return summarize(all);
}

Json rerun_manifest(const std::string& manifest_path, const std::optional<std::string>& out_dir) {
    Json m;
    try {
        m = Json::parse(read_file(manifest_path));
    } catch (const Json::exception& e) {
        throw IoError("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
    }
    if (!m.contains("format") || m["format"] != kManifestFormat || !m.contains("command") || !m.contains("config")) {
        throw IoError("'" + manifest_path + "' is not a gptomo manifest");
    }
    RunConfig cfg = RunConfig::from_map(m["config"].get<std::map<std::string, std::string>>());
    if (out_dir) cfg.out_dir = *out_dir;
    const std::string command = m["command"];
    if (command == "phantom") return cmd_phantom(cfg);
    if (command == "sinogram") return cmd_sinogram(cfg);
    if (command == "reconstruct") return cmd_reconstruct(cfg, m["inputs"]["dir"].get<std::string>());
    if (command == "sweep") return cmd_sweep(cfg);
    throw IoError("manifest '" + manifest_path + "' names unknown command '" + command + "'");
}

int run(int argc, char** argv) {
    CLI::App app{"Gaussian-process tomographic reconstruction"};
    app.set_version_flag("--version", GPTOMO_VERSION);
    app.require_subcommand(1);

    struct Common {
        std::string config_file;
        std::vector<std::string> overrides;
        std::string out;
        std::string manifest;
        bool paper_scale = false;
        bool print_config = false;
    };
    Common common;
    std::optional<std::string> input_dir;
    std::vector<std::string> report_files;
    std::string report_out;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", common.config_file, "INI run configuration");
        sub->add_option("--set", common.overrides, "Override a config key: section.key=value (repeatable)");
        sub->add_option("-o,--out", common.out, "Output directory (overrides output.dir)");
        sub->add_option("--manifest", common.manifest, "Re-execute the run recorded in this manifest");
        sub->add_flag("--paper-scale", common.paper_scale, "Allow n above the desk scale of 64");
        sub->add_flag("--print-config", common.print_config, "Print the resolved configuration and exit");
    };
    CLI::App* phantom = app.add_subcommand("phantom", "Render or load the ground truth and save it");
    CLI::App* sinogram = app.add_subcommand("sinogram", "Simulate clean and noisy sinograms");
    CLI::App* recon = app.add_subcommand("reconstruct", "Reconstruct from a saved sinogram");
    CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep (n_theta, snr, n_k or lambda)");
    CLI::App* report = app.add_subcommand("report", "Summarise metrics CSV files");
    for (auto* sub : {phantom, sinogram, recon, sweep}) add_common(sub);
    recon->add_option("--input", input_dir, "Directory holding the sinogram files (default: output dir)");
    report->add_option("files", report_files, "Metrics CSV files")->required();
    report->add_option("-o,--out", report_out, "Write the summary here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (report->parsed()) {
            const std::string table = cmd_report(report_files);
            if (report_out.empty()) {
                std::cout << table;
            } else {
                write_file_atomic(report_out, table);
            }
            return kOk;
        }
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (!common.manifest.empty()) {
            const Json m = rerun_manifest(common.manifest, common.out.empty() ? std::nullopt : std::optional(common.out));
            std::cerr << "gptomo: re-ran " << m["command"].get<std::string>() << " into " << m["config"]["output.dir"].get<std::string>()
                      << "\n";
            return kOk;
        }
        RunConfig cfg = common.config_file.empty() ? RunConfig{} : RunConfig::from_ini_file(common.config_file);
        for (const auto& o : common.overrides) cfg.apply_override(o);
        if (!common.out.empty()) cfg.out_dir = common.out;
        if (common.paper_scale) cfg.paper_scale = true;
        cfg.validate();
        if (common.print_config) {
            std::cout << cfg.to_ini();
            return kOk;
        }
        Json m;
        if (name == "phantom") {
            m = cmd_phantom(cfg);
            std::cout << "mean " << m["stats"]["mean"] << " std " << m["stats"]["std"] << "\n";
        } else if (name == "sinogram") {
            m = cmd_sinogram(cfg);
            std::cout << "m " << m["measurements"]["m"] << " (" << m["measurements"]["n_theta"] << " x "
                      << m["measurements"]["n_tau"] << ")\n";
        } else if (name == "reconstruct") {
            m = cmd_reconstruct(cfg, input_dir);
            std::cout << "e_norm " << m["e_norm"] << "\n";
        } else {
            m = cmd_sweep(cfg);
            std::cout << read_file(out_path(cfg, "summary.csv"));
        }
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "gptomo: configuration error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ResourceError& e) {
        std::cerr << "gptomo: resource limit: " << e.what() << "\n";
        return kConfigError;
    } catch (const InvalidArgument& e) {
        std::cerr << "gptomo: invalid argument: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "gptomo: numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const IoError& e) {
        std::cerr << "gptomo: I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "gptomo: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace gptomo::cli
