#pragma once

#include "gptomo/baselines.hpp"
#include "gptomo/kernels.hpp"
#include "gptomo/noise.hpp"
#include "gptomo/optimize.hpp"
#include "gptomo/phantom.hpp"

#include <map>
#include <string>
#include <vector>

namespace gptomo {

enum class Method { Gp, L2, Tv };
std::string to_string(Method m);
Method parse_method(std::string_view name);

enum class SweepAxis { NTheta, Snr, NK, Lambda };
std::string to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view name);

/// Every setting of one run. Plain-text form is sectioned `key = value`
/// (see `to_ini`); `keys()` lists the accepted `section.key` names.
struct RunConfig {
    // [object]
    std::string source = "shepp-logan";  // or a PGM/PNG path
    SheppLoganVariant variant = SheppLoganVariant::Standard;
    int supersample = 1;
    // [grid]
    int n = 64;
    double pixel_size = 0.0;  // 0: field of view 0.08 split into n pixels
    bool paper_scale = false;
    // [scan]
    int n_theta = 40;
    // [noise]
    NoiseCase noise;
    // [method]
    Method method = Method::Gp;
    // [gp]
    KernelFamily family = KernelFamily::Matern32;
    int n_k = 1;
    double eps_rsd = 1.0;
    // [optimizer]
    OptimizerConfig optimizer;
    // [l2]
    L2Options l2;
    // [tv]
    double tv_lambda = 0.0;  // 0: oracle grid search over tv.lambdas
    TvConfig tv;
    // [output]
    std::string out_dir = "out";
    std::string image_format = "png";
    int bit_depth = 16;
    std::string sinogram_format = "csv";
    bool timing = false;
    // [sweep]
    SweepAxis sweep_axis = SweepAxis::NTheta;
    std::vector<double> sweep_values;  // empty: axis default

    /// Largest n accepted without paper_scale.
    static constexpr int kDeskScale = 64;

    [[nodiscard]] double effective_pixel_size() const { return pixel_size > 0.0 ? pixel_size : 0.08 / n; }
    [[nodiscard]] Grid grid() const { return Grid(n, effective_pixel_size()); }

    /// Throws ConfigError naming the offending key.
    void validate() const;

    /// Canonical flat `section.key -> value` map (round-trips exactly).
    [[nodiscard]] std::map<std::string, std::string> to_map() const;
    [[nodiscard]] std::string to_ini() const;

    /// Applies `section.key = value`; unknown keys and malformed values throw ConfigError.
    void set(const std::string& key, const std::string& value);
    /// Parses "section.key=value".
    void apply_override(const std::string& assignment);

    static RunConfig from_map(const std::map<std::string, std::string>& values);
    static RunConfig from_ini_string(const std::string& text);
    static RunConfig from_ini_file(const std::string& path);
    static std::vector<std::string> keys();
};

}  // namespace gptomo
