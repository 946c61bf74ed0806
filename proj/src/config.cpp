#include "gptomo/config.hpp"

#include "gptomo/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace gptomo {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt_double(v[i]);
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    try {
        size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size()) bad_value(key, s, "a number");
        return v;
    } catch (const std::logic_error&) {
        bad_value(key, s, "a number");
    }
}

long long parse_int(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) bad_value(key, s, "an integer");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) bad_value(key, s, "a non-negative integer");
    return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    bad_value(key, s, "true or false");
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_double(key, item));
    }
    return out;
}

int to_int(const std::string& key, const std::string& s) {
    const long long v = parse_int(key, s);
    if (v < -2147483647LL || v > 2147483647LL) bad_value(key, s, "a 32-bit integer");
    return static_cast<int>(v);
}

struct Field {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
};

template <class E, class Parse>
void set_enum(E& target, const std::string& key, const std::string& value, Parse parse, const char* expected) {
    try {
        target = parse(trim(value));
    } catch (const InvalidArgument&) {
        bad_value(key, value, expected);
    }
}

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        auto add = [&](std::string k, Field f) { t.emplace_back(std::move(k), std::move(f)); };
#define GPTOMO_INT(K, M) add(K, {[](const RunConfig& c) { return std::to_string(c.M); }, \
                                  [](RunConfig& c, const std::string& k, const std::string& v) { c.M = to_int(k, v); }})
#define GPTOMO_DBL(K, M) add(K, {[](const RunConfig& c) { return fmt_double(c.M); }, \
                                  [](RunConfig& c, const std::string& k, const std::string& v) { c.M = parse_double(k, v); }})
#define GPTOMO_BOOL(K, M) add(K, {[](const RunConfig& c) { return std::string(c.M ? "true" : "false"); }, \
                                   [](RunConfig& c, const std::string& k, const std::string& v) { c.M = parse_bool(k, v); }})
#define GPTOMO_STR(K, M) add(K, {[](const RunConfig& c) { return c.M; }, \
                                  [](RunConfig& c, const std::string&, const std::string& v) { c.M = trim(v); }})
        GPTOMO_STR("object.source", source);
        add("object.variant", {[](const RunConfig& c) { return to_string(c.variant); },
                               [](RunConfig& c, const std::string& k, const std::string& v) {
                                   set_enum(c.variant, k, v, parse_shepp_logan_variant, "standard or modified");
                               }});
        GPTOMO_INT("object.supersample", supersample);
        GPTOMO_INT("grid.n", n);
        GPTOMO_DBL("grid.pixel_size", pixel_size);
        GPTOMO_BOOL("grid.paper_scale", paper_scale);
        GPTOMO_INT("scan.n_theta", n_theta);
        add("noise.case", {[](const RunConfig& c) { return to_string(c.noise.id); },
                           [](RunConfig& c, const std::string& k, const std::string& v) {
                               set_enum(c.noise.id, k, v, parse_noise_case, "I, II, III or IV");
                           }});
        add("noise.seed", {[](const RunConfig& c) { return std::to_string(c.noise.seed); },
                           [](RunConfig& c, const std::string& k, const std::string& v) { c.noise.seed = parse_u64(k, v); }});
        GPTOMO_DBL("noise.nugget", noise.nugget);
        GPTOMO_DBL("noise.fraction", noise.fraction);
        GPTOMO_DBL("noise.alpha_lo", noise.alpha_lo);
        GPTOMO_DBL("noise.alpha_hi", noise.alpha_hi);
        GPTOMO_BOOL("noise.per_measurement_scale", noise.per_measurement_scale);
        add("method.name", {[](const RunConfig& c) { return to_string(c.method); },
                            [](RunConfig& c, const std::string& k, const std::string& v) {
                                set_enum(c.method, k, v, parse_method, "gp, l2 or tv");
                            }});
        add("gp.family", {[](const RunConfig& c) { return to_string(c.family); },
                          [](RunConfig& c, const std::string& k, const std::string& v) {
                              set_enum(c.family, k, v, parse_kernel_family, "SE, MK32 or MK52");
                          }});
        GPTOMO_INT("gp.n_k", n_k);
        GPTOMO_DBL("gp.eps_rsd", eps_rsd);
        GPTOMO_INT("optimizer.max_iterations", optimizer.max_iterations);
        GPTOMO_DBL("optimizer.gradient_tolerance", optimizer.gradient_tolerance);
        GPTOMO_INT("optimizer.max_cg_iterations", optimizer.max_cg_iterations);
        GPTOMO_DBL("optimizer.armijo_c1", optimizer.armijo_c1);
        GPTOMO_DBL("optimizer.backtrack_factor", optimizer.backtrack_factor);
        GPTOMO_INT("optimizer.max_backtracks", optimizer.max_backtracks);
        GPTOMO_DBL("optimizer.max_step", optimizer.max_step);
        GPTOMO_DBL("optimizer.fd_step", optimizer.fd_step);
        add("optimizer.hessian_vector",
            {[](const RunConfig& c) {
                 return std::string(c.optimizer.hessian_vector == HessianVectorScheme::Central ? "central" : "forward");
             },
             [](RunConfig& c, const std::string& k, const std::string& v) {
                 const std::string t = lower(trim(v));
                 if (t == "central") c.optimizer.hessian_vector = HessianVectorScheme::Central;
                 else if (t == "forward") c.optimizer.hessian_vector = HessianVectorScheme::Forward;
                 else bad_value(k, v, "forward or central");
             }});
        GPTOMO_INT("l2.iterations", l2.iterations);
        GPTOMO_DBL("tv.lambda", tv_lambda);
        add("tv.lambdas", {[](const RunConfig& c) { return fmt_list(c.tv.lambdas); },
                           [](RunConfig& c, const std::string& k, const std::string& v) { c.tv.lambdas = parse_list(k, v); }});
        GPTOMO_INT("tv.iterations", tv.iterations);
        GPTOMO_INT("tv.prox_iterations", tv.prox_iterations);
        GPTOMO_INT("tv.power_iterations", tv.power_iterations);
        GPTOMO_STR("output.dir", out_dir);
        GPTOMO_STR("output.image_format", image_format);
        GPTOMO_INT("output.bit_depth", bit_depth);
        GPTOMO_STR("output.sinogram_format", sinogram_format);
        GPTOMO_BOOL("output.timing", timing);
        add("sweep.axis", {[](const RunConfig& c) { return to_string(c.sweep_axis); },
                           [](RunConfig& c, const std::string& k, const std::string& v) {
                               set_enum(c.sweep_axis, k, v, parse_sweep_axis, "n_theta, snr, n_k or lambda");
                           }});
        add("sweep.values", {[](const RunConfig& c) { return fmt_list(c.sweep_values); },
                             [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_values = parse_list(k, v); }});
#undef GPTOMO_INT
#undef GPTOMO_DBL
#undef GPTOMO_BOOL
#undef GPTOMO_STR
        return t;
    }();
    return table;
}

const Field& field(const std::string& key) {
    for (const auto& [k, f] : fields()) {
        if (k == key) return f;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Gp: return "gp";
        case Method::L2: return "l2";
        case Method::Tv: return "tv";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    const std::string t = lower(name);
    if (t == "gp") return Method::Gp;
    if (t == "l2") return Method::L2;
    if (t == "tv") return Method::Tv;
    throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::NTheta: return "n_theta";
        case SweepAxis::Snr: return "snr";
        case SweepAxis::NK: return "n_k";
        case SweepAxis::Lambda: return "lambda";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
    const std::string t = lower(name);
    if (t == "n_theta") return SweepAxis::NTheta;
    if (t == "snr") return SweepAxis::Snr;
    if (t == "n_k") return SweepAxis::NK;
    if (t == "lambda") return SweepAxis::Lambda;
    throw InvalidArgument("unknown sweep axis '" + std::string(name) + "'");
}

void RunConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) { throw ConfigError("config key '" + key + "': " + why); };
    if (source.empty()) fail("object.source", "must be 'shepp-logan' or an image path");
    if (supersample < 1) fail("object.supersample", "must be at least 1");
    if (n < 2) fail("grid.n", "must be at least 2");
    if (n > kDeskScale && !paper_scale) {
        fail("grid.n", "n > " + std::to_string(kDeskScale) + " needs grid.paper_scale = true (or --paper-scale)");
    }
    if (pixel_size < 0.0 || !std::isfinite(pixel_size)) fail("grid.pixel_size", "must be positive (0 selects the default)");
    if (n_theta < 1) fail("scan.n_theta", "must be at least 1");
    try {
        noise.validate();
    } catch (const InvalidArgument& e) {
        fail("noise", e.what());
    }
    if (n_k < 1) fail("gp.n_k", "must be at least 1");
    if (!(eps_rsd > 0.0)) fail("gp.eps_rsd", "must be positive");
    try {
        optimizer.validate();
    } catch (const InvalidArgument& e) {
        fail("optimizer", e.what());
    }
    if (l2.iterations < 1) fail("l2.iterations", "must be at least 1");
    if (tv_lambda < 0.0) fail("tv.lambda", "must be positive (0 selects the oracle grid search)");
    try {
        tv.validate();
    } catch (const InvalidArgument& e) {
        fail("tv", e.what());
    }
    if (out_dir.empty()) fail("output.dir", "must not be empty");
    if (image_format != "png" && image_format != "pgm") fail("output.image_format", "must be png or pgm");
    if (bit_depth != 8 && bit_depth != 16) fail("output.bit_depth", "must be 8 or 16");
    if (sinogram_format != "csv" && sinogram_format != "binary") fail("output.sinogram_format", "must be csv or binary");
    for (double v : sweep_values) {
        if (!(v > 0.0)) fail("sweep.values", "values must be positive");
        if ((sweep_axis == SweepAxis::NTheta || sweep_axis == SweepAxis::NK) && v != std::floor(v)) {
            fail("sweep.values", "values must be integers for axis " + to_string(sweep_axis));
        }
    }
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, f] : fields()) out[k] = f.get(*this);
    return out;
}

std::string RunConfig::to_ini() const {
    std::string out, section;
    for (const auto& [k, f] : fields()) {
        const auto dot = k.find('.');
        const std::string sec = k.substr(0, dot);
        if (sec != section) {
            out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
            section = sec;
        }
        out += k.substr(dot + 1) + " = " + f.get(*this) + "\n";
    }
    return out;
}

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& values) {
    RunConfig c;
    for (const auto& [k, v] : values) c.set(k, v);
    return c;
}

RunConfig RunConfig::from_ini_string(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config key '" + section + "' must live inside a [section]");
        for (const auto& [key, value] : body) c.set(section + "." + key, value.data());
    }
    return c;
}

RunConfig RunConfig::from_ini_file(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << probe.rdbuf();
    return from_ini_string(ss.str());
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
}

}  // namespace gptomo
