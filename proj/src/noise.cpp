#include "gptomo/noise.hpp"

#include "gptomo/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace gptomo {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamAlpha = 1;
constexpr std::uint64_t kStreamNoise = 2;

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t index) const noexcept {
    const std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream));
    return splitmix64(key + index * kGolden);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t index) const noexcept {
    return static_cast<double>(bits(stream, index) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t stream, std::uint64_t index) const noexcept {
    const double u1 = 1.0 - uniform(stream, 2 * index);  // (0, 1]
    const double u2 = uniform(stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string to_string(NoiseCaseId id) {
    switch (id) {
        case NoiseCaseId::I: return "I";
        case NoiseCaseId::II: return "II";
        case NoiseCaseId::III: return "III";
        case NoiseCaseId::IV: return "IV";
    }
    return "?";
}

NoiseCaseId parse_noise_case(std::string_view name) {
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "I" || up == "1") return NoiseCaseId::I;
    if (up == "II" || up == "2") return NoiseCaseId::II;
    if (up == "III" || up == "3") return NoiseCaseId::III;
    if (up == "IV" || up == "4") return NoiseCaseId::IV;
    throw InvalidArgument("unknown noise case '" + std::string(name) + "' (expected I, II, III or IV)");
}

void NoiseCase::validate() const {
    if (!(nugget > 0.0) || !(fraction > 0.0)) throw InvalidArgument("noise: nugget and fraction must be positive");
    if (!(alpha_lo > 0.0) || !(alpha_hi > alpha_lo)) throw InvalidArgument("noise: need 0 < alpha_lo < alpha_hi");
}

double rms(const Vector& v) {
    if (v.size() == 0) throw InvalidArgument("rms of an empty vector");
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

CorruptedSinogram corrupt(const Vector& y_clean, const NoiseCase& nc) {
    nc.validate();
    const long m = y_clean.size();
    CorruptedSinogram out;
    out.y = y_clean;
    out.sigma_true = Vector::Zero(m);
    if (nc.id == NoiseCaseId::I) return out;

    const double scale = rms(y_clean);
    const CounterRng rng(nc.seed);
    if (nc.id == NoiseCaseId::II) {
        out.sigma_true.setConstant(nc.fraction * scale);
    } else {
        out.alpha.resize(m);
        for (long t = 0; t < m; ++t) {
            const double a = nc.alpha_lo + (nc.alpha_hi - nc.alpha_lo) * rng.uniform(kStreamAlpha, static_cast<std::uint64_t>(t));
            out.alpha(t) = a;
            out.sigma_true(t) = a * (nc.per_measurement_scale ? std::abs(y_clean(t)) : scale);
        }
    }
    for (long t = 0; t < m; ++t) out.y(t) += out.sigma_true(t) * rng.normal(kStreamNoise, static_cast<std::uint64_t>(t));
    return out;
}

NoiseCovariance assumed_noise_model(const NoiseCase& nc, const Vector& y_clean, const Vector& sigma_true) {
    nc.validate();
    const long m = y_clean.size();
    switch (nc.id) {
        case NoiseCaseId::I: return NoiseCovariance::homoskedastic(m, nc.nugget);
        case NoiseCaseId::II:
        case NoiseCaseId::IV: return NoiseCovariance::homoskedastic(m, nc.fraction * rms(y_clean));
        case NoiseCaseId::III: {
            if (sigma_true.size() != m) throw InvalidArgument("noise: sigma_true does not match the sinogram");
            // Beams with zero clean signal get zero std under the per-measurement
            // law; a floor keeps the model positive definite.
            const double floor = 1e-6 * rms(y_clean) + 1e-300;
            return NoiseCovariance::heteroskedastic(sigma_true.cwiseMax(floor));
        }
    }
    throw InvalidArgument("noise: unknown case");
}

}  // namespace gptomo
