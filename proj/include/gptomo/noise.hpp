#pragma once

#include "gptomo/geometry.hpp"
#include "gptomo/gp.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace gptomo {

/// Counter-based normal and uniform draws: value k of stream s under seed
/// depends only on (seed, s, k), so any evaluation order gives the same numbers.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
    [[nodiscard]] std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    [[nodiscard]] double uniform(std::uint64_t stream, std::uint64_t index) const noexcept;
    /// Standard normal via Box-Muller on two uniforms of the same stream.
    [[nodiscard]] double normal(std::uint64_t stream, std::uint64_t index) const noexcept;
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

enum class NoiseCaseId { I, II, III, IV };
std::string to_string(NoiseCaseId id);
NoiseCaseId parse_noise_case(std::string_view name);

struct NoiseCase {
    NoiseCaseId id = NoiseCaseId::I;
    std::uint64_t seed = 0;
    /// Case I: noise std assumed at reconstruction (nothing is added).
    double nugget = 1e-3;
    /// Cases II and IV: std as a fraction of RMS(y_clean).
    double fraction = 0.10;
    /// Cases III and IV: per-measurement alpha_t ~ U(alpha_lo, alpha_hi).
    double alpha_lo = 0.05;
    double alpha_hi = 0.25;
    /// Cases III and IV: scale alpha_t by |y_clean_t| instead of RMS(y_clean).
    bool per_measurement_scale = false;

    void validate() const;
};

double rms(const Vector& v);

struct CorruptedSinogram {
    Vector y;           // noisy sinogram
    Vector sigma_true;  // generation std per measurement (0 in Case I)
    Vector alpha;       // alpha_t for Cases III/IV, empty otherwise
};

/// Adds the noise of `noise_case` to a clean sinogram. Deterministic in the seed.
CorruptedSinogram corrupt(const Vector& y_clean, const NoiseCase& noise_case);

/// Noise covariance assumed during reconstruction: Case I the nugget, Case II
/// the true homoskedastic level, Case III the true per-measurement std, and
/// Case IV the homoskedastic 10%-of-RMS level regardless of the truth.
NoiseCovariance assumed_noise_model(const NoiseCase& noise_case, const Vector& y_clean, const Vector& sigma_true);

}  // namespace gptomo
