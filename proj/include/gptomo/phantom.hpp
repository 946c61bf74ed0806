#pragma once

#include "gptomo/geometry.hpp"

#include <string>
#include <string_view>

namespace gptomo {

/// Image values on a grid (lexicographic, row 0 at the top).
struct ObjectField {
    Grid grid;
    Vector values;

    [[nodiscard]] double mean() const;
    /// Population standard deviation.
    [[nodiscard]] double stddev() const;
};

enum class SheppLoganVariant { Standard, Modified };
std::string to_string(SheppLoganVariant v);
SheppLoganVariant parse_shepp_logan_variant(std::string_view name);

/// Shepp-Logan phantom sampled at pixel centres. The phantom's [-1, 1]^2
/// frame is mapped onto the grid's field of view; ellipse intensities add and
/// the result is clamped at 0. With `supersample` = s > 1 each pixel is the
/// mean of an s x s lattice of samples centred in the pixel (area rendering).
ObjectField shepp_logan(const Grid& grid, SheppLoganVariant variant = SheppLoganVariant::Standard, int supersample = 1);

/// Box-filter resampling of a w x h row-major image to n x n.
Vector resample_area(const Vector& pixels, int width, int height, int n);

}  // namespace gptomo
