#pragma once

#include "gptomo/geometry.hpp"
#include "gptomo/phantom.hpp"

#include <string>

namespace gptomo {

/// Grayscale image with values normalised to [0, 1] by the format's maximum.
struct RawImage {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    Vector values;  // row-major, top row first
};

/// Reads PGM (P2/P5, maxval up to 65535) or grayscale PNG (1-16 bit),
/// chosen by file signature. Throws IoError naming the problem.
RawImage read_grayscale(const std::string& path);

/// read_grayscale followed by area resampling onto `grid`.
ObjectField load_grayscale(const std::string& path, const Grid& grid);

struct ImageScaling {
    enum class Mode { MinMax, Fixed } mode = Mode::MinMax;
    double lo = 0.0;
    double hi = 1.0;

    static ImageScaling minmax() { return {}; }
    static ImageScaling fixed(double lo, double hi) { return {Mode::Fixed, lo, hi}; }
};

/// Writes an n x n image as PGM (P5) or PNG according to the extension.
/// MinMax maps the minimum to 0 and the maximum to full scale (a constant
/// image becomes all zeros); Fixed clamps to [lo, hi]. Returns the range used.
std::pair<double, double> save_image(const Vector& values, int n, const std::string& path,
                                     const ImageScaling& scaling = ImageScaling::minmax(), int bit_depth = 16);

/// Flat little-endian float64 dump (no header).
void write_raw(const Vector& values, const std::string& path);
Vector read_raw(const std::string& path);

/// Sinogram of n_theta angles by n_tau offsets in angle-major order.
struct Sinogram {
    int n_theta = 0;
    int n_tau = 0;
    Vector values;
};

void write_sinogram_csv(const Sinogram& s, const std::string& path);
Sinogram read_sinogram_csv(const std::string& path);
void write_sinogram_binary(const Sinogram& s, const std::string& path);
Sinogram read_sinogram_binary(const std::string& path);
/// Picks the reader from the file signature.
Sinogram read_sinogram(const std::string& path);

/// Writes `contents` to `path` through a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace gptomo
