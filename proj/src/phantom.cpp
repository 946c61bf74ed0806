#include "gptomo/phantom.hpp"

#include "gptomo/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

namespace gptomo {

namespace {

struct Ellipse {
    double standard, modified, a, b, x0, y0, phi_deg;
};

// Kak & Slaney table; the modified contrasts are Toft's.
constexpr std::array<Ellipse, 10> kEllipses{{
    {2.00, 1.0, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.98, -0.8, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.02, -0.2, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.02, -0.2, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.01, 0.1, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.01, 0.1, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.01, 0.1, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.01, 0.1, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.01, 0.1, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.01, 0.1, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
}};

}  // namespace

double ObjectField::mean() const { return values.size() ? values.mean() : 0.0; }

double ObjectField::stddev() const {
    if (values.size() == 0) return 0.0;
    const double mu = values.mean();
    return std::sqrt((values.array() - mu).square().mean());
}

std::string to_string(SheppLoganVariant v) { return v == SheppLoganVariant::Standard ? "standard" : "modified"; }

SheppLoganVariant parse_shepp_logan_variant(std::string_view name) {
    std::string low(name);
    std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (low == "standard") return SheppLoganVariant::Standard;
    if (low == "modified") return SheppLoganVariant::Modified;
    throw InvalidArgument("unknown Shepp-Logan variant '" + std::string(name) + "' (expected standard or modified)");
}

ObjectField shepp_logan(const Grid& grid, SheppLoganVariant variant, int supersample) {
    if (supersample < 1) throw InvalidArgument("shepp_logan: supersample must be at least 1");
    ObjectField out{grid, Vector::Zero(grid.num_pixels())};
    const double half = 0.5 * grid.side_length();
    const double sub = grid.pixel_size() / supersample;
    auto value_at = [&](double px, double py) {
        double v = 0.0;
        for (const auto& e : kEllipses) {
            const double phi = e.phi_deg * std::numbers::pi / 180.0;
            const double dx = px - e.x0, dy = py - e.y0;
            const double u = dx * std::cos(phi) + dy * std::sin(phi);
            const double w = -dx * std::sin(phi) + dy * std::cos(phi);
            if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) {
                v += variant == SheppLoganVariant::Standard ? e.standard : e.modified;
            }
        }
        return std::max(0.0, v);
    };
    for (long i = 0; i < grid.num_pixels(); ++i) {
        const Eigen::Vector2d c = grid.center(i);
        double acc = 0.0;
        for (int a = 0; a < supersample; ++a) {
            for (int b = 0; b < supersample; ++b) {
                const double x = c.x() + (a - 0.5 * (supersample - 1)) * sub;
                const double y = c.y() + (b - 0.5 * (supersample - 1)) * sub;
                acc += value_at(x / half, y / half);
            }
        }
        out.values(i) = acc / (supersample * supersample);
    }
    return out;
}

Vector resample_area(const Vector& pixels, int width, int height, int n) {
    if (width < 1 || height < 1 || n < 1) throw InvalidArgument("resample: sizes must be positive");
    if (pixels.size() != static_cast<long>(width) * height) throw InvalidArgument("resample: pixel count mismatch");
    // Separable box filter: output cell (r, c) averages the source area
    // [c*w/n, (c+1)*w/n) x [r*h/n, (r+1)*h/n) with fractional edge weights.
    auto weights = [](int src, int dst) {
        Matrix w = Matrix::Zero(dst, src);
        const double scale = static_cast<double>(src) / dst;
        for (int o = 0; o < dst; ++o) {
            const double lo = o * scale, hi = (o + 1) * scale;
            for (int s = static_cast<int>(std::floor(lo)); s < std::min(src, static_cast<int>(std::ceil(hi))); ++s) {
                const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
                if (overlap > 0) w(o, s) = overlap / scale;
            }
        }
        return w;
    };
    const Matrix wr = weights(height, n), wc = weights(width, n);
    // pixels is row-major (h x w); map it as a column-major w x h matrix.
    const Eigen::Map<const Matrix> img(pixels.data(), width, height);
    const Matrix out_t = wc * img * wr.transpose();  // n(cols) x n(rows)
    Vector out(static_cast<long>(n) * n);
    Eigen::Map<Matrix>(out.data(), n, n) = out_t;
    return out;
}

}  // namespace gptomo
