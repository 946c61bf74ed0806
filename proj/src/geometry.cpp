#include "gptomo/geometry.hpp"

#include "gptomo/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace gptomo {

namespace {

// Snap values within rounding of 0 or +-1 so that axis-aligned rays are exactly
// axis-aligned (cos(pi/2) is 6e-17 otherwise).
double snap_unit(double v) {
    constexpr double tol = 1e-15;
    if (std::abs(v) < tol) return 0.0;
    if (std::abs(v - 1.0) < tol) return 1.0;
    if (std::abs(v + 1.0) < tol) return -1.0;
    return v;
}

}  // namespace

Grid::Grid(int n, double p) : n_(n), p_(p) {
    if (n < 2) throw InvalidArgument("grid: n must be >= 2, got " + std::to_string(n));
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("grid: pixel size must be positive and finite");
}

Eigen::Vector2d Grid::center(long index) const noexcept {
    const double half = 0.5 * (n_ - 1);
    const int r = row_of(index);
    const int c = col_of(index);
    return {(c - half) * p_, (half - r) * p_};
}

Grid build_grid(int n, double p) { return Grid(n, p); }

int default_beamlet_count(int n) { return static_cast<int>(std::ceil(n * std::numbers::sqrt2)); }

ScanConfig default_scan(const Grid& grid, int n_theta) {
    if (n_theta < 1) throw InvalidArgument("scan: n_theta must be >= 1");
    ScanConfig scan;
    scan.spacing = grid.pixel_size();
    scan.angles.resize(static_cast<size_t>(n_theta));
    for (int j = 0; j < n_theta; ++j) scan.angles[static_cast<size_t>(j)] = j * std::numbers::pi / n_theta;
    const int n_tau = default_beamlet_count(grid.n());
    scan.offsets.resize(static_cast<size_t>(n_tau));
    const double half = 0.5 * (n_tau - 1);
    for (int k = 0; k < n_tau; ++k) scan.offsets[static_cast<size_t>(k)] = (k - half) * scan.spacing;
    return scan;
}

std::vector<RaySegment> trace_ray(const Grid& grid, double angle, double offset) {
    // Work in pixel units: lattice lines sit at integers shifted by n/2, so
    // offsets that are (half-)integer multiples of p stay exact.
    const int n = grid.n();
    const double p = grid.pixel_size();
    const double h = 0.5 * n;
    const double nx = snap_unit(std::cos(angle));
    const double ny = snap_unit(std::sin(angle));
    const double ux = -ny;
    const double uy = nx;
    const double tau = offset / p;
    const double px = tau * nx;
    const double py = tau * ny;

    double s_lo = -std::numeric_limits<double>::infinity();
    double s_hi = std::numeric_limits<double>::infinity();
    auto clip = [&](double start, double dir) {
        if (dir == 0.0) {
            if (start < -h || start > h) s_hi = s_lo - 1.0;
            return;
        }
        double a = (-h - start) / dir;
        double b = (h - start) / dir;
        if (a > b) std::swap(a, b);
        s_lo = std::max(s_lo, a);
        s_hi = std::min(s_hi, b);
    };
    clip(px, ux);
    clip(py, uy);
    if (!(s_hi > s_lo)) return {};

    std::vector<double> knots;
    knots.reserve(2 * static_cast<size_t>(n) + 4);
    knots.push_back(s_lo);
    knots.push_back(s_hi);
    auto add_crossings = [&](double start, double dir) {
        if (dir == 0.0) return;
        for (int i = 0; i <= n; ++i) {
            const double s = ((i - h) - start) / dir;
            if (s > s_lo && s < s_hi) knots.push_back(s);
        }
    };
    add_crossings(px, ux);
    add_crossings(py, uy);
    std::sort(knots.begin(), knots.end());

    // Shift midpoints slightly along the normal: a ray running exactly along
    // a lattice line is assigned to the pixel on its positive-normal side.
    constexpr double nudge = 1e-9;
    std::vector<RaySegment> out;
    out.reserve(knots.size());
    for (size_t k = 0; k + 1 < knots.size(); ++k) {
        const double ds = knots[k + 1] - knots[k];
        if (ds <= 0.0) continue;
        const double sm = 0.5 * (knots[k] + knots[k + 1]);
        const double mx = px + sm * ux + nudge * nx;
        const double my = py + sm * uy + nudge * ny;
        const auto col = static_cast<long>(std::floor(mx + h));
        const auto row = static_cast<long>(std::floor(h - my));
        if (col < 0 || col >= n || row < 0 || row >= n) continue;
        const long pix = row * n + col;
        if (!out.empty() && out.back().pixel == pix) {
            out.back().length += ds * p;
        } else {
            out.push_back({pix, ds * p});
        }
    }
    return out;
}

SystemMatrix::SystemMatrix(RowMajor rows) : csr_(std::move(rows)) {
    csr_.makeCompressed();
    csc_ = ColMajor(csr_);
    csc_.makeCompressed();
}

Vector SystemMatrix::forward(const Vector& f) const {
    if (f.size() != cols()) throw InvalidArgument("forward: expected " + std::to_string(cols()) + " pixel values");
    return csr_ * f;
}

Vector SystemMatrix::adjoint(const Vector& y) const {
    if (y.size() != rows()) throw InvalidArgument("adjoint: expected " + std::to_string(rows()) + " measurements");
    return csc_.transpose() * y;
}

Vector SystemMatrix::row_sums() const { return csr_ * Vector::Ones(cols()); }

std::vector<long> SystemMatrix::nonempty_rows() const {
    std::vector<long> out;
    for (long t = 0; t < rows(); ++t) {
        if (csr_.outerIndexPtr()[t + 1] > csr_.outerIndexPtr()[t]) out.push_back(t);
    }
    return out;
}

SystemMatrix SystemMatrix::select_rows(const std::vector<long>& rows) const {
    RowMajor sub(static_cast<long>(rows.size()), cols());
    std::vector<Eigen::Triplet<double>> trip;
    for (size_t k = 0; k < rows.size(); ++k) {
        for (RowMajor::InnerIterator it(csr_, rows[k]); it; ++it) {
            trip.emplace_back(static_cast<int>(k), static_cast<int>(it.col()), it.value());
        }
    }
    sub.setFromTriplets(trip.begin(), trip.end());
    return SystemMatrix(std::move(sub));
}

void SystemMatrix::write_triplets(std::ostream& out) const {
    out << "# gptomo-system-matrix v1\n";
    out << rows() << ' ' << cols() << ' ' << nonzeros() << '\n';
    out << std::setprecision(17);
    for (long t = 0; t < rows(); ++t) {
        for (RowMajor::InnerIterator it(csr_, t); it; ++it) out << t << ' ' << it.col() << ' ' << it.value() << '\n';
    }
}

SystemMatrix SystemMatrix::read_triplets(std::istream& in) {
    std::string header;
    std::getline(in, header);
    if (header != "# gptomo-system-matrix v1") throw IoError("system matrix: bad header '" + header + "'");
    long rows = 0, cols = 0, nnz = 0;
    if (!(in >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) throw IoError("system matrix: bad size line");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(nnz));
    for (long k = 0; k < nnz; ++k) {
        long t = 0, i = 0;
        double v = 0;
        if (!(in >> t >> i >> v)) throw IoError("system matrix: truncated at entry " + std::to_string(k));
        if (t < 0 || t >= rows || i < 0 || i >= cols) throw IoError("system matrix: index out of range");
        trip.emplace_back(static_cast<int>(t), static_cast<int>(i), v);
    }
    RowMajor a(rows, cols);
    a.setFromTriplets(trip.begin(), trip.end());
    return SystemMatrix(std::move(a));
}

void SystemMatrix::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_triplets(out);
    if (!out) throw IoError("write failed: " + path);
}

SystemMatrix SystemMatrix::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_triplets(in);
}

SystemMatrix build_system_matrix(const Grid& grid, const ScanConfig& scan) {
    const long m = scan.num_measurements();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(m) * static_cast<size_t>(grid.n()) * 3 / 2);
    for (long j = 0; j < scan.num_angles(); ++j) {
        for (long k = 0; k < scan.num_offsets(); ++k) {
            const long t = scan.measurement_index(j, k);
            for (const auto& seg : trace_ray(grid, scan.angles[static_cast<size_t>(j)], scan.offsets[static_cast<size_t>(k)])) {
                trip.emplace_back(static_cast<int>(t), static_cast<int>(seg.pixel), seg.length);
            }
        }
    }
    SystemMatrix::RowMajor a(m, grid.num_pixels());
    a.setFromTriplets(trip.begin(), trip.end());
    return SystemMatrix(std::move(a));
}

Vector forward_project(const SystemMatrix& a, const Vector& f) { return a.forward(f); }

}  // namespace gptomo
