#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gptomo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Square n x n pixel grid of side p centred on the origin.
///
/// Pixel (row, col) has lexicographic index row * n + col. Row 0 is the top
/// of the image (largest y), column 0 the left edge (smallest x).
class Grid {
public:
    Grid(int n, double p);

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] double pixel_size() const noexcept { return p_; }
    [[nodiscard]] long num_pixels() const noexcept { return static_cast<long>(n_) * n_; }
    [[nodiscard]] double side_length() const noexcept { return n_ * p_; }

    [[nodiscard]] long index(int row, int col) const noexcept { return static_cast<long>(row) * n_ + col; }
    [[nodiscard]] int row_of(long index) const noexcept { return static_cast<int>(index / n_); }
    [[nodiscard]] int col_of(long index) const noexcept { return static_cast<int>(index % n_); }

    /// Physical centre (x, y) of pixel `index`.
    [[nodiscard]] Eigen::Vector2d center(long index) const noexcept;

private:
    int n_;
    double p_;
};

Grid build_grid(int n, double p);

/// Parallel-beam scan: N_theta angles in [0, pi), N_tau offsets per angle.
///
/// Beam (j, k) is the line { x : x . (cos a_j, sin a_j) = offsets[k] }.
/// Measurements are enumerated angle-major: t = j * N_tau + k.
struct ScanConfig {
    std::vector<double> angles;
    std::vector<double> offsets;
    double spacing = 1.0;

    [[nodiscard]] long num_angles() const noexcept { return static_cast<long>(angles.size()); }
    [[nodiscard]] long num_offsets() const noexcept { return static_cast<long>(offsets.size()); }
    [[nodiscard]] long num_measurements() const noexcept { return num_angles() * num_offsets(); }
    [[nodiscard]] long measurement_index(long angle, long offset) const noexcept {
        return angle * num_offsets() + offset;
    }
};

/// Uniform angles j*pi/N_theta and ceil(n*sqrt(2)) offsets of spacing p.
ScanConfig default_scan(const Grid& grid, int n_theta);

/// Number of beamlets that covers the grid diagonal at every rotation.
int default_beamlet_count(int n);

/// Sparse m x n^2 projector of exact beam/pixel intersection lengths.
///
/// Both CSR (row access, forward projection) and CSC (column access) copies
/// are kept; they are built once and immutable afterwards.
class SystemMatrix {
public:
    using RowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
    using ColMajor = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

    SystemMatrix() = default;
    explicit SystemMatrix(RowMajor rows);

    [[nodiscard]] long rows() const noexcept { return csr_.rows(); }
    [[nodiscard]] long cols() const noexcept { return csr_.cols(); }
    [[nodiscard]] long nonzeros() const noexcept { return csr_.nonZeros(); }

    [[nodiscard]] const RowMajor& csr() const noexcept { return csr_; }
    [[nodiscard]] const ColMajor& csc() const noexcept { return csc_; }

    /// y = A f.
    [[nodiscard]] Vector forward(const Vector& f) const;
    /// f = A^T y.
    [[nodiscard]] Vector adjoint(const Vector& y) const;
    /// A 1, the row sums.
    [[nodiscard]] Vector row_sums() const;

    /// Submatrix keeping only `rows` (in the given order).
    [[nodiscard]] SystemMatrix select_rows(const std::vector<long>& rows) const;
    /// Indices of rows with at least one nonzero.
    [[nodiscard]] std::vector<long> nonempty_rows() const;

    /// Text triplet format, see docs/formats.md.
    void write_triplets(std::ostream& out) const;
    static SystemMatrix read_triplets(std::istream& in);
    void save(const std::string& path) const;
    static SystemMatrix load(const std::string& path);

private:
    RowMajor csr_;
    ColMajor csc_;
};

SystemMatrix build_system_matrix(const Grid& grid, const ScanConfig& scan);

/// Intersections of one line with the pixel lattice as (pixel, length) pairs.
struct RaySegment {
    long pixel;
    double length;
};
std::vector<RaySegment> trace_ray(const Grid& grid, double angle, double offset);

/// Exact sparse product; throws InvalidArgument on dimension mismatch.
Vector forward_project(const SystemMatrix& a, const Vector& f);

}  // namespace gptomo
