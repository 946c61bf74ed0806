#include "gptomo/image_io.hpp"

#include "gptomo/error.hpp"

#include <png.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace gptomo {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

namespace {

bool has_extension(const std::string& path, const char* ext) {
    std::string e = fs::path(path).extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e == ext;
}

// --- PGM -------------------------------------------------------------------

RawImage parse_pgm(const std::string& data, const std::string& path) {
    size_t pos = 0;
    auto skip = [&] {
        while (pos < data.size()) {
            if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&]() -> long {
        skip();
        size_t start = pos;
        while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
        if (start == pos) throw IoError("'" + path + "': malformed PGM header");
        return std::stol(data.substr(start, pos - start));
    };
    if (data.size() < 2 || data[0] != 'P' || (data[1] != '2' && data[1] != '5')) {
        throw IoError("'" + path + "': not a grayscale PGM (expected P2 or P5 magic)");
    }
    const bool ascii = data[1] == '2';
    pos = 2;
    const long w = number(), h = number(), maxval = number();
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw IoError("'" + path + "': PGM header out of range");
    RawImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.bit_depth = maxval > 255 ? 16 : 8;
    img.values.resize(w * h);
    if (ascii) {
        for (long i = 0; i < w * h; ++i) {
            const long v = number();
            if (v > maxval) throw IoError("'" + path + "': PGM sample exceeds maxval");
            img.values(i) = static_cast<double>(v) / maxval;
        }
    } else {
        ++pos;  // single whitespace after maxval
        const long bps = maxval > 255 ? 2 : 1;
        if (data.size() < pos + static_cast<size_t>(w * h * bps)) throw IoError("'" + path + "': truncated PGM raster");
        const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos);
        for (long i = 0; i < w * h; ++i) {
            const unsigned v = bps == 2 ? (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
            img.values(i) = static_cast<double>(std::min<unsigned>(v, static_cast<unsigned>(maxval))) / maxval;
        }
    }
    return img;
}

// --- PNG -------------------------------------------------------------------

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct MemReader {
    const std::string* data;
    size_t pos;
};

void png_read_mem(png_structp png, png_bytep out, png_size_t len) {
    auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
    if (r->pos + len > r->data->size()) png_error(png, "unexpected end of file");
    std::memcpy(out, r->data->data() + r->pos, len);
    r->pos += len;
}

void png_write_mem(png_structp png, png_bytep in, png_size_t len) {
    auto* s = static_cast<std::string*>(png_get_io_ptr(png));
    s->append(reinterpret_cast<const char*>(in), len);
}

void png_flush_mem(png_structp) {}

RawImage parse_png(const std::string& data, const std::string& path) {
    PngReadGuard g;
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw IoError("libpng initialisation failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw IoError("libpng initialisation failed");
    MemReader reader{&data, 0};
    RawImage img;
    std::vector<unsigned char> raster;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(g.png))) throw IoError("'" + path + "': corrupt PNG");
    png_set_read_fn(g.png, &reader, png_read_mem);
    png_read_info(g.png, g.info);
    const int color = png_get_color_type(g.png, g.info);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
        // Cannot throw across libpng's longjmp frame, so validate first.
        png_destroy_read_struct(&g.png, &g.info, nullptr);
        throw IoError("'" + path + "': PNG is not grayscale (colour images are not supported)");
    }
    int depth = png_get_bit_depth(g.png, g.info);
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(g.png);
    png_read_update_info(g.png, g.info);
    const png_uint_32 w = png_get_image_width(g.png, g.info), h = png_get_image_height(g.png, g.info);
    const size_t stride = png_get_rowbytes(g.png, g.info);
    raster.resize(stride * h);
    rows.resize(h);
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = raster.data() + r * stride;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);

    const int out_depth = depth == 16 ? 16 : 8;
    const double maxval = depth == 16 ? 65535.0 : depth < 8 ? static_cast<double>((1 << depth) - 1) : 255.0;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.bit_depth = out_depth;
    img.values.resize(static_cast<long>(w) * h);
    for (png_uint_32 r = 0; r < h; ++r) {
        for (png_uint_32 c = 0; c < w; ++c) {
            double v;
            if (out_depth == 16) {
                v = static_cast<double>((rows[r][2 * c] << 8) | rows[r][2 * c + 1]);
            } else {
                v = rows[r][c];
                // Expanded low-depth samples are scaled to 0..255 by libpng.
                if (depth < 8) v = std::round(v / 255.0 * maxval);
            }
            img.values(static_cast<long>(r) * w + c) = v / maxval;
        }
    }
    return img;
}

std::string encode_png(const std::vector<std::uint16_t>& samples, int n, int bit_depth) {
    std::string out;
    PngWriteGuard g;
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw IoError("libpng initialisation failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw IoError("libpng initialisation failed");
    const size_t bps = bit_depth == 16 ? 2 : 1;
    std::vector<unsigned char> raster(static_cast<size_t>(n) * n * bps);
    for (size_t i = 0; i < samples.size(); ++i) {
        if (bps == 2) {
            raster[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
            raster[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
        } else {
            raster[i] = static_cast<unsigned char>(samples[i]);
        }
    }
    std::vector<png_bytep> rows(static_cast<size_t>(n));
    for (int r = 0; r < n; ++r) rows[static_cast<size_t>(r)] = raster.data() + static_cast<size_t>(r) * n * bps;
    if (setjmp(png_jmpbuf(g.png))) throw IoError("PNG encoding failed");
    png_set_write_fn(g.png, &out, png_write_mem, png_flush_mem);
    png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(n), static_cast<png_uint_32>(n), bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);
    png_write_image(g.png, rows.data());
    png_write_end(g.png, nullptr);
    return out;
}

constexpr char kSinoMagic[8] = {'G', 'P', 'T', 'S', 'I', 'N', 'O', '1'};

void check_sinogram(const Sinogram& s) {
    if (s.n_theta < 0 || s.n_tau < 0 || s.values.size() != static_cast<long>(s.n_theta) * s.n_tau) {
        throw InvalidArgument("sinogram: values do not match n_theta x n_tau");
    }
}

}  // namespace

RawImage read_grayscale(const std::string& path) {
    const std::string data = read_file(path);
    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (data.size() >= 8 && std::memcmp(data.data(), png_sig, 8) == 0) return parse_png(data, path);
    if (data.size() >= 2 && data[0] == 'P') return parse_pgm(data, path);
    throw IoError("'" + path + "': unrecognised image format (expected PGM P2/P5 or PNG)");
}

ObjectField load_grayscale(const std::string& path, const Grid& grid) {
    const RawImage img = read_grayscale(path);
    ObjectField f{grid, resample_area(img.values, img.width, img.height, grid.n())};
    f.values = f.values.cwiseMax(0.0).cwiseMin(1.0);
    return f;
}

std::pair<double, double> save_image(const Vector& values, int n, const std::string& path, const ImageScaling& scaling,
                                     int bit_depth) {
    if (values.size() != static_cast<long>(n) * n) throw InvalidArgument("save_image: values do not match n");
    if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("save_image: bit depth must be 8 or 16");
    double lo = scaling.lo, hi = scaling.hi;
    if (scaling.mode == ImageScaling::Mode::MinMax) {
        lo = values.size() ? values.minCoeff() : 0.0;
        hi = values.size() ? values.maxCoeff() : 0.0;
    } else if (!(hi > lo)) {
        throw InvalidArgument("save_image: fixed range needs hi > lo");
    }
    const double full = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint16_t> samples(static_cast<size_t>(values.size()));
    for (long i = 0; i < values.size(); ++i) {
        double u = hi > lo ? (values(i) - lo) / (hi - lo) : 0.0;
        if (!std::isfinite(u)) u = 0.0;
        samples[static_cast<size_t>(i)] = static_cast<std::uint16_t>(std::lround(std::clamp(u, 0.0, 1.0) * full));
    }
    std::string bytes;
    if (has_extension(path, ".png")) {
        bytes = encode_png(samples, n, bit_depth);
    } else if (has_extension(path, ".pgm")) {
        bytes = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n" + std::to_string(static_cast<int>(full)) + "\n";
        for (auto s : samples) {
            if (bit_depth == 16) bytes.push_back(static_cast<char>(s >> 8));
            bytes.push_back(static_cast<char>(s & 0xff));
        }
    } else {
        throw IoError("'" + path + "': unsupported image extension (use .pgm or .png)");
    }
    write_file_atomic(path, bytes);
    return {lo, hi};
}

void write_raw(const Vector& values, const std::string& path) {
    std::string bytes(static_cast<size_t>(values.size()) * sizeof(double), '\0');
    std::memcpy(bytes.data(), values.data(), bytes.size());
    write_file_atomic(path, bytes);
}

Vector read_raw(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() % sizeof(double) != 0) throw IoError("'" + path + "': size is not a multiple of 8 bytes");
    Vector v(static_cast<long>(bytes.size() / sizeof(double)));
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return v;
}

void write_sinogram_csv(const Sinogram& s, const std::string& path) {
    check_sinogram(s);
    std::string out = "theta_index,tau_index,value\n";
    char buf[64];
    for (int j = 0; j < s.n_theta; ++j) {
        for (int k = 0; k < s.n_tau; ++k) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", j, k, s.values(static_cast<long>(j) * s.n_tau + k));
            out += buf;
        }
    }
    write_file_atomic(path, out);
}

Sinogram read_sinogram_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "theta_index,tau_index,value") {
        throw IoError("'" + path + "': missing sinogram CSV header");
    }
    std::vector<std::tuple<long, long, double>> cells;
    long max_j = -1, max_k = -1, lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        long j, k;
        double v;
        char c1, c2;
        std::istringstream ls(line);
        if (!(ls >> j >> c1 >> k >> c2 >> v) || c1 != ',' || c2 != ',' || j < 0 || k < 0) {
            throw IoError("'" + path + "': malformed sinogram row at line " + std::to_string(lineno));
        }
        cells.emplace_back(j, k, v);
        max_j = std::max(max_j, j);
        max_k = std::max(max_k, k);
    }
    Sinogram s;
    s.n_theta = static_cast<int>(max_j + 1);
    s.n_tau = static_cast<int>(max_k + 1);
    if (static_cast<long>(cells.size()) != static_cast<long>(s.n_theta) * s.n_tau) {
        throw IoError("'" + path + "': sinogram CSV does not cover a full theta x tau table");
    }
    s.values = Vector::Constant(static_cast<long>(s.n_theta) * s.n_tau, std::nan(""));
    for (const auto& [j, k, v] : cells) s.values(j * s.n_tau + k) = v;
    if (s.values.hasNaN()) throw IoError("'" + path + "': sinogram CSV has duplicate or missing cells");
    return s;
}

void write_sinogram_binary(const Sinogram& s, const std::string& path) {
    check_sinogram(s);
    std::string out(kSinoMagic, 8);
    const std::int32_t dims[2] = {s.n_theta, s.n_tau};
    out.append(reinterpret_cast<const char*>(dims), sizeof dims);
    out.append(reinterpret_cast<const char*>(s.values.data()), static_cast<size_t>(s.values.size()) * sizeof(double));
    write_file_atomic(path, out);
}

Sinogram read_sinogram_binary(const std::string& path) {
    const std::string data = read_file(path);
    if (data.size() < 16 || std::memcmp(data.data(), kSinoMagic, 8) != 0) throw IoError("'" + path + "': not a binary sinogram");
    std::int32_t dims[2];
    std::memcpy(dims, data.data() + 8, sizeof dims);
    if (dims[0] < 0 || dims[1] < 0) throw IoError("'" + path + "': negative sinogram dimensions");
    const size_t count = static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]);
    if (data.size() != 16 + count * sizeof(double)) throw IoError("'" + path + "': binary sinogram has the wrong length");
    Sinogram s;
    s.n_theta = dims[0];
    s.n_tau = dims[1];
    s.values.resize(static_cast<long>(count));
    std::memcpy(s.values.data(), data.data() + 16, count * sizeof(double));
    return s;
}

Sinogram read_sinogram(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    char head[8] = {};
    in.read(head, 8);
    if (in.gcount() == 8 && std::memcmp(head, kSinoMagic, 8) == 0) return read_sinogram_binary(path);
    return read_sinogram_csv(path);
}

}  // namespace gptomo
