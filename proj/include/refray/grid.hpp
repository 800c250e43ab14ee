#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refray/camera.hpp"
#include "refray/parallel.hpp"
#include "refray/vec.hpp"

namespace refray {

// K^3 voxel lattice over a world-space bounding box.
struct GridSpec {
    int K = 256;
    Vec3 bbox_min{-1, -1, -1};
    Vec3 bbox_max{1, 1, 1};

    void validate() const {
        if (K < 2) throw std::invalid_argument("grid: K must be >= 2");
        if (!(bbox_max.x > bbox_min.x && bbox_max.y > bbox_min.y && bbox_max.z > bbox_min.z))
            throw std::invalid_argument("grid: bbox_max must exceed bbox_min componentwise");
    }

    size_t voxel_count() const { return static_cast<size_t>(K) * K * K; }
    Vec3 voxel_size() const { return (bbox_max - bbox_min) / static_cast<double>(K); }
    Vec3 voxel_center(int i, int j, int k) const {
        const Vec3 h = voxel_size();
        return bbox_min + Vec3{(i + 0.5) * h.x, (j + 0.5) * h.y, (k + 0.5) * h.z};
    }
    size_t index(int i, int j, int k) const {
        return static_cast<size_t>(i) + static_cast<size_t>(K) * (static_cast<size_t>(j) + static_cast<size_t>(K) * k);
    }
};

struct OccupancyGrid {
    GridSpec spec;
    std::vector<uint8_t> occ;

    explicit OccupancyGrid(const GridSpec& s = GridSpec{}) : spec(s), occ(s.voxel_count(), 0) {}

    uint8_t at(int i, int j, int k) const { return occ[spec.index(i, j, k)]; }
    void set(int i, int j, int k, uint8_t v) { occ[spec.index(i, j, k)] = v; }
    size_t count_occupied() const {
        size_t n = 0;
        for (uint8_t v : occ) n += v;
        return n;
    }
};

struct ScalarGrid {
    GridSpec spec;
    std::vector<double> values;

    explicit ScalarGrid(const GridSpec& s = GridSpec{}) : spec(s), values(s.voxel_count(), 0.0) {}

    double at(int i, int j, int k) const { return values[spec.index(i, j, k)]; }
    void set(int i, int j, int k, double v) { values[spec.index(i, j, k)] = v; }
};

namespace detail {

// A projected point lies in the mask's object region when any of the up-to-4
// pixels whose centers surround it is set. The footprint test keeps the
// visual-hull superset property exact for smooth silhouettes: a point strictly
// inside the silhouette always has a surrounding pixel center inside it,
// whereas the containing-pixel test can carve voxels just inside the boundary.
inline bool mask_covers(const MaskImage& mask, double u, double v) {
    if (u < 0.0 || v < 0.0 || u >= mask.width || v >= mask.height) return false;
    const int i0 = static_cast<int>(std::floor(u - 0.5));
    const int j0 = static_cast<int>(std::floor(v - 0.5));
    for (int dj = 0; dj <= 1; ++dj) {
        int j = j0 + dj;
        j = j < 0 ? 0 : (j >= mask.height ? mask.height - 1 : j);
        for (int di = 0; di <= 1; ++di) {
            int i = i0 + di;
            i = i < 0 ? 0 : (i >= mask.width ? mask.width - 1 : i);
            if (mask.at(i, j)) return true;
        }
    }
    return false;
}

}  // namespace detail

// Carves the silhouette cones: a voxel survives iff its center projects into
// the object region of every view. Projections behind the camera or outside
// the frame count as carved, so unobserved voxels are never kept.
inline OccupancyGrid carve(const std::vector<View>& views, const GridSpec& spec, unsigned threads = 1) {
    spec.validate();
    if (views.empty()) throw std::invalid_argument("carve: need at least one view");
    for (const auto& v : views)
        if (!v.mask) throw std::invalid_argument("carve: view '" + v.name + "' has no mask");

    OccupancyGrid grid(spec);
    const int K = spec.K;
    parallel_for(static_cast<size_t>(K), threads, [&](size_t kz) {
        const int k = static_cast<int>(kz);
        for (int j = 0; j < K; ++j) {
            for (int i = 0; i < K; ++i) {
                const Vec3 p = spec.voxel_center(i, j, k);
                bool inside = true;
                for (const auto& view : views) {
                    const auto px = project(view, p);
                    if (!px || !detail::mask_covers(*view.mask, px->u, px->v)) {
                        inside = false;
                        break;
                    }
                }
                grid.occ[spec.index(i, j, k)] = inside ? 1 : 0;
            }
        }
    });
    return grid;
}

// Box-filter average over the (2r+1)^3 neighborhood. Voxels outside the grid
// count as empty but stay in the denominator, so occupancy fades toward the
// borders instead of clamping. Implemented as three separable passes.
inline ScalarGrid smooth_occupancy(const OccupancyGrid& grid, int radius, unsigned threads = 1) {
    if (radius < 0) throw std::invalid_argument("smooth_occupancy: radius must be >= 0");
    const GridSpec& spec = grid.spec;
    const int K = spec.K;

    ScalarGrid out(spec);
    if (radius == 0) {
        for (size_t n = 0; n < grid.occ.size(); ++n) out.values[n] = grid.occ[n];
        return out;
    }

    std::vector<double> a(grid.occ.begin(), grid.occ.end());
    std::vector<double> b(a.size(), 0.0);
    const int w = 2 * radius + 1;

    // One zero-padded running-sum pass along `axis`.
    auto pass = [&](const std::vector<double>& src, std::vector<double>& dst, int axis) {
        const size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<size_t>(K) : static_cast<size_t>(K) * K);
        const size_t lines = static_cast<size_t>(K) * K;
        parallel_for(lines, threads, [&](size_t line) {
            // Decompose the line id into the two non-axis coordinates.
            const int c0 = static_cast<int>(line % K);
            const int c1 = static_cast<int>(line / K);
            size_t base;
            if (axis == 0)
                base = spec.index(0, c0, c1);
            else if (axis == 1)
                base = spec.index(c0, 0, c1);
            else
                base = spec.index(c0, c1, 0);
            double running = 0.0;
            for (int t = 0; t < radius && t < K; ++t) running += src[base + static_cast<size_t>(t) * stride];
            for (int t = 0; t < K; ++t) {
                const int enter = t + radius;
                if (enter < K) running += src[base + static_cast<size_t>(enter) * stride];
                dst[base + static_cast<size_t>(t) * stride] = running;
                const int leave = t - radius;
                if (leave >= 0) running -= src[base + static_cast<size_t>(leave) * stride];
            }
        });
    };

    pass(a, b, 0);
    pass(b, a, 1);
    pass(a, b, 2);

    const double inv = 1.0 / (static_cast<double>(w) * w * w);
    for (size_t n = 0; n < b.size(); ++n) out.values[n] = b[n] * inv;
    return out;
}

// Debug dump: 5-line ASCII header followed by raw little-endian payload
// (uint8 for occupancy, float32 for scalar values).
inline void save_grid(const std::string& path, const GridSpec& spec, const void* payload, size_t payload_bytes,
                      const std::string& kind) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char header[256];
    std::snprintf(header, sizeof(header), "refray-grid %s\nK %d\nbbox_min %.17g %.17g %.17g\nbbox_max %.17g %.17g %.17g\ndata %zu\n",
                  kind.c_str(), spec.K, spec.bbox_min.x, spec.bbox_min.y, spec.bbox_min.z, spec.bbox_max.x,
                  spec.bbox_max.y, spec.bbox_max.z, payload_bytes);
    out << header;
    out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
    if (!out) throw std::runtime_error("short write: " + path);
}

inline void save_occupancy(const std::string& path, const OccupancyGrid& grid) {
    save_grid(path, grid.spec, grid.occ.data(), grid.occ.size(), "occupancy");
}

inline void save_scalar_grid(const std::string& path, const ScalarGrid& grid) {
    std::vector<float> f(grid.values.begin(), grid.values.end());
    save_grid(path, grid.spec, f.data(), f.size() * sizeof(float), "scalar");
}

namespace detail {

inline void load_grid_header(std::istream& in, const std::string& path, GridSpec& spec, std::string& kind,
                             size_t& payload_bytes) {
    std::string line, word;
    if (!std::getline(in, line)) throw std::runtime_error("truncated grid file: " + path);
    std::istringstream l1(line);
    if (!(l1 >> word >> kind) || word != "refray-grid") throw std::runtime_error("not a refray grid file: " + path);
    if (!std::getline(in, line)) throw std::runtime_error("truncated grid file: " + path);
    std::istringstream l2(line);
    if (!(l2 >> word >> spec.K) || word != "K") throw std::runtime_error("bad grid header (K): " + path);
    if (!std::getline(in, line)) throw std::runtime_error("truncated grid file: " + path);
    std::istringstream l3(line);
    if (!(l3 >> word >> spec.bbox_min.x >> spec.bbox_min.y >> spec.bbox_min.z) || word != "bbox_min")
        throw std::runtime_error("bad grid header (bbox_min): " + path);
    if (!std::getline(in, line)) throw std::runtime_error("truncated grid file: " + path);
    std::istringstream l4(line);
    if (!(l4 >> word >> spec.bbox_max.x >> spec.bbox_max.y >> spec.bbox_max.z) || word != "bbox_max")
        throw std::runtime_error("bad grid header (bbox_max): " + path);
    if (!std::getline(in, line)) throw std::runtime_error("truncated grid file: " + path);
    std::istringstream l5(line);
    if (!(l5 >> word >> payload_bytes) || word != "data") throw std::runtime_error("bad grid header (data): " + path);
    spec.validate();
}

}  // namespace detail

inline OccupancyGrid load_occupancy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    GridSpec spec;
    std::string kind;
    size_t payload_bytes = 0;
    detail::load_grid_header(in, path, spec, kind, payload_bytes);
    if (kind != "occupancy") throw std::runtime_error("grid file is not an occupancy grid: " + path);
    OccupancyGrid grid(spec);
    if (payload_bytes != grid.occ.size()) throw std::runtime_error("grid payload size mismatch: " + path);
    in.read(reinterpret_cast<char*>(grid.occ.data()), static_cast<std::streamsize>(payload_bytes));
    if (!in) throw std::runtime_error("truncated grid payload: " + path);
    return grid;
}

inline ScalarGrid load_scalar_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    GridSpec spec;
    std::string kind;
    size_t payload_bytes = 0;
    detail::load_grid_header(in, path, spec, kind, payload_bytes);
    if (kind != "scalar") throw std::runtime_error("grid file is not a scalar grid: " + path);
    ScalarGrid grid(spec);
    if (payload_bytes != grid.values.size() * sizeof(float))
        throw std::runtime_error("grid payload size mismatch: " + path);
    std::vector<float> f(grid.values.size());
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(payload_bytes));
    if (!in) throw std::runtime_error("truncated grid payload: " + path);
    for (size_t n = 0; n < f.size(); ++n) grid.values[n] = f[n];
    return grid;
}

}  // namespace refray
