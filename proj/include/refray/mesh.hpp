#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refray/vec.hpp"

namespace refray {

// Triangle mesh with per-vertex normals. Faces index vertices and normals
// jointly (one normal per vertex).
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return faces.empty(); }

    Vec3 face_normal(size_t f) const {
        const auto& t = faces[f];
        return normalize(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
    }

    double face_area(size_t f) const {
        const auto& t = faces[f];
        return 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
    }

    Vec3 bbox_min() const {
        Vec3 lo{1e300, 1e300, 1e300};
        for (const auto& v : vertices) lo = cmin(lo, v);
        return lo;
    }
    Vec3 bbox_max() const {
        Vec3 hi{-1e300, -1e300, -1e300};
        for (const auto& v : vertices) hi = cmax(hi, v);
        return hi;
    }
};

// Area-weighted vertex normals from face normals. Isolated vertices get
// (0, 0, 1); their count is returned so callers can warn.
inline size_t compute_vertex_normals(TriMesh& mesh) {
    mesh.normals.assign(mesh.vertices.size(), Vec3{0, 0, 0});
    for (const auto& t : mesh.faces) {
        // Unnormalized cross product = 2 * area * unit normal.
        const Vec3 weighted = cross(mesh.vertices[t[1]] - mesh.vertices[t[0]], mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        mesh.normals[t[0]] += weighted;
        mesh.normals[t[1]] += weighted;
        mesh.normals[t[2]] += weighted;
    }
    size_t isolated = 0;
    for (auto& n : mesh.normals) {
        const double len = norm(n);
        if (len > 1e-20) {
            n /= len;
        } else {
            n = Vec3{0, 0, 1};
            ++isolated;
        }
    }
    return isolated;
}

// Distinct 1-ring neighbor lists built from face edges.
inline std::vector<std::vector<int>> vertex_neighbors(const TriMesh& mesh) {
    std::vector<std::vector<int>> nbr(mesh.vertices.size());
    auto add = [&nbr](int a, int b) {
        auto& list = nbr[a];
        for (int v : list)
            if (v == b) return;
        list.push_back(b);
    };
    for (const auto& t : mesh.faces) {
        add(t[0], t[1]);
        add(t[1], t[0]);
        add(t[1], t[2]);
        add(t[2], t[1]);
        add(t[2], t[0]);
        add(t[0], t[2]);
    }
    return nbr;
}

// Uniform Laplacian smoothing: v <- v + lambda * (centroid(1-ring) - v),
// repeated `iters` times. Connectivity is untouched; normals are recomputed.
inline void laplacian_smooth(TriMesh& mesh, double lambda, int iters) {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("laplacian_smooth: lambda must be in [0, 1]");
    if (iters < 0) throw std::invalid_argument("laplacian_smooth: iters must be >= 0");
    if (iters == 0 || lambda == 0.0 || mesh.vertices.empty()) {
        if (mesh.normals.size() != mesh.vertices.size()) compute_vertex_normals(mesh);
        return;
    }
    const auto nbr = vertex_neighbors(mesh);
    std::vector<Vec3> next(mesh.vertices.size());
    for (int it = 0; it < iters; ++it) {
        for (size_t v = 0; v < mesh.vertices.size(); ++v) {
            const auto& ring = nbr[v];
            if (ring.empty()) {
                next[v] = mesh.vertices[v];
                continue;
            }
            Vec3 centroid{0, 0, 0};
            for (int u : ring) centroid += mesh.vertices[u];
            centroid /= static_cast<double>(ring.size());
            next[v] = mesh.vertices[v] + lambda * (centroid - mesh.vertices[v]);
        }
        mesh.vertices.swap(next);
    }
    compute_vertex_normals(mesh);
}

// ---------------------------------------------------------------------------
// Primitives

// Axis-aligned box with duplicated per-face vertices so that interpolated
// normals reproduce the exact face normal everywhere. 24 vertices, 12 faces.
inline TriMesh make_box_mesh(const Vec3& center, const Vec3& half) {
    TriMesh mesh;
    const int axes[6][2] = {{1, 2}, {2, 0}, {0, 1}, {2, 1}, {0, 2}, {1, 0}};
    for (int face = 0; face < 6; ++face) {
        const int axis = face % 3;
        const double sign = face < 3 ? 1.0 : -1.0;
        Vec3 n{0, 0, 0};
        n[axis] = sign;
        // (a, b) axes are chosen per face so corners wind CCW seen from outside.
        const int a = axes[face][0];
        const int b = axes[face][1];
        const int base = static_cast<int>(mesh.vertices.size());
        for (int corner = 0; corner < 4; ++corner) {
            const double sa = (corner == 1 || corner == 2) ? 1.0 : -1.0;
            const double sb = (corner == 2 || corner == 3) ? 1.0 : -1.0;
            Vec3 p = center;
            p[axis] += sign * half[axis];
            p[a] += sa * half[a];
            p[b] += sb * half[b];
            mesh.vertices.push_back(p);
            mesh.normals.push_back(n);
        }
        mesh.faces.push_back({base, base + 1, base + 2});
        mesh.faces.push_back({base, base + 2, base + 3});
    }
    return mesh;
}

inline TriMesh make_cube_mesh(const Vec3& center, double half_extent) {
    return make_box_mesh(center, {half_extent, half_extent, half_extent});
}

// Welded 8-vertex cube. Face diagonals all run through the even-parity
// corners, which makes the area-weighted vertex normals exactly
// normalize(+-1, +-1, +-1) at every corner.
inline TriMesh make_welded_cube_mesh(const Vec3& center, double half_extent) {
    TriMesh mesh;
    for (int c = 0; c < 8; ++c) {
        const Vec3 s{(c & 1) ? 1.0 : -1.0, (c & 2) ? 1.0 : -1.0, (c & 4) ? 1.0 : -1.0};
        mesh.vertices.push_back(center + s * half_extent);
    }
    // Quads (outward winding), split along the diagonal joining even-parity corners.
    const int quads[6][4] = {
        {1, 3, 7, 5},  // +x
        {2, 6, 7, 3},  // +y
        {4, 5, 7, 6},  // +z
        {0, 4, 6, 2},  // -x
        {0, 1, 5, 4},  // -y
        {0, 2, 3, 1},  // -z
    };
    auto parity = [](int v) { return ((v & 1) ^ ((v >> 1) & 1) ^ ((v >> 2) & 1)); };
    for (const auto& q : quads) {
        // Rotate so the first corner has even parity; then split 0-2.
        int start = parity(q[0]) == 0 ? 0 : 1;
        const int v0 = q[start % 4], v1 = q[(start + 1) % 4], v2 = q[(start + 2) % 4], v3 = q[(start + 3) % 4];
        mesh.faces.push_back({v0, v1, v2});
        mesh.faces.push_back({v0, v2, v3});
    }
    compute_vertex_normals(mesh);
    return mesh;
}

// Icosphere by repeated 4-way subdivision of an icosahedron; vertices are
// projected to the sphere so vertex normals are exactly radial.
inline TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
    if (subdivisions < 0) throw std::invalid_argument("make_icosphere: subdivisions must be >= 0");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v = normalize(v);
    std::vector<std::array<int, 3>> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back(normalize(verts[a] + verts[b]));
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces.swap(next);
    }
    TriMesh mesh;
    mesh.vertices.reserve(verts.size());
    mesh.normals.reserve(verts.size());
    for (const auto& v : verts) {
        mesh.vertices.push_back(center + v * radius);
        mesh.normals.push_back(v);
    }
    mesh.faces = std::move(faces);
    return mesh;
}

// ---------------------------------------------------------------------------
// OBJ I/O: `v`, `vn` and `f v//vn` records, 1-based indices.

inline void save_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[256];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& n : mesh.normals) {
        std::snprintf(buf, sizeof(buf), "vn %.17g %.17g %.17g\n", n.x, n.y, n.z);
        out << buf;
    }
    for (const auto& f : mesh.faces) {
        std::snprintf(buf, sizeof(buf), "f %d//%d %d//%d %d//%d\n", f[0] + 1, f[0] + 1, f[1] + 1, f[1] + 1, f[2] + 1,
                      f[2] + 1);
        out << buf;
    }
    if (!out) throw std::runtime_error("short write: " + path);
}

inline TriMesh parse_obj(std::istream& in, const std::string& origin) {
    TriMesh mesh;
    std::vector<Vec3> file_normals;
    std::string line;
    int line_no = 0;
    bool normals_match_vertices = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string tag;
        row >> tag;
        if (tag == "v") {
            Vec3 p;
            if (!(row >> p.x >> p.y >> p.z))
                throw std::runtime_error(origin + " line " + std::to_string(line_no) + ": malformed vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "vn") {
            Vec3 n;
            if (!(row >> n.x >> n.y >> n.z))
                throw std::runtime_error(origin + " line " + std::to_string(line_no) + ": malformed normal");
            file_normals.push_back(normalize(n));
        } else if (tag == "f") {
            std::array<int, 3> vi{};
            std::string corner;
            for (int c = 0; c < 3; ++c) {
                if (!(row >> corner))
                    throw std::runtime_error(origin + " line " + std::to_string(line_no) + ": face needs 3 corners");
                int v = 0, n = 0;
                if (std::sscanf(corner.c_str(), "%d//%d", &v, &n) == 2) {
                    if (v != n) normals_match_vertices = false;
                } else if (std::sscanf(corner.c_str(), "%d/%*d/%d", &v, &n) == 2) {
                    if (v != n) normals_match_vertices = false;
                } else if (std::sscanf(corner.c_str(), "%d", &v) == 1) {
                    normals_match_vertices = file_normals.empty() && normals_match_vertices;
                } else {
                    throw std::runtime_error(origin + " line " + std::to_string(line_no) + ": malformed face corner '" +
                                             corner + "'");
                }
                if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v + 1;
                if (v < 1 || v > static_cast<int>(mesh.vertices.size()))
                    throw std::runtime_error(origin + " line " + std::to_string(line_no) + ": vertex index out of range");
                vi[c] = v - 1;
            }
            std::string extra;
            if (row >> extra)
                throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                                         ": only triangle faces are supported");
            mesh.faces.push_back(vi);
        }
        // Other tags (o, g, s, usemtl, ...) are ignored.
    }
    if (normals_match_vertices && file_normals.size() == mesh.vertices.size() && !file_normals.empty()) {
        mesh.normals = std::move(file_normals);
    } else {
        compute_vertex_normals(mesh);
    }
    return mesh;
}

inline TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return parse_obj(in, path);
}

}  // namespace refray
