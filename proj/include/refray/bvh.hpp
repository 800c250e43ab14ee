#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "refray/camera.hpp"
#include "refray/mesh.hpp"
#include "refray/vec.hpp"

namespace refray {

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void grow(const Vec3& p) {
        lo = cmin(lo, p);
        hi = cmax(hi, p);
    }
    void grow(const Aabb& b) {
        lo = cmin(lo, b.lo);
        hi = cmax(hi, b.hi);
    }
    Vec3 center() const { return (lo + hi) * 0.5; }
    double diagonal() const { return norm(hi - lo); }

    // Slab test against [t_min, t_max].
    bool hit(const Ray& ray, const Vec3& inv_dir, double t_min, double t_max) const {
        for (int a = 0; a < 3; ++a) {
            if (std::isinf(inv_dir[a])) {  // axis-parallel: 0 * inf would poison the interval
                if (ray.origin[a] < lo[a] || ray.origin[a] > hi[a]) return false;
                continue;
            }
            double t0 = (lo[a] - ray.origin[a]) * inv_dir[a];
            double t1 = (hi[a] - ray.origin[a]) * inv_dir[a];
            if (inv_dir[a] < 0.0) std::swap(t0, t1);
            t_min = t0 > t_min ? t0 : t_min;
            t_max = t1 < t_max ? t1 : t_max;
            if (t_max < t_min) return false;
        }
        return true;
    }
};

struct SurfaceHit {
    double t = 0.0;
    Vec3 point;
    Vec3 normal;          // interpolated vertex normal, flipped to face the ray
    int face = -1;
    bool entering = true; // geometric normal . ray direction < 0
    double bary_u = 0.0, bary_v = 0.0;
};

struct IntersectStats {
    size_t triangle_tests = 0;
    size_t node_visits = 0;
};

namespace detail {

// Moller-Trumbore. Returns t > 0 hits along with barycentrics (u toward v1,
// v toward v2).
inline bool ray_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1, const Vec3& v2, double& t, double& u,
                         double& v) {
    constexpr double kEps = 1e-12;
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 pvec = cross(ray.direction, e2);
    const double det = dot(e1, pvec);
    if (std::abs(det) < kEps) return false;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = ray.origin - v0;
    u = dot(tvec, pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qvec = cross(tvec, e1);
    v = dot(ray.direction, qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    t = dot(e2, qvec) * inv_det;
    return t > 0.0;
}

}  // namespace detail

// Triangle mesh wrapped in a bounding-volume hierarchy for nearest-hit ray
// queries. Immutable after build; queries are safe from any number of threads.
class AccelMesh {
public:
    explicit AccelMesh(TriMesh mesh) : mesh_(std::move(mesh)) {
        if (mesh_.faces.empty()) throw std::invalid_argument("build_accel: empty mesh");
        if (mesh_.normals.size() != mesh_.vertices.size()) compute_vertex_normals(mesh_);
        build();
    }

    const TriMesh& mesh() const { return mesh_; }
    const Aabb& bounds() const { return nodes_[0].box; }
    double scene_diagonal() const { return nodes_[0].box.diagonal(); }
    double default_t_min() const { return 1e-4 * scene_diagonal(); }

    // Nearest hit with t > t_min, or nullopt.
    std::optional<SurfaceHit> intersect(const Ray& ray, double t_min, IntersectStats* stats = nullptr) const {
        const Vec3 inv_dir{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
        double best_t = std::numeric_limits<double>::infinity();
        int best_face = -1;
        double best_u = 0.0, best_v = 0.0;

        int stack[128];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& node = nodes_[stack[--sp]];
            if (stats) ++stats->node_visits;
            if (!node.box.hit(ray, inv_dir, t_min, best_t)) continue;
            if (node.count > 0) {
                for (int n = 0; n < node.count; ++n) {
                    const int f = tri_order_[static_cast<size_t>(node.first) + n];
                    if (stats) ++stats->triangle_tests;
                    const auto& tri = mesh_.faces[f];
                    double t, u, v;
                    if (detail::ray_triangle(ray, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                             mesh_.vertices[tri[2]], t, u, v) &&
                        t > t_min && t < best_t) {
                        best_t = t;
                        best_face = f;
                        best_u = u;
                        best_v = v;
                    }
                }
            } else {
                stack[sp++] = node.first;
                stack[sp++] = node.first + 1;
            }
        }
        if (best_face < 0) return std::nullopt;

        const auto& tri = mesh_.faces[best_face];
        SurfaceHit hit;
        hit.t = best_t;
        hit.face = best_face;
        hit.bary_u = best_u;
        hit.bary_v = best_v;
        hit.point = ray.origin + ray.direction * best_t;
        const Vec3 geom_n = mesh_.face_normal(static_cast<size_t>(best_face));
        hit.entering = dot(geom_n, ray.direction) < 0.0;
        Vec3 n = normalize(mesh_.normals[tri[0]] * (1.0 - best_u - best_v) + mesh_.normals[tri[1]] * best_u +
                           mesh_.normals[tri[2]] * best_v);
        if (dot(n, ray.direction) > 0.0) n = -n;  // always face the incoming ray
        hit.normal = n;
        return hit;
    }

    std::optional<SurfaceHit> intersect(const Ray& ray) const { return intersect(ray, default_t_min()); }

private:
    struct Node {
        Aabb box;
        int first = 0;  // child index when internal, offset into tri_order_ when leaf
        int count = 0;  // 0 for internal nodes
    };

    void build() {
        const size_t n_faces = mesh_.faces.size();
        tri_order_.resize(n_faces);
        std::iota(tri_order_.begin(), tri_order_.end(), 0);

        std::vector<Aabb> face_box(n_faces);
        std::vector<Vec3> face_centroid(n_faces);
        for (size_t f = 0; f < n_faces; ++f) {
            const auto& tri = mesh_.faces[f];
            face_box[f].grow(mesh_.vertices[tri[0]]);
            face_box[f].grow(mesh_.vertices[tri[1]]);
            face_box[f].grow(mesh_.vertices[tri[2]]);
            face_centroid[f] = face_box[f].center();
        }

        nodes_.clear();
        nodes_.reserve(2 * n_faces);
        nodes_.push_back(Node{});
        build_node(0, 0, static_cast<int>(n_faces), face_box, face_centroid);
    }

    void build_node(int node_idx, int begin, int end, const std::vector<Aabb>& face_box,
                    const std::vector<Vec3>& face_centroid) {
        Aabb box;
        Aabb centroid_box;
        for (int n = begin; n < end; ++n) {
            box.grow(face_box[tri_order_[n]]);
            centroid_box.grow(face_centroid[tri_order_[n]]);
        }
        nodes_[node_idx].box = box;

        const int count = end - begin;
        constexpr int kLeafSize = 4;
        const Vec3 extent = centroid_box.hi - centroid_box.lo;
        if (count <= kLeafSize || max_component(extent) <= 0.0) {
            nodes_[node_idx].first = begin;
            nodes_[node_idx].count = count;
            return;
        }

        int axis = 0;
        if (extent.y > extent.x) axis = 1;
        if (extent.z > extent[axis]) axis = 2;
        const double split = centroid_box.center()[axis];

        auto mid_it = std::partition(tri_order_.begin() + begin, tri_order_.begin() + end,
                                     [&](int f) { return face_centroid[f][axis] < split; });
        int mid = static_cast<int>(mid_it - tri_order_.begin());
        if (mid == begin || mid == end) {  // degenerate split: fall back to median
            mid = begin + count / 2;
            std::nth_element(tri_order_.begin() + begin, tri_order_.begin() + mid, tri_order_.begin() + end,
                             [&](int a, int b) { return face_centroid[a][axis] < face_centroid[b][axis]; });
        }

        const int left = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{});
        nodes_.push_back(Node{});
        nodes_[node_idx].first = left;
        nodes_[node_idx].count = 0;
        build_node(left, begin, mid, face_box, face_centroid);
        build_node(left + 1, mid, end, face_box, face_centroid);
    }

    TriMesh mesh_;
    std::vector<Node> nodes_;
    std::vector<int> tri_order_;
};

inline AccelMesh build_accel(TriMesh mesh) { return AccelMesh(std::move(mesh)); }

inline std::optional<SurfaceHit> intersect(const AccelMesh& accel, const Ray& ray, double t_min,
                                           IntersectStats* stats = nullptr) {
    return accel.intersect(ray, t_min, stats);
}

}  // namespace refray
