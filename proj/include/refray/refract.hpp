#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refray/bvh.hpp"
#include "refray/camera.hpp"
#include "refray/rng.hpp"
#include "refray/vec.hpp"

namespace refray {

enum class EventKind { Refract, TIR };

// One interface interaction. cos_theta1 is the incidence cosine -n.l;
// cos_theta2 is the refraction cosine (0 for total internal reflection).
struct RefractionEvent {
    EventKind kind = EventKind::Refract;
    double cos_theta1 = 1.0;
    double cos_theta2 = 1.0;
    double n1 = 1.0;
    double n2 = 1.0;
    Vec3 out_dir{0, 0, 1};
    Vec3 point;  // interface position, filled by build_path
};

// Bends unit direction l at an interface with unit normal n (facing the
// incoming ray, n.l < 0), from refractive index n1 into n2. When the
// refraction radicand goes negative the ray reflects instead (total internal
// reflection, possible only for n1 > n2).
inline RefractionEvent refract_dir(const Vec3& l, const Vec3& n, double n1, double n2) {
    if (std::abs(norm(l) - 1.0) > 1e-6) throw std::invalid_argument("refract_dir: incoming direction is not unit");
    if (std::abs(norm(n) - 1.0) > 1e-6) throw std::invalid_argument("refract_dir: normal is not unit");
    const double ndotl = dot(n, l);
    if (ndotl >= 0.0) throw std::invalid_argument("refract_dir: normal must face the incoming ray (n.l < 0)");
    if (n1 < 1.0 || n2 < 1.0) throw std::invalid_argument("refract_dir: refractive indices must be >= 1");

    RefractionEvent ev;
    ev.n1 = n1;
    ev.n2 = n2;
    ev.cos_theta1 = -ndotl;
    const double eta = n1 / n2;
    const double radicand = 1.0 - eta * eta * (1.0 - ev.cos_theta1 * ev.cos_theta1);
    if (radicand < 0.0) {
        ev.kind = EventKind::TIR;
        ev.cos_theta2 = 0.0;
        ev.out_dir = l + 2.0 * ev.cos_theta1 * n;  // mirror reflection
    } else {
        ev.kind = EventKind::Refract;
        ev.cos_theta2 = std::sqrt(radicand);
        ev.out_dir = normalize(eta * l + (eta * ev.cos_theta1 - ev.cos_theta2) * n);
    }
    return ev;
}

enum class PathClass { Miss, Through, TIRExit };

struct PathSegment {
    Vec3 origin;
    Vec3 direction;  // unit
    double length = 0.0;
};

// Piecewise-linear camera ray: up to three segments separated by the two
// interface events at the front and rear surfaces of the transparent object.
struct RayPath {
    std::vector<PathSegment> segments;
    std::vector<RefractionEvent> events;
    PathClass classification = PathClass::Miss;

    double total_length() const {
        double s = 0.0;
        for (const auto& seg : segments) s += seg.length;
        return s;
    }

    // Point at arc length s along the polyline (extends past the last segment).
    Vec3 point_at(double s) const {
        double acc = 0.0;
        for (size_t i = 0; i < segments.size(); ++i) {
            const bool last = i + 1 == segments.size();
            if (s <= acc + segments[i].length || last)
                return segments[i].origin + segments[i].direction * (s - acc);
            acc += segments[i].length;
        }
        return {};
    }
};

inline RayPath straight_path(const Ray& ray, double t_far) {
    RayPath path;
    path.segments.push_back({ray.origin, ray.direction, t_far});
    path.classification = PathClass::Miss;
    return path;
}

// Traces a camera ray against the hull with the two-bounce cap: refract at
// the front surface (air -> medium), march to the rear surface, refract or
// reflect there (medium -> air), then continue straight. No interface tests
// happen after the second event. Arc length is preserved: the segment
// lengths always sum to t_far.
inline RayPath build_path(const Ray& ray, const AccelMesh& accel, double ior, double t_far) {
    if (ior < 1.0) throw std::invalid_argument("build_path: ior must be >= 1");
    if (!(t_far > 0.0)) throw std::invalid_argument("build_path: t_far must be > 0");
    const double t_min = accel.default_t_min();

    const auto front = accel.intersect(ray, t_min);
    if (!front || front->t >= t_far) return straight_path(ray, t_far);

    RayPath path;
    path.segments.push_back({ray.origin, ray.direction, front->t});

    RefractionEvent ev1 = refract_dir(ray.direction, front->normal, 1.0, ior);
    ev1.point = front->point;
    path.events.push_back(ev1);

    const Ray inner{front->point, ev1.out_dir};
    double remaining = t_far - front->t;
    const auto rear = accel.intersect(inner, t_min);
    if (!rear || rear->t >= remaining) {
        // Degenerate hull: the refracted ray never finds a rear surface.
        path.segments.push_back({inner.origin, inner.direction, remaining});
        path.classification = PathClass::Through;
        return path;
    }

    path.segments.push_back({inner.origin, inner.direction, rear->t});
    RefractionEvent ev2 = refract_dir(inner.direction, rear->normal, ior, 1.0);
    ev2.point = rear->point;
    path.events.push_back(ev2);
    remaining -= rear->t;
    path.segments.push_back({rear->point, ev2.out_dir, remaining});
    path.classification = ev2.kind == EventKind::TIR ? PathClass::TIRExit : PathClass::Through;
    return path;
}

struct SamplePoint {
    Vec3 position;
    Vec3 direction;  // direction of the containing segment
    double delta = 0.0;
};

// Uniform arc-length sampling of the clipped window [t_near, t_far]: `count`
// equal sub-intervals sampled at their midpoints (or jittered within each
// sub-interval when an rng is supplied). Every sample, including the last,
// carries delta = (t_far - t_near) / count.
inline void sample_path(const RayPath& path, double t_near, double t_far, int count, std::vector<SamplePoint>& out,
                        Pcg32* jitter = nullptr) {
    if (count < 2) throw std::invalid_argument("sample_path: count must be >= 2");
    if (!(t_far > t_near) || t_near < 0.0) throw std::invalid_argument("sample_path: need 0 <= t_near < t_far");
    const double delta = (t_far - t_near) / count;

    out.clear();
    out.reserve(static_cast<size_t>(count));
    size_t seg = 0;
    double seg_start = 0.0;  // arc length where segments[seg] begins
    for (int i = 0; i < count; ++i) {
        const double offset = jitter ? jitter->next_double() : 0.5;
        const double s = t_near + (i + offset) * delta;
        while (seg + 1 < path.segments.size() && s > seg_start + path.segments[seg].length) {
            seg_start += path.segments[seg].length;
            ++seg;
        }
        const PathSegment& segment = path.segments[seg];
        out.push_back({segment.origin + segment.direction * (s - seg_start), segment.direction, delta});
    }
}

inline std::vector<SamplePoint> sample_path(const RayPath& path, double t_near, double t_far, int count,
                                            Pcg32* jitter = nullptr) {
    std::vector<SamplePoint> out;
    sample_path(path, t_near, t_far, count, out, jitter);
    return out;
}

inline const char* to_string(EventKind kind) { return kind == EventKind::Refract ? "refract" : "tir"; }
inline const char* to_string(PathClass c) {
    switch (c) {
        case PathClass::Miss: return "miss";
        case PathClass::Through: return "through";
        default: return "tir_exit";
    }
}

// Debug CSV: one row per segment, with the event that produced it (if any).
inline void write_path_csv(std::ostream& os, const std::vector<RayPath>& paths) {
    os << "ray_id,segment,origin_x,origin_y,origin_z,dir_x,dir_y,dir_z,length,event_kind,cos_theta1,cos_theta2\n";
    char buf[512];
    for (size_t r = 0; r < paths.size(); ++r) {
        const RayPath& path = paths[r];
        for (size_t s = 0; s < path.segments.size(); ++s) {
            const auto& seg = path.segments[s];
            std::string event = "none";
            std::string c1 = "", c2 = "";
            if (s > 0 && s - 1 < path.events.size()) {
                const auto& ev = path.events[s - 1];
                event = to_string(ev.kind);
                std::snprintf(buf, sizeof(buf), "%.9g", ev.cos_theta1);
                c1 = buf;
                std::snprintf(buf, sizeof(buf), "%.9g", ev.cos_theta2);
                c2 = buf;
            }
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s,%s,%s\n", r, s,
                          seg.origin.x, seg.origin.y, seg.origin.z, seg.direction.x, seg.direction.y, seg.direction.z,
                          seg.length, event.c_str(), c1.c_str(), c2.c_str());
            os << buf;
        }
    }
}

}  // namespace refray
