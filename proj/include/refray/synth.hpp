#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "refray/camera.hpp"
#include "refray/colmap.hpp"
#include "refray/image.hpp"
#include "refray/mesh.hpp"
#include "refray/parallel.hpp"
#include "refray/refract.hpp"
#include "refray/vec.hpp"

namespace refray {

// Opaque checkerboard backdrop. v axis = normal x u_axis.
struct Checkerboard {
    Vec3 origin{0, 0, -1};
    Vec3 normal{0, 0, 1};
    Vec3 u_axis{1, 0, 0};
    double cell = 0.25;
    Vec3 color_a{0.8, 0.1, 0.1};
    Vec3 color_b{0.9, 0.9, 0.9};

    Vec3 color_at(const Vec3& p) const {
        const Vec3 rel = p - origin;
        const Vec3 v_axis = cross(normal, u_axis);
        const double u = dot(rel, u_axis) / cell;
        const double v = dot(rel, v_axis) / cell;
        const long long parity = static_cast<long long>(std::floor(u)) + static_cast<long long>(std::floor(v));
        return (parity % 2 + 2) % 2 == 0 ? color_a : color_b;
    }
};

enum class SolidKind { Cube, Sphere };

// Parametric glass solid over a checkerboard backdrop; the analytic ground
// truth for the mesh-based pipeline.
struct SceneSpec {
    SolidKind solid = SolidKind::Cube;
    Vec3 center{0, 0, 0};
    double half_extent = 0.4;  // cube
    double radius = 0.5;       // sphere
    double ior = 1.5;
    std::optional<Checkerboard> background;
    Vec3 ambient{0.5, 0.5, 0.5};

    void validate() const {
        if (ior < 1.0) throw std::invalid_argument("scene: ior must be >= 1");
        if (solid == SolidKind::Cube && !(half_extent > 0.0))
            throw std::invalid_argument("scene: cube half_extent must be > 0");
        if (solid == SolidKind::Sphere && !(radius > 0.0)) throw std::invalid_argument("scene: sphere radius must be > 0");
    }

    double solid_extent() const { return solid == SolidKind::Cube ? half_extent * std::sqrt(3.0) : radius; }

    bool inside_solid(const Vec3& p) const {
        const Vec3 d = p - center;
        if (solid == SolidKind::Cube)
            return std::abs(d.x) <= half_extent && std::abs(d.y) <= half_extent && std::abs(d.z) <= half_extent;
        return norm2(d) <= radius * radius;
    }
};

namespace detail {

struct SolidHit {
    double t = 0.0;
    Vec3 normal;  // outward geometric normal at the hit
};

// Nearest analytic intersection with t > t_min. Works from outside and
// inside (slab/quadratic second root).
inline std::optional<SolidHit> intersect_solid(const SceneSpec& scene, const Ray& ray, double t_min) {
    if (scene.solid == SolidKind::Sphere) {
        const Vec3 oc = ray.origin - scene.center;
        const double b = dot(oc, ray.direction);
        const double c = norm2(oc) - scene.radius * scene.radius;
        const double disc = b * b - c;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        double t = -b - sq;
        if (t <= t_min) t = -b + sq;
        if (t <= t_min) return std::nullopt;
        const Vec3 p = ray.origin + ray.direction * t;
        return SolidHit{t, normalize(p - scene.center)};
    }

    // Axis-aligned cube slabs.
    double t_enter = -1e300, t_exit = 1e300;
    int enter_axis = -1, exit_axis = -1;
    double enter_sign = 0.0, exit_sign = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double lo = scene.center[a] - scene.half_extent;
        const double hi = scene.center[a] + scene.half_extent;
        const double d = ray.direction[a];
        if (std::abs(d) < 1e-15) {
            if (ray.origin[a] < lo || ray.origin[a] > hi) return std::nullopt;
            continue;
        }
        double t0 = (lo - ray.origin[a]) / d;
        double t1 = (hi - ray.origin[a]) / d;
        double sign0 = -1.0, sign1 = 1.0;
        if (t0 > t1) {
            std::swap(t0, t1);
            std::swap(sign0, sign1);
        }
        if (t0 > t_enter) {
            t_enter = t0;
            enter_axis = a;
            enter_sign = sign0;
        }
        if (t1 < t_exit) {
            t_exit = t1;
            exit_axis = a;
            exit_sign = sign1;
        }
    }
    if (t_enter > t_exit) return std::nullopt;
    double t;
    int axis;
    double sign;
    if (t_enter > t_min) {
        t = t_enter;
        axis = enter_axis;
        sign = enter_sign;
    } else if (t_exit > t_min) {
        t = t_exit;
        axis = exit_axis;
        sign = exit_sign;
    } else {
        return std::nullopt;
    }
    if (axis < 0) return std::nullopt;
    Vec3 n{0, 0, 0};
    n[axis] = sign;
    return SolidHit{t, n};
}

}  // namespace detail

// Analytic two-bounce path through the solid, with the same refraction math
// and the same bounce cap as the mesh pipeline.
struct OraclePath {
    bool hit_solid = false;
    std::vector<RefractionEvent> events;
    Ray exit_ray;  // final straight ray after <= 2 events
    PathClass classification = PathClass::Miss;
};

inline OraclePath oracle_trace_path(const SceneSpec& scene, const Ray& ray) {
    constexpr double kTmin = 1e-9;
    OraclePath out;
    out.exit_ray = ray;

    const auto front = detail::intersect_solid(scene, ray, kTmin);
    if (!front) return out;
    out.hit_solid = true;

    Vec3 n1 = front->normal;
    if (dot(n1, ray.direction) > 0.0) n1 = -n1;
    RefractionEvent ev1 = refract_dir(ray.direction, n1, 1.0, scene.ior);
    const Vec3 x1 = ray.origin + ray.direction * front->t;
    ev1.point = x1;
    out.events.push_back(ev1);

    const Ray inner{x1, ev1.out_dir};
    const auto rear = detail::intersect_solid(scene, inner, 1e-7 * std::max(1.0, scene.solid_extent()));
    if (!rear) {  // grazing entry; continue straight
        out.exit_ray = inner;
        out.classification = PathClass::Through;
        return out;
    }
    Vec3 n2 = rear->normal;
    if (dot(n2, inner.direction) > 0.0) n2 = -n2;
    RefractionEvent ev2 = refract_dir(inner.direction, n2, scene.ior, 1.0);
    const Vec3 x2 = inner.origin + inner.direction * rear->t;
    ev2.point = x2;
    out.events.push_back(ev2);
    out.exit_ray = Ray{x2, ev2.out_dir};
    out.classification = ev2.kind == EventKind::TIR ? PathClass::TIRExit : PathClass::Through;
    return out;
}

// Exact scene color for one camera ray: bend through the solid (two bounces
// max), then look up the checkerboard; rays that never reach the backdrop
// return the ambient color.
inline Vec3 oracle_trace(const SceneSpec& scene, const Ray& ray) {
    const OraclePath path = oracle_trace_path(scene, ray);
    if (!scene.background) return scene.ambient;
    const Checkerboard& board = *scene.background;
    const double denom = dot(board.normal, path.exit_ray.direction);
    if (std::abs(denom) < 1e-12) return scene.ambient;
    const double t = dot(board.origin - path.exit_ray.origin, board.normal) / denom;
    if (t <= 0.0) return scene.ambient;
    return board.color_at(path.exit_ray.origin + path.exit_ray.direction * t);
}

// Camera rig: look-at cameras on (azimuth, elevation) directions at a fixed
// distance. World y is up; azimuth 0 looks down -z toward the backdrop.
struct RigSpec {
    std::vector<std::pair<double, double>> directions;  // degrees
    double distance = 3.3;
    Vec3 look_at{0, 0, 0};
    Intrinsics intrinsics{96, 72, 130.0, 130.0, 48.0, 36.0};
    int supersample = 3;  // oracle rays per pixel axis for anti-aliased images

    size_t n_views() const { return directions.size(); }

    Vec3 camera_position(size_t i) const {
        const double az = radians(directions[i].first);
        const double el = radians(directions[i].second);
        return look_at + distance * Vec3{std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)};
    }

    void validate() const {
        if (directions.size() < 2) throw std::invalid_argument("rig: need at least 2 views");
        if (!(distance > 0.0)) throw std::invalid_argument("rig: distance must be > 0");
        if (supersample < 1) throw std::invalid_argument("rig: supersample must be >= 1");
        intrinsics.validate();
        for (size_t i = 0; i < directions.size(); ++i)
            for (size_t j = i + 1; j < directions.size(); ++j)
                if (norm(camera_position(i) - camera_position(j)) < 1e-9)
                    throw std::invalid_argument("rig: coincident cameras");
    }
};

// Evenly spaced azimuth arc, cycling through the given elevations.
inline RigSpec make_arc_rig(int n_views, double az_min_deg, double az_max_deg, std::vector<double> elevations_deg) {
    RigSpec rig;
    if (elevations_deg.empty()) elevations_deg = {15.0};
    for (int i = 0; i < n_views; ++i) {
        const double t = n_views == 1 ? 0.5 : static_cast<double>(i) / (n_views - 1);
        const double az = az_min_deg + (az_max_deg - az_min_deg) * t;
        rig.directions.emplace_back(az, elevations_deg[static_cast<size_t>(i) % elevations_deg.size()]);
    }
    return rig;
}

// Full ring at one elevation, optionally capped with two polar views.
inline RigSpec make_ring_rig(int n_ring, double elevation_deg, bool add_poles) {
    RigSpec rig;
    for (int i = 0; i < n_ring; ++i) rig.directions.emplace_back(360.0 * i / n_ring, elevation_deg);
    if (add_poles) {
        rig.directions.emplace_back(0.0, 89.9);  // just off the pole so look-at up stays stable
        rig.directions.emplace_back(0.0, -89.9);
    }
    return rig;
}

inline TriMesh make_solid_mesh(const SceneSpec& scene, int sphere_subdivisions = 5) {
    return scene.solid == SolidKind::Cube ? make_cube_mesh(scene.center, scene.half_extent)
                                          : make_icosphere(scene.center, scene.radius, sphere_subdivisions);
}

// In-memory dataset: views with oracle images and exact masks, the scene
// bounding box for the radiance field, and the shared sampling window.
struct Dataset {
    std::vector<View> views;
    std::vector<bool> is_test;  // every 10th view held out
    Vec3 bbox_min, bbox_max;
    double t_near = 0.1, t_far = 10.0;
    SceneSpec scene;
    RigSpec rig;

    std::vector<View> split(bool test) const {
        std::vector<View> out;
        for (size_t i = 0; i < views.size(); ++i)
            if (is_test[i] == test) out.push_back(views[i]);
        return out;
    }
};

namespace detail {

inline Ray corner_ray(const Intrinsics& intr, const Pose& pose, double u, double v) {
    const Vec3 dir_cam{(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0};
    return Ray{pose.center(), normalize(transpose(pose.rotation()) * dir_cam)};
}

}  // namespace detail

// Renders every view with the analytic oracle and derives the scene bounding
// box and sampling window. Deterministic: no random numbers are involved.
inline Dataset generate_dataset(const SceneSpec& scene, const RigSpec& rig, unsigned threads = 1) {
    scene.validate();
    rig.validate();
    if (rig.intrinsics.width < 32 || rig.intrinsics.height < 32)
        throw std::invalid_argument("generate_dataset: resolution must be at least 32x32");

    // Solid strictly between cameras and backdrop.
    if (scene.background) {
        const Checkerboard& board = *scene.background;
        const double solid_lo = dot(scene.center - board.origin, board.normal) - scene.solid_extent();
        if (solid_lo <= 0.0) throw std::invalid_argument("generate_dataset: solid touches the backdrop plane");
        for (size_t i = 0; i < rig.n_views(); ++i) {
            const double cam_d = dot(rig.camera_position(i) - board.origin, board.normal);
            if (cam_d <= dot(scene.center - board.origin, board.normal) + scene.solid_extent())
                throw std::invalid_argument("generate_dataset: camera not in front of the solid");
        }
    }

    Dataset ds;
    ds.scene = scene;
    ds.rig = rig;
    const int W = rig.intrinsics.width;
    const int H = rig.intrinsics.height;
    const int ss = rig.supersample;

    for (size_t i = 0; i < rig.n_views(); ++i) {
        View view;
        view.intrinsics = rig.intrinsics;
        view.pose = look_at_pose(rig.camera_position(i), rig.look_at);
        char name[64];
        std::snprintf(name, sizeof(name), "view_%03zu.png", i);
        view.name = name;

        Image img(W, H);
        MaskImage mask(W, H);
        parallel_for(static_cast<size_t>(H), threads, [&](size_t yy) {
            const int y = static_cast<int>(yy);
            for (int x = 0; x < W; ++x) {
                Vec3 acc{0, 0, 0};
                for (int sy = 0; sy < ss; ++sy)
                    for (int sx = 0; sx < ss; ++sx) {
                        const double u = x + (sx + 0.5) / ss;
                        const double v = y + (sy + 0.5) / ss;
                        acc += oracle_trace(scene, pixel_ray(view.intrinsics, view.pose, u, v));
                    }
                img.set(x, y, acc / static_cast<double>(ss * ss));
                const Ray center = pixel_ray(view.intrinsics, view.pose, x + 0.5, y + 0.5);
                mask.set(x, y, detail::intersect_solid(scene, center, 1e-9) ? 1 : 0);
            }
        });
        view.image = std::move(img);
        view.mask = std::move(mask);
        view.validate();
        ds.views.push_back(std::move(view));
        ds.is_test.push_back(i % 10 == 9);
    }

    // Scene bounds: the solid plus, when a backdrop exists, the frustum
    // footprints on it (so the field can represent everything the cameras see).
    const double margin = 0.15 * std::max(scene.solid_extent(), 0.2);
    Aabb box;
    box.grow(scene.center + Vec3{1, 1, 1} * scene.solid_extent());
    box.grow(scene.center - Vec3{1, 1, 1} * scene.solid_extent());
    if (scene.background) {
        const Checkerboard& board = *scene.background;
        for (const auto& view : ds.views) {
            const double corners[4][2] = {{0.0, 0.0},
                                          {static_cast<double>(W), 0.0},
                                          {0.0, static_cast<double>(H)},
                                          {static_cast<double>(W), static_cast<double>(H)}};
            for (const auto& c : corners) {
                const Ray r = detail::corner_ray(view.intrinsics, view.pose, c[0], c[1]);
                const double denom = dot(board.normal, r.direction);
                if (std::abs(denom) < 1e-12) continue;
                const double t = dot(board.origin - r.origin, board.normal) / denom;
                if (t <= 0.0) continue;
                const Vec3 hit = r.origin + r.direction * t;
                box.grow(hit);
                box.grow(hit - board.normal * (2.0 * margin));  // room for the density wall
            }
        }
    }
    box.lo -= Vec3{margin, margin, margin};
    box.hi += Vec3{margin, margin, margin};
    ds.bbox_min = box.lo;
    ds.bbox_max = box.hi;

    // Sampling window: cover the box (and the backdrop) from every camera.
    double t_min_all = 1e300, t_max_all = 0.0;
    for (const auto& view : ds.views) {
        const Vec3 cam = view.pose.center();
        const Vec3 fwd = transpose(view.pose.rotation()) * Vec3{0, 0, 1};
        for (int cix = 0; cix < 8; ++cix) {
            const Vec3 corner{(cix & 1) ? box.hi.x : box.lo.x, (cix & 2) ? box.hi.y : box.lo.y,
                              (cix & 4) ? box.hi.z : box.lo.z};
            const double tau = dot(corner - cam, fwd);
            t_min_all = std::min(t_min_all, tau);
            t_max_all = std::max(t_max_all, tau);
        }
    }
    ds.t_near = std::max(0.02, t_min_all * 0.97);
    ds.t_far = t_max_all * 1.08;  // slack for the longer arc length of bent paths
    return ds;
}

// ---------------------------------------------------------------------------
// On-disk layout:
//   <dir>/images/view_###.png   <dir>/masks/view_###.png
//   <dir>/cameras.txt  <dir>/images.txt  <dir>/manifest.json
//   <dir>/hull_exact.obj (analytic solid mesh)

namespace detail {

inline nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }
inline Vec3 vec_from_json(const nlohmann::json& j) { return {j.at(0), j.at(1), j.at(2)}; }

}  // namespace detail

inline void save_dataset(const std::string& dir, const Dataset& ds, int sphere_subdivisions = 5) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "masks");

    std::vector<ColmapImageRecord> records;
    for (size_t i = 0; i < ds.views.size(); ++i) {
        const View& view = ds.views[i];
        save_png((fs::path(dir) / "images" / view.name).string(), view.image);
        save_mask_png((fs::path(dir) / "masks" / view.name).string(), *view.mask);
        records.push_back({static_cast<int>(i) + 1, view.pose, 1, view.name});
    }
    {
        std::ofstream cams((fs::path(dir) / "cameras.txt").string());
        cams << write_colmap_cameras({{1, ds.views.front().intrinsics}});
        std::ofstream imgs((fs::path(dir) / "images.txt").string());
        imgs << write_colmap_images(records);
    }
    save_obj((fs::path(dir) / "hull_exact.obj").string(), make_solid_mesh(ds.scene, sphere_subdivisions));

    nlohmann::json j;
    j["scene"]["solid"] = ds.scene.solid == SolidKind::Cube ? "cube" : "sphere";
    j["scene"]["center"] = detail::vec_json(ds.scene.center);
    j["scene"]["half_extent"] = ds.scene.half_extent;
    j["scene"]["radius"] = ds.scene.radius;
    j["scene"]["ior"] = ds.scene.ior;
    j["scene"]["ambient"] = detail::vec_json(ds.scene.ambient);
    if (ds.scene.background) {
        const Checkerboard& b = *ds.scene.background;
        j["scene"]["background"] = {{"origin", detail::vec_json(b.origin)}, {"normal", detail::vec_json(b.normal)},
                                    {"u_axis", detail::vec_json(b.u_axis)}, {"cell", b.cell},
                                    {"color_a", detail::vec_json(b.color_a)}, {"color_b", detail::vec_json(b.color_b)}};
    }
    j["rig"]["distance"] = ds.rig.distance;
    j["rig"]["look_at"] = detail::vec_json(ds.rig.look_at);
    j["rig"]["supersample"] = ds.rig.supersample;
    j["rig"]["directions"] = ds.rig.directions;
    j["bbox_min"] = detail::vec_json(ds.bbox_min);
    j["bbox_max"] = detail::vec_json(ds.bbox_max);
    j["t_near"] = ds.t_near;
    j["t_far"] = ds.t_far;
    nlohmann::json views = nlohmann::json::array();
    for (size_t i = 0; i < ds.views.size(); ++i)
        views.push_back({{"name", ds.views[i].name}, {"split", ds.is_test[i] ? "test" : "train"}});
    j["views"] = views;

    std::ofstream manifest((fs::path(dir) / "manifest.json").string());
    manifest << j.dump(2) << "\n";
    if (!manifest) throw std::runtime_error("failed to write manifest: " + dir);
}

// Loads a dataset directory back: poses from the COLMAP files, geometry and
// split from the manifest.
inline Dataset load_dataset(const std::string& dir, bool load_images = true, bool load_masks = true) {
    namespace fs = std::filesystem;
    auto read_text = [](const fs::path& p) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open: " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const auto colmap_views = load_colmap(read_text(fs::path(dir) / "cameras.txt"), read_text(fs::path(dir) / "images.txt"));

    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("cannot open manifest.json in " + dir);
    nlohmann::json j = nlohmann::json::parse(mf);

    Dataset ds;
    ds.bbox_min = detail::vec_from_json(j.at("bbox_min"));
    ds.bbox_max = detail::vec_from_json(j.at("bbox_max"));
    ds.t_near = j.at("t_near");
    ds.t_far = j.at("t_far");
    ds.scene.solid = j.at("scene").at("solid") == "cube" ? SolidKind::Cube : SolidKind::Sphere;
    ds.scene.center = detail::vec_from_json(j.at("scene").at("center"));
    ds.scene.half_extent = j.at("scene").at("half_extent");
    ds.scene.radius = j.at("scene").at("radius");
    ds.scene.ior = j.at("scene").at("ior");
    ds.scene.ambient = detail::vec_from_json(j.at("scene").at("ambient"));
    if (j.at("scene").contains("background")) {
        Checkerboard b;
        const auto& bg = j.at("scene").at("background");
        b.origin = detail::vec_from_json(bg.at("origin"));
        b.normal = detail::vec_from_json(bg.at("normal"));
        b.u_axis = detail::vec_from_json(bg.at("u_axis"));
        b.cell = bg.at("cell");
        b.color_a = detail::vec_from_json(bg.at("color_a"));
        b.color_b = detail::vec_from_json(bg.at("color_b"));
        ds.scene.background = b;
    }

    std::map<std::string, std::string> split_of;
    for (const auto& v : j.at("views")) split_of[v.at("name")] = v.at("split");

    for (const auto& cv : colmap_views) {
        View view;
        view.intrinsics = cv.intrinsics;
        view.pose = cv.pose;
        view.name = cv.image_name;
        if (load_images) view.image = load_png((fs::path(dir) / "images" / cv.image_name).string());
        if (load_masks) {
            const fs::path mask_path = fs::path(dir) / "masks" / cv.image_name;
            if (fs::exists(mask_path)) view.mask = load_mask_png(mask_path.string());
        }
        view.validate();
        const auto it = split_of.find(view.name);
        ds.is_test.push_back(it != split_of.end() && it->second == "test");
        ds.views.push_back(std::move(view));
    }
    return ds;
}

}  // namespace refray
