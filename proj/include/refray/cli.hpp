#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refray/config.hpp"
#include "refray/field.hpp"
#include "refray/grid.hpp"
#include "refray/marching_cubes.hpp"
#include "refray/mesh.hpp"
#include "refray/render.hpp"
#include "refray/synth.hpp"

namespace refray {
namespace cli {

// Thrown for post-parse usage problems (missing conditional flags, ...);
// mapped to exit code 1 like CLI11 parse errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline RenderMode parse_mode(const std::string& s) {
    if (s == "straight") return RenderMode::Straight;
    if (s == "refract") return RenderMode::Refract;
    throw UsageError("mode must be 'straight' or 'refract', got '" + s + "'");
}

// Loads a dataset directory; falls back to a bare COLMAP layout
// (cameras.txt / images.txt / images/ / masks/) when no manifest exists.
inline Dataset load_data_dir(const std::string& dir, bool need_images, bool need_masks) {
    namespace fs = std::filesystem;
    if (fs::exists(fs::path(dir) / "manifest.json")) return load_dataset(dir, need_images, need_masks);

    auto read_text = [](const fs::path& p) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open: " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    Dataset ds;
    const auto colmap_views =
        load_colmap(read_text(fs::path(dir) / "cameras.txt"), read_text(fs::path(dir) / "images.txt"));
    for (const auto& cv : colmap_views) {
        View view;
        view.intrinsics = cv.intrinsics;
        view.pose = cv.pose;
        view.name = cv.image_name;
        if (need_images) view.image = load_png((fs::path(dir) / "images" / cv.image_name).string());
        if (need_masks) {
            const fs::path mask_path = fs::path(dir) / "masks" / cv.image_name;
            if (fs::exists(mask_path)) view.mask = load_mask_png(mask_path.string());
        }
        view.validate();
        ds.views.push_back(std::move(view));
        ds.is_test.push_back(false);
    }
    return ds;
}

template <class Fn>
auto with_field(const Checkpoint& ckpt, Fn&& fn) {
    if (ckpt.backend == FieldBackend::Grid) {
        auto field = grid_field_from_checkpoint<float>(ckpt);
        return fn(field);
    }
    auto field = mlp_field_from_checkpoint<float>(ckpt);
    return fn(field);
}

// Estimates an object bounding box from the masks alone: the point closest
// to all optical axes seeds a coarse carve whose occupied extent becomes the
// box. For synthetic data the manifest box is used instead.
inline std::pair<Vec3, Vec3> auto_bbox(const std::vector<View>& views, unsigned threads) {
    // Least-squares intersection of the optical axes: sum (I - dd^T)(c - p) = 0.
    Mat3 A{};
    A.m = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    Vec3 b{0, 0, 0};
    double mean_dist = 0.0;
    for (const auto& view : views) {
        const Vec3 c = view.pose.center();
        const Vec3 d = transpose(view.pose.rotation()) * Vec3{0, 0, 1};
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) A(r, col) += (r == col ? 1.0 : 0.0) - d[r] * d[col];
        b += c - d * dot(d, c);
        mean_dist += norm(c);
    }
    mean_dist /= static_cast<double>(views.size());
    // Solve A x = b by Cramer's rule.
    auto det3 = [](const Mat3& M) {
        return M(0, 0) * (M(1, 1) * M(2, 2) - M(1, 2) * M(2, 1)) - M(0, 1) * (M(1, 0) * M(2, 2) - M(1, 2) * M(2, 0)) +
               M(0, 2) * (M(1, 0) * M(2, 1) - M(1, 1) * M(2, 0));
    };
    const double det = det3(A);
    if (std::abs(det) < 1e-12) throw std::runtime_error("auto-bbox: camera axes are degenerate");
    Vec3 center;
    for (int col = 0; col < 3; ++col) {
        Mat3 M = A;
        for (int r = 0; r < 3; ++r) M(r, col) = b[r];
        center[col] = det3(M) / det;
    }

    double mean_cam_dist = 0.0;
    for (const auto& view : views) mean_cam_dist += norm(view.pose.center() - center);
    mean_cam_dist /= static_cast<double>(views.size());

    GridSpec coarse;
    coarse.K = 32;
    coarse.bbox_min = center - Vec3{1, 1, 1} * (0.6 * mean_cam_dist);
    coarse.bbox_max = center + Vec3{1, 1, 1} * (0.6 * mean_cam_dist);
    const OccupancyGrid grid = carve(views, coarse, threads);

    Aabb box;
    for (int k = 0; k < coarse.K; ++k)
        for (int j = 0; j < coarse.K; ++j)
            for (int i = 0; i < coarse.K; ++i)
                if (grid.at(i, j, k)) box.grow(coarse.voxel_center(i, j, k));
    if (box.lo.x > box.hi.x) throw std::runtime_error("auto-bbox: carve produced an empty grid");
    const Vec3 pad = (box.hi - box.lo) * 0.12 + Vec3{1, 1, 1} * (0.6 * mean_cam_dist / 32.0);
    return {box.lo - pad, box.hi + pad};
}

inline std::pair<Vec3, Vec3> parse_bbox(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) vals.push_back(std::stod(token));
    if (vals.size() != 6) throw UsageError("--bbox expects 6 comma-separated numbers");
    return {{vals[0], vals[1], vals[2]}, {vals[3], vals[4], vals[5]}};
}

struct MeshPostprocess {
    int smooth_radius = 1;
    double isolevel = 0.5;
    double lambda = 0.5;
    int iters = 10;
};

inline TriMesh grid_to_mesh(const OccupancyGrid& grid, const MeshPostprocess& pp, unsigned threads,
                            std::ostream& log) {
    const ScalarGrid smoothed = smooth_occupancy(grid, pp.smooth_radius, threads);
    TriMesh mesh = marching_cubes(smoothed, pp.isolevel);
    log << "[mesh] marching cubes: " << mesh.vertices.size() << " vertices, " << mesh.faces.size() << " faces\n";
    laplacian_smooth(mesh, pp.lambda, pp.iters);
    return mesh;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args) {
    CLI::App app{"Novel-view synthesis for transparent objects: visual-hull reconstruction,"
                 " Snell-refracted rays, and a differentiable radiance field"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key = value config file; flags override it")->configurable(false);

    RunConfig cfg;

    // --- synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with the analytic refraction oracle");
    std::string sy_solid = "cube", sy_out, sy_rig, sy_res, sy_elevs, sy_bg = "auto";
    double sy_ior = -1, sy_distance = -1, sy_az_min = -1e9, sy_az_max = -1e9, sy_cell = -1, sy_focal = -1;
    double sy_half = -1, sy_radius = -1;
    int sy_views = -1, sy_ss = -1;
    unsigned sy_threads = 0;
    synth->add_option("--solid", sy_solid, "cube | sphere")->check(CLI::IsMember({"cube", "sphere"}));
    synth->add_option("--ior", sy_ior, "index of refraction (default 1.5)");
    synth->add_option("--out", sy_out, "output dataset directory")->required();
    synth->add_option("--views", sy_views, "number of views (default: 44 arc / 14 ring)");
    synth->add_option("--rig", sy_rig, "arc | ring (default: arc for cube, ring for sphere)")
        ->check(CLI::IsMember({"arc", "ring"}));
    synth->add_option("--res", sy_res, "image resolution WxH (default 96x72)");
    synth->add_option("--focal", sy_focal, "focal length in pixels (default 130)");
    synth->add_option("--distance", sy_distance, "camera distance");
    synth->add_option("--azimuth-min", sy_az_min, "arc start, degrees (default -32)");
    synth->add_option("--azimuth-max", sy_az_max, "arc end, degrees (default 32)");
    synth->add_option("--elevations", sy_elevs, "comma-separated elevations, degrees");
    synth->add_option("--cell", sy_cell, "checkerboard cell size (default 0.28)");
    synth->add_option("--half-extent", sy_half, "cube half extent (default 0.4)");
    synth->add_option("--radius", sy_radius, "sphere radius (default 1.0)");
    synth->add_option("--supersample", sy_ss, "oracle rays per pixel axis (default 3)");
    synth->add_option("--background", sy_bg, "on | off | auto")->check(CLI::IsMember({"on", "off", "auto"}));
    synth->add_option("--threads", sy_threads, "worker threads (1 = serial)");

    // --- carve ------------------------------------------------------------
    auto* carve_cmd = app.add_subcommand("carve", "carve a visual hull from masks and extract a smoothed mesh");
    std::string cv_data, cv_out, cv_grid_out, cv_bbox;
    int cv_K = -1, cv_radius = -1, cv_iters = -1;
    double cv_iso = -1, cv_lambda = -1;
    bool cv_auto_bbox = false;
    unsigned cv_threads = 0;
    carve_cmd->add_option("--data", cv_data, "dataset directory (needs masks)")->required();
    carve_cmd->add_option("--K", cv_K, "voxels per axis (default 256)");
    carve_cmd->add_option("--out", cv_out, "output OBJ mesh")->required();
    carve_cmd->add_option("--grid-out", cv_grid_out, "also dump the raw occupancy grid");
    carve_cmd->add_option("--bbox", cv_bbox, "x0,y0,z0,x1,y1,z1 carving bounds");
    carve_cmd->add_flag("--auto-bbox", cv_auto_bbox, "estimate bounds from the masks");
    carve_cmd->add_option("--smooth-radius", cv_radius, "box-filter radius in voxels (default 1)");
    carve_cmd->add_option("--isolevel", cv_iso, "marching-cubes isolevel (default 0.5)");
    carve_cmd->add_option("--lambda", cv_lambda, "Laplacian smoothing strength (default 0.5)");
    carve_cmd->add_option("--smooth-iters", cv_iters, "Laplacian smoothing iterations (default 10)");
    carve_cmd->add_option("--threads", cv_threads, "worker threads (1 = serial)");

    // --- mesh -------------------------------------------------------------
    auto* mesh_cmd = app.add_subcommand("mesh", "marching cubes + smoothing from a dumped occupancy grid");
    std::string me_grid, me_out;
    int me_radius = -1, me_iters = -1;
    double me_iso = -1, me_lambda = -1;
    unsigned me_threads = 0;
    mesh_cmd->add_option("--grid", me_grid, "occupancy grid dump (.vox)")->required();
    mesh_cmd->add_option("--out", me_out, "output OBJ mesh")->required();
    mesh_cmd->add_option("--smooth-radius", me_radius, "box-filter radius in voxels (default 1)");
    mesh_cmd->add_option("--isolevel", me_iso, "marching-cubes isolevel (default 0.5)");
    mesh_cmd->add_option("--lambda", me_lambda, "Laplacian smoothing strength (default 0.5)");
    mesh_cmd->add_option("--smooth-iters", me_iters, "Laplacian smoothing iterations (default 10)");
    mesh_cmd->add_option("--threads", me_threads, "worker threads (1 = serial)");

    // --- train ------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "optimize a radiance field on a dataset");
    std::string tr_data, tr_mode, tr_mesh, tr_out, tr_log, tr_field;
    long long tr_iters = -1;
    int tr_batch = -1, tr_samples = -1, tr_grid_res = -1;
    double tr_lr = -1, tr_ior = -1, tr_tnear = -1, tr_tfar = -1;
    long long tr_seed = -1;
    bool tr_jitter = false;
    train_cmd->add_option("--data", tr_data, "dataset directory")->required();
    train_cmd->add_option("--mode", tr_mode, "straight | refract")->check(CLI::IsMember({"straight", "refract"}));
    train_cmd->add_option("--mesh", tr_mesh, "hull OBJ (required in refract mode)");
    train_cmd->add_option("--out", tr_out, "output checkpoint")->required();
    train_cmd->add_option("--log", tr_log, "training-log CSV (default: <out>.log.csv)");
    train_cmd->add_option("--iterations", tr_iters, "optimization steps (default 20000)");
    train_cmd->add_option("--batch-rays", tr_batch, "rays per batch (default 1024)");
    train_cmd->add_option("--samples", tr_samples, "samples per ray (default 128)");
    train_cmd->add_option("--lr", tr_lr, "learning rate (default 5e-3 grid, 5e-4 mlp)");
    train_cmd->add_option("--seed", tr_seed, "random seed (default 42)");
    train_cmd->add_option("--ior", tr_ior, "index of refraction (default: dataset manifest)");
    train_cmd->add_option("--t-near", tr_tnear, "sampling window start (default: manifest)");
    train_cmd->add_option("--t-far", tr_tfar, "sampling window end (default: manifest)");
    train_cmd->add_option("--field", tr_field, "grid | mlp (default grid)")->check(CLI::IsMember({"grid", "mlp"}));
    train_cmd->add_option("--grid-res", tr_grid_res, "grid field resolution (default 128)");
    train_cmd->add_flag("--jitter", tr_jitter, "stratified jitter instead of midpoint sampling");

    // --- render -----------------------------------------------------------
    auto* render_cmd = app.add_subcommand("render", "render one view from a checkpoint");
    std::string rd_data, rd_ckpt, rd_mode, rd_mesh, rd_out;
    int rd_view = 0, rd_samples = -1;
    double rd_ior = -1, rd_tnear = -1, rd_tfar = -1;
    unsigned rd_threads = 0;
    render_cmd->add_option("--checkpoint", rd_ckpt, "trained checkpoint")->required();
    render_cmd->add_option("--data", rd_data, "dataset directory (for cameras)")->required();
    render_cmd->add_option("--view", rd_view, "view index")->required();
    render_cmd->add_option("--out", rd_out, "output image (.png or .ppm)")->required();
    render_cmd->add_option("--mode", rd_mode, "straight | refract")->check(CLI::IsMember({"straight", "refract"}));
    render_cmd->add_option("--mesh", rd_mesh, "hull OBJ (required in refract mode)");
    render_cmd->add_option("--ior", rd_ior, "index of refraction (default: manifest)");
    render_cmd->add_option("--samples", rd_samples, "samples per ray (default 128)");
    render_cmd->add_option("--t-near", rd_tnear, "sampling window start (default: manifest)");
    render_cmd->add_option("--t-far", rd_tfar, "sampling window end (default: manifest)");
    render_cmd->add_option("--threads", rd_threads, "worker threads (1 = serial)");

    // --- eval ---------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "PSNR over a dataset split");
    std::string ev_data, ev_ckpt, ev_mode, ev_mesh, ev_out, ev_split = "test";
    int ev_samples = -1;
    double ev_ior = -1, ev_tnear = -1, ev_tfar = -1;
    unsigned ev_threads = 0;
    eval_cmd->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
    eval_cmd->add_option("--data", ev_data, "dataset directory")->required();
    eval_cmd->add_option("--split", ev_split, "test | train | all (default test)")
        ->check(CLI::IsMember({"test", "train", "all"}));
    eval_cmd->add_option("--out", ev_out, "per-view PSNR CSV")->required();
    eval_cmd->add_option("--mode", ev_mode, "straight | refract")->check(CLI::IsMember({"straight", "refract"}));
    eval_cmd->add_option("--mesh", ev_mesh, "hull OBJ (required in refract mode)");
    eval_cmd->add_option("--ior", ev_ior, "index of refraction (default: manifest)");
    eval_cmd->add_option("--samples", ev_samples, "samples per ray (default 128)");
    eval_cmd->add_option("--t-near", ev_tnear, "sampling window start (default: manifest)");
    eval_cmd->add_option("--t-far", ev_tfar, "sampling window end (default: manifest)");
    eval_cmd->add_option("--threads", ev_threads, "worker threads (1 = serial)");

    // --- trace-pixel --------------------------------------------------
    auto* trace_cmd = app.add_subcommand("trace-pixel", "per-sample report for one pixel's ray");
    std::string tp_data, tp_ckpt, tp_mode, tp_mesh, tp_out, tp_paths_out, tp_pixel;
    int tp_view = 0, tp_samples = -1;
    double tp_ior = -1, tp_tnear = -1, tp_tfar = -1;
    trace_cmd->add_option("--checkpoint", tp_ckpt, "trained checkpoint")->required();
    trace_cmd->add_option("--data", tp_data, "dataset directory")->required();
    trace_cmd->add_option("--view", tp_view, "view index")->required();
    trace_cmd->add_option("--pixel", tp_pixel, "pixel as u,v")->required();
    trace_cmd->add_option("--out", tp_out, "per-sample CSV")->required();
    trace_cmd->add_option("--paths-out", tp_paths_out, "also dump the ray path CSV");
    trace_cmd->add_option("--mode", tp_mode, "straight | refract")->check(CLI::IsMember({"straight", "refract"}));
    trace_cmd->add_option("--mesh", tp_mesh, "hull OBJ (required in refract mode)");
    trace_cmd->add_option("--ior", tp_ior, "index of refraction (default: manifest)");
    trace_cmd->add_option("--samples", tp_samples, "samples per ray (default 128)");
    trace_cmd->add_option("--t-near", tp_tnear, "sampling window start (default: manifest)");
    trace_cmd->add_option("--t-far", tp_tfar, "sampling window end (default: manifest)");

    std::vector<char*> argv;
    std::vector<std::string> storage = std::move(args);
    storage.insert(storage.begin(), "refray");
    argv.reserve(storage.size());
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (!config_path.empty()) cfg.load_file(config_path);

        if (app.got_subcommand(synth)) {
            SceneSpec scene;
            scene.solid = (synth->count("--solid") ? sy_solid : cfg.get_str("solid", "cube")) == "sphere"
                              ? SolidKind::Sphere
                              : SolidKind::Cube;
            const bool is_sphere = scene.solid == SolidKind::Sphere;
            scene.ior = synth->count("--ior") ? sy_ior : cfg.get_double("ior", 1.5);
            scene.half_extent = synth->count("--half-extent") ? sy_half : 0.4;
            scene.radius = synth->count("--radius") ? sy_radius : 1.0;

            const std::string rig_kind =
                synth->count("--rig") ? sy_rig : cfg.get_str("rig", is_sphere ? "ring" : "arc");
            const std::string bg = synth->count("--background") ? sy_bg : cfg.get_str("background", "auto");
            const bool with_background = bg == "on" || (bg == "auto" && rig_kind == "arc");
            if (with_background) {
                Checkerboard board;
                const double extent = is_sphere ? scene.radius : scene.half_extent;
                board.origin = scene.center - Vec3{0, 0, extent * 2.5};
                board.cell = synth->count("--cell") ? sy_cell : cfg.get_double("cell", 0.28);
                scene.background = board;
            }

            RigSpec rig;
            const int n_views =
                static_cast<int>(synth->count("--views") ? sy_views : cfg.get_int("views", is_sphere ? 14 : 44));
            const double distance =
                synth->count("--distance") ? sy_distance : cfg.get_double("distance", is_sphere ? 2.6131 : 3.3);
            if (rig_kind == "ring") {
                std::vector<double> elevs = cfg.get_doubles("elevations", {0.0});
                if (synth->count("--elevations")) {
                    RunConfig tmp;
                    tmp.set("elevations", sy_elevs);
                    elevs = tmp.get_doubles("elevations", {0.0});
                }
                rig = make_ring_rig(std::max(2, n_views - 2), elevs.empty() ? 0.0 : elevs[0], true);
            } else {
                std::vector<double> elevs = cfg.get_doubles("elevations", {8.0, 16.0, 24.0, 32.0});
                if (synth->count("--elevations")) {
                    RunConfig tmp;
                    tmp.set("elevations", sy_elevs);
                    elevs = tmp.get_doubles("elevations", elevs);
                }
                const double az0 = synth->count("--azimuth-min") ? sy_az_min : cfg.get_double("azimuth_min", -32.0);
                const double az1 = synth->count("--azimuth-max") ? sy_az_max : cfg.get_double("azimuth_max", 32.0);
                rig = make_arc_rig(n_views, az0, az1, elevs);
            }
            rig.distance = distance;
            rig.supersample = static_cast<int>(synth->count("--supersample") ? sy_ss : cfg.get_int("supersample", 3));

            int W = static_cast<int>(cfg.get_int("width", is_sphere ? 256 : 96));
            int H = static_cast<int>(cfg.get_int("height", is_sphere ? 256 : 72));
            if (synth->count("--res")) {
                if (std::sscanf(sy_res.c_str(), "%dx%d", &W, &H) != 2) throw UsageError("--res expects WxH");
            }
            double focal = synth->count("--focal") ? sy_focal : cfg.get_double("focal", is_sphere ? 290.0 : 130.0);
            rig.intrinsics = Intrinsics{W, H, focal, focal, W / 2.0, H / 2.0};

            const unsigned threads = sy_threads ? sy_threads : static_cast<unsigned>(cfg.get_int("threads", 1));
            std::cerr << "[synth] rendering " << rig.n_views() << " views at " << W << "x" << H << " (solid "
                      << (is_sphere ? "sphere" : "cube") << ", ior " << scene.ior << ")\n";
            const Dataset ds = generate_dataset(scene, rig, threads);
            save_dataset(sy_out, ds);
            size_t n_test = 0;
            for (bool t : ds.is_test) n_test += t;
            std::cerr << "[synth] wrote " << ds.views.size() << " views (" << ds.views.size() - n_test << " train, "
                      << n_test << " test) to " << sy_out << "\n";
            return 0;
        }

        if (app.got_subcommand(carve_cmd)) {
            const unsigned threads = cv_threads ? cv_threads : static_cast<unsigned>(cfg.get_int("threads", 1));
            const Dataset ds = detail::load_data_dir(cv_data, false, true);
            for (const auto& v : ds.views)
                if (!v.mask) throw std::runtime_error("carve: view '" + v.name + "' has no mask in " + cv_data);

            GridSpec spec;
            spec.K = static_cast<int>(carve_cmd->count("--K") ? cv_K : cfg.get_int("K", 256));
            if (carve_cmd->count("--bbox")) {
                std::tie(spec.bbox_min, spec.bbox_max) = detail::parse_bbox(cv_bbox);
            } else if (cfg.has("bbox")) {
                const auto vals = cfg.get_doubles("bbox", {});
                if (vals.size() != 6) throw std::runtime_error("config bbox expects 6 numbers");
                spec.bbox_min = {vals[0], vals[1], vals[2]};
                spec.bbox_max = {vals[3], vals[4], vals[5]};
            } else if (cv_auto_bbox) {
                std::tie(spec.bbox_min, spec.bbox_max) = detail::auto_bbox(ds.views, threads);
                std::cerr << "[carve] auto bbox " << spec.bbox_min << " .. " << spec.bbox_max << "\n";
            } else if (std::filesystem::exists(std::filesystem::path(cv_data) / "manifest.json")) {
                const double e = ds.scene.solid_extent() * 1.25;
                spec.bbox_min = ds.scene.center - Vec3{e, e, e};
                spec.bbox_max = ds.scene.center + Vec3{e, e, e};
            } else {
                throw UsageError("carve: pass --bbox, --auto-bbox, or a dataset with a manifest");
            }

            const OccupancyGrid grid = carve(ds.views, spec, threads);
            std::cerr << "[carve] K=" << spec.K << ": " << grid.count_occupied() << " voxels occupied\n";
            if (!cv_grid_out.empty()) save_occupancy(cv_grid_out, grid);

            detail::MeshPostprocess pp;
            pp.smooth_radius = static_cast<int>(carve_cmd->count("--smooth-radius") ? cv_radius : cfg.get_int("smooth_radius", 1));
            pp.isolevel = carve_cmd->count("--isolevel") ? cv_iso : cfg.get_double("isolevel", 0.5);
            pp.lambda = carve_cmd->count("--lambda") ? cv_lambda : cfg.get_double("laplacian_lambda", 0.5);
            pp.iters = static_cast<int>(carve_cmd->count("--smooth-iters") ? cv_iters : cfg.get_int("laplacian_iters", 10));
            const TriMesh mesh = detail::grid_to_mesh(grid, pp, threads, std::cerr);
            save_obj(cv_out, mesh);
            std::cerr << "[carve] wrote " << cv_out << "\n";
            return 0;
        }

        if (app.got_subcommand(mesh_cmd)) {
            const unsigned threads = me_threads ? me_threads : static_cast<unsigned>(cfg.get_int("threads", 1));
            const OccupancyGrid grid = load_occupancy(me_grid);
            detail::MeshPostprocess pp;
            pp.smooth_radius = static_cast<int>(mesh_cmd->count("--smooth-radius") ? me_radius : cfg.get_int("smooth_radius", 1));
            pp.isolevel = mesh_cmd->count("--isolevel") ? me_iso : cfg.get_double("isolevel", 0.5);
            pp.lambda = mesh_cmd->count("--lambda") ? me_lambda : cfg.get_double("laplacian_lambda", 0.5);
            pp.iters = static_cast<int>(mesh_cmd->count("--smooth-iters") ? me_iters : cfg.get_int("laplacian_iters", 10));
            const TriMesh mesh = detail::grid_to_mesh(grid, pp, threads, std::cerr);
            save_obj(me_out, mesh);
            std::cerr << "[mesh] wrote " << me_out << "\n";
            return 0;
        }

        if (app.got_subcommand(train_cmd)) {
            const Dataset ds = detail::load_data_dir(tr_data, true, false);
            TrainConfig tc;
            tc.mode = detail::parse_mode(train_cmd->count("--mode") ? tr_mode : cfg.get_str("mode", ""));
            tc.iterations = train_cmd->count("--iterations") ? tr_iters : cfg.get_int("iterations", 20000);
            tc.batch_rays = static_cast<int>(train_cmd->count("--batch-rays") ? tr_batch : cfg.get_int("batch_rays", 1024));
            tc.samples_per_ray = static_cast<int>(train_cmd->count("--samples") ? tr_samples : cfg.get_int("samples", 128));
            tc.seed = static_cast<uint64_t>(train_cmd->count("--seed") ? tr_seed : cfg.get_int("seed", 42));
            tc.t_near = train_cmd->count("--t-near") ? tr_tnear : cfg.get_double("t_near", ds.t_near);
            tc.t_far = train_cmd->count("--t-far") ? tr_tfar : cfg.get_double("t_far", ds.t_far);
            tc.jitter_samples = tr_jitter || cfg.get_bool("jitter", false);
            tc.log_every = static_cast<int>(cfg.get_int("log_every", 100));
            const double ior = train_cmd->count("--ior") ? tr_ior : cfg.get_double("ior", ds.scene.ior);
            const std::string field_kind = train_cmd->count("--field") ? tr_field : cfg.get_str("field", "grid");
            tc.learning_rate = train_cmd->count("--lr")
                                   ? tr_lr
                                   : cfg.get_double("lr", field_kind == "mlp" ? 5e-4 : 5e-3);

            std::optional<AccelMesh> accel;
            if (tc.mode == RenderMode::Refract) {
                if (tr_mesh.empty()) throw UsageError("train: refract mode requires --mesh");
                accel.emplace(load_obj(tr_mesh));
            }

            std::vector<View> train_views;
            for (size_t i = 0; i < ds.views.size(); ++i)
                if (!ds.is_test[i]) train_views.push_back(ds.views[i]);
            std::cerr << "[train] " << train_views.size() << " train views, mode " << to_string(tc.mode) << ", "
                      << tc.iterations << " iterations\n";

            std::vector<TrainLogEntry> log;
            if (field_kind == "mlp") {
                MLPField<float> field(ds.bbox_min, ds.bbox_max,
                                      static_cast<int>(cfg.get_int("mlp_depth", 4)),
                                      static_cast<int>(cfg.get_int("mlp_width", 64)),
                                      static_cast<int>(cfg.get_int("mlp_l_pos", 6)),
                                      static_cast<int>(cfg.get_int("mlp_l_dir", 4)), tc.seed);
                log = train(train_views, field, accel ? &*accel : nullptr, ior, tc, &std::cerr);
                save_checkpoint(tr_out, field);
            } else {
                const int res = static_cast<int>(train_cmd->count("--grid-res") ? tr_grid_res : cfg.get_int("grid_res", 128));
                GridField<float> field(res, ds.bbox_min, ds.bbox_max);
                log = train(train_views, field, accel ? &*accel : nullptr, ior, tc, &std::cerr);
                save_checkpoint(tr_out, field);
            }

            const std::string log_path = tr_log.empty() ? tr_out + ".log.csv" : tr_log;
            std::ofstream log_file(log_path);
            write_train_log_csv(log_file, log);
            std::cerr << "[train] wrote " << tr_out << " and " << log_path << "\n";
            return 0;
        }

        auto resolve_eval_like = [&](CLI::App* cmd, const std::string& data, const std::string& mode_flag,
                                     const std::string& mesh_path, double ior_flag, double tnear_flag,
                                     double tfar_flag, int samples_flag)
            -> std::tuple<Dataset, RenderMode, std::optional<AccelMesh>, double, double, double, int> {
            Dataset ds = detail::load_data_dir(data, true, false);
            const RenderMode mode = detail::parse_mode(cmd->count("--mode") ? mode_flag : cfg.get_str("mode", "straight"));
            std::optional<AccelMesh> accel;
            if (mode == RenderMode::Refract) {
                if (mesh_path.empty()) throw UsageError(cmd->get_name() + ": refract mode requires --mesh");
                accel.emplace(load_obj(mesh_path));
            }
            const double ior = cmd->count("--ior") ? ior_flag : cfg.get_double("ior", ds.scene.ior);
            const double t_near = cmd->count("--t-near") ? tnear_flag : cfg.get_double("t_near", ds.t_near);
            const double t_far = cmd->count("--t-far") ? tfar_flag : cfg.get_double("t_far", ds.t_far);
            const int samples = static_cast<int>(cmd->count("--samples") ? samples_flag : cfg.get_int("samples", 128));
            return {std::move(ds), mode, std::move(accel), ior, t_near, t_far, samples};
        };

        if (app.got_subcommand(render_cmd)) {
            auto [ds, mode, accel, ior, t_near, t_far, samples] =
                resolve_eval_like(render_cmd, rd_data, rd_mode, rd_mesh, rd_ior, rd_tnear, rd_tfar, rd_samples);
            const unsigned threads = rd_threads ? rd_threads : static_cast<unsigned>(cfg.get_int("threads", 1));
            if (rd_view < 0 || rd_view >= static_cast<int>(ds.views.size()))
                throw UsageError("render: view index out of range");
            const Checkpoint ckpt = load_checkpoint(rd_ckpt);
            detail::with_field(ckpt, [&](auto& field) {
                const Image img = render_image(field, ds.views[static_cast<size_t>(rd_view)], mode,
                                               accel ? &*accel : nullptr, ior, t_near, t_far, samples, threads);
                save_image(rd_out, img);
                return 0;
            });
            std::cerr << "[render] wrote " << rd_out << "\n";
            return 0;
        }

        if (app.got_subcommand(eval_cmd)) {
            auto [ds, mode, accel, ior, t_near, t_far, samples] =
                resolve_eval_like(eval_cmd, ev_data, ev_mode, ev_mesh, ev_ior, ev_tnear, ev_tfar, ev_samples);
            const unsigned threads = ev_threads ? ev_threads : static_cast<unsigned>(cfg.get_int("threads", 1));
            const Checkpoint ckpt = load_checkpoint(ev_ckpt);

            std::ostringstream csv;
            csv << "view,psnr\n";
            double sum = 0.0;
            size_t count = 0;
            detail::with_field(ckpt, [&](auto& field) {
                char buf[160];
                for (size_t i = 0; i < ds.views.size(); ++i) {
                    const bool want = ev_split == "all" || (ev_split == "test") == ds.is_test[i];
                    if (!want) continue;
                    const Image img = render_image(field, ds.views[i], mode, accel ? &*accel : nullptr, ior, t_near,
                                                   t_far, samples, threads);
                    const double p = psnr(img, ds.views[i].image);
                    std::snprintf(buf, sizeof(buf), "%s,%.6f\n", ds.views[i].name.c_str(), p);
                    csv << buf;
                    sum += p;
                    ++count;
                }
                return 0;
            });
            if (count == 0) throw std::runtime_error("eval: no views in split '" + ev_split + "'");
            char buf[64];
            std::snprintf(buf, sizeof(buf), "mean,%.6f\n", sum / static_cast<double>(count));
            csv << buf;
            std::ofstream out(ev_out);
            out << csv.str();
            if (!out) throw std::runtime_error("eval: cannot write " + ev_out);
            std::cerr << "[eval] mean psnr over " << count << " views: " << sum / static_cast<double>(count)
                      << " dB -> " << ev_out << "\n";
            return 0;
        }

        if (app.got_subcommand(trace_cmd)) {
            auto [ds, mode, accel, ior, t_near, t_far, samples] =
                resolve_eval_like(trace_cmd, tp_data, tp_mode, tp_mesh, tp_ior, tp_tnear, tp_tfar, tp_samples);
            if (tp_view < 0 || tp_view >= static_cast<int>(ds.views.size()))
                throw UsageError("trace-pixel: view index out of range");
            int px = 0, py = 0;
            if (std::sscanf(tp_pixel.c_str(), "%d,%d", &px, &py) != 2) throw UsageError("--pixel expects u,v");
            const Checkpoint ckpt = load_checkpoint(tp_ckpt);
            const View& view = ds.views[static_cast<size_t>(tp_view)];

            detail::with_field(ckpt, [&](auto& field) {
                const auto rows =
                    trace_pixel(field, view, px, py, mode, accel ? &*accel : nullptr, ior, t_near, t_far, samples);
                std::ofstream out(tp_out);
                write_trace_csv(out, rows);
                if (!out) throw std::runtime_error("trace-pixel: cannot write " + tp_out);
                return 0;
            });
            if (!tp_paths_out.empty()) {
                const Ray ray = pixel_ray(view, px + 0.5, py + 0.5);
                const RayPath path = mode == RenderMode::Refract && accel ? build_path(ray, *accel, ior, t_far)
                                                                          : straight_path(ray, t_far);
                std::ofstream out(tp_paths_out);
                write_path_csv(out, {path});
            }
            std::cerr << "[trace-pixel] wrote " << tp_out << "\n";
            return 0;
        }

        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace cli
}  // namespace refray
