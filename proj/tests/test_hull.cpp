#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "refray/camera.hpp"
#include "refray/grid.hpp"
#include "refray/rng.hpp"
#include "refray/synth.hpp"

using namespace refray;
using Catch::Approx;

namespace {

// Mask-only view of an analytic sphere: pixel is on iff the center ray hits.
View sphere_mask_view(const Vec3& eye, double radius, const Intrinsics& intr) {
    View view;
    view.intrinsics = intr;
    view.pose = look_at_pose(eye, Vec3{0, 0, 0});
    MaskImage mask(intr.width, intr.height);
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const Ray ray = pixel_ray(intr, view.pose, x + 0.5, y + 0.5);
            const double b = dot(ray.origin, ray.direction);
            const double c = norm2(ray.origin) - radius * radius;
            mask.set(x, y, b * b - c >= 0.0 && -b > 0.0 ? 1 : 0);
        }
    }
    view.mask = std::move(mask);
    return view;
}

std::vector<View> sphere_ring_views(double radius) {
    const Intrinsics intr{320, 320, 360.0, 360.0, 160.0, 160.0};
    const double d = 2.6131;
    std::vector<View> views;
    for (int i = 0; i < 12; ++i) {
        const double az = radians(30.0 * i);
        views.push_back(sphere_mask_view(Vec3{d * std::sin(az), 0.0, d * std::cos(az)}, radius, intr));
    }
    views.push_back(sphere_mask_view(Vec3{0, d, 1e-4}, radius, intr));
    views.push_back(sphere_mask_view(Vec3{0, -d, 1e-4}, radius, intr));
    return views;
}

}  // namespace

TEST_CASE("a view with an all-zero mask empties the grid") {
    const Intrinsics intr{32, 24, 40.0, 40.0, 16.0, 12.0};
    View full;
    full.intrinsics = intr;
    full.pose = look_at_pose(Vec3{0, 0, 3}, Vec3{0, 0, 0});
    full.mask = MaskImage(32, 24, 1);
    View zero = full;
    zero.mask = MaskImage(32, 24, 0);

    GridSpec spec;
    spec.K = 8;
    spec.bbox_min = {-1, -1, -1};
    spec.bbox_max = {1, 1, 1};
    const OccupancyGrid grid = carve({full, zero}, spec);
    CHECK(grid.count_occupied() == 0);
}

TEST_CASE("a single full-frame mask keeps exactly the in-frustum voxels") {
    const Intrinsics intr{32, 24, 40.0, 40.0, 16.0, 12.0};
    View view;
    view.intrinsics = intr;
    view.pose = look_at_pose(Vec3{0, 0, 3}, Vec3{0, 0, 0});
    view.mask = MaskImage(32, 24, 1);

    GridSpec spec;
    spec.K = 16;
    spec.bbox_min = {-2, -2, -2};
    spec.bbox_max = {2, 2, 2};
    const OccupancyGrid grid = carve({view}, spec);

    for (int k = 0; k < spec.K; ++k)
        for (int j = 0; j < spec.K; ++j)
            for (int i = 0; i < spec.K; ++i) {
                const auto px = project(view, spec.voxel_center(i, j, k));
                const bool in_frame = px && px->u >= 0 && px->u < intr.width && px->v >= 0 && px->v < intr.height;
                CHECK(static_cast<bool>(grid.at(i, j, k)) == in_frame);
            }
}

TEST_CASE("carve requires masks") {
    View view;
    view.intrinsics = Intrinsics{8, 8, 8.0, 8.0, 4.0, 4.0};
    GridSpec spec;
    spec.K = 4;
    CHECK_THROWS_AS(carve({view}, spec), std::invalid_argument);
    CHECK_THROWS_AS(carve({}, spec), std::invalid_argument);
}

TEST_CASE("sphere hull contains the sphere voxelization and overestimates <= 15%") {
    const double radius = 1.0;
    const auto views = sphere_ring_views(radius);

    GridSpec spec;
    spec.K = 64;
    spec.bbox_min = {-1.2, -1.2, -1.2};
    spec.bbox_max = {1.2, 1.2, 1.2};
    const OccupancyGrid grid = carve(views, spec, 2);

    size_t inside_missing = 0;
    for (int k = 0; k < spec.K; ++k)
        for (int j = 0; j < spec.K; ++j)
            for (int i = 0; i < spec.K; ++i)
                if (norm(spec.voxel_center(i, j, k)) < radius && !grid.at(i, j, k)) ++inside_missing;
    CHECK(inside_missing == 0);  // visual-hull superset property

    const Vec3 h = spec.voxel_size();
    const double voxel_volume = h.x * h.y * h.z;
    const double hull_volume = static_cast<double>(grid.count_occupied()) * voxel_volume;
    const double sphere_volume = 4.0 / 3.0 * kPi * radius * radius * radius;
    CHECK(hull_volume >= sphere_volume * 0.97);  // quantization slack on the lower side
    CHECK(hull_volume <= sphere_volume * 1.15);
}

TEST_CASE("carving is monotone in the view set") {
    const auto views = sphere_ring_views(1.0);
    GridSpec spec;
    spec.K = 32;
    spec.bbox_min = {-1.3, -1.3, -1.3};
    spec.bbox_max = {1.3, 1.3, 1.3};

    std::vector<View> subset(views.begin(), views.begin() + 3);
    const OccupancyGrid few = carve(subset, spec);
    subset.push_back(views[7]);
    const OccupancyGrid more = carve(subset, spec);
    for (size_t n = 0; n < few.occ.size(); ++n) {
        if (more.occ[n]) CHECK(few.occ[n]);  // adding a view can only remove voxels
    }
    CHECK(more.count_occupied() <= few.count_occupied());
}

TEST_CASE("carve is identical in serial and threaded mode") {
    const auto views = sphere_ring_views(1.0);
    GridSpec spec;
    spec.K = 24;
    spec.bbox_min = {-1.3, -1.3, -1.3};
    spec.bbox_max = {1.3, 1.3, 1.3};
    const OccupancyGrid serial = carve(views, spec, 1);
    const OccupancyGrid threaded = carve(views, spec, 4);
    CHECK(serial.occ == threaded.occ);
}

TEST_CASE("smooth_occupancy radius 0 is the identity") {
    GridSpec spec;
    spec.K = 6;
    OccupancyGrid grid(spec);
    Pcg32 rng(17);
    for (auto& v : grid.occ) v = rng.next_u32() & 1;
    const ScalarGrid smoothed = smooth_occupancy(grid, 0);
    for (size_t n = 0; n < grid.occ.size(); ++n) CHECK(smoothed.values[n] == Approx(grid.occ[n]));
}

TEST_CASE("smooth_occupancy averages the full (2r+1)^3 box") {
    GridSpec spec;
    spec.K = 7;
    OccupancyGrid grid(spec);

    SECTION("fully occupied neighborhood stays 1") {
        for (auto& v : grid.occ) v = 1;
        const ScalarGrid smoothed = smooth_occupancy(grid, 1);
        CHECK(smoothed.at(3, 3, 3) == Approx(1.0));
    }

    SECTION("isolated interior voxel spreads to 1/27") {
        grid.set(3, 3, 3, 1);
        const ScalarGrid smoothed = smooth_occupancy(grid, 1);
        CHECK(smoothed.at(3, 3, 3) == Approx(1.0 / 27.0));
        CHECK(smoothed.at(2, 3, 3) == Approx(1.0 / 27.0));
        CHECK(smoothed.at(1, 3, 3) == Approx(0.0).margin(1e-15));
    }

    SECTION("voxels outside the grid count as empty") {
        grid.set(0, 0, 0, 1);
        const ScalarGrid smoothed = smooth_occupancy(grid, 1);
        CHECK(smoothed.at(0, 0, 0) == Approx(1.0 / 27.0));  // denominator stays 27 at the corner
    }

    SECTION("values stay within [0, 1]") {
        Pcg32 rng(4);
        for (auto& v : grid.occ) v = rng.next_u32() & 1;
        const ScalarGrid smoothed = smooth_occupancy(grid, 2);
        for (double v : smoothed.values) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("smooth_occupancy rejects negative radius") {
    OccupancyGrid grid(GridSpec{4, {-1, -1, -1}, {1, 1, 1}});
    CHECK_THROWS_AS(smooth_occupancy(grid, -1), std::invalid_argument);
}

TEST_CASE("grid dumps round trip") {
    GridSpec spec;
    spec.K = 5;
    spec.bbox_min = {-0.5, -1.5, 0.25};
    spec.bbox_max = {1.5, 0.5, 2.0};
    OccupancyGrid grid(spec);
    Pcg32 rng(8);
    for (auto& v : grid.occ) v = rng.next_u32() & 1;

    const auto occ_path = std::filesystem::temp_directory_path() / "refray_test_grid.vox";
    save_occupancy(occ_path.string(), grid);
    const OccupancyGrid occ_back = load_occupancy(occ_path.string());
    CHECK(occ_back.spec.K == spec.K);
    CHECK(norm(occ_back.spec.bbox_min - spec.bbox_min) < 1e-15);
    CHECK(occ_back.occ == grid.occ);

    const ScalarGrid smoothed = smooth_occupancy(grid, 1);
    const auto sc_path = std::filesystem::temp_directory_path() / "refray_test_grid_s.vox";
    save_scalar_grid(sc_path.string(), smoothed);
    const ScalarGrid sc_back = load_scalar_grid(sc_path.string());
    for (size_t n = 0; n < smoothed.values.size(); ++n)
        CHECK(std::abs(sc_back.values[n] - smoothed.values[n]) < 1e-6);  // float32 payload

    std::filesystem::remove(occ_path);
    std::filesystem::remove(sc_path);
}
