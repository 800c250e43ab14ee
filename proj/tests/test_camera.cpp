#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "refray/camera.hpp"
#include "refray/image.hpp"
#include "refray/rng.hpp"

using namespace refray;
using Catch::Approx;

namespace {

Intrinsics test_intrinsics() { return Intrinsics{672, 504, 600.0, 600.0, 336.0, 252.0}; }

Pose random_pose(Pcg32& rng) {
    Pose pose;
    double q[4];
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& qi : q) {
            qi = rng.next_double(-1.0, 1.0);
            n2 += qi * qi;
        }
    } while (n2 < 1e-4);
    const double n = std::sqrt(n2);
    pose.qw = q[0] / n;
    pose.qx = q[1] / n;
    pose.qy = q[2] / n;
    pose.qz = q[3] / n;
    pose.translation = {rng.next_double(-2, 2), rng.next_double(-2, 2), rng.next_double(-2, 2)};
    return pose;
}

}  // namespace

TEST_CASE("project maps the optical axis to the principal point") {
    const auto px = project(test_intrinsics(), Pose{}, Vec3{0, 0, 1});
    REQUIRE(px.has_value());
    CHECK(px->u == Approx(336.0));
    CHECK(px->v == Approx(252.0));
}

TEST_CASE("project reports points behind the camera") {
    CHECK_FALSE(project(test_intrinsics(), Pose{}, Vec3{0, 0, -1}).has_value());
    CHECK_FALSE(project(test_intrinsics(), Pose{}, Vec3{0, 0, 0}).has_value());
}

TEST_CASE("project closed-form pinhole example") {
    const auto px = project(test_intrinsics(), Pose{}, Vec3{0.1, 0, 1});
    REQUIRE(px.has_value());
    CHECK(px->u == Approx(396.0));
    CHECK(px->v == Approx(252.0));
}

TEST_CASE("pixel_ray through the principal point is the optical axis") {
    const Ray ray = pixel_ray(test_intrinsics(), Pose{}, 336.0, 252.0);
    CHECK(norm(ray.origin) == Approx(0.0).margin(1e-12));
    CHECK(ray.direction.x == Approx(0.0).margin(1e-12));
    CHECK(ray.direction.y == Approx(0.0).margin(1e-12));
    CHECK(ray.direction.z == Approx(1.0));
}

TEST_CASE("pixel_ray rejects out-of-bounds pixels") {
    CHECK_THROWS_AS(pixel_ray(test_intrinsics(), Pose{}, -1.0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(pixel_ray(test_intrinsics(), Pose{}, 672.0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(pixel_ray(test_intrinsics(), Pose{}, 10.0, 504.0), std::invalid_argument);
}

TEST_CASE("pixel_ray origin is the camera center") {
    // world-to-camera translation (0,0,-2) puts the camera at world (0,0,2).
    Pose pose;
    pose.translation = {0, 0, -2};
    const Ray ray = pixel_ray(test_intrinsics(), pose, 336.0, 252.0);
    CHECK(ray.origin.x == Approx(0.0).margin(1e-12));
    CHECK(ray.origin.y == Approx(0.0).margin(1e-12));
    CHECK(ray.origin.z == Approx(2.0));
}

TEST_CASE("project(pixel_ray) round-trips within 1e-4 px") {
    Pcg32 rng(7);
    const Intrinsics intr = test_intrinsics();
    for (int trial = 0; trial < 200; ++trial) {
        const Pose pose = random_pose(rng);
        const double u = rng.next_double(0.0, intr.width - 1e-9);
        const double v = rng.next_double(0.0, intr.height - 1e-9);
        const Ray ray = pixel_ray(intr, pose, u, v);
        for (double t : {0.1, 1.0, 17.0, 100.0}) {
            const auto px = project(intr, pose, ray.origin + ray.direction * t);
            REQUIRE(px.has_value());
            CHECK(std::abs(px->u - u) < 1e-4);
            CHECK(std::abs(px->v - v) < 1e-4);
        }
    }
}

TEST_CASE("quaternion rotations are orthonormal") {
    Pcg32 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat3 R = random_pose(rng).rotation();
        const Mat3 I = transpose(R) * R;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) CHECK(std::abs(I(r, c) - (r == c ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("pose validation rejects non-unit quaternions") {
    Pose pose;
    pose.qw = 1.1;
    CHECK_THROWS_AS(pose.validate(), std::invalid_argument);
}

TEST_CASE("view validation checks image and mask dimensions") {
    View view;
    view.intrinsics = Intrinsics{8, 6, 10.0, 10.0, 4.0, 3.0};
    view.image = Image(8, 6);
    view.mask = MaskImage(8, 6, 1);
    REQUIRE_NOTHROW(view.validate());
    view.mask = MaskImage(4, 6, 1);
    CHECK_THROWS_AS(view.validate(), std::invalid_argument);
    view.mask.reset();
    view.image = Image(8, 7);
    CHECK_THROWS_AS(view.validate(), std::invalid_argument);
}

TEST_CASE("png round trip preserves 8-bit quantized colors") {
    Pcg32 rng(3);
    Image img(13, 9);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            img.set(x, y, {rng.next_double(), rng.next_double(), rng.next_double()});
    const auto path = std::filesystem::temp_directory_path() / "refray_test_rt.png";
    save_png(path.string(), img);
    const Image back = load_png(path.string());
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-9);
    std::filesystem::remove(path);
}

TEST_CASE("ppm round trip preserves 8-bit quantized colors") {
    Pcg32 rng(5);
    Image img(7, 5);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            img.set(x, y, {rng.next_double(), rng.next_double(), rng.next_double()});
    const auto path = std::filesystem::temp_directory_path() / "refray_test_rt.ppm";
    save_ppm(path.string(), img);
    const Image back = load_ppm(path.string());
    REQUIRE(back.width == img.width);
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-9);
    std::filesystem::remove(path);
}

TEST_CASE("masks are thresholded at 128 when loaded") {
    // Write a grayscale ramp through the png writer, reload as mask.
    MaskImage mask(4, 1);
    mask.set(0, 0, 0);
    mask.set(1, 0, 1);
    mask.set(2, 0, 0);
    mask.set(3, 0, 1);
    const auto path = std::filesystem::temp_directory_path() / "refray_test_mask.png";
    save_mask_png(path.string(), mask);
    const MaskImage back = load_mask_png(path.string());
    for (int x = 0; x < 4; ++x) CHECK(back.at(x, 0) == mask.at(x, 0));
    std::filesystem::remove(path);
}

TEST_CASE("look_at_pose builds a valid world-to-camera pose") {
    Pcg32 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 eye{rng.next_double(-3, 3), rng.next_double(-3, 3), rng.next_double(1, 4)};
        const Pose pose = look_at_pose(eye, Vec3{0, 0, 0});
        pose.validate();
        CHECK(norm(pose.center() - eye) < 1e-9);
        // The look-at target projects to the principal point.
        const auto px = project(test_intrinsics(), pose, Vec3{0, 0, 0});
        REQUIRE(px.has_value());
        CHECK(std::abs(px->u - 336.0) < 1e-6);
        CHECK(std::abs(px->v - 252.0) < 1e-6);
    }
}
