#include <catch2/catch_amalgamated.hpp>

#include "refray/colmap.hpp"
#include "refray/rng.hpp"

using namespace refray;
using Catch::Approx;

namespace {

const char* kCameras =
    "# Camera list with one line of data per camera:\n"
    "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
    "1 PINHOLE 672 504 600 600 336 252\n"
    "2 SIMPLE_PINHOLE 100 100 50 50 50\n";

const char* kImages =
    "# Image list with two lines of data per image:\n"
    "1 1 0 0 0 0 0 0 1 a.png\n"
    "\n"
    "2 0.7071067811865476 0 0.7071067811865475 0 0.5 -0.25 1.5 2 b.png\n"
    "1.0 2.0 3\n";

}  // namespace

TEST_CASE("load_colmap parses PINHOLE and SIMPLE_PINHOLE cameras") {
    const auto views = load_colmap(kCameras, kImages);
    REQUIRE(views.size() == 2);

    CHECK(views[0].camera_id == 1);
    CHECK(views[0].intrinsics.width == 672);
    CHECK(views[0].intrinsics.height == 504);
    CHECK(views[0].intrinsics.fx == Approx(600));
    CHECK(views[0].intrinsics.fy == Approx(600));
    CHECK(views[0].intrinsics.cx == Approx(336));
    CHECK(views[0].intrinsics.cy == Approx(252));
    CHECK(views[0].image_name == "a.png");

    // SIMPLE_PINHOLE expands f to fx = fy = f.
    CHECK(views[1].intrinsics.fx == Approx(50));
    CHECK(views[1].intrinsics.fy == Approx(50));
    CHECK(views[1].intrinsics.cx == Approx(50));
    CHECK(views[1].intrinsics.width == 100);
}

TEST_CASE("identity quaternion row gives the identity pose") {
    const auto views = load_colmap(kCameras, kImages);
    const Pose& pose = views[0].pose;
    CHECK(pose.qw == Approx(1));
    CHECK(pose.qx == Approx(0));
    CHECK(norm(pose.translation) == Approx(0).margin(1e-12));
    const Mat3 R = pose.rotation();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(R(r, c) == Approx(r == c ? 1.0 : 0.0).margin(1e-12));
}

TEST_CASE("parsing tolerates repeated whitespace and comments") {
    const auto views = load_colmap("  1   PINHOLE  672  504   600 600 336 252  \n",
                                   "# comment\n   1  1 0 0 0   0 0 0  1   a.png\n\n");
    REQUIRE(views.size() == 1);
    CHECK(views[0].intrinsics.fx == Approx(600));
}

TEST_CASE("unsupported camera models are rejected by name") {
    CHECK_THROWS_WITH(load_colmap("1 SIMPLE_RADIAL 640 480 500 320 240 0.1\n", ""),
                      Catch::Matchers::ContainsSubstring("SIMPLE_RADIAL"));
}

TEST_CASE("malformed rows report the line number") {
    CHECK_THROWS_WITH(load_colmap("# header\n1 PINHOLE 672 504 600\n", ""),
                      Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_WITH(load_colmap(kCameras, "# c\n1 1 0 0 0 0 0 0\n"), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("dangling camera references are rejected") {
    CHECK_THROWS_WITH(load_colmap(kCameras, "1 1 0 0 0 0 0 0 7 a.png\n"),
                      Catch::Matchers::ContainsSubstring("CAMERA_ID 7"));
}

TEST_CASE("writers round-trip through the parser") {
    Pcg32 rng(99);
    std::vector<ColmapImageRecord> records;
    for (int i = 0; i < 5; ++i) {
        Pose pose;
        double q[4], n2 = 0;
        for (double& qi : q) {
            qi = rng.next_double(-1, 1);
            n2 += qi * qi;
        }
        const double n = std::sqrt(n2);
        pose.qw = q[0] / n;
        pose.qx = q[1] / n;
        pose.qy = q[2] / n;
        pose.qz = q[3] / n;
        pose.translation = {rng.next_double(-2, 2), rng.next_double(-2, 2), rng.next_double(-2, 2)};
        records.push_back({i + 1, pose, 1, "view_" + std::to_string(i) + ".png"});
    }
    const Intrinsics intr{96, 72, 130.0, 130.0, 48.0, 36.0};
    const auto views = load_colmap(write_colmap_cameras({{1, intr}}), write_colmap_images(records));
    REQUIRE(views.size() == records.size());
    for (size_t i = 0; i < views.size(); ++i) {
        CHECK(views[i].image_name == records[i].name);
        CHECK(std::abs(views[i].pose.qw - records[i].pose.qw) < 1e-15);
        CHECK(std::abs(views[i].pose.qx - records[i].pose.qx) < 1e-15);
        CHECK(norm(views[i].pose.translation - records[i].pose.translation) < 1e-15);
        CHECK(views[i].intrinsics.width == 96);
    }
}
