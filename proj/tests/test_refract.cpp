#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "refray/mesh.hpp"
#include "refray/refract.hpp"
#include "refray/rng.hpp"

using namespace refray;
using Catch::Approx;

namespace {

// Random unit direction and a normal facing it, plus random indices.
struct Interface {
    Vec3 l, n;
    double n1, n2;
};

Interface random_interface(Pcg32& rng) {
    Interface itf;
    do {
        itf.l = {rng.next_double(-1, 1), rng.next_double(-1, 1), rng.next_double(-1, 1)};
    } while (norm(itf.l) < 1e-3);
    itf.l = normalize(itf.l);
    do {
        itf.n = {rng.next_double(-1, 1), rng.next_double(-1, 1), rng.next_double(-1, 1)};
        itf.n = normalize(itf.n);
    } while (norm(itf.n) < 1e-3 || dot(itf.n, itf.l) >= -1e-6);
    itf.n1 = rng.next_double(1.0, 2.0);
    itf.n2 = rng.next_double(1.0, 2.0);
    return itf;
}

}  // namespace

TEST_CASE("normal incidence passes straight through") {
    const RefractionEvent ev = refract_dir(Vec3{0, 0, -1}, Vec3{0, 0, 1}, 1.0, 1.5);
    CHECK(ev.kind == EventKind::Refract);
    CHECK(ev.cos_theta1 == Approx(1.0));
    CHECK(ev.cos_theta2 == Approx(1.0));
    CHECK(norm(ev.out_dir - Vec3{0, 0, -1}) < 1e-12);
}

TEST_CASE("45 degree air-to-glass matches the scalar Snell oracle") {
    const Vec3 l = normalize(Vec3{1, 0, -1});
    const RefractionEvent ev = refract_dir(l, Vec3{0, 0, 1}, 1.0, 1.5);
    REQUIRE(ev.kind == EventKind::Refract);
    // sin(theta2) = (n1/n2) sin(45deg), reassembled by hand.
    const double sin2 = std::sin(kPi / 4.0) / 1.5;
    CHECK(ev.cos_theta2 == Approx(std::sqrt(1.0 - sin2 * sin2)).margin(1e-12));
    CHECK(ev.cos_theta2 == Approx(0.88192).margin(1e-5));
    CHECK(ev.out_dir.x == Approx(0.47140).margin(1e-5));
    CHECK(ev.out_dir.y == Approx(0.0).margin(1e-12));
    CHECK(ev.out_dir.z == Approx(-0.88192).margin(1e-5));
}

TEST_CASE("total internal reflection mirrors at 60 degrees in glass") {
    const Vec3 l{std::sqrt(3.0) / 2.0, 0, 0.5};  // 60 degrees off the -z normal
    const RefractionEvent ev = refract_dir(l, Vec3{0, 0, -1}, 1.5, 1.0);
    REQUIRE(ev.kind == EventKind::TIR);
    CHECK(ev.cos_theta2 == 0.0);
    CHECK(ev.out_dir.x == Approx(std::sqrt(3.0) / 2.0).margin(1e-9));
    CHECK(ev.out_dir.z == Approx(-0.5).margin(1e-9));
}

TEST_CASE("refract_dir validates its inputs") {
    CHECK_THROWS_AS(refract_dir(Vec3{0, 0, -2}, Vec3{0, 0, 1}, 1.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(refract_dir(Vec3{0, 0, -1}, Vec3{0, 0, 2}, 1.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(refract_dir(Vec3{0, 0, 1}, Vec3{0, 0, 1}, 1.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(refract_dir(Vec3{0, 0, -1}, Vec3{0, 0, 1}, 0.5, 1.5), std::invalid_argument);
}

TEST_CASE("snell consistency, unit outputs, and the TIR guard hold on random interfaces") {
    Pcg32 rng(2024);
    int tir_seen = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const Interface itf = random_interface(rng);
        const RefractionEvent ev = refract_dir(itf.l, itf.n, itf.n1, itf.n2);

        CHECK(std::abs(norm(ev.out_dir) - 1.0) < 1e-9);

        const double sin1 = std::sqrt(std::max(0.0, 1.0 - ev.cos_theta1 * ev.cos_theta1));
        if (ev.kind == EventKind::Refract) {
            const double sin2 = std::sqrt(std::max(0.0, 1.0 - ev.cos_theta2 * ev.cos_theta2));
            CHECK(std::abs(itf.n1 * sin1 - itf.n2 * sin2) < 1e-9);
        } else {
            ++tir_seen;
            CHECK(itf.n1 > itf.n2);  // TIR only into the less dense medium
            CHECK(sin1 > itf.n2 / itf.n1 - 1e-12);
        }
    }
    CHECK(tir_seen > 100);
}

TEST_CASE("refraction is reversible through the interface") {
    Pcg32 rng(77);
    for (int trial = 0; trial < 2000; ++trial) {
        const Interface itf = random_interface(rng);
        const RefractionEvent fwd = refract_dir(itf.l, itf.n, itf.n1, itf.n2);
        if (fwd.kind != EventKind::Refract) continue;
        const RefractionEvent back = refract_dir(-fwd.out_dir, -itf.n, itf.n2, itf.n1);
        REQUIRE(back.kind == EventKind::Refract);
        CHECK(norm(back.out_dir - (-itf.l)) < 1e-6);
    }
}

TEST_CASE("build_path classifies misses as a single straight segment") {
    const AccelMesh accel(make_cube_mesh(Vec3{0, 0, 0}, 0.5));
    const RayPath path = build_path(Ray{{3, 3, 3}, {0, 0, 1}}, accel, 1.5, 10.0);
    CHECK(path.classification == PathClass::Miss);
    REQUIRE(path.segments.size() == 1);
    CHECK(path.events.empty());
    CHECK(path.segments[0].length == Approx(10.0));
}

TEST_CASE("normal incidence through a slab gives three collinear segments") {
    const AccelMesh accel(make_cube_mesh(Vec3{0, 0, 0}, 0.5));
    const RayPath path = build_path(Ray{{0.1, 0.2, -3}, {0, 0, 1}}, accel, 1.5, 10.0);
    CHECK(path.classification == PathClass::Through);
    REQUIRE(path.segments.size() == 3);
    REQUIRE(path.events.size() == 2);
    for (const auto& ev : path.events) {
        CHECK(ev.kind == EventKind::Refract);
        CHECK(norm(ev.out_dir - Vec3{0, 0, 1}) < 1e-12);
    }
    CHECK(path.events[0].n1 == Approx(1.0));
    CHECK(path.events[0].n2 == Approx(1.5));
    CHECK(path.events[1].n1 == Approx(1.5));
    CHECK(path.events[1].n2 == Approx(1.0));
    CHECK(path.total_length() == Approx(10.0));
}

TEST_CASE("path segments are continuous and counts line up") {
    const AccelMesh accel(make_icosphere(Vec3{0, 0, 0}, 0.8, 4));
    Pcg32 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        Vec3 origin{rng.next_double(-1, 1), rng.next_double(-1, 1), rng.next_double(-1, 1)};
        origin = normalize(origin) * 3.0;
        const Vec3 target{rng.next_double(-0.6, 0.6), rng.next_double(-0.6, 0.6), rng.next_double(-0.6, 0.6)};
        const RayPath path = build_path(Ray{origin, normalize(target - origin)}, accel, 1.5, 12.0);
        REQUIRE(path.segments.size() == path.events.size() + 1);
        for (size_t s = 0; s + 1 < path.segments.size(); ++s) {
            const Vec3 end = path.segments[s].origin + path.segments[s].direction * path.segments[s].length;
            CHECK(norm(end - path.segments[s + 1].origin) < 1e-6);
        }
        CHECK(path.total_length() == Approx(12.0).margin(1e-9));
    }
}

TEST_CASE("slab displacement matches the closed form") {
    // 45 degree ray through a 0.4-thick slab of glass: the exit ray is
    // parallel to the entry ray, displaced by d sin(t1 - t2) / cos(t2).
    const AccelMesh accel(build_accel(make_box_mesh(Vec3{0, 0, 0}, Vec3{1.2, 1.2, 0.2})));
    const Vec3 dir = normalize(Vec3{1, 0, -1});
    const Ray ray{Vec3{0, 0, 0} - dir * 2.0, dir};
    const RayPath path = build_path(ray, accel, 1.5, 10.0);
    REQUIRE(path.classification == PathClass::Through);
    REQUIRE(path.segments.size() == 3);

    const Vec3 exit_dir = path.segments[2].direction;
    CHECK(norm(exit_dir - dir) < 1e-9);  // parallel exit

    const double theta1 = kPi / 4.0;
    const double theta2 = std::asin(std::sin(theta1) / 1.5);
    const double expected = 0.4 * std::sin(theta1 - theta2) / std::cos(theta2);
    CHECK(expected == Approx(0.13165).margin(1e-4));

    const Vec3 offset = path.segments[2].origin - ray.origin;
    const Vec3 lateral = offset - dir * dot(offset, dir);
    CHECK(norm(lateral) == Approx(expected).margin(1e-9));
}

TEST_CASE("ior 1 paths sample like straight rays") {
    const AccelMesh accel(make_icosphere(Vec3{0, 0, 0}, 0.8, 4));
    Pcg32 rng(67);
    for (int trial = 0; trial < 100; ++trial) {
        Vec3 origin{rng.next_double(-1, 1), rng.next_double(-1, 1), rng.next_double(-1, 1)};
        origin = normalize(origin) * 3.0;
        const Vec3 target{rng.next_double(-0.5, 0.5), rng.next_double(-0.5, 0.5), rng.next_double(-0.5, 0.5)};
        const Ray ray{origin, normalize(target - origin)};
        const RayPath bent = build_path(ray, accel, 1.0, 8.0);
        const RayPath straight = straight_path(ray, 8.0);
        const auto a = sample_path(bent, 0.5, 7.5, 64);
        const auto b = sample_path(straight, 0.5, 7.5, 64);
        for (size_t s = 0; s < a.size(); ++s) {
            CHECK(norm(a[s].position - b[s].position) < 1e-6);
            CHECK(norm(a[s].direction - b[s].direction) < 1e-6);
        }
    }
}

TEST_CASE("sample_path places midpoints with uniform spacing") {
    RayPath path = straight_path(Ray{{0, 0, 0}, {1, 0, 0}}, 100.0);
    const auto samples = sample_path(path, 0.0, 4.0, 4);
    REQUIRE(samples.size() == 4);
    const double expected_s[4] = {0.5, 1.5, 2.5, 3.5};
    for (int i = 0; i < 4; ++i) {
        CHECK(samples[i].position.x == Approx(expected_s[i]));
        CHECK(samples[i].delta == Approx(1.0));
    }
}

TEST_CASE("sample_path walks across segment boundaries") {
    RayPath path;
    path.segments.push_back({{0, 0, 0}, {1, 0, 0}, 2.0});
    path.segments.push_back({{2, 0, 0}, {0, 1, 0}, 100.0});
    path.classification = PathClass::Through;
    const auto samples = sample_path(path, 0.0, 4.0, 4);
    REQUIRE(samples.size() == 4);
    CHECK(norm(samples[0].position - Vec3{0.5, 0, 0}) < 1e-12);
    CHECK(norm(samples[1].position - Vec3{1.5, 0, 0}) < 1e-12);
    CHECK(norm(samples[2].position - Vec3{2.0, 0.5, 0}) < 1e-12);
    CHECK(norm(samples[3].position - Vec3{2.0, 1.5, 0}) < 1e-12);
    CHECK(norm(samples[2].direction - Vec3{0, 1, 0}) < 1e-12);
    CHECK(norm(samples[3].direction - Vec3{0, 1, 0}) < 1e-12);
}

TEST_CASE("sample_path default count matches the configured 128") {
    RayPath path = straight_path(Ray{{0, 0, 0}, {1, 0, 0}}, 10.0);
    const auto samples = sample_path(path, 0.0, 10.0, 128);
    REQUIRE(samples.size() == 128);
    for (const auto& s : samples) CHECK(s.delta == Approx(10.0 / 128.0));
}

TEST_CASE("sample_path validates its window") {
    RayPath path = straight_path(Ray{{0, 0, 0}, {1, 0, 0}}, 10.0);
    CHECK_THROWS_AS(sample_path(path, 4.0, 4.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(sample_path(path, 5.0, 4.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(sample_path(path, 0.0, 4.0, 1), std::invalid_argument);
}

TEST_CASE("path csv dump lists segments with their events") {
    const AccelMesh accel(make_cube_mesh(Vec3{0, 0, 0}, 0.5));
    const RayPath path = build_path(Ray{{0.1, 0.2, -3}, {0, 0, 1}}, accel, 1.5, 10.0);
    std::ostringstream os;
    write_path_csv(os, {path});
    const std::string csv = os.str();
    CHECK(csv.find("ray_id,segment") != std::string::npos);
    CHECK(csv.find("refract") != std::string::npos);
    CHECK(csv.find("none") != std::string::npos);
}
