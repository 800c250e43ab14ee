#include <catch2/catch_amalgamated.hpp>

#include "refray/bvh.hpp"
#include "refray/mesh.hpp"
#include "refray/rng.hpp"

using namespace refray;
using Catch::Approx;

namespace {

// Brute-force nearest-hit oracle with its own plane/barycentric intersection,
// independent of the Moller-Trumbore routine inside the accelerator.
struct BruteHit {
    double t = 0.0;
    int face = -1;
};

std::optional<BruteHit> brute_force_nearest(const TriMesh& mesh, const Ray& ray, double t_min) {
    BruteHit best;
    best.t = 1e300;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const Vec3& a = mesh.vertices[mesh.faces[f][0]];
        const Vec3& b = mesh.vertices[mesh.faces[f][1]];
        const Vec3& c = mesh.vertices[mesh.faces[f][2]];
        const Vec3 n = cross(b - a, c - a);
        const double denom = dot(n, ray.direction);
        if (std::abs(denom) < 1e-14) continue;
        const double t = dot(n, a - ray.origin) / denom;
        if (t <= t_min || t >= best.t) continue;
        const Vec3 p = ray.origin + ray.direction * t;
        // Inside test via consistent signs of sub-triangle normals.
        const double s0 = dot(n, cross(b - a, p - a));
        const double s1 = dot(n, cross(c - b, p - b));
        const double s2 = dot(n, cross(a - c, p - c));
        if (s0 >= 0 && s1 >= 0 && s2 >= 0) {
            best.t = t;
            best.face = static_cast<int>(f);
        }
    }
    if (best.face < 0) return std::nullopt;
    return best;
}

}  // namespace

TEST_CASE("single-triangle accelerator matches a direct test") {
    TriMesh tri;
    tri.vertices = {{-1, -1, 0}, {1, -1, 0}, {0, 1, 0}};
    tri.faces = {{0, 1, 2}};
    compute_vertex_normals(tri);
    const AccelMesh accel(tri);

    const auto hit = accel.intersect(Ray{{0, 0, -2}, {0, 0, 1}}, 1e-6);
    REQUIRE(hit.has_value());
    CHECK(hit->t == Approx(2.0));
    CHECK(hit->face == 0);
    CHECK(hit->entering == false);  // triangle normal points +z, ray travels +z
    CHECK(dot(hit->normal, Vec3{0, 0, 1}) < 0.0);  // flipped toward the ray

    CHECK_FALSE(accel.intersect(Ray{{0, 0, -2}, {0, 0, -1}}, 1e-6).has_value());
}

TEST_CASE("build_accel rejects empty meshes") {
    TriMesh empty;
    CHECK_THROWS_AS(build_accel(empty), std::invalid_argument);
}

TEST_CASE("icosphere nearest hits match brute force exactly") {
    const TriMesh sphere = make_icosphere(Vec3{0, 0, 0}, 1.0, 4);  // 5120 faces
    const AccelMesh accel(sphere);
    const double t_min = 1e-7;
    const double diag = accel.scene_diagonal();

    Pcg32 rng(41);
    int hits = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        // Origin on a radius-3 shell, aimed at a random point well inside.
        Vec3 origin{rng.next_double(-1, 1), rng.next_double(-1, 1), rng.next_double(-1, 1)};
        origin = normalize(origin) * 3.0;
        const Vec3 target{rng.next_double(-0.8, 0.8), rng.next_double(-0.8, 0.8), rng.next_double(-0.8, 0.8)};
        const Ray ray{origin, normalize(target - origin)};

        const auto fast = accel.intersect(ray, t_min);
        const auto slow = brute_force_nearest(sphere, ray, t_min);
        REQUIRE(fast.has_value() == slow.has_value());
        if (fast) {
            ++hits;
            CHECK(fast->face == slow->face);
            CHECK(std::abs(fast->t - slow->t) < 1e-9 * diag);
        }
    }
    CHECK(hits > 900);  // essentially every aimed ray should hit
}

TEST_CASE("rays missing the root box test no triangles") {
    const TriMesh sphere = make_icosphere(Vec3{0, 0, 0}, 1.0, 3);
    const AccelMesh accel(sphere);
    IntersectStats stats;
    const auto hit = accel.intersect(Ray{{5, 5, 5}, {0, 0, 1}}, 1e-6, &stats);
    CHECK_FALSE(hit.has_value());
    CHECK(stats.triangle_tests == 0);
    CHECK(stats.node_visits == 1);
}

TEST_CASE("axis-aligned cube slab arithmetic") {
    const AccelMesh accel(make_cube_mesh(Vec3{0, 0, 0}, 0.5));

    SECTION("front face from outside") {
        const auto hit = accel.intersect(Ray{{0, 0, -3}, {0, 0, 1}}, accel.default_t_min());
        REQUIRE(hit.has_value());
        CHECK(hit->t == Approx(2.5));
        CHECK(norm(hit->point - Vec3{0, 0, -0.5}) < 1e-12);
        CHECK(hit->entering == true);
        CHECK(norm(hit->normal - Vec3{0, 0, -1}) < 1e-12);
    }

    SECTION("exit face from inside") {
        const auto hit = accel.intersect(Ray{{0, 0, 0}, {0, 0, 1}}, 1e-4);
        REQUIRE(hit.has_value());
        CHECK(hit->t == Approx(0.5));
        CHECK(hit->entering == false);
        CHECK(norm(hit->normal - Vec3{0, 0, -1}) < 1e-12);  // flipped toward the ray
    }

    SECTION("nothing behind t_min") {
        const auto hit = accel.intersect(Ray{{0, 0, 2}, {0, 0, 1}}, 1e-4);
        CHECK_FALSE(hit.has_value());
    }
}

TEST_CASE("interpolated normals are unit length and face the ray") {
    const TriMesh sphere = make_icosphere(Vec3{0, 0, 0}, 1.0, 3);
    const AccelMesh accel(sphere);
    Pcg32 rng(53);
    for (int trial = 0; trial < 200; ++trial) {
        Vec3 origin{rng.next_double(-1, 1), rng.next_double(-1, 1), rng.next_double(-1, 1)};
        origin = normalize(origin) * 4.0;
        const Ray ray{origin, normalize(Vec3{rng.next_double(-0.5, 0.5), rng.next_double(-0.5, 0.5),
                                             rng.next_double(-0.5, 0.5)} -
                                        origin)};
        const auto hit = accel.intersect(ray, 1e-6);
        if (!hit) continue;
        CHECK(norm(hit->normal) == Approx(1.0).margin(1e-9));
        CHECK(dot(hit->normal, ray.direction) < 0.0);
        // Entry hits on a sphere from outside: the normal is nearly radial.
        if (hit->entering) CHECK(dot(hit->normal, normalize(hit->point)) > 0.9);
    }
}
