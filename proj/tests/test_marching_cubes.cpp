#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "refray/marching_cubes.hpp"

using namespace refray;
using Catch::Approx;

namespace {

double signed_volume(const TriMesh& mesh) {
    double vol = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        vol += dot(a, cross(b, c)) / 6.0;
    }
    return vol;
}

double total_area(const TriMesh& mesh) {
    double area = 0.0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) area += mesh.face_area(f);
    return area;
}

ScalarGrid sphere_grid(int K, double radius, double bbox_half, int smooth_radius) {
    GridSpec spec;
    spec.K = K;
    spec.bbox_min = {-bbox_half, -bbox_half, -bbox_half};
    spec.bbox_max = {bbox_half, bbox_half, bbox_half};
    OccupancyGrid occ(spec);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < K; ++j)
            for (int i = 0; i < K; ++i)
                if (norm(spec.voxel_center(i, j, k)) < radius) occ.set(i, j, k, 1);
    return smooth_occupancy(occ, smooth_radius);
}

}  // namespace

TEST_CASE("lookup tables are internally consistent") {
    using namespace mc_tables;
    for (int config = 0; config < 256; ++config) {
        // Complementary configurations cross the same edges.
        CHECK(edge_table[config] == edge_table[255 - config]);

        // The triangle list uses exactly the edges flagged in edge_table.
        uint16_t used = 0;
        int count = 0;
        for (int t = 0; t < 16 && tri_table[config][t] != -1; ++t) {
            const int e = tri_table[config][t];
            REQUIRE(e >= 0);
            REQUIRE(e < 12);
            used |= static_cast<uint16_t>(1u << e);
            ++count;
        }
        CHECK(count % 3 == 0);
        CHECK(used == edge_table[config]);

        // Triangles never repeat an edge within themselves.
        for (int t = 0; t + 2 < 16 && tri_table[config][t] != -1; t += 3) {
            const int a = tri_table[config][t], b = tri_table[config][t + 1], c = tri_table[config][t + 2];
            CHECK(a != b);
            CHECK(b != c);
            CHECK(c != a);
        }
    }
}

TEST_CASE("constant grids produce an empty mesh") {
    GridSpec spec;
    spec.K = 8;
    spec.bbox_min = {-1, -1, -1};
    spec.bbox_max = {1, 1, 1};
    ScalarGrid zeros(spec);
    CHECK(marching_cubes(zeros, 0.5).empty());
    ScalarGrid ones(spec);
    for (auto& v : ones.values) v = 1.0;
    CHECK(marching_cubes(ones, 0.5).empty());
}

TEST_CASE("isolevel must lie strictly inside (0, 1)") {
    ScalarGrid grid(GridSpec{4, {-1, -1, -1}, {1, 1, 1}});
    CHECK_THROWS_AS(marching_cubes(grid, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(marching_cubes(grid, 1.0), std::invalid_argument);
}

TEST_CASE("single hot corner yields one triangle at edge midpoints") {
    GridSpec spec;
    spec.K = 2;
    spec.bbox_min = {0, 0, 0};
    spec.bbox_max = {2, 2, 2};  // lattice points at 0.5 and 1.5
    ScalarGrid grid(spec);
    grid.set(0, 0, 0, 1.0);

    const TriMesh mesh = marching_cubes(grid, 0.5);
    REQUIRE(mesh.faces.size() == 1);
    REQUIRE(mesh.vertices.size() == 3);

    // Midpoints of the three edges leaving the hot corner, in any order.
    const std::vector<Vec3> expected = {{1.0, 0.5, 0.5}, {0.5, 1.0, 0.5}, {0.5, 0.5, 1.0}};
    for (const Vec3& e : expected) {
        bool found = false;
        for (const Vec3& v : mesh.vertices) found = found || norm(v - e) < 1e-12;
        CHECK(found);
    }

    // Orientation: the normal points from the high-valued corner outward.
    const Vec3 n = mesh.face_normal(0);
    CHECK(dot(n, Vec3{1, 1, 1}) > 0.0);
}

TEST_CASE("smoothed sphere surfaces are watertight and consistently oriented") {
    const ScalarGrid grid = sphere_grid(96, 1.0, 1.25, 1);
    const TriMesh mesh = marching_cubes(grid, 0.5);
    REQUIRE(mesh.faces.size() > 1000);

    CHECK(boundary_edge_count(mesh) == 0);

    // Consistent winding: every directed edge appears exactly once.
    std::set<std::pair<int, int>> directed;
    bool duplicate = false;
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) duplicate |= !directed.emplace(f[e], f[(e + 1) % 3]).second;
    CHECK_FALSE(duplicate);

    // Euler characteristic of a closed genus-0 surface.
    const long long V = static_cast<long long>(mesh.vertices.size());
    const long long F = static_cast<long long>(mesh.faces.size());
    const long long E = static_cast<long long>(directed.size() / 2);
    CHECK(V - E + F == 2);

    // Geometry within tolerance of the analytic sphere.
    CHECK(total_area(mesh) == Approx(4.0 * kPi).epsilon(0.10));
    CHECK(signed_volume(mesh) == Approx(4.0 / 3.0 * kPi).epsilon(0.10));

    // Outward orientation: face normals align with the radial direction.
    size_t outward = 0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const Vec3 centroid =
            (mesh.vertices[mesh.faces[f][0]] + mesh.vertices[mesh.faces[f][1]] + mesh.vertices[mesh.faces[f][2]]) / 3.0;
        if (dot(mesh.face_normal(f), centroid) > 0.0) ++outward;
    }
    CHECK(outward == mesh.faces.size());
}

TEST_CASE("no degenerate faces survive extraction") {
    const ScalarGrid grid = sphere_grid(32, 1.0, 1.3, 1);
    const TriMesh mesh = marching_cubes(grid, 0.5);
    for (size_t f = 0; f < mesh.faces.size(); ++f) CHECK(mesh.face_area(f) > 1e-12);
    for (const Vec3& n : mesh.normals) CHECK(norm(n) == Approx(1.0).margin(1e-6));
}

TEST_CASE("watertightness holds across isolevels and resolutions") {
    for (int K : {24, 48}) {
        for (double iso : {0.3, 0.5, 0.7}) {
            const ScalarGrid grid = sphere_grid(K, 1.0, 1.4, 1);
            const TriMesh mesh = marching_cubes(grid, iso);
            INFO("K=" << K << " iso=" << iso);
            CHECK(boundary_edge_count(mesh) == 0);
        }
    }
}
