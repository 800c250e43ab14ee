#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "refray/mesh.hpp"

using namespace refray;
using Catch::Approx;

namespace {

double signed_volume(const TriMesh& mesh) {
    double vol = 0.0;
    for (const auto& f : mesh.faces)
        vol += dot(mesh.vertices[f[0]], cross(mesh.vertices[f[1]], mesh.vertices[f[2]])) / 6.0;
    return vol;
}

}  // namespace

TEST_CASE("planar triangle gets the plane normal at every vertex") {
    TriMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    mesh.faces = {{0, 1, 2}};  // CCW seen from +z
    const size_t isolated = compute_vertex_normals(mesh);
    CHECK(isolated == 0);
    for (const Vec3& n : mesh.normals) {
        CHECK(n.x == Approx(0.0).margin(1e-15));
        CHECK(n.y == Approx(0.0).margin(1e-15));
        CHECK(n.z == Approx(1.0));
    }
}

TEST_CASE("isolated vertices are flagged and get a placeholder normal") {
    TriMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}};
    mesh.faces = {{0, 1, 2}};
    const size_t isolated = compute_vertex_normals(mesh);
    CHECK(isolated == 1);
    CHECK(norm(mesh.normals[3] - Vec3{0, 0, 1}) < 1e-15);
}

TEST_CASE("welded cube corners average to the diagonal direction") {
    const TriMesh cube = make_welded_cube_mesh(Vec3{0, 0, 0}, 1.0);
    REQUIRE(cube.vertices.size() == 8);
    REQUIRE(cube.faces.size() == 12);
    const double inv = 1.0 / std::sqrt(3.0);
    for (size_t v = 0; v < cube.vertices.size(); ++v) {
        const Vec3 expected = normalize(cube.vertices[v]);
        CHECK(std::abs(cube.normals[v].x - expected.x) < 1e-12);
        CHECK(std::abs(cube.normals[v].y - expected.y) < 1e-12);
        CHECK(std::abs(cube.normals[v].z - expected.z) < 1e-12);
        CHECK(std::abs(std::abs(cube.normals[v].x) - inv) < 1e-12);
    }
}

TEST_CASE("box mesh has exact per-face normals and outward orientation") {
    const Vec3 center{0.5, -1.0, 2.0};
    const TriMesh box = make_box_mesh(center, Vec3{0.4, 0.6, 0.2});
    REQUIRE(box.vertices.size() == 24);
    REQUIRE(box.faces.size() == 12);
    for (size_t f = 0; f < box.faces.size(); ++f) {
        const auto& tri = box.faces[f];
        const Vec3 geom = box.face_normal(f);
        // Duplicated per-face vertices: stored normals equal the face normal.
        for (int c = 0; c < 3; ++c) CHECK(norm(box.normals[tri[c]] - geom) < 1e-12);
        const Vec3 centroid = (box.vertices[tri[0]] + box.vertices[tri[1]] + box.vertices[tri[2]]) / 3.0;
        CHECK(dot(geom, centroid - center) > 0.0);
    }
}

TEST_CASE("icosphere vertices carry exact radial normals") {
    const Vec3 center{1, 2, 3};
    const double radius = 0.7;
    const TriMesh sphere = make_icosphere(center, radius, 3);
    REQUIRE(sphere.faces.size() == 20 * 64);
    for (size_t v = 0; v < sphere.vertices.size(); ++v) {
        CHECK(norm(sphere.vertices[v] - center) == Approx(radius).margin(1e-12));
        CHECK(norm(sphere.normals[v] - normalize(sphere.vertices[v] - center)) < 1e-12);
    }
    CHECK(signed_volume(sphere) > 0.0);  // outward orientation
}

TEST_CASE("laplacian smoothing with lambda 0 or iters 0 is the identity") {
    TriMesh sphere = make_icosphere(Vec3{0, 0, 0}, 1.0, 2);
    const std::vector<Vec3> before = sphere.vertices;

    laplacian_smooth(sphere, 0.0, 10);
    for (size_t v = 0; v < before.size(); ++v) CHECK(norm(sphere.vertices[v] - before[v]) < 1e-15);

    laplacian_smooth(sphere, 0.5, 0);
    for (size_t v = 0; v < before.size(); ++v) CHECK(norm(sphere.vertices[v] - before[v]) < 1e-15);
}

TEST_CASE("laplacian smoothing shrinks an icosphere") {
    TriMesh sphere = make_icosphere(Vec3{0, 0, 0}, 1.0, 3);
    const double before = signed_volume(sphere);
    const size_t n_vertices = sphere.vertices.size();
    const size_t n_faces = sphere.faces.size();

    laplacian_smooth(sphere, 0.5, 10);
    CHECK(sphere.vertices.size() == n_vertices);
    CHECK(sphere.faces.size() == n_faces);
    CHECK(signed_volume(sphere) < before);
    for (const Vec3& n : sphere.normals) CHECK(norm(n) == Approx(1.0).margin(1e-9));
}

TEST_CASE("laplacian smoothing validates its arguments") {
    TriMesh mesh = make_welded_cube_mesh(Vec3{0, 0, 0}, 1.0);
    CHECK_THROWS_AS(laplacian_smooth(mesh, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(laplacian_smooth(mesh, 1.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(laplacian_smooth(mesh, 0.5, -1), std::invalid_argument);
}

TEST_CASE("obj files round trip exactly") {
    const TriMesh sphere = make_icosphere(Vec3{0.25, -0.5, 1.0}, 0.8, 2);
    const auto path = std::filesystem::temp_directory_path() / "refray_test_mesh.obj";
    save_obj(path.string(), sphere);
    const TriMesh back = load_obj(path.string());
    REQUIRE(back.vertices.size() == sphere.vertices.size());
    REQUIRE(back.faces.size() == sphere.faces.size());
    for (size_t v = 0; v < sphere.vertices.size(); ++v) {
        CHECK(norm(back.vertices[v] - sphere.vertices[v]) == Approx(0.0).margin(1e-15));
        CHECK(norm(back.normals[v] - sphere.normals[v]) == Approx(0.0).margin(1e-9));
    }
    CHECK(back.faces == sphere.faces);
    std::filesystem::remove(path);
}

TEST_CASE("obj parser recomputes normals when the file has none") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    const TriMesh mesh = parse_obj(in, "inline");
    REQUIRE(mesh.normals.size() == 3);
    CHECK(norm(mesh.normals[0] - Vec3{0, 0, 1}) < 1e-12);
}

TEST_CASE("obj parser reports malformed input") {
    std::istringstream bad_vertex("v 0 0\n");
    CHECK_THROWS_WITH(parse_obj(bad_vertex, "inline"), Catch::Matchers::ContainsSubstring("line 1"));
    std::istringstream bad_face("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    CHECK_THROWS_WITH(parse_obj(bad_face, "inline"), Catch::Matchers::ContainsSubstring("out of range"));
}
