// Triangulated domains: generators, structural validation, quadrature
// measures, boundary normals, convexity, and the text format.

#include <catch2/catch_amalgamated.hpp>

#include <cmcgraph/mesh.hpp>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "helpers.hpp"

using namespace cmcgraph;
using Catch::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

int count_edges(const TriangulatedDomain& dom) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : dom.triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[static_cast<size_t>(e)], b = t[static_cast<size_t>((e + 1) % 3)];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    return static_cast<int>(edges.size());
}
} // namespace

TEST_CASE("disk mesh structure", "[mesh]") {
    const TriangulatedDomain dom = generate_disk_mesh(1.0, 0.1);
    // rings of 6j vertices: V = 1 + 3 n (n+1) with n = ceil(R/h)
    CHECK(dom.num_vertices() == 1 + 3 * 10 * 11);
    CHECK(dom.num_vertices() - count_edges(dom) + dom.num_triangles() == 1);
    // boundary resolution ~ circumference / h within +-20%
    const auto nb = static_cast<double>(dom.boundary_loop.size());
    CHECK(nb >= 0.8 * 2.0 * kPi / 0.1);
    CHECK(nb <= 1.2 * 2.0 * kPi / 0.1);
    // the ring construction's longest edge is the sqrt(3) h diagonal between
    // the first two rings
    CHECK(dom.h_mesh <= 1.8 * 0.1);
    CHECK(dom.boundary_edges.size() == dom.boundary_loop.size());
    // boundary vertices sit exactly on the circle
    for (int v : dom.boundary_loop) CHECK(dom.vertices[v].norm() == Approx(1.0).margin(1e-12));
    // positive orientation everywhere
    for (const auto& t : dom.triangles)
        CHECK(detail::chart_area2(dom.vertices[t[0]], dom.vertices[t[1]], dom.vertices[t[2]]) > 0.0);

    const TriangulatedDomain off = generate_disk_mesh(0.5, 0.1, Vec<2>(1.0, -2.0));
    for (int v : off.boundary_loop)
        CHECK((off.vertices[v] - Vec<2>(1.0, -2.0)).norm() == Approx(0.5).margin(1e-12));
}

TEST_CASE("ellipse mesh", "[mesh]") {
    const TriangulatedDomain dom = generate_ellipse_mesh(2.0, 1.0, 0.1);
    for (int v : dom.boundary_loop) {
        const Vec<2>& p = dom.vertices[v];
        CHECK(p.x() * p.x() / 4.0 + p.y() * p.y() == Approx(1.0).margin(1e-12));
    }
    const Measures meas = measures(dom, make_euclidean());
    CHECK(meas.volume == Approx(2.0 * kPi).epsilon(0.02));

    // a = b reduces to the disk
    const TriangulatedDomain round = generate_ellipse_mesh(1.0, 1.0, 0.1);
    const TriangulatedDomain disk = generate_disk_mesh(1.0, 0.1);
    CHECK(round.num_vertices() == disk.num_vertices());
    CHECK(round.num_triangles() == disk.num_triangles());
    CHECK(round.boundary_loop.size() == disk.boundary_loop.size());
}

TEST_CASE("quadrature measures and refinement", "[mesh]") {
    const Metric2 euclid = make_euclidean();
    const TriangulatedDomain coarse = generate_disk_mesh(1.0, 0.1);
    const TriangulatedDomain fine = generate_disk_mesh(1.0, 0.05);

    const Measures mc = measures(coarse, euclid);
    const Measures mf = measures(fine, euclid);
    CHECK(mf.volume == Approx(kPi).epsilon(0.01));
    CHECK(mf.boundary_length == Approx(2.0 * kPi).epsilon(0.01));

    // second-order geometry: h -> h/2 shrinks the quadrature error >= 3x
    CHECK(std::abs(mc.volume - kPi) / std::abs(mf.volume - kPi) >= 3.0);
    CHECK(std::abs(mc.boundary_length - 2.0 * kPi) / std::abs(mf.boundary_length - 2.0 * kPi) >=
          3.0);

    // constant conformal factor: sigma = 4 I doubles lengths, quadruples areas
    Metric2 four;
    four.name = "four-eye";
    four.sigma = [](const Vec<2>&) { return Mat<2>(4.0 * Mat<2>::Identity()); };
    const Metric2 four_fd = with_fd_derivatives(four.sigma, 1e-5, four.name);
    const Measures m4 = measures(fine, four_fd);
    CHECK(m4.volume == Approx(4.0 * kPi).epsilon(0.01));
    CHECK(m4.boundary_length == Approx(4.0 * kPi).epsilon(0.01));

    // 1-point vs 3-point rules agree on affine integrands
    const double i1 = volume_integral_1pt(fine, euclid, [](const Vec<2>& x) { return 1.0 + x.x(); });
    const double i3 = volume_integral_3pt(fine, euclid, [](const Vec<2>& x) { return 1.0 + x.x(); });
    CHECK(i1 == Approx(i3).margin(1e-10));
}

TEST_CASE("boundary normals are sigma-orthonormal and inward", "[mesh]") {
    const TriangulatedDomain dom = generate_disk_mesh(1.0, 0.1);
    for (const Metric2& metric : {make_euclidean(), make_perturbed_flat(0.05)}) {
        const auto normals = boundary_normals(dom, metric);
        REQUIRE(normals.size() == dom.boundary_loop.size());
        const int nb = static_cast<int>(dom.boundary_loop.size());
        for (int i = 0; i < nb; ++i) {
            const int vp = dom.boundary_loop[(i + nb - 1) % nb];
            const int vn = dom.boundary_loop[(i + 1) % nb];
            const Vec<2> T = dom.vertices[vn] - dom.vertices[vp];
            const Vec<2>& x = dom.vertices[dom.boundary_loop[i]];
            const Mat<2> S = build_jet(metric, x, false).sigma;
            const Vec<2> nu = normals[static_cast<size_t>(i)].nu;
            CHECK(std::abs(nu.dot(S * T)) <= 1e-10 * T.norm());
            CHECK(nu.dot(S * nu) == Approx(1.0).margin(1e-12));
            CHECK(nu.dot(-x) > 0.0); // inward for the unit disk
        }
    }
}

TEST_CASE("boundary convexity", "[mesh]") {
    // disk radius R: geodesic curvature 1/R, O(h) convergent
    const ConvexityReport c1 = boundary_convexity(generate_disk_mesh(2.0, 0.1), make_euclidean());
    CHECK(c1.strictly_convex);
    CHECK(c1.kappa1 == Approx(0.5).epsilon(0.05));
    const ConvexityReport c2 = boundary_convexity(generate_disk_mesh(2.0, 0.05), make_euclidean());
    CHECK(std::abs(c2.kappa1 - 0.5) <= std::abs(c1.kappa1 - 0.5));

    // ellipse a=2, b=1: minimum curvature b/a^2 = 1/4 at the flat ends
    const ConvexityReport ce =
        boundary_convexity(generate_ellipse_mesh(2.0, 1.0, 0.05), make_euclidean());
    CHECK(ce.strictly_convex);
    CHECK(ce.kappa1 == Approx(0.25).epsilon(0.05));

    // star-shaped counterexample: concave between the lobes
    const ConvexityReport cs =
        boundary_convexity(generate_star_mesh(1.0, 0.08, 0.25, 5), make_euclidean());
    CHECK_FALSE(cs.strictly_convex);
    CHECK(cs.kappa1 < 0.0);
    CHECK_THROWS_AS(require_strictly_convex(cs), NotStrictlyConvex);
    CHECK_NOTHROW(require_strictly_convex(c1));
}

TEST_CASE("boundary distance field", "[mesh]") {
    const TriangulatedDomain dom = generate_disk_mesh(1.0, 0.1);
    const BoundaryDistance bd = boundary_distance(dom);
    for (int v : dom.boundary_loop) CHECK(bd.dist[static_cast<size_t>(v)] == 0.0);
    // center is about one radius from the boundary (polygonization slack)
    double dmax = 0.0;
    for (double d : bd.dist) dmax = std::max(dmax, d);
    CHECK(dmax == Approx(1.0).epsilon(0.02));
    for (int v = 0; v < dom.num_vertices(); ++v) {
        const int pos = bd.nearest_loop_pos[static_cast<size_t>(v)];
        REQUIRE(pos >= 0);
        REQUIRE(pos < static_cast<int>(dom.boundary_loop.size()));
        const double d = (dom.vertices[v] - dom.vertices[dom.boundary_loop[pos]]).norm();
        CHECK(d == Approx(bd.dist[static_cast<size_t>(v)]).margin(1e-14));
    }
}

TEST_CASE("text format round trip", "[mesh]") {
    const TriangulatedDomain dom = generate_disk_mesh(1.0, 0.2, Vec<2>(0.25, -0.5));
    std::ostringstream os;
    write_mesh(os, dom);
    std::istringstream is(os.str());
    const TriangulatedDomain back = read_mesh(is);
    REQUIRE(back.num_vertices() == dom.num_vertices());
    REQUIRE(back.num_triangles() == dom.num_triangles());
    REQUIRE(back.boundary_edges.size() == dom.boundary_edges.size());
    for (int v = 0; v < dom.num_vertices(); ++v) {
        CHECK(back.vertices[v].x() == dom.vertices[v].x());
        CHECK(back.vertices[v].y() == dom.vertices[v].y());
    }
    for (size_t t = 0; t < dom.triangles.size(); ++t) CHECK(back.triangles[t] == dom.triangles[t]);
    CHECK(back.boundary_loop == dom.boundary_loop);
    CHECK(back.h_mesh == Approx(dom.h_mesh));

    // comments and blank lines are tolerated
    std::istringstream commented("# a comment\nVERTICES 3 # trailing\n0 0\n1 0 # vertex\n0 1\n\n"
                                 "TRIANGLES 1\n1 2 3\nBOUNDARY 3\n1 2\n2 3\n3 1\n");
    const TriangulatedDomain tri = read_mesh(commented);
    CHECK(tri.num_vertices() == 3);
    CHECK(tri.boundary_loop.size() == 3);
}

TEST_CASE("malformed mesh files are rejected with line context", "[mesh]") {
    auto expect_bad = [](const std::string& text) {
        std::istringstream is(text);
        CHECK_THROWS_AS(read_mesh(is), Error);
    };
    expect_bad("");                                                  // empty
    expect_bad("VERTICES 2\n0 0\n1 0\n");                            // too few vertices
    expect_bad("VERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n1 2\n");     // short triangle line
    expect_bad("VERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n1 2 4\n"
               "BOUNDARY 3\n1 2\n2 3\n3 1\n");                       // index out of range
    expect_bad("VERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n1 2 3\n");   // missing boundary
    expect_bad("VERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n1 3 2\n"
               "BOUNDARY 3\n1 2\n2 3\n3 1\n");                       // negative orientation
    expect_bad("VERTICES 4\n0 0\n1 0\n0 1\n1 1\nTRIANGLES 1\n1 2 3\n"
               "BOUNDARY 3\n1 2\n2 3\n3 1\n");                       // dangling vertex
    {
        // line number is reported
        std::istringstream is("VERTICES 3\n0 0\nbroken\n0 1\n");
        try {
            read_mesh(is);
            FAIL("expected MeshFormatError");
        } catch (const MeshFormatError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
}

TEST_CASE("structural validation catches broken meshes", "[mesh]") {
    // hole: removing an interior triangle creates a second boundary loop
    TriangulatedDomain dom = generate_disk_mesh(1.0, 0.25);
    TriangulatedDomain holed = dom;
    size_t interior = 0;
    for (size_t t = 0; t < holed.triangles.size(); ++t) {
        const auto& tri = holed.triangles[t];
        if (!holed.is_boundary_vertex(tri[0]) && !holed.is_boundary_vertex(tri[1]) &&
            !holed.is_boundary_vertex(tri[2]))
            interior = t;
    }
    holed.triangles.erase(holed.triangles.begin() + static_cast<long>(interior));
    CHECK_THROWS_AS(validate(holed), DegenerateMesh);

    // duplicated triangle: an edge is used twice in the same direction
    TriangulatedDomain dup = dom;
    dup.triangles.push_back(dup.triangles.front());
    CHECK_THROWS_AS(validate(dup), DegenerateMesh);

    // zero-area triangle
    TriangulatedDomain flat = dom;
    flat.triangles.push_back({0, 1, 1});
    CHECK_THROWS_AS(validate(flat), DegenerateMesh);

    // non-finite coordinates
    TriangulatedDomain nan = dom;
    nan.vertices[0] = Vec<2>(std::nan(""), 0.0);
    CHECK_THROWS_AS(validate(nan), DegenerateMesh);

    // generator rejects non-positive parameters with the field named
    CHECK_THROWS_AS(generate_disk_mesh(1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(generate_disk_mesh(-1.0, 0.1), ConfigError);
    CHECK_THROWS_AS(generate_ellipse_mesh(0.0, 1.0, 0.1), ConfigError);
    try {
        generate_disk_mesh(1.0, 0.0);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("h") != std::string::npos);
    }
}

TEST_CASE("star mesh remains a valid simply connected domain", "[mesh]") {
    const TriangulatedDomain dom = generate_star_mesh(1.0, 0.1, 0.25, 5);
    CHECK(dom.num_vertices() - count_edges(dom) + dom.num_triangles() == 1);
    CHECK(dom.boundary_loop.size() == dom.boundary_edges.size());
    for (const auto& t : dom.triangles)
        CHECK(detail::chart_area2(dom.vertices[t[0]], dom.vertices[t[1]], dom.vertices[t[2]]) > 0.0);
}
