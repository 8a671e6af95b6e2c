#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "jet.hpp"
#include "metric.hpp"

namespace cmcgraph {

// Simplicial chart region with disk topology. Triangles are positively
// oriented in the chart; boundary_edges are directed (a, b) with the domain
// on the left and form one closed loop.
struct TriangulatedDomain {
    std::vector<Vec<2>> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> boundary_edges;
    std::vector<int> boundary_loop; // ordered vertex indices around the loop
    double h_mesh = 0.0;            // max chart edge length

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }

    bool is_boundary_vertex(int v) const {
        return boundary_flag_.empty() ? false : boundary_flag_[static_cast<size_t>(v)] != 0;
    }
    // position of v in boundary_loop, or -1
    int loop_position(int v) const {
        return loop_pos_.empty() ? -1 : loop_pos_[static_cast<size_t>(v)];
    }

    // filled by validate()
    std::vector<std::uint8_t> boundary_flag_;
    std::vector<int> loop_pos_;
};

namespace detail {

inline double chart_area2(const Vec<2>& a, const Vec<2>& b, const Vec<2>& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

} // namespace detail

// Checks every structural invariant (orientation, incidence, Euler
// characteristic, closed single boundary loop) and fills the derived fields
// (h_mesh, loop, flags). Throws DegenerateMesh on violation.
inline void validate(TriangulatedDomain& dom) {
    const int V = dom.num_vertices();
    const int F = dom.num_triangles();
    if (V < 3 || F < 1) throw DegenerateMesh("mesh too small");
    for (const auto& p : dom.vertices)
        if (!p.allFinite()) throw DegenerateMesh("non-finite vertex coordinate");

    // edge -> (count, directed presence)
    std::map<std::pair<int, int>, int> edge_count;
    std::map<std::pair<int, int>, int> directed; // (a,b) as ordered in a triangle
    double hmax = 0.0;
    for (const auto& t : dom.triangles) {
        for (int v : t)
            if (v < 0 || v >= V) throw DegenerateMesh("triangle index out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw DegenerateMesh("triangle with repeated vertex");
        for (int e = 0; e < 3; ++e) {
            const int a = t[e], b = t[(e + 1) % 3];
            hmax = std::max(hmax, (dom.vertices[b] - dom.vertices[a]).norm());
            edge_count[{std::min(a, b), std::max(a, b)}] += 1;
            directed[{a, b}] += 1;
        }
    }
    dom.h_mesh = hmax;

    for (const auto& t : dom.triangles) {
        const double a2 =
            detail::chart_area2(dom.vertices[t[0]], dom.vertices[t[1]], dom.vertices[t[2]]);
        if (a2 <= 2e-12 * hmax * hmax)
            throw DegenerateMesh("degenerate or negatively oriented triangle");
    }

    const int E = static_cast<int>(edge_count.size());
    if (V - E + F != 1) throw DegenerateMesh("Euler characteristic != 1 (not a disk)");

    // boundary edges = undirected edges used once; each must appear in
    // dom.boundary_edges with the orientation induced by its triangle
    int nb = 0;
    for (const auto& [e, c] : edge_count) {
        if (c == 1) ++nb;
        else if (c != 2) throw DegenerateMesh("edge shared by more than two triangles");
    }
    if (static_cast<int>(dom.boundary_edges.size()) != nb)
        throw DegenerateMesh("boundary edge list does not match mesh boundary");

    std::vector<int> next(static_cast<size_t>(V), -1), prev(static_cast<size_t>(V), -1);
    for (const auto& [a, b] : dom.boundary_edges) {
        if (a < 0 || a >= V || b < 0 || b >= V) throw DegenerateMesh("boundary index out of range");
        auto it = edge_count.find({std::min(a, b), std::max(a, b)});
        if (it == edge_count.end() || it->second != 1)
            throw DegenerateMesh("listed boundary edge is not a boundary edge of the mesh");
        if (directed.find({a, b}) == directed.end())
            throw DegenerateMesh("boundary edge oriented against its triangle (domain not on the left)");
        if (next[static_cast<size_t>(a)] != -1 || prev[static_cast<size_t>(b)] != -1)
            throw DegenerateMesh("boundary is not a simple loop");
        next[static_cast<size_t>(a)] = b;
        prev[static_cast<size_t>(b)] = a;
    }

    dom.boundary_loop.clear();
    dom.boundary_flag_.assign(static_cast<size_t>(V), 0);
    dom.loop_pos_.assign(static_cast<size_t>(V), -1);
    if (nb > 0) {
        const int start = dom.boundary_edges[0][0];
        int v = start;
        do {
            dom.loop_pos_[static_cast<size_t>(v)] = static_cast<int>(dom.boundary_loop.size());
            dom.boundary_loop.push_back(v);
            dom.boundary_flag_[static_cast<size_t>(v)] = 1;
            v = next[static_cast<size_t>(v)];
            if (v < 0) throw DegenerateMesh("boundary loop not closed");
        } while (v != start && static_cast<int>(dom.boundary_loop.size()) <= nb);
        if (v != start || static_cast<int>(dom.boundary_loop.size()) != nb)
            throw DegenerateMesh("boundary edges form more than one loop");
    }
}

namespace detail {

inline void fix_orientation(TriangulatedDomain& dom) {
    for (auto& t : dom.triangles) {
        if (chart_area2(dom.vertices[t[0]], dom.vertices[t[1]], dom.vertices[t[2]]) < 0.0)
            std::swap(t[1], t[2]);
    }
}

} // namespace detail

// Structured disk triangulation: concentric rings at radius j*R/n with 6j
// vertices on ring j; ring n lies exactly on the circle. Adjacent rings are
// stitched by an angular two-pointer sweep.
inline TriangulatedDomain generate_disk_mesh(double radius, double h, Vec<2> center = Vec<2>::Zero()) {
    if (!(radius > 0.0)) throw ConfigError("disk mesh: radius must be positive");
    if (!(h > 0.0) || h >= radius) throw ConfigError("disk mesh: need 0 < h < radius");
    const int n = std::max(1, static_cast<int>(std::ceil(radius / h)));
    const double dr = radius / n;
    const double two_pi = 2.0 * std::numbers::pi;

    TriangulatedDomain dom;
    dom.vertices.push_back(center);
    std::vector<int> ring_base(static_cast<size_t>(n) + 1, 0);
    for (int j = 1; j <= n; ++j) {
        ring_base[static_cast<size_t>(j)] = dom.num_vertices();
        const int m = 6 * j;
        for (int i = 0; i < m; ++i) {
            const double th = two_pi * i / m;
            dom.vertices.push_back(center + Vec<2>(j * dr * std::cos(th), j * dr * std::sin(th)));
        }
    }

    // center fan
    for (int i = 0; i < 6; ++i)
        dom.triangles.push_back({0, ring_base[1] + i, ring_base[1] + (i + 1) % 6});

    // annulus between ring j-1 (inner, ni pts) and ring j (outer, no pts)
    for (int j = 2; j <= n; ++j) {
        const int ni = 6 * (j - 1), no = 6 * j;
        const int bi = ring_base[static_cast<size_t>(j - 1)], bo = ring_base[static_cast<size_t>(j)];
        int i = 0, k = 0;
        while (i < no || k < ni) {
            const double ang_o = (i < no) ? (i + 1.0) / no : 2.0;
            const double ang_i = (k < ni) ? (k + 1.0) / ni : 2.0;
            if (ang_o <= ang_i) {
                dom.triangles.push_back({bo + i % no, bo + (i + 1) % no, bi + k % ni});
                ++i;
            } else {
                dom.triangles.push_back({bo + i % no, bi + (k + 1) % ni, bi + k % ni});
                ++k;
            }
        }
    }

    detail::fix_orientation(dom);
    const int nb = 6 * n, bb = ring_base[static_cast<size_t>(n)];
    for (int i = 0; i < nb; ++i) dom.boundary_edges.push_back({bb + i, bb + (i + 1) % nb});
    validate(dom);
    if (dom.triangles.empty()) throw DegenerateMesh("disk mesh: empty triangulation");
    return dom;
}

// Ellipse x = (a cos, b sin): image of the unit-disk mesh under (a x, b y),
// generated at target edge length h / max(a, b) so h_mesh stays near h.
inline TriangulatedDomain generate_ellipse_mesh(double a, double b, double h) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("ellipse mesh: semi-axes must be positive");
    const double s = std::max(a, b);
    TriangulatedDomain dom = generate_disk_mesh(1.0, h / s);
    for (auto& p : dom.vertices) p = Vec<2>(a * p.x(), b * p.y());
    validate(dom);
    return dom;
}

// Star-shaped (non-convex for delta*k^2 > 1) test boundary: radial map
// r -> r (1 + delta (r/R)^3 cos(k theta)) applied to a disk mesh. Used as the
// constructed counterexample for the convexity check.
inline TriangulatedDomain generate_star_mesh(double radius, double h, double delta, int k_lobes,
                                             Vec<2> center = Vec<2>::Zero()) {
    TriangulatedDomain dom = generate_disk_mesh(radius, h, center);
    for (auto& p : dom.vertices) {
        const Vec<2> d = p - center;
        const double r = d.norm();
        if (r < 1e-14) continue;
        const double th = std::atan2(d.y(), d.x());
        const double g = 1.0 + delta * std::pow(r / radius, 3) * std::cos(k_lobes * th);
        p = center + g * d;
    }
    validate(dom);
    return dom;
}

// ---------------------------------------------------------------------------
// Quadrature measures under sigma

struct Measures {
    std::vector<double> tri_weight;   // sqrt(det sigma(centroid)) * |T|_chart
    std::vector<double> edge_length;  // sigma-length of boundary_edges[i] (2-pt Gauss)
    double volume = 0.0;              // sum of tri_weight
    double boundary_length = 0.0;     // sum of edge_length
};

namespace detail {

inline constexpr double kGaussA = 0.5 - 0.5 / 1.7320508075688772;
inline constexpr double kGaussB = 0.5 + 0.5 / 1.7320508075688772;

inline double sigma_edge_length(const MetricField<2>& metric, const Vec<2>& xa, const Vec<2>& xb) {
    const Vec<2> d = xb - xa;
    double ell = 0.0;
    for (double s : {kGaussA, kGaussB}) {
        const Vec<2> x = (1.0 - s) * xa + s * xb;
        ell += 0.5 * std::sqrt(d.dot(metric.sigma(x) * d));
    }
    return ell;
}

} // namespace detail

inline Measures measures(const TriangulatedDomain& dom, const MetricField<2>& metric) {
    Measures m;
    m.tri_weight.reserve(dom.triangles.size());
    for (const auto& t : dom.triangles) {
        const Vec<2>&p0 = dom.vertices[t[0]], &p1 = dom.vertices[t[1]], &p2 = dom.vertices[t[2]];
        const double area = 0.5 * detail::chart_area2(p0, p1, p2);
        const Vec<2> c = (p0 + p1 + p2) / 3.0;
        const double w = std::sqrt(metric.sigma(c).determinant()) * area;
        m.tri_weight.push_back(w);
        m.volume += w;
    }
    m.edge_length.reserve(dom.boundary_edges.size());
    for (const auto& [a, b] : dom.boundary_edges) {
        const double ell = detail::sigma_edge_length(metric, dom.vertices[a], dom.vertices[b]);
        m.edge_length.push_back(ell);
        m.boundary_length += ell;
    }
    return m;
}

// One-point (centroid) volume quadrature of a scalar function.
template <class F>
inline double volume_integral_1pt(const TriangulatedDomain& dom, const MetricField<2>& metric, F&& f) {
    double s = 0.0;
    for (const auto& t : dom.triangles) {
        const Vec<2>&p0 = dom.vertices[t[0]], &p1 = dom.vertices[t[1]], &p2 = dom.vertices[t[2]];
        const double area = 0.5 * detail::chart_area2(p0, p1, p2);
        const Vec<2> c = (p0 + p1 + p2) / 3.0;
        s += std::sqrt(metric.sigma(c).determinant()) * area * f(c);
    }
    return s;
}

// Three-point (edge midpoint) volume quadrature; exact for quadratics when
// the density is constant.
template <class F>
inline double volume_integral_3pt(const TriangulatedDomain& dom, const MetricField<2>& metric, F&& f) {
    double s = 0.0;
    for (const auto& t : dom.triangles) {
        const Vec<2>&p0 = dom.vertices[t[0]], &p1 = dom.vertices[t[1]], &p2 = dom.vertices[t[2]];
        const double area = 0.5 * detail::chart_area2(p0, p1, p2);
        const Vec<2> m01 = 0.5 * (p0 + p1), m12 = 0.5 * (p1 + p2), m20 = 0.5 * (p2 + p0);
        for (const Vec<2>& q : {m01, m12, m20})
            s += std::sqrt(metric.sigma(q).determinant()) * (area / 3.0) * f(q);
    }
    return s;
}

// Chart distance from each vertex to the nearest boundary vertex, plus the
// loop position of that nearest vertex. Zero exactly on the boundary and
// increasing into the domain.
struct BoundaryDistance {
    std::vector<double> dist;
    std::vector<int> nearest_loop_pos;
};

inline BoundaryDistance boundary_distance(const TriangulatedDomain& dom) {
    const int V = dom.num_vertices();
    const int nb = static_cast<int>(dom.boundary_loop.size());
    BoundaryDistance bd;
    bd.dist.assign(static_cast<size_t>(V), 0.0);
    bd.nearest_loop_pos.assign(static_cast<size_t>(V), 0);
    for (int v = 0; v < V; ++v) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int i = 0; i < nb; ++i) {
            const double d = (dom.vertices[v] - dom.vertices[dom.boundary_loop[i]]).norm();
            if (d < best) {
                best = d;
                arg = i;
            }
        }
        bd.dist[static_cast<size_t>(v)] = best;
        bd.nearest_loop_pos[static_cast<size_t>(v)] = arg;
    }
    return bd;
}

// ---------------------------------------------------------------------------
// Boundary normals and convexity

// Inward sigma-unit normal at a boundary vertex, as vector and covector.
struct BoundaryNormal {
    Vec<2> nu;     // vector nu^i, <nu,nu>_sigma = 1
    Vec<2> nu_cov; // covector sigma_ij nu^j
};

namespace detail {

// nu with sigma(nu, T) = 0, |nu|_sigma = 1, oriented toward `inside`.
inline BoundaryNormal sigma_normal(const Mat<2>& S, const Vec<2>& T, const Vec<2>& to_inside) {
    const Vec<2> w = S * T;       // covector of T
    Vec<2> nu(-w.y(), w.x());     // annihilates w
    const double len = std::sqrt(nu.dot(S * nu));
    if (!(len > 0.0)) throw DegenerateMesh("zero tangent while building boundary normal");
    nu /= len;
    if (nu.dot(to_inside) < 0.0) nu = -nu;
    return {nu, Vec<2>(S * nu)};
}

} // namespace detail

// Per-boundary-vertex inward normals, aligned with dom.boundary_loop.
inline std::vector<BoundaryNormal> boundary_normals(const TriangulatedDomain& dom,
                                                    const MetricField<2>& metric) {
    Vec<2> centroid = Vec<2>::Zero();
    for (const auto& p : dom.vertices) centroid += p;
    centroid /= dom.num_vertices();

    const int nb = static_cast<int>(dom.boundary_loop.size());
    std::vector<BoundaryNormal> out;
    out.reserve(static_cast<size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        const int v = dom.boundary_loop[i];
        const int vp = dom.boundary_loop[(i + nb - 1) % nb];
        const int vn = dom.boundary_loop[(i + 1) % nb];
        const Vec<2> T = dom.vertices[vn] - dom.vertices[vp];
        out.push_back(detail::sigma_normal(metric.sigma(dom.vertices[v]), T,
                                           Vec<2>(centroid - dom.vertices[v])));
    }
    return out;
}

struct ConvexityReport {
    double kappa1 = 0.0;              // min principal curvature of the boundary
    std::vector<double> kappa;        // per boundary vertex, aligned with boundary_loop
    bool strictly_convex = false;     // kappa1 > tol
    double tol = 1e-8;
};

// Geodesic curvature of the boundary w.r.t. sigma and the inward normal:
// fit x(s) locally by a parabola in sigma-arclength, then
// kappa_g = < x'' / |x'|^2 + Gamma(T,T), nu >_sigma with T = x'/|x'|_sigma.
inline ConvexityReport boundary_convexity(const TriangulatedDomain& dom,
                                          const MetricField<2>& metric,
                                          double tol_convex = 1e-8) {
    Vec<2> centroid = Vec<2>::Zero();
    for (const auto& p : dom.vertices) centroid += p;
    centroid /= dom.num_vertices();

    ConvexityReport rep;
    rep.tol = tol_convex;
    const int nb = static_cast<int>(dom.boundary_loop.size());
    rep.kappa.reserve(static_cast<size_t>(nb));
    rep.kappa1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nb; ++i) {
        const Vec<2>& xm = dom.vertices[dom.boundary_loop[(i + nb - 1) % nb]];
        const Vec<2>& x0 = dom.vertices[dom.boundary_loop[i]];
        const Vec<2>& xp = dom.vertices[dom.boundary_loop[(i + 1) % nb]];
        const double s0 = -detail::sigma_edge_length(metric, xm, x0);
        const double s1 = detail::sigma_edge_length(metric, x0, xp);

        // nonuniform three-point first/second derivative of x(s) at s = 0
        const double den = s0 * s1 * (s0 - s1);
        const Vec<2> d1 = (xp * (s0 * s0) - xm * (s1 * s1) + x0 * (s1 * s1 - s0 * s0)) / den;
        const Vec<2> d2 = 2.0 * (xm * s1 - x0 * (s1 - s0) - xp * s0) / den;

        const GeometryJet<2> jet = build_jet(metric, x0, false);
        const double speed = std::sqrt(d1.dot(jet.sigma * d1));
        const Vec<2> T = d1 / speed;
        Vec<2> kvec = d2 / (speed * speed);
        for (int k = 0; k < 2; ++k) kvec[k] += T.dot(jet.christoffel[k] * T);

        const BoundaryNormal nrm = detail::sigma_normal(jet.sigma, T, Vec<2>(centroid - x0));
        const double kg = kvec.dot(jet.sigma * nrm.nu);
        rep.kappa.push_back(kg);
        rep.kappa1 = std::min(rep.kappa1, kg);
    }
    rep.strictly_convex = rep.kappa1 > tol_convex;
    return rep;
}

inline void require_strictly_convex(const ConvexityReport& rep) {
    if (!rep.strictly_convex) {
        std::ostringstream os;
        os << "boundary not strictly convex: kappa1 = " << rep.kappa1 << " <= tol " << rep.tol;
        throw NotStrictlyConvex(os.str());
    }
}

// ---------------------------------------------------------------------------
// Plain-text mesh format:
//   VERTICES <n>    followed by n lines "x y"
//   TRIANGLES <m>   followed by m lines "i j k"   (1-based)
//   BOUNDARY <b>    followed by b lines "a b"     (1-based, domain on the left)
// '#' starts a comment; blank lines are ignored.

inline void write_mesh(std::ostream& os, const TriangulatedDomain& dom) {
    os.precision(17);
    os << "VERTICES " << dom.num_vertices() << "\n";
    for (const auto& p : dom.vertices) os << p.x() << " " << p.y() << "\n";
    os << "TRIANGLES " << dom.num_triangles() << "\n";
    for (const auto& t : dom.triangles) os << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    os << "BOUNDARY " << dom.boundary_edges.size() << "\n";
    for (const auto& e : dom.boundary_edges) os << e[0] + 1 << " " << e[1] + 1 << "\n";
}

inline void write_mesh(const std::string& path, const TriangulatedDomain& dom) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    write_mesh(os, dom);
}

inline TriangulatedDomain read_mesh(std::istream& is) {
    auto next_tokens = [&is](int line_no[1]) -> std::string {
        std::string line;
        while (std::getline(is, line)) {
            ++line_no[0];
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
        }
        return {};
    };
    int line_no[1] = {0};
    auto fail = [&line_no](const std::string& what) -> void {
        throw MeshFormatError("mesh file line " + std::to_string(line_no[0]) + ": " + what);
    };

    TriangulatedDomain dom;
    {
        std::istringstream ls(next_tokens(line_no));
        std::string kw;
        int n = 0;
        if (!(ls >> kw >> n) || kw != "VERTICES" || n < 3) fail("expected 'VERTICES <count>=3..>'");
        dom.vertices.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            std::istringstream vs(next_tokens(line_no));
            double x = 0, y = 0;
            if (!(vs >> x >> y)) fail("expected vertex 'x y'");
            dom.vertices.push_back(Vec<2>(x, y));
        }
    }
    {
        std::istringstream ls(next_tokens(line_no));
        std::string kw;
        int n = 0;
        if (!(ls >> kw >> n) || kw != "TRIANGLES" || n < 1) fail("expected 'TRIANGLES <count>=1..>'");
        dom.triangles.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            std::istringstream ts(next_tokens(line_no));
            int a = 0, b = 0, c = 0;
            if (!(ts >> a >> b >> c)) fail("expected triangle 'i j k'");
            dom.triangles.push_back({a - 1, b - 1, c - 1});
        }
    }
    {
        std::istringstream ls(next_tokens(line_no));
        std::string kw;
        int n = 0;
        if (!(ls >> kw >> n) || kw != "BOUNDARY" || n < 3) fail("expected 'BOUNDARY <count>=3..>'");
        dom.boundary_edges.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            std::istringstream es(next_tokens(line_no));
            int a = 0, b = 0;
            if (!(es >> a >> b)) fail("expected boundary edge 'a b'");
            dom.boundary_edges.push_back({a - 1, b - 1});
        }
    }
    validate(dom);
    return dom;
}

inline TriangulatedDomain read_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open mesh file '" + path + "'");
    return read_mesh(is);
}

} // namespace cmcgraph
