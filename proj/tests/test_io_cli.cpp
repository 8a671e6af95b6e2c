// Report builders, the VTK writer, the shipped JSON schemas, and the
// command-line tool (exercised as a subprocess).

#include <catch2/catch_amalgamated.hpp>

#include <cmcgraph/cmcgraph.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"

using namespace cmcgraph;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

testutil::json schema(const std::string& name) {
    return testutil::load_json_file(std::string(CMC_SOURCE_DIR) + "/docs/schemas/" + name +
                                    ".schema.json");
}

void require_valid(const testutil::json& sch, const ordered_json& doc) {
    const auto errors = testutil::schema_errors(sch, testutil::json::parse(doc.dump()));
    for (const auto& e : errors) UNSCOPED_INFO(e);
    REQUIRE(errors.empty());
}

const fs::path& work_dir() {
    static const fs::path p = [] {
        fs::path base =
            fs::temp_directory_path() / ("cmcgraph-tests-" + std::to_string(::getpid()));
        fs::create_directories(base);
        return base;
    }();
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct CliResult {
    int exit_code = -1;
    std::string out, err;
};

CliResult run_cli(const std::string& args, const std::string& tag) {
    const fs::path outp = work_dir() / (tag + ".stdout");
    const fs::path errp = work_dir() / (tag + ".stderr");
    const std::string cmd = std::string(CMC_CLI_PATH) + " " + args + " > " + outp.string() +
                            " 2> " + errp.string();
    const int rc = std::system(cmd.c_str());
    CliResult r;
    if (rc >= 0 && WIFEXITED(rc)) r.exit_code = WEXITSTATUS(rc);
    r.out = slurp(outp);
    r.err = slurp(errp);
    return r;
}

} // namespace

// ---------------------------------------------------------------------------
// VTK writer

TEST_CASE("vtk export has the legacy structure", "[io]") {
    const TriangulatedDomain dom = generate_disk_mesh(1.0, 0.3);
    const size_t n = static_cast<size_t>(dom.num_vertices());
    DiscreteField u(n, 1.5), w(n);
    for (size_t i = 0; i < n; ++i) w[i] = static_cast<double>(i);

    std::ostringstream os;
    write_vtk(os, dom, {{"u", &u}, {"w", &w}}, "test export");
    std::istringstream is(os.str());
    std::string line;

    REQUIRE(std::getline(is, line));
    CHECK(line == "# vtk DataFile Version 3.0");
    REQUIRE(std::getline(is, line));
    CHECK(line == "test export");
    REQUIRE(std::getline(is, line));
    CHECK(line == "ASCII");
    REQUIRE(std::getline(is, line));
    CHECK(line == "DATASET UNSTRUCTURED_GRID");

    std::string kw;
    size_t count = 0;
    std::string dtype;
    is >> kw >> count >> dtype;
    CHECK(kw == "POINTS");
    CHECK(count == n);
    CHECK(dtype == "double");
    for (size_t i = 0; i < n; ++i) {
        double x, y, z;
        REQUIRE((is >> x >> y >> z));
        CHECK(z == 0.0);
        CHECK(x == dom.vertices[i].x());
        CHECK(y == dom.vertices[i].y());
    }

    size_t m = 0, ints = 0;
    is >> kw >> m >> ints;
    CHECK(kw == "CELLS");
    CHECK(m == dom.triangles.size());
    CHECK(ints == 4 * dom.triangles.size());
    for (size_t t = 0; t < m; ++t) {
        int k, a, b, c;
        REQUIRE((is >> k >> a >> b >> c));
        CHECK(k == 3);
        for (int v : {a, b, c}) {
            CHECK(v >= 0);
            CHECK(v < static_cast<int>(n));
        }
    }

    is >> kw >> m;
    CHECK(kw == "CELL_TYPES");
    for (size_t t = 0; t < m; ++t) {
        int ct;
        REQUIRE((is >> ct));
        CHECK(ct == 5);
    }

    is >> kw >> count;
    CHECK(kw == "POINT_DATA");
    CHECK(count == n);
    for (const char* expected : {"u", "w"}) {
        std::string name, comps;
        is >> kw >> name >> dtype >> comps;
        CHECK(kw == "SCALARS");
        CHECK(name == expected);
        CHECK(dtype == "double");
        CHECK(comps == "1");
        std::string lut, tbl;
        is >> lut >> tbl;
        CHECK(lut == "LOOKUP_TABLE");
        CHECK(tbl == "default");
        for (size_t i = 0; i < n; ++i) {
            double v;
            REQUIRE((is >> v));
            if (name == "u") CHECK(v == 1.5);
            else CHECK(v == static_cast<double>(i));
        }
    }

    DiscreteField bad(n - 1, 0.0);
    std::ostringstream sink;
    CHECK_THROWS_AS(write_vtk(sink, dom, {{"bad", &bad}}), ConfigError);
}

// ---------------------------------------------------------------------------
// JSON builders against the shipped schemas

TEST_CASE("mesh summary is schema-valid and Euler-consistent", "[io]") {
    const TriangulatedDomain dom = generate_disk_mesh(1.0, 0.15);
    const ordered_json j = mesh_summary_json(dom, make_euclidean());
    require_valid(schema("mesh-summary"), j);

    const int v = j["num_vertices"].get<int>();
    const int e = j["num_edges"].get<int>();
    const int f = j["num_triangles"].get<int>();
    CHECK(v - e + f == 1);
    CHECK(j["metric"] == "euclidean");
    CHECK(j["strictly_convex"].get<bool>());
    CHECK(j["volume"].get<double>() == Approx(std::numbers::pi).epsilon(0.02));
    CHECK(j["boundary_length"].get<double>() == Approx(2.0 * std::numbers::pi).epsilon(0.02));
    CHECK(j["kappa1"].get<double>() == Approx(1.0).epsilon(0.05));
}

TEST_CASE("solve report is schema-valid", "[io]") {
    auto dom = std::make_shared<TriangulatedDomain>(generate_disk_mesh(1.0, 0.2));
    const std::vector<double> phi(dom->boundary_loop.size(), 0.3);
    PenalizedProblem p(make_euclidean(), dom, phi, 1e-2, 0.0);
    const SolveResult sol = solve_penalized(p, build_compatible_u0(*dom, phi), NewtonSettings{});
    REQUIRE(sol.converged);

    const ordered_json j = solve_report_json(p, sol, 1e-2, 0.0);
    require_valid(schema("solve-report"), j);
    CHECK(j["lambda_field"].size() == static_cast<size_t>(dom->num_vertices()));
    CHECK(j["contact_cosine"]["min"].get<double>() > -1.0);
    CHECK(j["contact_cosine"]["max"].get<double>() < 1.0);
    CHECK(j["residual_history"].size() == static_cast<size_t>(sol.iterations) + 1);
}

TEST_CASE("continuation report is schema-valid", "[io]") {
    auto dom = std::make_shared<TriangulatedDomain>(generate_disk_mesh(1.0, 0.2));
    const std::vector<double> phi(dom->boundary_loop.size(), 0.2);
    PenalizedProblem base(make_euclidean(), dom, phi, 1.0, 0.0);
    const ContinuationReport rep =
        run_continuation(base, default_eps_schedule(), build_compatible_u0(*dom, phi), {});
    REQUIRE(rep.complete);

    const ordered_json j = continuation_report_json(rep);
    require_valid(schema("continuation-report"), j);
    CHECK(j["stages"].size() == default_eps_schedule().size());
    CHECK(j["eps_schedule"].size() == default_eps_schedule().size());
}

TEST_CASE("verify report is schema-valid and aggregates correctly", "[io]") {
    VerificationOutcome a;
    a.case_name = "alpha";
    a.checks = {{"one", true, "fine"}, {"two", true, ""}};
    a.finish();
    VerificationOutcome b;
    b.case_name = "beta";
    b.checks = {{"three", false, "boom"}};
    b.finish();

    const ordered_json j = verify_report_json({a, b});
    require_valid(schema("verify-report"), j);
    CHECK_FALSE(j["overall"].get<bool>());
    CHECK(j["cases"][0]["overall"].get<bool>());
    CHECK_FALSE(j["cases"][1]["overall"].get<bool>());
    CHECK(j["cases"][1]["checks"][0]["details"] == "boom");
}

TEST_CASE("json files round-trip through disk", "[io]") {
    const fs::path p = work_dir() / "roundtrip.json";
    ordered_json j;
    j["schema"] = "x/1";
    j["values"] = {1.0, 2.5, -3.125};
    write_json_file(p.string(), j);
    const std::string raw = slurp(p);
    REQUIRE(!raw.empty());
    CHECK(raw.back() == '\n');
    CHECK(testutil::json::parse(raw) == testutil::json::parse(j.dump()));
    CHECK_THROWS_AS(write_json_file((work_dir() / "no/such/dir/x.json").string(), j),
                    ConfigError);
}

// ---------------------------------------------------------------------------
// Command-line tool (subprocess)

TEST_CASE("mesh subcommand writes mesh, vtk, and a valid summary", "[cli]") {
    const fs::path mesh_txt = work_dir() / "disk.mesh";
    const fs::path mesh_vtk = work_dir() / "disk.vtk";
    const fs::path report = work_dir() / "disk.json";
    const CliResult r = run_cli("mesh --shape disk --radius 1 --h 0.15 --out " +
                                    mesh_txt.string() + " --vtk " + mesh_vtk.string() +
                                    " --report " + report.string(),
                                "mesh-disk");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);

    const testutil::json summary = testutil::load_json_file(report.string());
    const auto errors = testutil::schema_errors(
        testutil::json::parse(schema("mesh-summary").dump()), summary);
    for (const auto& e : errors) UNSCOPED_INFO(e);
    CHECK(errors.empty());

    const TriangulatedDomain dom = read_mesh(mesh_txt.string());
    CHECK(dom.num_vertices() == summary["num_vertices"].get<int>());
    CHECK(static_cast<int>(dom.triangles.size()) == summary["num_triangles"].get<int>());

    const std::string vtk = slurp(mesh_vtk);
    CHECK(vtk.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
}

TEST_CASE("mesh subcommand prints the summary to stdout by default", "[cli]") {
    const CliResult r = run_cli("mesh --shape ellipse --a 1.2 --b 0.9 --h 0.2", "mesh-stdout");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const testutil::json j = testutil::json::parse(r.out);
    CHECK(j["schema"] == "cmcgraph-mesh-summary/1");
    CHECK(j["num_vertices"].get<int>() > 0);
}

TEST_CASE("solve subcommand produces a schema-valid report", "[cli]") {
    const fs::path report = work_dir() / "solve.json";
    const fs::path coo = work_dir() / "solve.coo";
    const CliResult r = run_cli("solve --shape disk --h 0.2 --phi 0.3 --eps 1e-2 --report " +
                                    report.string() + " --dump-coo " + coo.string(),
                                "solve-disk");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);

    const testutil::json j = testutil::load_json_file(report.string());
    const auto errors =
        testutil::schema_errors(testutil::json::parse(schema("solve-report").dump()), j);
    for (const auto& e : errors) UNSCOPED_INFO(e);
    CHECK(errors.empty());
    CHECK(j["converged"].get<bool>());

    std::istringstream is(slurp(coo));
    int i, k;
    double v;
    REQUIRE((is >> i >> k >> v));
    CHECK(i >= 1); // COO indices are 1-based
    CHECK(k >= 1);
}

TEST_CASE("continuation subcommand recovers the cap lambda", "[cli]") {
    const fs::path report = work_dir() / "cont.json";
    const CliResult r = run_cli(
        "continuation --shape disk --h 0.1 --phi-profile cap --rho 2 --report " + report.string(),
        "cont-cap");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);

    const testutil::json j = testutil::load_json_file(report.string());
    const auto errors = testutil::schema_errors(
        testutil::json::parse(schema("continuation-report").dump()), j);
    for (const auto& e : errors) UNSCOPED_INFO(e);
    CHECK(errors.empty());
    CHECK(j["complete"].get<bool>());
    CHECK(j["lambda_final"].get<double>() == Approx(1.0).margin(5e-3));
    CHECK(std::abs(j["lambda_final"].get<double>() - j["lambda_compatibility"].get<double>()) <
          1e-6);
}

TEST_CASE("upsilon shifts the solution by exactly upsilon over eps", "[cli]") {
    const fs::path r0 = work_dir() / "shift0.json";
    const fs::path r5 = work_dir() / "shift5.json";
    const std::string common = "solve --shape disk --h 0.2 --phi 0.2 --eps 0.1 ";
    const CliResult a = run_cli(common + "--upsilon 0 --report " + r0.string(), "shift-0");
    const CliResult b = run_cli(common + "--upsilon 0.5 --report " + r5.string(), "shift-5");
    INFO(a.err);
    INFO(b.err);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    const testutil::json j0 = testutil::load_json_file(r0.string());
    const testutil::json j5 = testutil::load_json_file(r5.string());
    const double shift = j0["u"]["mean"].get<double>() - j5["u"]["mean"].get<double>();
    CHECK(shift == Approx(0.5 / 0.1).margin(2e-6));
    CHECK(j0["lambda_mean"].get<double>() ==
          Approx(j5["lambda_mean"].get<double>()).margin(2e-7));
}

TEST_CASE("per-vertex phi files are honored and validated", "[cli]") {
    const fs::path mesh_txt = work_dir() / "phifile.mesh";
    const fs::path report = work_dir() / "phifile-mesh.json";
    REQUIRE(run_cli("mesh --shape disk --h 0.25 --out " + mesh_txt.string() + " --report " +
                        report.string(),
                    "phifile-mesh")
                .exit_code == 0);
    const int nb =
        testutil::load_json_file(report.string())["num_boundary_vertices"].get<int>();

    const fs::path phis = work_dir() / "phis.txt";
    {
        std::ofstream os(phis);
        for (int i = 0; i < nb; ++i) os << 0.1 << "\n";
    }
    const CliResult ok = run_cli("solve --mesh-file " + mesh_txt.string() + " --phi-file " +
                                     phis.string() + " --eps 0.1",
                                 "phifile-ok");
    INFO(ok.err);
    CHECK(ok.exit_code == 0);

    const fs::path shorter = work_dir() / "phis-short.txt";
    {
        std::ofstream os(shorter);
        for (int i = 0; i + 1 < nb; ++i) os << 0.1 << "\n";
    }
    const CliResult bad = run_cli("solve --mesh-file " + mesh_txt.string() + " --phi-file " +
                                      shorter.string() + " --eps 0.1",
                                  "phifile-short");
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("boundary") != std::string::npos);
}

TEST_CASE("config file supplies defaults and flags override it", "[cli]") {
    const fs::path cfg = work_dir() / "config.json";
    {
        std::ofstream os(cfg);
        os << R"({"shape": "disk", "radius": 2.0, "h": 0.4})" << "\n";
    }
    const CliResult r =
        run_cli("mesh --config " + cfg.string() + " --h 0.3 --report " +
                    (work_dir() / "config-mesh.json").string(),
                "config-mesh");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const testutil::json j = testutil::load_json_file((work_dir() / "config-mesh.json").string());
    // radius 2 comes from the file; the --h flag must beat the file's 0.4
    // (with ring spacing 2/7 the longest edge is ~0.49; at h = 0.4 it is ~0.69)
    CHECK(j["volume"].get<double>() == Approx(4.0 * std::numbers::pi).epsilon(0.05));
    CHECK(j["h_mesh"].get<double>() < 0.55);
}

TEST_CASE("verification suites are deterministic and exit cleanly", "[cli]") {
    const fs::path g1 = work_dir() / "geom1.json";
    const fs::path g2 = work_dir() / "geom2.json";
    const CliResult a = run_cli("verify --suite geometry --report " + g1.string(), "verify-g1");
    const CliResult b = run_cli("verify --suite geometry --report " + g2.string(), "verify-g2");
    INFO(a.err);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    const std::string raw1 = slurp(g1), raw2 = slurp(g2);
    REQUIRE(!raw1.empty());
    CHECK(raw1 == raw2);

    const auto errors = testutil::schema_errors(
        testutil::json::parse(schema("verify-report").dump()), testutil::json::parse(raw1));
    for (const auto& e : errors) UNSCOPED_INFO(e);
    CHECK(errors.empty());
    CHECK(testutil::json::parse(raw1)["overall"].get<bool>());
}

TEST_CASE("negative-control suite passes because violations are expected", "[cli]") {
    const fs::path rep = work_dir() / "controls.json";
    const CliResult r =
        run_cli("verify --suite negative-controls --report " + rep.string(), "verify-nc");
    INFO(r.err);
    CHECK(r.exit_code == 0);
    CHECK(testutil::load_json_file(rep.string())["overall"].get<bool>());
    CHECK(r.err.find("[ ok ]") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2 and name the problem", "[cli]") {
    CHECK(run_cli("mesh --shape pentagon", "err-shape").exit_code == 2);
    CHECK(run_cli("solve --frobnicate", "err-flag").exit_code == 2);
    CHECK(run_cli("verify --suite bogus", "err-suite").exit_code == 2);
    CHECK(run_cli("solve --mesh-file " + (work_dir() / "missing.mesh").string(), "err-mesh")
              .exit_code == 2);

    const CliResult h0 = run_cli("mesh --h 0", "err-h0");
    CHECK(h0.exit_code == 2);
    CHECK(h0.err.find("0 < h") != std::string::npos); // the offending field is named

    const CliResult cfg = run_cli("mesh --config " + (work_dir() / "nope.json").string(),
                                  "err-config");
    CHECK(cfg.exit_code == 2);
}

TEST_CASE("solver failures exit with code 3", "[cli]") {
    const CliResult r = run_cli(
        "solve --shape disk --h 0.2 --phi 0.9 --eps 1e-3 --max-iter 1 --tol 1e-14", "err-newton");
    CHECK(r.exit_code == 3);
    CHECK(!r.err.empty());
}

TEST_CASE("strict mode turns convexity warnings into failures", "[cli]") {
    const std::string star = "--shape star --radius 1 --delta 0.25 --lobes 5 --h 0.15 ";
    const CliResult warn = run_cli("solve " + star + "--phi 0.05 --eps 0.5", "star-warn");
    INFO(warn.err);
    CHECK(warn.exit_code == 0);
    CHECK(warn.err.find("convex") != std::string::npos);

    const CliResult strict =
        run_cli("solve " + star + "--phi 0.05 --eps 0.5 --strict", "star-strict");
    CHECK(strict.exit_code == 2);
}

TEST_CASE("help is available at exit code 0", "[cli]") {
    const CliResult r = run_cli("--help", "help");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("mesh") != std::string::npos);
    CHECK(r.out.find("continuation") != std::string::npos);
}
