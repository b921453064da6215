#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "triwave/io.hpp"

using namespace triwave;

namespace {

std::string tmppath(const std::string& name) { return "/tmp/triwave_io_" + name; }

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("velocity raster round-trips bit-identically") {
    VelocityModel vm;
    vm.nx = 7;
    vm.nz = 5;
    vm.x0 = -0.1;
    vm.z0 = -2.3;
    vm.dx = 0.037;
    vm.dz = 0.041;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(1.0, 5.0);
    for (int i = 0; i < 35; ++i) vm.values.push_back(uni(rng));

    const auto p1 = tmppath("v1.bin"), p2 = tmppath("v2.bin");
    write_velocity(p1, vm);
    auto back = read_velocity(p1);
    CHECK(back.nx == vm.nx);
    CHECK(back.dz == vm.dz);
    for (int i = 0; i < 35; ++i) CHECK(back.values[i] == vm.values[i]);
    write_velocity(p2, back);
    CHECK(slurp(p1) == slurp(p2));

    // Truncated payload errors with byte counts.
    auto full = slurp(p1);
    std::ofstream trunc(tmppath("vt.bin"), std::ios::binary);
    trunc.write(full.data(), static_cast<std::streamsize>(full.size() - 9));
    trunc.close();
    CHECK_THROWS_WITH_AS(read_velocity(tmppath("vt.bin")),
                         doctest::Contains("truncated payload"), std::runtime_error);
}

TEST_CASE("mesh round-trips and revalidates") {
    auto m = structured_mesh({0, 1, -1, 0}, 0.25, 0.25);
    const auto p1 = tmppath("m1.txt"), p2 = tmppath("m2.txt");
    write_mesh(p1, m);
    auto back = read_mesh(p1);
    CHECK(back.n_vertices() == m.n_vertices());
    CHECK(back.n_triangles() == m.n_triangles());
    CHECK(back.boundary_edges.size() == m.boundary_edges.size());
    for (int v = 0; v < m.n_vertices(); ++v) {
        CHECK(back.vertices[v][0] == m.vertices[v][0]);
        CHECK(back.vertices[v][1] == m.vertices[v][1]);
        CHECK(back.region_tags[v] == m.region_tags[v]);
    }
    CHECK(back.full.x0 == m.full.x0);
    CHECK(back.full.z1 == m.full.z1);
    write_mesh(p2, back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("shot record round-trips bit-identically") {
    ShotRecord r;
    r.nt = 11;
    r.dt = 5e-4;
    r.receivers = {{0.25, -0.5}, {0.75, -0.5}};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1, 1);
    for (int i = 0; i < 22; ++i) r.data.push_back(static_cast<float>(uni(rng)));

    const auto p1 = tmppath("s1.bin"), p2 = tmppath("s2.bin");
    write_shotrecord(p1, r);
    auto back = read_shotrecord(p1);
    CHECK(back.nt == r.nt);
    CHECK(back.dt == r.dt);
    REQUIRE(back.data.size() == r.data.size());
    for (size_t i = 0; i < r.data.size(); ++i) CHECK(back.data[i] == r.data[i]);
    write_shotrecord(p2, back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("config parsing: values, comments, unknown keys, degree guard") {
    const auto p = tmppath("cfg.txt");
    {
        std::ofstream os(p);
        os << "# comment line\n";
        os << "domain.width = 1.5\n";
        os << "element.degree = 2   # inline comment\n";
        os << "time.auto_dt = true\n";
    }
    const std::set<std::string> allowed = {"domain.width", "element.degree", "time.auto_dt"};
    auto cfg = parse_config(p, allowed);
    CHECK(cfg.get_double("domain.width", 0) == 1.5);
    CHECK(cfg.get_int("element.degree", 0) == 2);
    CHECK(cfg.get_bool("time.auto_dt", false) == true);
    CHECK(cfg.get_double("domain.depth", 7.0) == 7.0);  // fallback

    {
        std::ofstream os(p);
        os << "domain.widht = 1.5\n";  // typo must be fatal
    }
    CHECK_THROWS_WITH_AS(parse_config(p, allowed), doctest::Contains("unknown key"),
                         std::runtime_error);

    // The element-degree contract surfaces through kmv_element.
    CHECK_THROWS_WITH_AS(kmv_element(4), doctest::Contains("unsupported"),
                         std::invalid_argument);
}

TEST_CASE("manifest hashing is stable and content-sensitive") {
    const auto f = tmppath("h.bin");
    {
        std::ofstream os(f, std::ios::binary);
        os << "abc";
    }
    const auto h1 = fnv1a64_file(f);
    CHECK(h1 == fnv1a64_file(f));
    {
        std::ofstream os(f, std::ios::binary);
        os << "abd";
    }
    CHECK(h1 != fnv1a64_file(f));

    write_manifest(tmppath("manifest.txt"), {f});
    auto text = slurp(tmppath("manifest.txt"));
    CHECK(text.find("h.bin") != std::string::npos);
}
