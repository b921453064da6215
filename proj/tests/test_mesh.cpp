#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "triwave/delaunay.hpp"
#include "triwave/mesh.hpp"

using namespace triwave;

namespace {

SizingField constant_sizing(const Rect& r, double h, int n = 41) {
    SizingField sf;
    sf.nx = n;
    sf.nz = n;
    sf.x0 = r.x0;
    sf.z0 = r.z0;
    sf.dx = r.width() / (n - 1);
    sf.dz = r.height() / (n - 1);
    sf.values.assign(static_cast<size_t>(n) * n, h);
    return sf;
}

VelocityModel constant_velocity(const Rect& r, double c, int n = 41) {
    VelocityModel vm;
    vm.nx = n;
    vm.nz = n;
    vm.x0 = r.x0;
    vm.z0 = r.z0;
    vm.dx = r.width() / (n - 1);
    vm.dz = r.height() / (n - 1);
    vm.values.assign(static_cast<size_t>(n) * n, c);
    return vm;
}

}  // namespace

TEST_CASE("delaunay of a jittered grid is conforming and covers the hull") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-0.2, 0.2);
    std::vector<std::array<double, 2>> pts;
    for (int j = 0; j <= 10; ++j)
        for (int i = 0; i <= 10; ++i) {
            double jx = (i > 0 && i < 10) ? uni(rng) * 0.1 : 0.0;
            double jz = (j > 0 && j < 10) ? uni(rng) * 0.1 : 0.0;
            pts.push_back({i * 0.1 + jx, j * 0.1 + jz});
        }
    auto tris = delaunay_triangulate(pts);
    double area = 0.0;
    for (const auto& t : tris) {
        const double a = 0.5 * ((pts[t[1]][0] - pts[t[0]][0]) * (pts[t[2]][1] - pts[t[0]][1]) -
                                (pts[t[1]][1] - pts[t[0]][1]) * (pts[t[2]][0] - pts[t[0]][0]));
        CHECK(a > 0.0);  // CCW
        area += a;
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-9));  // convex hull = unit square
    // Delaunay empty-circumcircle spot check on a few triangles.
    for (size_t t = 0; t < tris.size(); t += 17) {
        const auto& a = pts[tris[t][0]];
        const auto& b = pts[tris[t][1]];
        const auto& c = pts[tris[t][2]];
        for (size_t p = 0; p < pts.size(); p += 7) {
            const double ax = a[0] - pts[p][0], ay = a[1] - pts[p][1];
            const double bx = b[0] - pts[p][0], by = b[1] - pts[p][1];
            const double cx = c[0] - pts[p][0], cy = c[1] - pts[p][1];
            const double det = ax * (by * (cx * cx + cy * cy) - (bx * bx + by * by) * cy) -
                               ay * (bx * (cx * cx + cy * cy) - (bx * bx + by * by) * cx) +
                               (ax * ax + ay * ay) * (bx * cy - by * cx);
            CHECK(det < 1e-9);
        }
    }
}

TEST_CASE("delaunay handles exactly collinear/cocircular lattice points") {
    std::vector<std::array<double, 2>> pts;
    for (int j = 0; j <= 8; ++j)
        for (int i = 0; i <= 8; ++i) pts.push_back({i * 0.125, j * 0.125});
    auto tris = delaunay_triangulate(pts);
    CHECK(tris.size() == 128);
    double area = 0.0;
    for (const auto& t : tris) {
        const double a = 0.5 * ((pts[t[1]][0] - pts[t[0]][0]) * (pts[t[2]][1] - pts[t[0]][1]) -
                                (pts[t[1]][1] - pts[t[0]][1]) * (pts[t[2]][0] - pts[t[0]][0]));
        CHECK(a > 0.0);
    }
    for (const auto& t : tris) area += 0.5 * std::abs(
        (pts[t[1]][0] - pts[t[0]][0]) * (pts[t[2]][1] - pts[t[0]][1]) -
        (pts[t[1]][1] - pts[t[0]][1]) * (pts[t[2]][0] - pts[t[0]][0]));
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sizing_from_velocity applies l = max(c/(C f), l_min)") {
    const Rect r{0, 1, -1, 0};
    auto vm = constant_velocity(r, 1.43);
    auto sf = sizing_from_velocity(vm, 5.0, 5.85, 1e-4);
    for (double v : sf.values) CHECK(v == doctest::Approx(0.048889).epsilon(1e-4));

    auto vm2 = constant_velocity(r, 1.5);
    auto sf2 = sizing_from_velocity(vm2, 5.0, 4.0, 1e-4);
    for (double v : sf2.values) CHECK(v == doctest::Approx(0.075).epsilon(1e-12));

    // Two-valued model keeps the 4x ratio.
    auto vm3 = constant_velocity(r, 1.0);
    for (int iz = 0; iz < vm3.nz; ++iz)
        for (int ix = 0; ix < vm3.nx; ++ix)
            if (iz < vm3.nz / 2) vm3.at(ix, iz) = 4.0;
    auto sf3 = sizing_from_velocity(vm3, 5.0, 4.0, 1e-6);
    double lo = 1e9, hi = 0;
    for (double v : sf3.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi / lo == doctest::Approx(4.0).epsilon(1e-12));

    CHECK_THROWS(sizing_from_velocity(vm, -5.0, 4.0, 1e-4));
    CHECK_THROWS(sizing_from_velocity(vm, 5.0, 0.0, 1e-4));
}

TEST_CASE("gradation limiter: idempotent, monotone, and linear around a spike") {
    const Rect r{0, 10, -10, 0};
    auto sf = constant_sizing(r, 1.0, 101);
    sf.gradation_rate = 0.15;

    // Already-smooth field is unchanged.
    auto sm = gradation_limit(sf);
    for (size_t i = 0; i < sf.values.size(); ++i) CHECK(sm.values[i] == sf.values[i]);

    // Single spike: the limited field grows linearly at slope `rate` along
    // grid paths until it reaches the background.  Independent oracle:
    // brute-force Bellman-Ford style relaxation to a fixed point.
    sf.at(50, 50) = 0.01;
    auto lim = gradation_limit(sf);

    SizingField brute = sf;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int iz = 0; iz < brute.nz; ++iz)
            for (int ix = 0; ix < brute.nx; ++ix) {
                const double v = brute.at(ix, iz);
                const int dx4[4] = {1, -1, 0, 0}, dz4[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int jx = ix + dx4[k], jz = iz + dz4[k];
                    if (jx < 0 || jx >= brute.nx || jz < 0 || jz >= brute.nz) continue;
                    const double step = (k < 2 ? brute.dx : brute.dz) * 0.15;
                    if (v + step < brute.at(jx, jz) - 1e-15) {
                        brute.at(jx, jz) = v + step;
                        changed = true;
                    }
                }
            }
    }
    for (size_t i = 0; i < lim.values.size(); ++i)
        CHECK(lim.values[i] == doctest::Approx(brute.values[i]).epsilon(1e-12));

    // 1D analytic along the spike row: min(1.0, 0.01 + 0.15 * distance).
    for (int ix = 0; ix < lim.nx; ++ix) {
        const double d = std::abs(ix - 50) * lim.dx;
        CHECK(lim.at(ix, 50) == doctest::Approx(std::min(1.0, 0.01 + 0.15 * d)).epsilon(1e-12));
    }

    // Monotone (output <= input) and idempotent.
    for (size_t i = 0; i < lim.values.size(); ++i) CHECK(lim.values[i] <= sf.values[i] + 1e-15);
    auto lim2 = gradation_limit(lim);
    for (size_t i = 0; i < lim.values.size(); ++i) CHECK(lim2.values[i] == lim.values[i]);

    // Adjacent-sample growth bound.
    for (int iz = 0; iz < lim.nz; ++iz)
        for (int ix = 0; ix + 1 < lim.nx; ++ix)
            CHECK(std::abs(lim.at(ix + 1, iz) - lim.at(ix, iz)) <= 0.15 * lim.dx + 1e-12);
}

TEST_CASE("structured_mesh basics") {
    auto m = structured_mesh({0, 1, -1, 0}, 0.5);
    CHECK(m.n_vertices() == 9);
    CHECK(m.n_triangles() == 8);
    m.validate();
    auto q = mesh_quality(m);
    CHECK(q.min_angle_deg == doctest::Approx(45.0).epsilon(1e-9));
    CHECK(q.area_sum == doctest::Approx(1.0).epsilon(1e-10));

    auto mp = structured_mesh({0, 1, -1, 0}, 0.25, 0.25);
    int pml_count = 0;
    for (size_t v = 0; v < mp.vertices.size(); ++v) {
        const bool expect = mp.vertices[v][0] < 0.25 - 1e-12 || mp.vertices[v][0] > 0.75 + 1e-12 ||
                            mp.vertices[v][1] < -0.75 - 1e-12;
        CHECK((mp.region_tags[v] == RegionTag::pml) == expect);
        if (expect) ++pml_count;
    }
    CHECK(pml_count > 0);
}

TEST_CASE("generate_mesh: uniform sizing on the unit square") {
    const Rect r{0, 1, -1, 0};
    const double h = 0.1;
    auto sf = constant_sizing(r, h);
    auto m = generate_mesh(r, 0.0, sf, 42);
    m.validate();
    // ~2*(1/h)^2 triangles within +-30%
    CHECK(m.n_triangles() > 140);
    CHECK(m.n_triangles() < 260);
    // pml_width = 0: covers exactly the physical domain, all tags physical.
    for (auto t : m.region_tags) CHECK(t == RegionTag::physical);
    auto q = mesh_quality(m, &sf);
    CHECK(q.area_sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(q.min_angle_deg >= 25.0);
    CHECK(q.frac_edges_near_sizing >= 0.9);
}

TEST_CASE("generate_mesh is deterministic for a fixed seed") {
    const Rect r{0, 1, -1, 0};
    auto sf = constant_sizing(r, 0.12);
    auto m1 = generate_mesh(r, 0.2, sf, 7);
    auto m2 = generate_mesh(r, 0.2, sf, 7);
    REQUIRE(m1.n_vertices() == m2.n_vertices());
    REQUIRE(m1.n_triangles() == m2.n_triangles());
    for (int i = 0; i < m1.n_vertices(); ++i) {
        CHECK(m1.vertices[i][0] == m2.vertices[i][0]);
        CHECK(m1.vertices[i][1] == m2.vertices[i][1]);
    }
    for (int i = 0; i < m1.n_triangles(); ++i) CHECK(m1.triangles[i] == m2.triangles[i]);
    bool has_pml = false;
    for (auto t : m1.region_tags) has_pml |= (t == RegionTag::pml);
    CHECK(has_pml);
}

TEST_CASE("generate_mesh: graded two-layer sizing respects the local target") {
    const Rect r{0, 2, -2, 0};
    auto vm = constant_velocity(r, 1.0, 81);
    for (int iz = 0; iz < vm.nz; ++iz)
        for (int ix = 0; ix < vm.nx; ++ix)
            if (vm.z0 + iz * vm.dz > -1.0) vm.at(ix, iz) = 2.0;
    auto sf = sizing_from_velocity(vm, 5.0, 4.0, 1e-4);
    sf.gradation_rate = 0.15;
    auto sfg = gradation_limit(sf);
    auto m = generate_mesh(r, 0.0, sfg, 11);
    m.validate();
    auto q = mesh_quality(m, &sfg);
    CHECK(q.min_angle_deg >= 25.0);
    CHECK(q.frac_edges_near_sizing >= 0.9);
    CHECK(q.area_sum == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("generate_mesh: element count scales ~4x when C doubles") {
    const Rect r{0, 1.5, -1, 0};
    auto vm = constant_velocity(r, 1.5);
    auto sf4 = sizing_from_velocity(vm, 5.0, 4.0, 1e-4);
    auto sf8 = sizing_from_velocity(vm, 5.0, 8.0, 1e-4);
    auto m4 = generate_mesh(r, 0.0, sf4, 5);
    auto m8 = generate_mesh(r, 0.0, sf8, 5);
    const double ratio = static_cast<double>(m8.n_triangles()) / m4.n_triangles();
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.2);
}
