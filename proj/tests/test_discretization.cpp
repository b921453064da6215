#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "triwave/fields.hpp"

using namespace triwave;

namespace {

Mesh reference_triangle_mesh() {
    Mesh m;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}};
    m.triangles = {{0, 1, 2}};
    m.region_tags = {RegionTag::physical, RegionTag::physical, RegionTag::physical};
    m.boundary_edges = {{0, 1, BoundaryTag::free_surface},
                        {1, 2, BoundaryTag::free_surface},
                        {2, 0, BoundaryTag::free_surface}};
    m.physical = {0, 1, 0, 1};
    m.full = m.physical;
    return m;
}

VelocityModel constant_raster(const Rect& r, double c, int n = 11) {
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

FieldSetup simple_setup(int degree, double h = 0.25, double c = 1.0, double pml_w = 0.0,
                        const Rect& full = {0, 1, -1, 0}) {
    auto m = structured_mesh(full, h, pml_w);
    auto el = kmv_element(degree);
    PmlSpec pml;
    pml.widths = PmlWidths::sides_and_bottom(pml_w);
    return build_fields(m, el, constant_raster(full, c), pml);
}

}  // namespace

TEST_CASE("dofmap counts: degree 1 and the Euler-count oracle for degree 2") {
    auto m = structured_mesh({0, 1, -1, 0}, 0.5);  // 8 triangles, 9 vertices
    auto dm1 = build_dofmap(m, kmv_element(1));
    CHECK(dm1.n_dofs == 9);

    auto dm2 = build_dofmap(m, kmv_element(2));
    CHECK(dm2.n_dofs == 33);  // 9 vertices + 16 edges + 8 centroids

    // Independent oracle: brute-force dedup of all element node coordinates.
    auto el = kmv_element(2);
    std::vector<std::array<double, 2>> all;
    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& a = m.vertices[m.triangles[t][0]];
        const auto& b = m.vertices[m.triangles[t][1]];
        const auto& c = m.vertices[m.triangles[t][2]];
        for (const auto& nd : el.nodes) {
            const double x = a[0] + (b[0] - a[0]) * nd.x + (c[0] - a[0]) * nd.y;
            const double z = a[1] + (b[1] - a[1]) * nd.x + (c[1] - a[1]) * nd.y;
            bool found = false;
            for (const auto& q : all)
                if (std::abs(q[0] - x) < 1e-9 && std::abs(q[1] - z) < 1e-9) found = true;
            if (!found) all.push_back({x, z});
        }
    }
    CHECK(static_cast<int>(all.size()) == dm2.n_dofs);

    // Triangle permutation leaves the count unchanged.
    Mesh mp = m;
    std::reverse(mp.triangles.begin(), mp.triangles.end());
    CHECK(build_dofmap(mp, kmv_element(2)).n_dofs == dm2.n_dofs);
    CHECK(build_dofmap(mp, kmv_element(3)).n_dofs == build_dofmap(m, kmv_element(3)).n_dofs);
}

TEST_CASE("shared degree-3 edge nodes are identified consistently") {
    auto m = structured_mesh({0, 1, -1, 0}, 0.5);
    auto el = kmv_element(3);
    auto dm = build_dofmap(m, el);
    // 9 vertices + 2 per edge (16 edges) + 3 per triangle (8 triangles)
    CHECK(dm.n_dofs == 9 + 32 + 24);
    // Every shared DoF must map to one physical location only.
    std::vector<std::array<double, 2>> seen(dm.n_dofs, {1e30, 1e30});
    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& a = m.vertices[m.triangles[t][0]];
        const auto& b = m.vertices[m.triangles[t][1]];
        const auto& c = m.vertices[m.triangles[t][2]];
        for (int ln = 0; ln < el.n_nodes; ++ln) {
            const double x = a[0] + (b[0] - a[0]) * el.nodes[ln].x + (c[0] - a[0]) * el.nodes[ln].y;
            const double z = a[1] + (b[1] - a[1]) * el.nodes[ln].x + (c[1] - a[1]) * el.nodes[ln].y;
            const int g = dm.dof(t, ln);
            if (seen[g][0] > 1e29) {
                seen[g] = {x, z};
            } else {
                CHECK(std::abs(seen[g][0] - x) < 1e-12);
                CHECK(std::abs(seen[g][1] - z) < 1e-12);
            }
        }
    }
}

TEST_CASE("velocity interpolation: constants, grid points, cell centers") {
    auto m = structured_mesh({0, 1, -1, 0}, 0.25);
    auto dm = build_dofmap(m, kmv_element(2));
    auto vm = constant_raster({0, 1, -1, 0}, 1.43);
    auto c = interpolate_velocity(vm, dm);
    for (double v : c) CHECK(v == doctest::Approx(1.43).epsilon(1e-14));

    VelocityModel v2;
    v2.nx = 2;
    v2.nz = 2;
    v2.x0 = 0;
    v2.z0 = -1;
    v2.dx = 1;
    v2.dz = 1;
    v2.values = {1.0, 2.0, 3.0, 4.0};
    CHECK(v2.sample(0.0, -1.0) == doctest::Approx(1.0));
    CHECK(v2.sample(1.0, -1.0) == doctest::Approx(2.0));
    CHECK(v2.sample(0.5, -0.5) == doctest::Approx(2.5));  // bilinear mean of corners
    CHECK(v2.sample(-5.0, 5.0) == doctest::Approx(3.0));  // clamps
}

TEST_CASE("pml profiles are quadratic, zero inside the physical domain") {
    const Rect full{-0.4, 1.4, -1.4, 0};
    auto m = structured_mesh(full, 0.1, 0.4);
    m.physical = {0, 1, -1, 0};
    auto el = kmv_element(1);
    auto dm = build_dofmap(m, el);
    PmlSpec spec;
    spec.widths = PmlWidths::sides_and_bottom(0.4);
    std::vector<double> sx, sy;
    pml_profiles(spec, m.physical, 1.5, dm, sx, sy);
    const double smax = 3.0 * 1.5 * std::log(1e3) / (2.0 * 0.4);
    for (int g = 0; g < dm.n_dofs; ++g) {
        const double x = dm.coords[g][0], z = dm.coords[g][1];
        if (m.physical.contains(x, z)) {
            CHECK(sx[g] == 0.0);
            CHECK(sy[g] == 0.0);
        }
        if (std::abs(x - (-0.4)) < 1e-12) CHECK(sx[g] == doctest::Approx(smax).epsilon(1e-12));
        if (std::abs(x - (-0.2)) < 1e-12) CHECK(sx[g] == doctest::Approx(smax / 4).epsilon(1e-12));
        if (std::abs(z - (-1.4)) < 1e-12) CHECK(sy[g] == doctest::Approx(smax).epsilon(1e-12));
    }
}

TEST_CASE("lumped mass: positivity, area identity, reference-triangle diagonal") {
    for (int deg : {1, 2, 3}) {
        auto fs = simple_setup(deg, 0.25);
        double total = 0.0;
        for (double v : fs.mass) {
            CHECK(v > 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));  // mesh area
    }
    auto mref = reference_triangle_mesh();
    auto el = kmv_element(2);
    auto fs = build_fields(mref, el, std::vector<double>(7, 1.0), PmlSpec{});
    for (int q = 0; q < el.n_nodes; ++q)
        CHECK(fs.mass[fs.dofmap.dof(0, q)] == doctest::Approx(el.weights[q]).epsilon(1e-14));
}

TEST_CASE("dense mass assembly on a 2-triangle mesh is exactly diagonal") {
    auto m = structured_mesh({0, 1, -1, 0}, 1.0);  // 2 triangles
    for (int deg : {1, 2, 3}) {
        auto el = kmv_element(deg);
        auto dm = build_dofmap(m, el);
        std::vector<double> M(static_cast<size_t>(dm.n_dofs) * dm.n_dofs, 0.0);
        for (int t = 0; t < m.n_triangles(); ++t) {
            const double dj = 2.0 * m.triangle_area(t);
            for (int q = 0; q < el.n_nodes; ++q) {
                auto phi = el.eval_basis(el.nodes[q]);
                for (int i = 0; i < el.n_nodes; ++i)
                    for (int j = 0; j < el.n_nodes; ++j)
                        M[static_cast<size_t>(dm.dof(t, i)) * dm.n_dofs + dm.dof(t, j)] +=
                            el.weights[q] * dj * phi[i] * phi[j];
            }
        }
        for (int i = 0; i < dm.n_dofs; ++i)
            for (int j = 0; j < dm.n_dofs; ++j) {
                if (i == j)
                    CHECK(M[static_cast<size_t>(i) * dm.n_dofs + j] > 0.0);
                else
                    CHECK(M[static_cast<size_t>(i) * dm.n_dofs + j] == 0.0);
            }
    }
}

TEST_CASE("stiffness: kernel, symmetry, and the linear-FEM cotangent oracle") {
    auto fs = simple_setup(2, 0.25, 1.7);
    const int n = fs.n_dofs();
    std::vector<double> ones(n, 1.0), out(n, 0.0);
    fs.apply_stiffness(ones, out);
    for (double v : out) CHECK(std::abs(v) < 1e-12);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<double> u(n), v(n), Ku(n, 0.0), Kv(n, 0.0);
    for (int i = 0; i < n; ++i) {
        u[i] = uni(rng);
        v[i] = uni(rng);
    }
    fs.apply_stiffness(u, Ku);
    fs.apply_stiffness(v, Kv);
    double uKv = 0.0, vKu = 0.0;
    for (int i = 0; i < n; ++i) {
        uKv += u[i] * Kv[i];
        vKu += v[i] * Ku[i];
    }
    CHECK(uKv == doctest::Approx(vKu).epsilon(1e-11));

    // One reference triangle, degree 1, unit c: the classic hand formula
    // K_ij = (b_i b_j + c_i c_j) / (4 A) with b_i = z_j - z_k, c_i = x_k - x_j.
    auto mref = reference_triangle_mesh();
    auto fs1 = build_fields(mref, kmv_element(1), std::vector<double>(3, 1.0), PmlSpec{});
    const double X[3] = {0, 1, 0}, Z[3] = {0, 0, 1};
    const double A = 0.5;
    for (int j = 0; j < 3; ++j) {
        std::vector<double> e(3, 0.0), col(3, 0.0);
        e[j] = 1.0;
        fs1.apply_stiffness(e, col);
        for (int i = 0; i < 3; ++i) {
            const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
            const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
            const double bi = Z[i1] - Z[i2], ci = X[i2] - X[i1];
            const double bj = Z[j1] - Z[j2], cj = X[j2] - X[j1];
            CHECK(col[i] == doctest::Approx((bi * bj + ci * cj) / (4 * A)).epsilon(1e-13));
        }
    }
}

TEST_CASE("pml couplings vanish when sigma is zero, act only in the layer") {
    auto fs = simple_setup(2, 0.25, 1.5);  // no pml
    const int n = fs.n_dofs();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<double> u(n), ox(n, 0.0), oz(n, 0.0);
    for (auto& x : u) x = uni(rng);
    fs.apply_pml_grad(u, ox, oz);
    for (int i = 0; i < n; ++i) {
        CHECK(ox[i] == 0.0);
        CHECK(oz[i] == 0.0);
    }

    auto fsp = simple_setup(1, 0.1, 1.5, 0.3, {-0.3, 1.3, -1.3, 0});
    const int np = fsp.n_dofs();
    std::vector<double> up(np), oxp(np, 0.0), ozp(np, 0.0);
    for (auto& x : up) x = uni(rng);
    fsp.apply_pml_grad(up, oxp, ozp);
    double nrm = 0.0;
    for (int i = 0; i < np; ++i) nrm += oxp[i] * oxp[i] + ozp[i] * ozp[i];
    CHECK(nrm > 0.0);
}

TEST_CASE("coupling operators satisfy the transpose identity") {
    auto fs = simple_setup(2, 0.2, 1.5, 0.4, {-0.4, 1.4, -1.4, 0});
    const int n = fs.n_dofs();
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<double> u(n), px(n), pz(n);
    for (int i = 0; i < n; ++i) {
        u[i] = uni(rng);
        px[i] = uni(rng);
        pz[i] = uni(rng);
    }
    // <D p, u> == <p, D^T u>
    std::vector<double> Dp(n, 0.0), DTx(n, 0.0), DTz(n, 0.0);
    fs.apply_p_divergence(px, pz, Dp);
    fs.apply_p_divergence_T(u, DTx, DTz);
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < n; ++i) {
        lhs += Dp[i] * u[i];
        rhs += px[i] * DTx[i] + pz[i] * DTz[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    // <D_{u,2} u, p> == <u, D_{u,2}^T p>
    std::vector<double> Gx(n, 0.0), Gz(n, 0.0), GT(n, 0.0);
    fs.apply_pml_grad(u, Gx, Gz);
    fs.apply_pml_grad_T(px, pz, GT);
    double lhs2 = 0.0, rhs2 = 0.0;
    for (int i = 0; i < n; ++i) {
        lhs2 += Gx[i] * px[i] + Gz[i] * pz[i];
        rhs2 += u[i] * GT[i];
    }
    CHECK(lhs2 == doctest::Approx(rhs2).epsilon(1e-11));
}

TEST_CASE("cfl estimate: c-doubling halves dt exactly, h-refinement scales linearly") {
    auto fs1 = simple_setup(2, 0.25, 1.5);
    auto fs2 = simple_setup(2, 0.25, 3.0);
    const double r = fs1.estimate_dt_cfl() / fs2.estimate_dt_cfl();
    CHECK(r == doctest::Approx(2.0).epsilon(1e-12));

    auto fsa = simple_setup(2, 0.25, 1.5);
    auto fsb = simple_setup(2, 0.125, 1.5);
    const double hr = fsa.estimate_dt_cfl() / fsb.estimate_dt_cfl();
    CHECK(hr > 1.8);
    CHECK(hr < 2.2);
}

TEST_CASE("point interpolation: Kronecker rows, partition of unity, linear exactness") {
    auto fs = simple_setup(2, 0.25);
    // A mesh vertex: single weight 1.
    auto H0 = point_interpolator(fs.mesh, fs.dofmap, fs.element, {{0.5, -0.5}});
    int nonzero = 0;
    for (double w : H0.rows[0].w)
        if (std::abs(w) > 1e-12) {
            ++nonzero;
            CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
        }
    CHECK(nonzero == 1);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(0.01, 0.99), uz(-0.99, -0.01);
    std::vector<std::array<double, 2>> pts;
    for (int k = 0; k < 10; ++k) pts.push_back({ux(rng), uz(rng)});
    auto H = point_interpolator(fs.mesh, fs.dofmap, fs.element, pts);
    for (const auto& row : H.rows) {
        double s = 0.0;
        for (double w : row.w) s += w;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Nodal interpolant of f = x + z is evaluated exactly for degree >= 1.
    std::vector<double> f(fs.n_dofs());
    for (int g = 0; g < fs.n_dofs(); ++g) f[g] = fs.dofmap.coords[g][0] + fs.dofmap.coords[g][1];
    std::vector<double> vals;
    H.apply(f, vals);
    for (size_t k = 0; k < pts.size(); ++k)
        CHECK(vals[k] == doctest::Approx(pts[k][0] + pts[k][1]).epsilon(1e-12));

    CHECK_THROWS(point_interpolator(fs.mesh, fs.dofmap, fs.element, {{2.0, 0.5}}));

    // Adjoint pairing <H u, r> = <u, H^T r>.
    std::vector<double> u(fs.n_dofs()), r(pts.size());
    std::uniform_real_distribution<double> uni(-1, 1);
    for (auto& x : u) x = uni(rng);
    for (auto& x : r) x = uni(rng);
    std::vector<double> Hu, HTr(fs.n_dofs(), 0.0);
    H.apply(u, Hu);
    for (size_t k = 0; k < pts.size(); ++k) H.scatter_add(static_cast<int>(k), r[k], HTr);
    double a = 0.0, b = 0.0;
    for (size_t k = 0; k < pts.size(); ++k) a += Hu[k] * r[k];
    for (int g = 0; g < fs.n_dofs(); ++g) b += u[g] * HTr[g];
    CHECK(a == doctest::Approx(b).epsilon(1e-13));
}

TEST_CASE("boundary damping lives only on absorbing edges") {
    // Structured mesh tags the top free_surface here; B must be zero there.
    auto m = structured_mesh({0, 1, -1, 0}, 0.25, 0.0, BoundaryTag::free_surface);
    auto el = kmv_element(2);
    auto fs = build_fields(m, el, constant_raster({0, 1, -1, 0}, 2.0), PmlSpec{});
    for (int g = 0; g < fs.n_dofs(); ++g) {
        const double x = fs.dofmap.coords[g][0], z = fs.dofmap.coords[g][1];
        const bool on_side = std::abs(x) < 1e-12 || std::abs(x - 1) < 1e-12;
        const bool on_bottom = std::abs(z + 1) < 1e-12;
        const bool on_top = std::abs(z) < 1e-12;
        if (on_side || on_bottom)
            CHECK(fs.bdamp[g] > 0.0);
        else
            CHECK(fs.bdamp[g] == 0.0);
        if (on_top && !(on_side)) CHECK(fs.bdamp[g] == 0.0);
    }
    // Total boundary damping equals c * perimeter of the absorbing part.
    double total = 0.0;
    for (double v : fs.bdamp) total += v;
    CHECK(total == doctest::Approx(2.0 * 3.0).epsilon(1e-12));
}

TEST_CASE("stiffness kernel is exactly the constants on a connected mesh") {
    auto fs = simple_setup(2, 0.5, 1.0);
    const int n = fs.n_dofs();
    // Dense assembly through the matrix-free kernel, then full spectrum.
    Eigen::MatrixXd K(n, n);
    for (int j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0), col(n, 0.0);
        e[j] = 1.0;
        fs.apply_stiffness(e, col);
        for (int i = 0; i < n; ++i) K(i, j) = col[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()));
    REQUIRE(es.info() == Eigen::Success);
    CHECK(std::abs(es.eigenvalues()(0)) < 1e-10);  // constants
    CHECK(es.eigenvalues()(1) > 1e-6);             // connected: one zero mode only
}

TEST_CASE("non-conforming meshes are rejected") {
    auto m = structured_mesh({0, 1, -1, 0}, 0.5);
    m.triangles.push_back(m.triangles[0]);  // edge now shared by 3 triangles
    CHECK_THROWS(build_dofmap(m, kmv_element(1)));
}
