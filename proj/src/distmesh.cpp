#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "triwave/delaunay.hpp"
#include "triwave/mesh.hpp"

namespace triwave {

namespace {

struct Edge {
    int a, b;
};

std::vector<Edge> unique_edges(const std::vector<std::array<int, 3>>& tris) {
    std::vector<std::pair<int, int>> all;
    all.reserve(tris.size() * 3);
    for (const auto& t : tris)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            all.push_back({a, b});
        }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::vector<Edge> out;
    out.reserve(all.size());
    for (auto& e : all) out.push_back({e.first, e.second});
    return out;
}

}  // namespace

Mesh generate_mesh(const Rect& physical, double pml_width, const SizingField& sf,
                   std::uint64_t seed, const MeshOptions& opts) {
    return generate_mesh(physical, PmlWidths::sides_and_bottom(pml_width), sf, seed, opts);
}

Mesh generate_mesh(const Rect& physical, const PmlWidths& pml, const SizingField& sf,
                   std::uint64_t seed, const MeshOptions& opts) {
    if (pml.left < 0 || pml.right < 0 || pml.bottom < 0 || pml.top < 0)
        throw std::invalid_argument("generate_mesh: negative pml width");
    const Rect full{physical.x0 - pml.left, physical.x1 + pml.right, physical.z0 - pml.bottom,
                    physical.z1 + pml.top};

    auto dist = [&](double x, double z) {
        return std::max({full.x0 - x, x - full.x1, full.z0 - z, z - full.z1});
    };

    // Coarsest sampling of the sizing over the full rectangle for h0.
    double h0 = sf.sample(full.x0, full.z0);
    {
        const int ns = 64;
        for (int j = 0; j <= ns; ++j)
            for (int i = 0; i <= ns; ++i)
                h0 = std::min(h0, sf.sample(full.x0 + full.width() * i / ns,
                                            full.z0 + full.height() * j / ns));
    }
    if (!(h0 > 0.0)) throw std::invalid_argument("generate_mesh: sizing field must be positive");

    std::vector<std::array<double, 2>> pts;
    const std::vector<std::array<double, 2>> fixed = {{full.x0, full.z0},
                                                      {full.x1, full.z0},
                                                      {full.x1, full.z1},
                                                      {full.x0, full.z1}};
    for (const auto& f : fixed) pts.push_back(f);
    const int n_fixed = static_cast<int>(fixed.size());

    // Staggered seed lattice, thinned by rejection sampling against 1/l_e^2.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double rowstep = h0 * std::sqrt(3.0) / 2.0;
    int jrow = 0;
    for (double z = full.z0; z <= full.z1 + 1e-12; z += rowstep, ++jrow) {
        const double xoff = (jrow % 2) ? 0.5 * h0 : 0.0;
        for (double x = full.x0 + xoff; x <= full.x1 + 1e-12; x += h0) {
            const double p = uni(rng);
            const double h = sf.sample(x, z);
            if (p >= (h0 * h0) / (h * h)) continue;
            bool clash = false;
            for (const auto& f : fixed)
                if (std::hypot(x - f[0], z - f[1]) < 0.5 * h0) clash = true;
            if (!clash) pts.push_back({x, z});
        }
    }

    const double geps = 1e-3 * h0;
    const double deltat = 0.2;
    const double ttol = 0.1;
    const double fscale = 1.2;
    const double ptol = 1e-3;

    std::vector<std::array<int, 3>> tris;
    std::vector<Edge> edges;
    std::vector<std::array<double, 2>> last_tri_pos;
    std::vector<std::array<double, 2>> force(pts.size());
    int iter = 0;

    auto retriangulate = [&]() {
        auto raw = delaunay_triangulate(pts);
        tris.clear();
        for (const auto& t : raw) {
            const double cx = (pts[t[0]][0] + pts[t[1]][0] + pts[t[2]][0]) / 3.0;
            const double cz = (pts[t[0]][1] + pts[t[1]][1] + pts[t[2]][1]) / 3.0;
            if (dist(cx, cz) < -geps) tris.push_back(t);
        }
        edges = unique_edges(tris);
        last_tri_pos = pts;
    };
    retriangulate();

    for (iter = 1; iter <= opts.max_iterations; ++iter) {
        // Retriangulate when any point drifted far since the last one.
        double drift = 0.0;
        for (size_t i = 0; i < pts.size(); ++i)
            drift = std::max(drift, std::hypot(pts[i][0] - last_tri_pos[i][0],
                                               pts[i][1] - last_tri_pos[i][1]));
        if (drift > ttol * h0) retriangulate();

        // Density control: drop points whose edges want to be much longer.
        if (iter % 30 == 0) {
            std::set<int> kill;
            for (const auto& e : edges) {
                const double mx = 0.5 * (pts[e.a][0] + pts[e.b][0]);
                const double mz = 0.5 * (pts[e.a][1] + pts[e.b][1]);
                const double L = std::hypot(pts[e.a][0] - pts[e.b][0], pts[e.a][1] - pts[e.b][1]);
                if (sf.sample(mx, mz) > 2.0 * L) {
                    const int victim = std::max(e.a, e.b);
                    if (victim >= n_fixed) kill.insert(victim);
                }
            }
            if (!kill.empty()) {
                std::vector<std::array<double, 2>> next;
                next.reserve(pts.size() - kill.size());
                for (int i = 0; i < static_cast<int>(pts.size()); ++i)
                    if (!kill.count(i)) next.push_back(pts[i]);
                pts.swap(next);
                force.assign(pts.size(), {0.0, 0.0});
                retriangulate();
            }
        }

        // Edge spring forces (repulsive only).
        force.assign(pts.size(), {0.0, 0.0});
        double sumL2 = 0.0, sumH2 = 0.0;
        std::vector<double> L(edges.size()), H(edges.size());
        for (size_t e = 0; e < edges.size(); ++e) {
            const auto& pa = pts[edges[e].a];
            const auto& pb = pts[edges[e].b];
            L[e] = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
            H[e] = sf.sample(0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]));
            sumL2 += L[e] * L[e];
            sumH2 += H[e] * H[e];
        }
        const double scale = fscale * std::sqrt(sumL2 / sumH2);
        for (size_t e = 0; e < edges.size(); ++e) {
            const double L0 = H[e] * scale;
            const double f = std::max(L0 - L[e], 0.0);
            if (f <= 0.0 || L[e] <= 0.0) continue;
            const auto& pa = pts[edges[e].a];
            const auto& pb = pts[edges[e].b];
            const double fx = f * (pa[0] - pb[0]) / L[e];
            const double fz = f * (pa[1] - pb[1]) / L[e];
            force[edges[e].a][0] += fx;
            force[edges[e].a][1] += fz;
            force[edges[e].b][0] -= fx;
            force[edges[e].b][1] -= fz;
        }
        for (int i = 0; i < n_fixed; ++i) force[i] = {0.0, 0.0};

        double max_rel_move = 0.0;
        for (size_t i = 0; i < pts.size(); ++i) {
            const double mx = deltat * force[i][0];
            const double mz = deltat * force[i][1];
            pts[i][0] += mx;
            pts[i][1] += mz;
            double d = dist(pts[i][0], pts[i][1]);
            if (d > 0.0) {
                // Project exterior points back with the numerical SDF gradient.
                const double eps = 1e-7 * h0 + 1e-14;
                const double gx = (dist(pts[i][0] + eps, pts[i][1]) - d) / eps;
                const double gz = (dist(pts[i][0], pts[i][1] + eps) - d) / eps;
                const double g2 = gx * gx + gz * gz;
                pts[i][0] -= d * gx / g2;
                pts[i][1] -= d * gz / g2;
            } else if (d < -geps) {
                const double h = sf.sample(pts[i][0], pts[i][1]);
                max_rel_move = std::max(max_rel_move, std::hypot(mx, mz) / h);
            }
        }
        if (max_rel_move < ptol) break;
    }

    // Snap boundary points onto the exact rectangle and finalize.
    const double snap = 2.0 * geps;
    for (auto& p : pts) {
        if (std::abs(p[0] - full.x0) < snap) p[0] = full.x0;
        if (std::abs(p[0] - full.x1) < snap) p[0] = full.x1;
        if (std::abs(p[1] - full.z0) < snap) p[1] = full.z0;
        if (std::abs(p[1] - full.z1) < snap) p[1] = full.z1;
    }
    // Interior points hugging the boundary leave sliver caps behind; drop
    // them and let the triangulation bridge to the boundary row directly.
    {
        std::vector<std::array<double, 2>> kept;
        kept.reserve(pts.size());
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
            const double d = dist(pts[i][0], pts[i][1]);
            const bool on_boundary = d == 0.0;
            const bool crowding =
                !on_boundary && d > -0.33 * sf.sample(pts[i][0], pts[i][1]);
            if (i < n_fixed || on_boundary || !crowding) kept.push_back(pts[i]);
        }
        pts.swap(kept);
    }
    retriangulate();

    Mesh m;
    m.physical = physical;
    m.full = full;
    m.vertices = pts;
    m.triangles = tris;
    for (const auto& p : pts)
        m.region_tags.push_back(physical.contains(p[0], p[1], 1e-9) ? RegionTag::physical
                                                                    : RegionTag::pml);
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : tris)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_count[{a, b}]++;
        }
    for (const auto& [e, cnt] : edge_count) {
        if (cnt != 1) continue;
        const bool on_top =
            pts[e.first][1] == full.z1 && pts[e.second][1] == full.z1;
        m.boundary_edges.push_back({e.first, e.second,
                                    on_top ? opts.top_tag : BoundaryTag::absorbing});
    }

    m.validate();
    const auto q = mesh_quality(m, &sf);
    const auto ratio_ok = [&]() {
        std::vector<double> ratios;
        for (const auto& e : edge_count) {
            const auto& pa = pts[e.first.first];
            const auto& pb = pts[e.first.second];
            const double L = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
            ratios.push_back(L / sf.sample(0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])));
        }
        std::sort(ratios.begin(), ratios.end());
        const double med = ratios[ratios.size() / 2];
        return med >= 0.8 && med <= 1.2;
    };
    if (q.min_angle_deg < opts.min_angle_deg || !ratio_ok())
        throw std::runtime_error("generate_mesh: quality targets not met after " +
                                 std::to_string(iter) + " iterations: " + q.summary());
    return m;
}

}  // namespace triwave
