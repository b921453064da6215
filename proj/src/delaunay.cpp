#include "triwave/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace triwave {

namespace {

struct Tri {
    std::array<int, 3> v;    // vertices, CCW
    std::array<int, 3> adj;  // adj[k] = neighbor across the edge opposite v[k]
    bool alive = true;
};

inline long double orient2d(const std::array<double, 2>& a, const std::array<double, 2>& b,
                            const std::array<double, 2>& c) {
    const long double abx = (long double)b[0] - a[0], aby = (long double)b[1] - a[1];
    const long double acx = (long double)c[0] - a[0], acy = (long double)c[1] - a[1];
    return abx * acy - aby * acx;
}

// > 0 when p lies inside the circumcircle of CCW triangle (a, b, c).
inline long double incircle(const std::array<double, 2>& a, const std::array<double, 2>& b,
                            const std::array<double, 2>& c, const std::array<double, 2>& p) {
    const long double ax = (long double)a[0] - p[0], ay = (long double)a[1] - p[1];
    const long double bx = (long double)b[0] - p[0], by = (long double)b[1] - p[1];
    const long double cx = (long double)c[0] - p[0], cy = (long double)c[1] - p[1];
    const long double a2 = ax * ax + ay * ay;
    const long double b2 = bx * bx + by * by;
    const long double c2 = cx * cx + cy * cy;
    return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(
    const std::vector<std::array<double, 2>>& pts) {
    const int n = static_cast<int>(pts.size());
    if (n < 3) return {};

    double xmin = pts[0][0], xmax = xmin, ymin = pts[0][1], ymax = ymin;
    for (const auto& p : pts) {
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    }
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});

    std::vector<std::array<double, 2>> P = pts;
    const int s0 = n, s1 = n + 1, s2 = n + 2;
    P.push_back({cx - 40.0 * span, cy - 20.0 * span});
    P.push_back({cx + 40.0 * span, cy - 20.0 * span});
    P.push_back({cx, cy + 40.0 * span});

    std::vector<Tri> tris;
    tris.push_back({{s0, s1, s2}, {-1, -1, -1}, true});

    std::vector<int> cavity, hops;
    std::vector<char> in_cavity;
    int last = 0;

    for (int ip = 0; ip < n; ++ip) {
        const auto& p = P[ip];

        // Walk from `last` toward the triangle containing p.
        int cur = last;
        if (!tris[cur].alive) {
            cur = -1;
            for (int t = static_cast<int>(tris.size()) - 1; t >= 0; --t)
                if (tris[t].alive) {
                    cur = t;
                    break;
                }
        }
        int guard = 0;
        const int guard_max = 4 * static_cast<int>(tris.size()) + 64;
        while (true) {
            if (++guard > guard_max) throw std::runtime_error("delaunay: point location walk failed");
            const auto& t = tris[cur];
            bool moved = false;
            for (int k = 0; k < 3; ++k) {
                const int a = t.v[(k + 1) % 3], b = t.v[(k + 2) % 3];
                if (orient2d(P[a], P[b], p) < 0.0L) {
                    const int nb = t.adj[k];
                    if (nb < 0) throw std::runtime_error("delaunay: walked out of the hull");
                    cur = nb;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }

        // Grow the cavity of circumcircle violations around `cur`.
        cavity.clear();
        in_cavity.assign(tris.size(), 0);
        hops.clear();
        hops.push_back(cur);
        in_cavity[cur] = 1;
        while (!hops.empty()) {
            const int t = hops.back();
            hops.pop_back();
            cavity.push_back(t);
            for (int k = 0; k < 3; ++k) {
                const int nb = tris[t].adj[k];
                if (nb < 0 || in_cavity[nb]) continue;
                const auto& v = tris[nb].v;
                if (incircle(P[v[0]], P[v[1]], P[v[2]], p) > 0.0L) {
                    in_cavity[nb] = 1;
                    hops.push_back(nb);
                }
            }
        }

        // Boundary edges of the cavity, with the outside neighbor attached.
        // A ring edge collinear with p would create a zero-area fan triangle;
        // force its outside triangle into the cavity and rebuild.
        struct CavEdge {
            int a, b, outside;
        };
        std::vector<CavEdge> ring;
        while (true) {
            ring.clear();
            bool grew = false;
            for (size_t ci = 0; ci < cavity.size(); ++ci) {
                const int t = cavity[ci];
                for (int k = 0; k < 3; ++k) {
                    const int nb = tris[t].adj[k];
                    if (nb >= 0 && in_cavity[nb]) continue;
                    const int a = tris[t].v[(k + 1) % 3], b = tris[t].v[(k + 2) % 3];
                    if (orient2d(P[ip], P[a], P[b]) <= 0.0L) {
                        if (nb < 0) throw std::runtime_error("delaunay: degenerate hull edge");
                        in_cavity[nb] = 1;
                        cavity.push_back(nb);
                        grew = true;
                        break;
                    }
                    ring.push_back({a, b, nb});
                }
                if (grew) break;
            }
            if (!grew) break;
        }
        for (int t : cavity) tris[t].alive = false;

        // Retriangulate the cavity as a fan around p.
        const int base = static_cast<int>(tris.size());
        for (size_t e = 0; e < ring.size(); ++e)
            tris.push_back({{ip, ring[e].a, ring[e].b}, {ring[e].outside, -1, -1}, true});
        // Stitch new triangles: neighbor across (p, b) is the one whose
        // (p, a') equals (p, b); link by endpoint matching.
        for (size_t e = 0; e < ring.size(); ++e) {
            if (ring[e].outside >= 0) {
                Tri& out = tris[ring[e].outside];
                for (int k = 0; k < 3; ++k)
                    if ((out.v[(k + 1) % 3] == ring[e].b && out.v[(k + 2) % 3] == ring[e].a))
                        out.adj[k] = base + static_cast<int>(e);
            }
            for (size_t f = 0; f < ring.size(); ++f) {
                if (f == e) continue;
                if (ring[f].a == ring[e].b) tris[base + e].adj[1] = base + static_cast<int>(f);
                if (ring[f].b == ring[e].a) tris[base + e].adj[2] = base + static_cast<int>(f);
            }
        }
        last = base;

        // Compact occasionally to keep walks and cavity scans cheap.
        if (tris.size() > 4096 && tris.size() > 4 * (size_t)(ip + 4)) {
            std::vector<int> remap(tris.size(), -1);
            std::vector<Tri> next;
            next.reserve(2 * (ip + 4));
            for (size_t t = 0; t < tris.size(); ++t)
                if (tris[t].alive) {
                    remap[t] = static_cast<int>(next.size());
                    next.push_back(tris[t]);
                }
            for (auto& t : next)
                for (int k = 0; k < 3; ++k) t.adj[k] = t.adj[k] >= 0 ? remap[t.adj[k]] : -1;
            tris.swap(next);
            last = static_cast<int>(tris.size()) - 1;
        }
    }

    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris) {
        if (!t.alive) continue;
        if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
        out.push_back(t.v);
    }
    return out;
}

}  // namespace triwave
