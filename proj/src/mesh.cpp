#include "triwave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace triwave {

namespace {

double bilinear_clamped(int nx, int nz, double x0, double z0, double dx, double dz,
                        const std::vector<double>& v, double x, double z) {
    const double fx = std::clamp((x - x0) / dx, 0.0, static_cast<double>(nx - 1));
    const double fz = std::clamp((z - z0) / dz, 0.0, static_cast<double>(nz - 1));
    const int ix = std::min(static_cast<int>(fx), std::max(nx - 2, 0));
    const int iz = std::min(static_cast<int>(fz), std::max(nz - 2, 0));
    const double tx = nx > 1 ? fx - ix : 0.0;
    const double tz = nz > 1 ? fz - iz : 0.0;
    const int ix1 = std::min(ix + 1, nx - 1), iz1 = std::min(iz + 1, nz - 1);
    auto at = [&](int i, int j) { return v[static_cast<size_t>(j) * nx + i]; };
    return (1 - tx) * (1 - tz) * at(ix, iz) + tx * (1 - tz) * at(ix1, iz) +
           (1 - tx) * tz * at(ix, iz1) + tx * tz * at(ix1, iz1);
}

}  // namespace

double VelocityModel::sample(double x, double z) const {
    return bilinear_clamped(nx, nz, x0, z0, dx, dz, values, x, z);
}

double VelocityModel::max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

double SizingField::sample(double x, double z) const {
    return bilinear_clamped(nx, nz, x0, z0, dx, dz, values, x, z);
}

double SizingField::min_value() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double v : values) m = std::min(m, v);
    return m;
}

SizingField sizing_from_velocity(const VelocityModel& vm, double f_source,
                                 double cells_per_wavelength, double l_min) {
    if (f_source <= 0.0) throw std::invalid_argument("sizing: f_source must be positive");
    if (cells_per_wavelength <= 0.0)
        throw std::invalid_argument("sizing: cells-per-wavelength must be positive");
    SizingField sf;
    sf.nx = vm.nx;
    sf.nz = vm.nz;
    sf.x0 = vm.x0;
    sf.z0 = vm.z0;
    sf.dx = vm.dx;
    sf.dz = vm.dz;
    sf.values.resize(vm.values.size());
    for (size_t i = 0; i < vm.values.size(); ++i) {
        if (!(vm.values[i] > 0.0)) throw std::invalid_argument("sizing: non-positive wavespeed");
        sf.values[i] = std::max(vm.values[i] / (cells_per_wavelength * f_source), l_min);
    }
    return sf;
}

SizingField gradation_limit(const SizingField& sf) {
    if (!(sf.gradation_rate > 0.0 && sf.gradation_rate < 1.0))
        throw std::invalid_argument("gradation rate must lie in (0, 1)");
    SizingField out = sf;
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    for (int i = 0; i < sf.nx * sf.nz; ++i) pq.push({out.values[i], i});
    const int dxs[4] = {1, -1, 0, 0};
    const int dzs[4] = {0, 0, 1, -1};
    while (!pq.empty()) {
        auto [val, idx] = pq.top();
        pq.pop();
        if (val > out.values[idx]) continue;  // stale entry
        const int ix = idx % sf.nx, iz = idx / sf.nx;
        for (int k = 0; k < 4; ++k) {
            const int jx = ix + dxs[k], jz = iz + dzs[k];
            if (jx < 0 || jx >= sf.nx || jz < 0 || jz >= sf.nz) continue;
            const double step = (k < 2 ? sf.dx : sf.dz) * sf.gradation_rate;
            const int j = jz * sf.nx + jx;
            const double cand = val + step;
            if (cand < out.values[j]) {
                out.values[j] = cand;
                pq.push({cand, j});
            }
        }
    }
    return out;
}

double Mesh::triangle_area(int t) const {
    const auto& a = vertices[triangles[t][0]];
    const auto& b = vertices[triangles[t][1]];
    const auto& c = vertices[triangles[t][2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

void Mesh::validate() const {
    for (int t = 0; t < n_triangles(); ++t)
        if (!(triangle_area(t) > 0.0))
            throw std::runtime_error("mesh: non-positive area in triangle " + std::to_string(t));
    if (region_tags.size() != vertices.size())
        throw std::runtime_error("mesh: region tag count mismatch");

    // Conformity: interior edges in exactly two triangles, boundary in one,
    // and each single-triangle edge must carry a boundary tag.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : triangles)
        for (int k = 0; k < 3; ++k) {
            int a = tri[k], b = tri[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_count[{a, b}]++;
        }
    std::map<std::pair<int, int>, int> tagged;
    for (const auto& be : boundary_edges) {
        int a = be.a, b = be.b;
        if (a > b) std::swap(a, b);
        tagged[{a, b}]++;
    }
    for (const auto& [e, cnt] : edge_count) {
        if (cnt > 2) throw std::runtime_error("mesh: edge shared by more than two triangles");
        if (cnt == 1 && !tagged.count(e)) throw std::runtime_error("mesh: untagged boundary edge");
        if (cnt == 2 && tagged.count(e))
            throw std::runtime_error("mesh: interior edge carries a boundary tag");
    }
    for (size_t i = 0; i < vertices.size(); ++i)
        for (size_t j = i + 1; j < vertices.size() && j < i + 32; ++j) {
            // Adjacent-index spot check only; full O(n^2) dedup is done by
            // the generator before emitting.
            if (std::abs(vertices[i][0] - vertices[j][0]) < 1e-12 &&
                std::abs(vertices[i][1] - vertices[j][1]) < 1e-12)
                throw std::runtime_error("mesh: duplicate vertices");
        }
}

Mesh structured_mesh(const Rect& full, double h, double pml_band, BoundaryTag top_tag) {
    const int ncx = std::max(1, static_cast<int>(std::lround(full.width() / h)));
    const int ncz = std::max(1, static_cast<int>(std::lround(full.height() / h)));
    const double hx = full.width() / ncx, hz = full.height() / ncz;
    Mesh m;
    m.full = full;
    m.physical = {full.x0 + pml_band, full.x1 - pml_band, full.z0 + pml_band, full.z1};
    for (int j = 0; j <= ncz; ++j)
        for (int i = 0; i <= ncx; ++i) {
            const double x = (i == ncx) ? full.x1 : full.x0 + i * hx;
            const double z = (j == ncz) ? full.z1 : full.z0 + j * hz;
            m.vertices.push_back({x, z});
            const bool in_band = pml_band > 0.0 &&
                                 (x < full.x0 + pml_band - 1e-12 || x > full.x1 - pml_band + 1e-12 ||
                                  z < full.z0 + pml_band - 1e-12);
            m.region_tags.push_back(in_band ? RegionTag::pml : RegionTag::physical);
        }
    auto vid = [&](int i, int j) { return j * (ncx + 1) + i; };
    for (int j = 0; j < ncz; ++j)
        for (int i = 0; i < ncx; ++i) {
            const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            m.triangles.push_back({a, b, c});
            m.triangles.push_back({a, c, d});
        }
    for (int i = 0; i < ncx; ++i) {
        m.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), BoundaryTag::absorbing});
        m.boundary_edges.push_back({vid(i, ncz), vid(i + 1, ncz), top_tag});
    }
    for (int j = 0; j < ncz; ++j) {
        m.boundary_edges.push_back({vid(0, j), vid(0, j + 1), BoundaryTag::absorbing});
        m.boundary_edges.push_back({vid(ncx, j), vid(ncx, j + 1), BoundaryTag::absorbing});
    }
    return m;
}

QualityReport mesh_quality(const Mesh& m, const SizingField* sf) {
    QualityReport r;
    r.n_vertices = m.n_vertices();
    r.n_triangles = m.n_triangles();
    double min_ang = 180.0, ang_sum = 0.0;
    int ang_count = 0;
    for (const auto& tri : m.triangles) {
        for (int k = 0; k < 3; ++k) {
            const auto& a = m.vertices[tri[k]];
            const auto& b = m.vertices[tri[(k + 1) % 3]];
            const auto& c = m.vertices[tri[(k + 2) % 3]];
            const double ux = b[0] - a[0], uy = b[1] - a[1];
            const double vx = c[0] - a[0], vy = c[1] - a[1];
            const double ang = std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy) * 180.0 / M_PI;
            min_ang = std::min(min_ang, ang);
            ang_sum += ang;
            ++ang_count;
        }
        r.area_sum += 0.5 * std::abs((m.vertices[tri[1]][0] - m.vertices[tri[0]][0]) *
                                         (m.vertices[tri[2]][1] - m.vertices[tri[0]][1]) -
                                     (m.vertices[tri[1]][1] - m.vertices[tri[0]][1]) *
                                         (m.vertices[tri[2]][0] - m.vertices[tri[0]][0]));
    }
    r.min_angle_deg = ang_count ? min_ang : 0.0;
    r.mean_angle_deg = ang_count ? ang_sum / ang_count : 0.0;

    std::map<std::pair<int, int>, char> seen;
    std::vector<double> lengths;
    int near = 0, total = 0;
    for (const auto& tri : m.triangles)
        for (int k = 0; k < 3; ++k) {
            int a = tri[k], b = tri[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            if (seen.count({a, b})) continue;
            seen[{a, b}] = 1;
            const auto& pa = m.vertices[a];
            const auto& pb = m.vertices[b];
            const double L = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
            lengths.push_back(L);
            if (sf) {
                const double want = sf->sample(0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]));
                ++total;
                if (L >= 0.8 * want && L <= 1.2 * want) ++near;
                const double q = L / want;
                const int bucket = q < 0.6 ? 0 : q < 0.8 ? 1 : q <= 1.2 ? 2 : q <= 1.4 ? 3 : 4;
                r.ratio_histogram[bucket]++;
            }
        }
    if (!lengths.empty()) {
        std::sort(lengths.begin(), lengths.end());
        r.median_edge = lengths[lengths.size() / 2];
    }
    r.frac_edges_near_sizing = total ? static_cast<double>(near) / total : 1.0;
    return r;
}

std::string QualityReport::summary() const {
    std::ostringstream os;
    os << "vertices " << n_vertices << ", triangles " << n_triangles << ", min angle "
       << min_angle_deg << " deg, mean angle " << mean_angle_deg << " deg, area " << area_sum
       << ", median edge " << median_edge << ", edges within 20% of sizing "
       << 100.0 * frac_edges_near_sizing << "%";
    int total = 0;
    for (int nbin : ratio_histogram) total += nbin;
    if (total > 0) {
        os << ", edge/sizing histogram [<0.6, 0.6-0.8, 0.8-1.2, 1.2-1.4, >1.4] =";
        for (int nbin : ratio_histogram) os << " " << nbin;
    }
    return os.str();
}

}  // namespace triwave
