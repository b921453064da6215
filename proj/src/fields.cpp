#include "triwave/fields.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace triwave {

namespace {

// 1D lumped rule on the element's edge-node parameters: unique weights from
// the node-count x node-count Vandermonde moment match on [0,1].
std::vector<double> edge_rule(const std::vector<double>& params) {
    const int n = static_cast<int>(params.size());
    Eigen::MatrixXd V(n, n);
    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) V(k, j) = std::pow(params[j], k);
        rhs(k) = 1.0 / (k + 1);
    }
    Eigen::VectorXd w = V.fullPivLu().solve(rhs);
    return std::vector<double>(w.data(), w.data() + n);
}

}  // namespace

void pml_profiles(const PmlSpec& spec, const Rect& physical, double c_max, const DofMap& d,
                  std::vector<double>& sigma_x, std::vector<double>& sigma_y) {
    sigma_x.assign(d.n_dofs, 0.0);
    sigma_y.assign(d.n_dofs, 0.0);
    auto smax = [&](double width) {
        if (width <= 0.0) return 0.0;
        if (spec.sigma_max > 0.0) return spec.sigma_max;
        return 3.0 * c_max * std::log(1.0 / spec.reflection_coeff) / (2.0 * width);
    };
    const double sl = smax(spec.widths.left), sr = smax(spec.widths.right);
    const double sb = smax(spec.widths.bottom), st = smax(spec.widths.top);
    const double tol = 1e-10;  // points within roundoff of the interface stay at zero
    for (int g = 0; g < d.n_dofs; ++g) {
        const double x = d.coords[g][0], z = d.coords[g][1];
        if (spec.widths.left > 0.0 && physical.x0 - x > tol * spec.widths.left) {
            const double t = (physical.x0 - x) / spec.widths.left;
            sigma_x[g] = sl * t * t;
        } else if (spec.widths.right > 0.0 && x - physical.x1 > tol * spec.widths.right) {
            const double t = (x - physical.x1) / spec.widths.right;
            sigma_x[g] = sr * t * t;
        }
        if (spec.widths.bottom > 0.0 && physical.z0 - z > tol * spec.widths.bottom) {
            const double t = (physical.z0 - z) / spec.widths.bottom;
            sigma_y[g] = sb * t * t;
        } else if (spec.widths.top > 0.0 && z - physical.z1 > tol * spec.widths.top) {
            const double t = (z - physical.z1) / spec.widths.top;
            sigma_y[g] = st * t * t;
        }
    }
}

FieldSetup build_fields(const Mesh& m, const ElementDef& el, const std::vector<double>& c_nodal,
                        const PmlSpec& pml, double water_threshold) {
    FieldSetup fs;
    fs.mesh = m;
    fs.element = el;
    fs.dofmap = build_dofmap(m, el);
    if (static_cast<int>(c_nodal.size()) != fs.dofmap.n_dofs)
        throw std::invalid_argument("build_fields: nodal c size mismatch");
    fs.c = c_nodal;
    fs.water_threshold = water_threshold;
    fs.water.assign(fs.dofmap.n_dofs, 0);
    double c_max = 0.0;
    for (int g = 0; g < fs.dofmap.n_dofs; ++g) {
        if (!(fs.c[g] > 0.0)) throw std::invalid_argument("build_fields: non-positive wavespeed");
        c_max = std::max(c_max, fs.c[g]);
        if (water_threshold > 0.0 && fs.c[g] < water_threshold) fs.water[g] = 1;
    }
    pml_profiles(pml, m.physical, c_max, fs.dofmap, fs.sigma_x, fs.sigma_y);

    const int n = el.n_nodes;
    const int nt = m.n_triangles();
    fs.detj_.resize(nt);
    fs.gphys_.assign(static_cast<size_t>(nt) * n * n * 2, 0.0);
    fs.mass.assign(fs.dofmap.n_dofs, 0.0);
    const auto& gref = el.grad_table();

    for (int t = 0; t < nt; ++t) {
        const auto& tri = m.triangles[t];
        const auto& a = m.vertices[tri[0]];
        const auto& b = m.vertices[tri[1]];
        const auto& c3 = m.vertices[tri[2]];
        const double j00 = b[0] - a[0], j01 = c3[0] - a[0];
        const double j10 = b[1] - a[1], j11 = c3[1] - a[1];
        const double det = j00 * j11 - j01 * j10;
        if (!(det > 0.0))
            throw std::runtime_error("build_fields: non-positive Jacobian in triangle " +
                                     std::to_string(t));
        fs.detj_[t] = det;
        // J^{-T} = 1/det * [j11, -j10; -j01, j00]
        const double i00 = j11 / det, i01 = -j10 / det;
        const double i10 = -j01 / det, i11 = j00 / det;
        for (int q = 0; q < n; ++q) {
            for (int i = 0; i < n; ++i) {
                const double gx = gref[(static_cast<size_t>(q) * n + i) * 2 + 0];
                const double gy = gref[(static_cast<size_t>(q) * n + i) * 2 + 1];
                const size_t base = ((static_cast<size_t>(t) * n + q) * n + i) * 2;
                fs.gphys_[base + 0] = i00 * gx + i01 * gy;
                fs.gphys_[base + 1] = i10 * gx + i11 * gy;
            }
            fs.mass[fs.dofmap.dof(t, q)] += el.weights[q] * det;
        }
    }
    for (double mv : fs.mass)
        if (!(mv > 0.0)) throw std::runtime_error("build_fields: non-positive lumped mass");

    // Boundary damping from the absorbing-boundary flux, integrated with the
    // 1D lumped restriction of the element nodes on each tagged edge.
    fs.bdamp.assign(fs.dofmap.n_dofs, 0.0);
    const auto& topo = el.node_topology();
    // Collect edge-node parameters (sorted) once per element definition.
    std::vector<double> params;
    std::vector<int> none;
    {
        params.push_back(0.0);
        for (int ln = 0; ln < n; ++ln)
            if (topo[ln].kind == 1 && topo[ln].which == 0) params.push_back(topo[ln].t);
        params.push_back(1.0);
        std::sort(params.begin(), params.end());
    }
    const auto w1d = edge_rule(params);

    // Map each tagged mesh boundary edge to (triangle, local edge id).
    std::map<std::pair<int, int>, std::pair<int, int>> edge_of;
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k) {
            int va = m.triangles[t][k], vb = m.triangles[t][(k + 1) % 3];
            if (va > vb) std::swap(va, vb);
            edge_of[{va, vb}] = {t, k};
        }
    for (const auto& be : m.boundary_edges) {
        if (be.tag != BoundaryTag::absorbing) continue;
        int va = be.a, vb = be.b;
        if (va > vb) std::swap(va, vb);
        const auto [t, k] = edge_of.at({va, vb});
        const auto& pa = m.vertices[m.triangles[t][k]];
        const auto& pb = m.vertices[m.triangles[t][(k + 1) % 3]];
        const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
        for (int ln = 0; ln < n; ++ln) {
            const auto& nt2 = topo[ln];
            double param = -1.0;
            if (nt2.kind == 0 && nt2.which == k) param = 0.0;
            else if (nt2.kind == 0 && nt2.which == (k + 1) % 3) param = 1.0;
            else if (nt2.kind == 1 && nt2.which == k) param = nt2.t;
            if (param < 0.0) continue;
            // Locate the 1D weight of this parameter.
            for (size_t pi = 0; pi < params.size(); ++pi)
                if (std::abs(params[pi] - param) < 1e-12) {
                    const int g = fs.dofmap.dof(t, ln);
                    fs.bdamp[g] += fs.c[g] * w1d[pi] * len;
                    break;
                }
        }
    }
    return fs;
}

FieldSetup build_fields(const Mesh& m, const ElementDef& el, const VelocityModel& vm,
                        const PmlSpec& pml, double water_threshold) {
    auto dm = build_dofmap(m, el);
    return build_fields(m, el, interpolate_velocity(vm, dm), pml, water_threshold);
}

void FieldSetup::apply_stiffness(const std::vector<double>& u, std::vector<double>& out,
                                 double scale) const {
    const int n = element.n_nodes;
    const int nt = mesh.n_triangles();
    double ul[12];
    for (int t = 0; t < nt; ++t) {
        const int* dofs = &dofmap.elem_dofs[static_cast<size_t>(t) * n];
        for (int i = 0; i < n; ++i) ul[i] = u[dofs[i]];
        const double dj = detj_[t];
        const double* G = &gphys_[static_cast<size_t>(t) * n * n * 2];
        for (int q = 0; q < n; ++q) {
            const double* Gq = G + static_cast<size_t>(q) * n * 2;
            double gx = 0.0, gz = 0.0;
            for (int j = 0; j < n; ++j) {
                gx += Gq[j * 2 + 0] * ul[j];
                gz += Gq[j * 2 + 1] * ul[j];
            }
            const double cq = c[dofs[q]];
            const double coef = scale * element.weights[q] * dj * cq * cq;
            const double fx = coef * gx, fz = coef * gz;
            for (int i = 0; i < n; ++i) out[dofs[i]] += Gq[i * 2 + 0] * fx + Gq[i * 2 + 1] * fz;
        }
    }
}

void FieldSetup::apply_p_divergence(const std::vector<double>& px, const std::vector<double>& pz,
                                    std::vector<double>& out, double scale) const {
    const int n = element.n_nodes;
    const int nt = mesh.n_triangles();
    for (int t = 0; t < nt; ++t) {
        const int* dofs = &dofmap.elem_dofs[static_cast<size_t>(t) * n];
        const double dj = detj_[t];
        const double* G = &gphys_[static_cast<size_t>(t) * n * n * 2];
        for (int q = 0; q < n; ++q) {
            const double* Gq = G + static_cast<size_t>(q) * n * 2;
            const double coef = scale * element.weights[q] * dj;
            const double fx = coef * px[dofs[q]], fz = coef * pz[dofs[q]];
            if (fx == 0.0 && fz == 0.0) continue;
            for (int i = 0; i < n; ++i) out[dofs[i]] += Gq[i * 2 + 0] * fx + Gq[i * 2 + 1] * fz;
        }
    }
}

void FieldSetup::apply_pml_grad(const std::vector<double>& u, std::vector<double>& outx,
                                std::vector<double>& outz, double scale) const {
    const int n = element.n_nodes;
    const int nt = mesh.n_triangles();
    double ul[12];
    for (int t = 0; t < nt; ++t) {
        const int* dofs = &dofmap.elem_dofs[static_cast<size_t>(t) * n];
        bool any = false;
        for (int q = 0; q < n; ++q)
            any = any || sigma_x[dofs[q]] != 0.0 || sigma_y[dofs[q]] != 0.0;
        if (!any) continue;
        for (int i = 0; i < n; ++i) ul[i] = u[dofs[i]];
        const double dj = detj_[t];
        const double* G = &gphys_[static_cast<size_t>(t) * n * n * 2];
        for (int q = 0; q < n; ++q) {
            const int g = dofs[q];
            const double psi2x = sigma_x[g] - sigma_y[g];
            const double psi2z = sigma_y[g] - sigma_x[g];
            if (psi2x == 0.0 && psi2z == 0.0) continue;
            const double* Gq = G + static_cast<size_t>(q) * n * 2;
            double gx = 0.0, gz = 0.0;
            for (int j = 0; j < n; ++j) {
                gx += Gq[j * 2 + 0] * ul[j];
                gz += Gq[j * 2 + 1] * ul[j];
            }
            const double coef = scale * element.weights[q] * dj * c[g] * c[g];
            outx[g] += coef * psi2x * gx;
            outz[g] += coef * psi2z * gz;
        }
    }
}

void FieldSetup::apply_p_divergence_T(const std::vector<double>& u, std::vector<double>& outx,
                                      std::vector<double>& outz, double scale) const {
    const int n = element.n_nodes;
    const int nt = mesh.n_triangles();
    double ul[12];
    for (int t = 0; t < nt; ++t) {
        const int* dofs = &dofmap.elem_dofs[static_cast<size_t>(t) * n];
        for (int i = 0; i < n; ++i) ul[i] = u[dofs[i]];
        const double dj = detj_[t];
        const double* G = &gphys_[static_cast<size_t>(t) * n * n * 2];
        for (int q = 0; q < n; ++q) {
            const double* Gq = G + static_cast<size_t>(q) * n * 2;
            double gx = 0.0, gz = 0.0;
            for (int j = 0; j < n; ++j) {
                gx += Gq[j * 2 + 0] * ul[j];
                gz += Gq[j * 2 + 1] * ul[j];
            }
            const double coef = scale * element.weights[q] * dj;
            outx[dofs[q]] += coef * gx;
            outz[dofs[q]] += coef * gz;
        }
    }
}

void FieldSetup::apply_pml_grad_T(const std::vector<double>& px, const std::vector<double>& pz,
                                  std::vector<double>& out, double scale) const {
    const int n = element.n_nodes;
    const int nt = mesh.n_triangles();
    for (int t = 0; t < nt; ++t) {
        const int* dofs = &dofmap.elem_dofs[static_cast<size_t>(t) * n];
        const double dj = detj_[t];
        const double* G = &gphys_[static_cast<size_t>(t) * n * n * 2];
        for (int q = 0; q < n; ++q) {
            const int g = dofs[q];
            const double psi2x = sigma_x[g] - sigma_y[g];
            const double psi2z = sigma_y[g] - sigma_x[g];
            const double cq2 = c[g] * c[g];
            const double coef = scale * element.weights[q] * dj * cq2;
            const double fx = coef * psi2x * px[g];
            const double fz = coef * psi2z * pz[g];
            if (fx == 0.0 && fz == 0.0) continue;
            const double* Gq = G + static_cast<size_t>(q) * n * 2;
            for (int i = 0; i < n; ++i) out[dofs[i]] += Gq[i * 2 + 0] * fx + Gq[i * 2 + 1] * fz;
        }
    }
}

double FieldSetup::estimate_dt_cfl() const {
    const int n = element.n_nodes;
    const int nt = mesh.n_triangles();
    std::vector<double> rowsum(dofmap.n_dofs, 0.0);
    for (int t = 0; t < nt; ++t) {
        const int* dofs = &dofmap.elem_dofs[static_cast<size_t>(t) * n];
        const double dj = detj_[t];
        const double* G = &gphys_[static_cast<size_t>(t) * n * n * 2];
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) {
                double kij = 0.0;
                for (int q = 0; q < n; ++q) {
                    const double* Gq = G + static_cast<size_t>(q) * n * 2;
                    const double cq = c[dofs[q]];
                    kij += element.weights[q] * dj * cq * cq *
                           (Gq[i * 2 + 0] * Gq[j * 2 + 0] + Gq[i * 2 + 1] * Gq[j * 2 + 1]);
                }
                s += std::abs(kij);
            }
            rowsum[dofs[i]] += s;
        }
    }
    double rho = 0.0;
    for (int g = 0; g < dofmap.n_dofs; ++g) rho = std::max(rho, rowsum[g] / mass[g]);
    return 2.0 / std::sqrt(rho);
}

void PointInterpolator::apply(const std::vector<double>& u, std::vector<double>& values) const {
    values.assign(rows.size(), 0.0);
    for (size_t r = 0; r < rows.size(); ++r) {
        double s = 0.0;
        for (size_t k = 0; k < rows[r].dofs.size(); ++k) s += rows[r].w[k] * u[rows[r].dofs[k]];
        values[r] = s;
    }
}

void PointInterpolator::scatter_add(int row, double scale, std::vector<double>& out) const {
    const Row& r = rows[row];
    for (size_t k = 0; k < r.dofs.size(); ++k) out[r.dofs[k]] += scale * r.w[k];
}

PointInterpolator point_interpolator(const Mesh& m, const DofMap& d, const ElementDef& el,
                                     const std::vector<std::array<double, 2>>& points) {
    PointInterpolator H;
    const double tol = 1e-10;
    for (const auto& p : points) {
        PointInterpolator::Row row;
        for (int t = 0; t < m.n_triangles() && row.tri < 0; ++t) {
            const auto& tri = m.triangles[t];
            const auto& a = m.vertices[tri[0]];
            const auto& b = m.vertices[tri[1]];
            const auto& c = m.vertices[tri[2]];
            const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            const double xi = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            const double eta = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            if (xi < -tol || eta < -tol || xi + eta > 1.0 + tol) continue;
            row.tri = t;
            const auto phi = el.eval_basis({xi, eta});
            for (int ln = 0; ln < el.n_nodes; ++ln) {
                row.dofs.push_back(d.dof(t, ln));
                row.w.push_back(phi[ln]);
            }
        }
        if (row.tri < 0)
            throw std::invalid_argument("point (" + std::to_string(p[0]) + ", " +
                                        std::to_string(p[1]) + ") lies outside the mesh");
        H.rows.push_back(std::move(row));
    }
    return H;
}

}  // namespace triwave
