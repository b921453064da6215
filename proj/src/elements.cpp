#include "triwave/elements.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace triwave {

namespace {

// KMV3tri node parameters (edge and interior placement).
constexpr double kEdge3 = 0.2934695559090401;
constexpr double kInt3 = 0.2073451756635909;

// Enriched spanning set per degree: P_k monomials plus the cubic interior
// bubble b = x*y*(1-x-y) (degree 2) or b*x, b*y (degree 3).
int span_size(int degree) {
    switch (degree) {
        case 1: return 3;
        case 2: return 7;
        case 3: return 12;
    }
    return 0;
}

void span_eval(int degree, double x, double y, double* out) {
    const double b = x * y * (1.0 - x - y);
    out[0] = 1.0;
    out[1] = x;
    out[2] = y;
    if (degree == 1) return;
    out[3] = x * x;
    out[4] = x * y;
    out[5] = y * y;
    if (degree == 2) {
        out[6] = b;
        return;
    }
    out[6] = x * x * x;
    out[7] = x * x * y;
    out[8] = x * y * y;
    out[9] = y * y * y;
    out[10] = b * x;
    out[11] = b * y;
}

void span_grad(int degree, double x, double y, double (*out)[2]) {
    const double b = x * y * (1.0 - x - y);
    const double bx = y - 2.0 * x * y - y * y;  // db/dx
    const double by = x - x * x - 2.0 * x * y;  // db/dy
    out[0][0] = 0.0;
    out[0][1] = 0.0;
    out[1][0] = 1.0;
    out[1][1] = 0.0;
    out[2][0] = 0.0;
    out[2][1] = 1.0;
    if (degree == 1) return;
    out[3][0] = 2.0 * x;
    out[3][1] = 0.0;
    out[4][0] = y;
    out[4][1] = x;
    out[5][0] = 0.0;
    out[5][1] = 2.0 * y;
    if (degree == 2) {
        out[6][0] = bx;
        out[6][1] = by;
        return;
    }
    out[6][0] = 3.0 * x * x;
    out[6][1] = 0.0;
    out[7][0] = 2.0 * x * y;
    out[7][1] = x * x;
    out[8][0] = y * y;
    out[8][1] = 2.0 * x * y;
    out[9][0] = 0.0;
    out[9][1] = 3.0 * y * y;
    out[10][0] = b + x * bx;
    out[10][1] = x * by;
    out[11][0] = y * bx;
    out[11][1] = b + y * by;
}

std::vector<std::vector<RefPoint>> node_orbits(int degree) {
    const RefPoint v0{0.0, 0.0}, v1{1.0, 0.0}, v2{0.0, 1.0};
    std::vector<std::vector<RefPoint>> orbits;
    orbits.push_back({v0, v1, v2});
    if (degree == 2) {
        orbits.push_back({{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}});
        orbits.push_back({{1.0 / 3.0, 1.0 / 3.0}});
    } else if (degree == 3) {
        const double a = kEdge3;
        orbits.push_back({{a, 0.0},
                          {1.0 - a, 0.0},
                          {1.0 - a, a},
                          {a, 1.0 - a},
                          {0.0, 1.0 - a},
                          {0.0, a}});
        const double c = kInt3;
        orbits.push_back({{c, c}, {1.0 - 2.0 * c, c}, {c, 1.0 - 2.0 * c}});
    }
    return orbits;
}

void require_inside(const RefPoint& p) {
    const double tol = 1e-10;
    if (p.x < -tol || p.y < -tol || p.x + p.y > 1.0 + tol)
        throw std::invalid_argument("reference point (" + std::to_string(p.x) + ", " +
                                    std::to_string(p.y) + ") outside the unit triangle");
}

ElementDef::NodeTopo classify_node(const RefPoint& p) {
    const double tol = 1e-12;
    const double l0 = 1.0 - p.x - p.y, l1 = p.x, l2 = p.y;
    ElementDef::NodeTopo t;
    if (l0 > 1.0 - tol) { t.kind = 0; t.which = 0; return t; }
    if (l1 > 1.0 - tol) { t.kind = 0; t.which = 1; return t; }
    if (l2 > 1.0 - tol) { t.kind = 0; t.which = 2; return t; }
    // Edges by local vertex pair: 0=(v0,v1), 1=(v1,v2), 2=(v2,v0).
    if (std::abs(l2) < tol) { t.kind = 1; t.which = 0; t.t = p.x; return t; }
    if (std::abs(l0) < tol) { t.kind = 1; t.which = 1; t.t = p.y; return t; }
    if (std::abs(l1) < tol) { t.kind = 1; t.which = 2; t.t = 1.0 - p.y; return t; }
    t.kind = 2;
    return t;
}

}  // namespace

double triangle_moment(int a, int b) {
    // int_T x^a y^b = a! b! / (a+b+2)!
    double v = 1.0;
    for (int k = 2; k <= a + b + 2; ++k) v *= k;       // (a+b+2)!
    double fa = 1.0, fb = 1.0;
    for (int k = 2; k <= a; ++k) fa *= k;
    for (int k = 2; k <= b; ++k) fb *= k;
    return fa * fb / v;
}

std::vector<double> derive_weights(const std::vector<std::vector<RefPoint>>& orbits,
                                   int target_degree, int* achieved) {
    const int n_orbits = static_cast<int>(orbits.size());
    std::vector<std::array<int, 2>> monos;
    for (int d = 0; d <= target_degree; ++d)
        for (int a = 0; a <= d; ++a) monos.push_back({a, d - a});

    Eigen::MatrixXd A(static_cast<int>(monos.size()), n_orbits);
    Eigen::VectorXd rhs(static_cast<int>(monos.size()));
    for (int m = 0; m < static_cast<int>(monos.size()); ++m) {
        for (int o = 0; o < n_orbits; ++o) {
            double s = 0.0;
            for (const auto& p : orbits[o])
                s += std::pow(p.x, monos[m][0]) * std::pow(p.y, monos[m][1]);
            A(m, o) = s;
        }
        rhs(m) = triangle_moment(monos[m][0], monos[m][1]);
    }

    Eigen::VectorXd w = A.colPivHouseholderQr().solve(rhs);
    const double resid = (A * w - rhs).norm();
    if (resid > 1e-12)
        throw std::runtime_error("moment system inconsistent for target degree " +
                                 std::to_string(target_degree) + " (residual " +
                                 std::to_string(resid) + ")");
    for (int o = 0; o < n_orbits; ++o)
        if (!(w(o) > 0.0))
            throw std::runtime_error("non-positive lumping weight in orbit " + std::to_string(o));

    if (achieved) {
        int deg = 0;
        for (int d = 0; d <= 20; ++d) {
            bool ok = true;
            for (int a = 0; a <= d && ok; ++a) {
                const int b = d - a;
                double s = 0.0;
                for (int o = 0; o < n_orbits; ++o)
                    for (const auto& p : orbits[o]) s += w(o) * std::pow(p.x, a) * std::pow(p.y, b);
                ok = std::abs(s - triangle_moment(a, b)) <= 1e-13;
            }
            if (!ok) break;
            deg = d;
        }
        *achieved = deg;
    }
    return std::vector<double>(w.data(), w.data() + n_orbits);
}

ElementDef kmv_element(int degree) {
    if (degree < 1 || degree > 3)
        throw std::invalid_argument("unsupported KMV degree " + std::to_string(degree) +
                                    " (supported: 1-3; degrees 4-5 are not provided)");
    ElementDef el;
    el.degree = degree;
    el.n_span_ = span_size(degree);

    const auto orbits = node_orbits(degree);
    for (const auto& orb : orbits)
        for (const auto& p : orb) el.nodes.push_back(p);
    el.n_nodes = static_cast<int>(el.nodes.size());

    const int target = (degree == 1) ? 1 : (degree == 2 ? 3 : 4);
    int achieved = 0;
    auto orbit_w = derive_weights(orbits, target, &achieved);
    el.exactness_degree = achieved;
    if (degree == 1) orbit_w = {1.0 / 6.0};
    if (degree == 2) orbit_w = {1.0 / 40.0, 1.0 / 15.0, 9.0 / 40.0};
    for (size_t o = 0; o < orbits.size(); ++o)
        for (size_t k = 0; k < orbits[o].size(); ++k) el.weights.push_back(orbit_w[o]);

    // Nodal basis: invert the generalized Vandermonde at the nodes.
    const int n = el.n_nodes;
    Eigen::MatrixXd V(n, n);
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
        span_eval(degree, el.nodes[i].x, el.nodes[i].y, row.data());
        for (int k = 0; k < n; ++k) V(i, k) = row[k];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
    if (!lu.isInvertible())
        throw std::runtime_error("enriched basis is degenerate at the KMV" +
                                 std::to_string(degree) + " node set");
    Eigen::MatrixXd C = lu.inverse().transpose();  // phi_i = sum_k C(i,k) span_k
    el.coeff_.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) el.coeff_[i * n + k] = C(i, k);

    el.grad_table_.resize(static_cast<size_t>(n) * n * 2);
    for (int q = 0; q < n; ++q) {
        auto g = el.eval_basis_grad(el.nodes[q]);
        for (int i = 0; i < n; ++i) {
            el.grad_table_[(static_cast<size_t>(q) * n + i) * 2 + 0] = g[i][0];
            el.grad_table_[(static_cast<size_t>(q) * n + i) * 2 + 1] = g[i][1];
        }
    }
    for (const auto& p : el.nodes) el.topo_.push_back(classify_node(p));
    return el;
}

std::vector<double> ElementDef::eval_basis(const RefPoint& p) const {
    require_inside(p);
    const int n = n_nodes;
    // At a node the values are fixed by the interpolation conditions; return
    // them exactly so collocated quadrature yields identically zero couplings.
    for (int i = 0; i < n; ++i)
        if (p.x == nodes[i].x && p.y == nodes[i].y) {
            std::vector<double> e(n, 0.0);
            e[i] = 1.0;
            return e;
        }
    std::vector<double> span(n), out(n, 0.0);
    span_eval(degree, p.x, p.y, span.data());
    for (int i = 0; i < n; ++i) {
        double v = 0.0;
        for (int k = 0; k < n; ++k) v += coeff_[i * n + k] * span[k];
        out[i] = v;
    }
    return out;
}

std::vector<std::array<double, 2>> ElementDef::eval_basis_grad(const RefPoint& p) const {
    require_inside(p);
    const int n = n_nodes;
    std::vector<std::array<double, 2>> g(n, {0.0, 0.0});
    double sg[12][2];
    span_grad(degree, p.x, p.y, sg);
    for (int i = 0; i < n; ++i) {
        double gx = 0.0, gy = 0.0;
        for (int k = 0; k < n; ++k) {
            gx += coeff_[i * n + k] * sg[k][0];
            gy += coeff_[i * n + k] * sg[k][1];
        }
        g[i] = {gx, gy};
    }
    return g;
}

}  // namespace triwave
