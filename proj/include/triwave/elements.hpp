#pragma once

#include <array>
#include <vector>

namespace triwave {

/// A point in reference coordinates on the unit right triangle
/// {(0,0), (1,0), (0,1)}.
struct RefPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Mass-lumped triangular reference element (KMV family, degrees 1-3).
///
/// The interpolation nodes double as quadrature points, so the element
/// mass matrix assembled with its own rule is diagonal by construction.
/// Basis functions are nodal: phi_i(node_j) = delta_ij.
class ElementDef {
public:
    int degree = 0;
    int n_nodes = 0;
    int exactness_degree = 0;           // achieved polynomial exactness of the rule
    std::vector<RefPoint> nodes;        // reference coordinates
    std::vector<double> weights;        // lumping quadrature weights, sum = 1/2

    // Basis value table: basis(p)[i] = phi_i(p).
    std::vector<double> eval_basis(const RefPoint& p) const;

    // Reference-space gradients: row i = (dphi_i/dx, dphi_i/dy) at p.
    std::vector<std::array<double, 2>> eval_basis_grad(const RefPoint& p) const;

    // Gradients of all basis functions tabulated at the element's own nodes,
    // flattened as [q][i][2]. Shared by assembly and the matrix-free kernels.
    const std::vector<double>& grad_table() const { return grad_table_; }

    // Node classification against the reference triangle topology.
    // kind: 0 = vertex (which = vertex id 0..2),
    //       1 = edge   (which = edge id 0..2, t = parameter along the edge
    //                   from its first vertex),
    //       2 = interior.
    struct NodeTopo {
        int kind = 2;
        int which = -1;
        double t = 0.0;
    };
    const std::vector<NodeTopo>& node_topology() const { return topo_; }

private:
    friend ElementDef kmv_element(int degree);
    // Coefficients of the nodal basis in the enriched monomial/bubble span:
    // phi_i = sum_k coeff_[i*n_span+k] * span_k.
    std::vector<double> coeff_;
    int n_span_ = 0;
    std::vector<double> grad_table_;
    std::vector<NodeTopo> topo_;
};

/// Builds the KMV reference element of the given degree (1, 2 or 3).
/// Degrees 4-5 exist in the literature but their node data is not
/// carried here; they are rejected explicitly.
ElementDef kmv_element(int degree);

/// Moment-matched lumping weights for a node set grouped into symmetry
/// orbits. One unknown weight per orbit; all monomials x^a y^b with
/// a+b <= target_degree are enforced against the analytic triangle
/// moments. Throws if the system is inconsistent or any weight is
/// non-positive, naming the failing orbit.
/// Returns per-orbit weights; `achieved` (optional) receives the largest
/// degree the solved rule actually integrates exactly (1e-13 test).
std::vector<double> derive_weights(const std::vector<std::vector<RefPoint>>& orbits,
                                   int target_degree, int* achieved = nullptr);

/// Analytic moment of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
double triangle_moment(int a, int b);

}  // namespace triwave
