#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "triwave/dofmap.hpp"
#include "triwave/elements.hpp"
#include "triwave/mesh.hpp"

namespace triwave {

/// PML damping specification. sigma profiles are quadratic in the distance
/// into each layer; sigma_max <= 0 selects the reflection-coefficient
/// default sigma_max = 3 c_max ln(1/R) / (2 w) with R = 1e-3.
struct PmlSpec {
    PmlWidths widths;
    double sigma_max = 0.0;
    double reflection_coeff = 1e-3;
};

/// Immutable assembled state for one mesh + element + velocity model:
/// lumped mass, boundary damping, damping profiles and the per-element
/// geometry used by the matrix-free kernels. Safe to share read-only
/// across threads.
class FieldSetup {
public:
    Mesh mesh;
    ElementDef element;
    DofMap dofmap;

    std::vector<double> c;        // nodal wavespeed (km/s)
    std::vector<double> mass;     // lumped M_u diagonal (also M_p per component)
    std::vector<double> bdamp;    // boundary damping diagonal, absorbing edges only
    std::vector<double> sigma_x;  // nodal damping profiles (1/s), zero in Omega_0
    std::vector<double> sigma_y;
    std::vector<char> water;      // c < water_threshold
    double water_threshold = 0.0;

    int n_dofs() const { return dofmap.n_dofs; }

    // detj[t] = |det J| of triangle t (twice its area).
    const std::vector<double>& detj() const { return detj_; }
    // Physical basis gradients at the element's own nodes, flattened as
    // [t][q][i][2].
    const std::vector<double>& grad_phys() const { return gphys_; }

    // out += scale * K u with K = int c^2 grad(phi_i).grad(phi_j).
    void apply_stiffness(const std::vector<double>& u, std::vector<double>& out,
                         double scale = 1.0) const;
    // out += scale * D p with (D p)_i = int p . grad(phi_i)  (divergence term
    // after integration by parts; n.p = 0 on the boundary).
    void apply_p_divergence(const std::vector<double>& px, const std::vector<double>& pz,
                            std::vector<double>& out, double scale = 1.0) const;
    // (outx, outz) += scale * D_{u,2} u: rows int psi_i Psi2^{kk} c^2 du/dx_k
    // with Psi2 = diag(sx - sy, sy - sx) (the sign that damps the layer).
    void apply_pml_grad(const std::vector<double>& u, std::vector<double>& outx,
                        std::vector<double>& outz, double scale = 1.0) const;
    // Transposes of the two couplings (adjoint kernels).
    void apply_p_divergence_T(const std::vector<double>& u, std::vector<double>& outx,
                              std::vector<double>& outz, double scale = 1.0) const;
    void apply_pml_grad_T(const std::vector<double>& px, const std::vector<double>& pz,
                          std::vector<double>& out, double scale = 1.0) const;

    // Dense element stiffness row sums -> Gershgorin bound on rho(M^-1 K);
    // dt_CFL = 2 / sqrt(rho). PML terms are ignored by construction.
    double estimate_dt_cfl() const;

private:
    friend FieldSetup build_fields(const Mesh&, const ElementDef&, const std::vector<double>&,
                                   const PmlSpec&, double);
    std::vector<double> detj_;
    std::vector<double> gphys_;
};

/// Assembles a FieldSetup from nodal wavespeed values (already on DoFs).
FieldSetup build_fields(const Mesh& m, const ElementDef& el, const std::vector<double>& c_nodal,
                        const PmlSpec& pml, double water_threshold = 0.0);
/// Convenience overload interpolating the raster onto the DoFs first.
FieldSetup build_fields(const Mesh& m, const ElementDef& el, const VelocityModel& vm,
                        const PmlSpec& pml, double water_threshold = 0.0);

/// Nodal sigma_x, sigma_y profiles for the DoF coordinates.
void pml_profiles(const PmlSpec& spec, const Rect& physical, double c_max, const DofMap& d,
                  std::vector<double>& sigma_x, std::vector<double>& sigma_y);

/// Sparse point evaluation table: row i holds the basis weights of point i
/// inside its containing triangle. apply() evaluates fields at the points;
/// scatter_add() is the transpose (source injection).
class PointInterpolator {
public:
    struct Row {
        int tri = -1;
        std::vector<int> dofs;
        std::vector<double> w;
    };
    std::vector<Row> rows;

    void apply(const std::vector<double>& u, std::vector<double>& values) const;
    void scatter_add(int row, double scale, std::vector<double>& out) const;
};

PointInterpolator point_interpolator(const Mesh& m, const DofMap& d, const ElementDef& el,
                                     const std::vector<std::array<double, 2>>& points);

}  // namespace triwave
