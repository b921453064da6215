#pragma once

#include <array>
#include <vector>

#include "triwave/elements.hpp"
#include "triwave/mesh.hpp"

namespace triwave {

/// Global continuous-Galerkin DoF numbering for one mesh/element pair.
/// Vertex and edge nodes are shared between incident triangles; edge-node
/// ordering on a shared edge is fixed by the edge's canonical direction
/// (low vertex index to high), so both sides agree.
struct DofMap {
    int n_dofs = 0;
    int nodes_per_elem = 0;
    std::vector<int> elem_dofs;                   // [tri * nodes_per_elem + local]
    std::vector<std::array<double, 2>> coords;    // per DoF (x, z)
    std::vector<RegionTag> region;                // per DoF

    int dof(int tri, int local) const { return elem_dofs[tri * nodes_per_elem + local]; }
};

DofMap build_dofmap(const Mesh& m, const ElementDef& el);

/// Bilinear interpolation of the raster onto the DoF coordinates.
std::vector<double> interpolate_velocity(const VelocityModel& vm, const DofMap& d);

}  // namespace triwave
