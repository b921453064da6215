#include "triwave/dofmap.hpp"

#include <map>
#include <stdexcept>

namespace triwave {

DofMap build_dofmap(const Mesh& m, const ElementDef& el) {
    m.validate();
    DofMap dm;
    dm.nodes_per_elem = el.n_nodes;
    dm.elem_dofs.assign(static_cast<size_t>(m.n_triangles()) * el.n_nodes, -1);

    std::map<int, int> vertex_dof;
    std::map<std::array<int, 3>, int> edge_dof;  // (vmin, vmax, slot)
    const auto& topo = el.node_topology();

    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& tri = m.triangles[t];
        const auto& a = m.vertices[tri[0]];
        const auto& b = m.vertices[tri[1]];
        const auto& c = m.vertices[tri[2]];
        for (int ln = 0; ln < el.n_nodes; ++ln) {
            const auto& nt = topo[ln];
            int g = -1;
            if (nt.kind == 0) {
                const int v = tri[nt.which];
                auto it = vertex_dof.find(v);
                if (it == vertex_dof.end()) {
                    g = dm.n_dofs++;
                    vertex_dof.emplace(v, g);
                } else {
                    g = it->second;
                }
            } else if (nt.kind == 1) {
                const int va = tri[nt.which];
                const int vb = tri[(nt.which + 1) % 3];
                // Parameter along the canonical (low index -> high index) edge.
                const double pc = va < vb ? nt.t : 1.0 - nt.t;
                int slot = 0;
                if (el.degree == 3) slot = pc < 0.5 ? 0 : 1;
                const std::array<int, 3> key{std::min(va, vb), std::max(va, vb), slot};
                auto it = edge_dof.find(key);
                if (it == edge_dof.end()) {
                    g = dm.n_dofs++;
                    edge_dof.emplace(key, g);
                } else {
                    g = it->second;
                }
            } else {
                g = dm.n_dofs++;
            }
            dm.elem_dofs[static_cast<size_t>(t) * el.n_nodes + ln] = g;
            if (g == static_cast<int>(dm.coords.size())) {
                const double x = a[0] + (b[0] - a[0]) * el.nodes[ln].x + (c[0] - a[0]) * el.nodes[ln].y;
                const double z = a[1] + (b[1] - a[1]) * el.nodes[ln].x + (c[1] - a[1]) * el.nodes[ln].y;
                dm.coords.push_back({x, z});
                dm.region.push_back(m.physical.contains(x, z, 1e-9) ? RegionTag::physical
                                                                    : RegionTag::pml);
            }
        }
    }
    return dm;
}

std::vector<double> interpolate_velocity(const VelocityModel& vm, const DofMap& d) {
    std::vector<double> c(d.n_dofs);
    for (int g = 0; g < d.n_dofs; ++g) c[g] = vm.sample(d.coords[g][0], d.coords[g][1]);
    return c;
}

}  // namespace triwave
