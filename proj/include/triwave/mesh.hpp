#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "triwave/velocity_model.hpp"

namespace triwave {

enum class BoundaryTag : std::uint8_t { free_surface, absorbing };
enum class RegionTag : std::uint8_t { physical, pml };

/// Axis-aligned rectangle, x0 < x1 and z0 < z1 (z1 is the top/surface side).
struct Rect {
    double x0 = 0.0, x1 = 0.0, z0 = 0.0, z1 = 0.0;
    double width() const { return x1 - x0; }
    double height() const { return z1 - z0; }
    bool contains(double x, double z, double tol = 1e-12) const {
        return x >= x0 - tol && x <= x1 + tol && z >= z0 - tol && z <= z1 + tol;
    }
};

/// PML widths per side (km); zero means no layer on that side.
struct PmlWidths {
    double left = 0.0, right = 0.0, bottom = 0.0, top = 0.0;
    static PmlWidths sides_and_bottom(double w) { return {w, w, w, 0.0}; }
    static PmlWidths all(double w) { return {w, w, w, w}; }
};

/// Target edge length per grid point (km), on the velocity raster's grid.
struct SizingField {
    int nx = 0, nz = 0;
    double x0 = 0.0, z0 = 0.0, dx = 1.0, dz = 1.0;
    std::vector<double> values;  // values[iz*nx+ix]
    double gradation_rate = 0.15;

    double& at(int ix, int iz) { return values[static_cast<size_t>(iz) * nx + ix]; }
    double at(int ix, int iz) const { return values[static_cast<size_t>(iz) * nx + ix]; }
    // Bilinear sample with edge-value replication outside the grid.
    double sample(double x, double z) const;
    double min_value() const;
};

struct Mesh {
    std::vector<std::array<double, 2>> vertices;   // (x, z) km
    std::vector<std::array<int, 3>> triangles;     // CCW vertex indices
    std::vector<RegionTag> region_tags;            // per vertex
    struct BoundaryEdge {
        int a = 0, b = 0;
        BoundaryTag tag = BoundaryTag::absorbing;
    };
    std::vector<BoundaryEdge> boundary_edges;
    Rect physical;  // Omega_0
    Rect full;      // Omega_0 plus PML collar

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    double triangle_area(int t) const;
    // Throws if conformity/orientation/tagging invariants are violated.
    void validate() const;
};

struct QualityReport {
    double min_angle_deg = 0.0;
    double mean_angle_deg = 0.0;
    double area_sum = 0.0;
    double median_edge = 0.0;
    // Fraction of edges within +-20% of the local sizing value (1.0 when no
    // sizing field is supplied).
    double frac_edges_near_sizing = 1.0;
    // Edge-length / local-sizing ratio counts in the buckets
    // (<0.6, 0.6-0.8, 0.8-1.2, 1.2-1.4, >1.4).
    std::array<int, 5> ratio_histogram{};
    int n_vertices = 0;
    int n_triangles = 0;
    std::string summary() const;
};

/// l_e = max(c / (C * f_source), l_min) pointwise on the raster grid.
SizingField sizing_from_velocity(const VelocityModel& vm, double f_source,
                                 double cells_per_wavelength, double l_min);

/// Limits size growth to `rate` per unit distance along grid edges:
/// the largest field below the input with |l(a)-l(b)| <= rate*spacing for
/// adjacent samples. Dijkstra-style relaxation; idempotent.
SizingField gradation_limit(const SizingField& sf);

struct MeshOptions {
    BoundaryTag top_tag = BoundaryTag::absorbing;
    int max_iterations = 400;
    double min_angle_deg = 25.0;
};

/// Force-equilibrium (DistMesh-style) generator over the physical rectangle
/// plus its PML collar. Deterministic for a fixed seed. Throws with a
/// quality report when the angle/size targets cannot be met.
Mesh generate_mesh(const Rect& physical, const PmlWidths& pml, const SizingField& sf,
                   std::uint64_t seed, const MeshOptions& opts = {});
Mesh generate_mesh(const Rect& physical, double pml_width, const SizingField& sf,
                   std::uint64_t seed, const MeshOptions& opts = {});

/// Right-triangle split of a uniform grid over `full`; regression baseline.
/// Vertices within `pml_band` of the left/right/bottom sides are tagged pml.
Mesh structured_mesh(const Rect& full, double h, double pml_band = 0.0,
                     BoundaryTag top_tag = BoundaryTag::absorbing);

QualityReport mesh_quality(const Mesh& m, const SizingField* sf = nullptr);

}  // namespace triwave
