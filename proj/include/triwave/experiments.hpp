#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "triwave/adjoint.hpp"
#include "triwave/lbfgs.hpp"

namespace triwave {

/// Shot list plus the observed records driving a misfit evaluation.
struct ShotBundle {
    std::vector<ShotConfig> shots;
    std::vector<ShotRecord> observed;
};

/// Total misfit and (optionally) the stacked gradient at control c. Shots
/// fan out over `workers` threads; the reduction runs in shot order, so the
/// result is independent of the worker count.
void evaluate_misfit_gradient(const Mesh& mesh, const ElementDef& el, const PmlSpec& pml,
                              double water_threshold, const ShotBundle& bundle,
                              const std::vector<double>& c, int workers, bool want_gradient,
                              double& J, std::vector<double>& G);

/// Nodal field -> raster by averaging the DoF values falling into each cell
/// (diagnostic export).
VelocityModel field_to_raster(const std::vector<double>& nodal, const DofMap& dm,
                              const Rect& extent, int nx, int nz);

// ---------------------------------------------------------------------------
// Two-layer gradient verification: 1 km x 1 km, fast half over slow half,
// 5 Hz source, 100-receiver line, 200 m PML, uniform elements.
struct GradCheckParams {
    double l_e = 0.02;  // km
    int degree = 2;
    double duration = 1.0;
    double dt = 5e-4;
    int subsample = 1;
    int n_receivers = 100;
    std::vector<double> fd_steps = {1e-3, 1e-4, 1e-5};
    std::uint64_t seed = 1;
};
struct GradCheckResult {
    double d_co = 0.0;
    std::vector<double> fd_steps;
    std::vector<double> d_fd;
    std::vector<double> rel_diff;
    double J0 = 0.0;
    int n_dofs = 0;
    int n_triangles = 0;
    double dt_cfl = 0.0;
};
GradCheckResult run_gradcheck(const GradCheckParams& p);

// ---------------------------------------------------------------------------
// Manufactured-solution verification: u = t^2 sin(x) sin(z) on the unit
// square, PML collar on all sides with active damping, forcing consistent
// with the full damped system (auxiliary field manufactured analytically).
struct MmsParams {
    int degree = 2;
    std::vector<double> edge_lengths = {0.1, 0.05, 0.025};
    double dt = 2.5e-4;
    double duration = 0.1;
    double wavespeed = 1.43;
    double pml_width = 0.25;
    bool pml_consistent_forcing = true;
    std::uint64_t seed = 2;
};
struct MmsResult {
    std::vector<double> edge_lengths;
    std::vector<double> errors;  // relative L2 in Omega_0 at final time
    std::vector<double> orders;  // observed between consecutive levels
};
MmsResult run_mms(const MmsParams& p);

// ---------------------------------------------------------------------------
// Homogeneous grid sweep: error E(C) per element degree against a refined
// degree-3 reference, and the interpolated C at the threshold.
struct SweepParams {
    double wavespeed = 1.43;  // km/s
    double frequency = 5.0;   // Hz
    double domain_wl_x = 24.0, domain_wl_z = 8.0;
    double offset_wl = 10.0;
    int bin_side = 6;     // bin_side^2 receivers
    double bin_wl = 1.0;  // bin extent in wavelengths
    double pml_width = 0.28;
    double duration = 3.0;
    std::vector<double> sweep_C2 = {4.0, 5.0, 6.0, 7.0};
    std::vector<double> sweep_C3 = {1.75, 2.25, 3.0, 4.0};
    double reference_C = 5.9;  // degree-3 reference mesh
    int bisection_steps = 2;
    double threshold_pct = 5.0;
    const VelocityModel* heterogeneous = nullptr;  // optional Delta-C study
    std::uint64_t seed = 3;
};
struct SweepRow {
    int degree = 0;
    double C = 0.0, G = 0.0, E = 0.0;
    int n_dofs = 0, n_elems = 0;
};
struct SweepResult {
    std::vector<SweepRow> rows;
    double C_min_deg2 = 0.0, C_min_deg3 = 0.0, ratio = 0.0;
    double dt = 0.0, reference_G = 0.0;
    double delta_C_deg2_pct = 0.0, delta_C_deg3_pct = 0.0;  // heterogeneous only
};
SweepResult run_sweep(const SweepParams& p);

// ---------------------------------------------------------------------------
// Toy inversion: recover a circular wavespeed anomaly under a fixed water
// layer from a handful of transmission shots.
struct ToyFwiParams {
    double background = 2.0;          // km/s
    double anomaly_amplitude = 0.4;   // +20% bump at the center
    double anomaly_radius = 0.18;     // km
    std::array<double, 2> anomaly_center = {0.5, -0.5};
    double water_depth = 0.1;   // km
    double water_c = 1.43;      // km/s
    double water_threshold = 1.51;
    int n_shots = 4;
    int n_receivers = 50;
    double frequency = 5.0;
    double pml_width = 0.2;
    double cells_per_wavelength = 5.0;
    int degree = 2;
    double duration = 1.1;
    int subsample = 1;
    double lo = 1.0, hi = 3.0;  // km/s box constraints
    int iter_max = 50;
    double tol = 1e-10;
    int workers = 2;
    std::uint64_t seed = 4;
    std::function<void(const std::string&)> log;
};
struct ToyFwiResult {
    InversionState state;
    double misfit_reduction = 0.0;  // J0 / J_final
    double center_true = 0.0, center_initial = 0.0, center_recovered = 0.0;
    bool water_unchanged = true, pml_unchanged = true;
    Mesh mesh;
    DofMap dofmap;
    std::vector<double> c_initial;
    std::vector<double> c_true;
    double dt = 0.0;
    int n_dofs = 0;
};
ToyFwiResult run_toy_fwi(const ToyFwiParams& p);

}  // namespace triwave
