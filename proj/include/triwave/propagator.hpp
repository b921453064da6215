#pragma once

#include <array>
#include <functional>
#include <vector>

#include "triwave/fields.hpp"

namespace triwave {

/// One source excitation: where and what to inject, where to record.
struct ShotConfig {
    std::array<double, 2> source{0.0, 0.0};  // (x, z) km
    double frequency = 5.0;                  // Ricker peak frequency (Hz)
    double amplitude = 1.0;
    std::vector<std::array<double, 2>> receivers;
    double duration = 1.0;  // T (s)
    double dt = 1e-3;       // s
    int subsample = 1;      // snapshot/gradient stride r
};

/// Receiver pressure time series for one shot; data is receiver-major
/// (all samples of receiver 0, then receiver 1, ...).
struct ShotRecord {
    int nt = 0;
    double dt = 0.0;
    std::vector<std::array<double, 2>> receivers;
    std::array<double, 2> source{0.0, 0.0};
    double frequency = 0.0;
    std::vector<double> data;

    double& at(int rec, int n) { return data[static_cast<size_t>(rec) * nt + n]; }
    double at(int rec, int n) const { return data[static_cast<size_t>(rec) * nt + n]; }
};

/// Forward pressure saved at timesteps {0, r, 2r, ...}. For gradient
/// assembly the central-difference velocity is kept on the damped-boundary
/// DoFs as well (the misfit derivative with respect to c has a boundary
/// term from the absorbing flux, int_dOmega c phi phi ds).
struct StateSnapshots {
    int r = 1;
    double dt = 0.0;
    std::vector<int> steps;
    std::vector<std::vector<double>> u;
    std::vector<int> boundary_dofs;                  // DoFs with bdamp > 0
    std::vector<std::vector<double>> udot_boundary;  // per stored step
};

/// Ricker wavelet with delay t0 = 1.5/f:
/// w(t) = (1 - 2 pi^2 f^2 (t-t0)^2) exp(-pi^2 f^2 (t-t0)^2).
double ricker(double f, double t);

struct ForwardOptions {
    // Nodal volume forcing f(x, z, t); replaces the point source when set
    // (load vector M_u f(nodes, t_n)).
    std::function<double(double, double, double)> volume_forcing;
    // Optional exact start levels u^0, u^1 (defaults: zero).
    const std::vector<double>* u_start0 = nullptr;
    const std::vector<double>* u_start1 = nullptr;
    bool store_snapshots = true;
    bool check_cfl = true;       // refuse dt > 0.9 * dt_CFL
    int energy_stride = 0;       // record energy() every k steps when > 0
};

struct ForwardResult {
    ShotRecord record;
    StateSnapshots snapshots;
    double dt_cfl = 0.0;
    std::vector<double> energies;       // when requested
    std::vector<int> energy_steps;
};

/// Explicit leapfrog integration of the damped 2D system. The mass solve is
/// a diagonal scaling; stiffness and PML couplings are applied matrix-free.
/// Throws on detected instability (non-finite field), reporting the step.
ForwardResult forward(const FieldSetup& fs, const ShotConfig& shot,
                      const ForwardOptions& opts = {});

/// Discrete half-step energy 0.5 |(u - u_prev)/dt|^2_M + 0.5 <K ubar, ubar>
/// with ubar = (u + u_prev)/2.
double energy(const FieldSetup& fs, const std::vector<double>& u,
              const std::vector<double>& u_prev, double dt);

/// Same quantity restricted to elements whose DoFs all lie in Omega_0.
double energy_in_physical(const FieldSetup& fs, const std::vector<double>& u,
                          const std::vector<double>& u_prev, double dt);

}  // namespace triwave
