#pragma once

#include <functional>

#include "triwave/propagator.hpp"

namespace triwave {

struct Misfit {
    double value = 0.0;
    int nt = 0;
    int n_receivers = 0;
    std::vector<double> residual;  // receiver-major (sim - obs), nrec * nt
};

/// J = 1/2 sum_j sum_n (sim - obs)^2, plain sums with no dt factor.
Misfit misfit(const ShotRecord& sim, const ShotRecord& obs);

/// Nodal dJ/dc; PML-region and water DoFs are exactly zero.
struct GradientField {
    std::vector<double> values;
};

/// Reverse-time transposed propagation driven by the receiver residuals
/// (injected with the sign that makes the assembled field equal dJ/dc).
/// Snapshots are stored at the same subsampled steps as the forward sweep.
StateSnapshots adjoint(const FieldSetup& fs, const std::vector<double>& residual,
                       const ShotConfig& shot);

/// Pairs forward and adjoint fields at identical timestep indices,
/// accumulates int 2c grad(u+) . grad(u) per node, divides by the lumped
/// mass (L2 Riesz map), then masks PML and water DoFs.
GradientField gradient(const StateSnapshots& fwd, const StateSnapshots& adj,
                       const FieldSetup& fs);

/// Fused backward sweep: emits the gradient directly, consuming the forward
/// snapshots as they are paired (no adjoint storage).
GradientField adjoint_gradient(const FieldSetup& fs, const std::vector<double>& residual,
                               const ShotConfig& shot, StateSnapshots&& fwd);

/// Forward finite difference (J(c + h dir) - J0) / h; J0 is computed once by
/// the caller and reused across h values.
double fd_directional(const std::function<double(const std::vector<double>&)>& J_of_c,
                      const std::vector<double>& c, const std::vector<double>& dir, double h,
                      double J0);

/// dir^T M G restricted to unmasked DoFs.
double adjoint_directional(const GradientField& G, const std::vector<double>& dir,
                           const FieldSetup& fs);

}  // namespace triwave
