#include "triwave/adjoint.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace triwave {

Misfit misfit(const ShotRecord& sim, const ShotRecord& obs) {
    if (sim.nt != obs.nt || std::abs(sim.dt - obs.dt) > 1e-15 ||
        sim.receivers.size() != obs.receivers.size())
        throw std::invalid_argument("misfit: records are not comparable (nt/dt/receivers)");
    Misfit m;
    m.nt = sim.nt;
    m.n_receivers = static_cast<int>(sim.receivers.size());
    m.residual.resize(sim.data.size());
    for (size_t i = 0; i < sim.data.size(); ++i) {
        m.residual[i] = sim.data[i] - obs.data[i];
        m.value += 0.5 * m.residual[i] * m.residual[i];
    }
    return m;
}

namespace {

// Shared backward sweep. Collects adjoint snapshots and/or accumulates the
// gradient right side against forward snapshots at identical step indices.
void backward_sweep(const FieldSetup& fs, const std::vector<double>& residual,
                    const ShotConfig& shot, StateSnapshots* adj_out,
                    const StateSnapshots* fwd, bool consume_fwd,
                    std::vector<double>* grad_rhs) {
    const int n = fs.n_dofs();
    const double dt = shot.dt;
    const int nt = static_cast<int>(std::floor(shot.duration / dt)) + 1;
    const int nrec = static_cast<int>(shot.receivers.size());
    if (static_cast<int>(residual.size()) != nrec * nt)
        throw std::invalid_argument("adjoint: residual series length mismatch");

    PointInterpolator Hrec = point_interpolator(fs.mesh, fs.dofmap, fs.element, shot.receivers);

    std::vector<double> a_plus(n), a_minus(n), zeroth(n), mp1x(n), mp1z(n);
    for (int i = 0; i < n; ++i) {
        const double m1 = fs.mass[i] * (fs.sigma_x[i] + fs.sigma_y[i]) + fs.bdamp[i];
        a_plus[i] = fs.mass[i] / (dt * dt) + m1 / (2.0 * dt);
        a_minus[i] = fs.mass[i] / (dt * dt) - m1 / (2.0 * dt);
        zeroth[i] = fs.mass[i] * fs.sigma_x[i] * fs.sigma_y[i];
        mp1x[i] = fs.mass[i] * fs.sigma_x[i];
        mp1z[i] = fs.mass[i] * fs.sigma_y[i];
    }
    const bool has_pml = [&] {
        for (int i = 0; i < n; ++i)
            if (fs.sigma_x[i] != 0.0 || fs.sigma_y[i] != 0.0) return true;
        return false;
    }();

    // uA = u+ at step m+1, uB = u+ at step m; final conditions are zero.
    std::vector<double> uA(n, 0.0), uB(n, 0.0), uC(n);
    std::vector<double> pxA(n, 0.0), pxB(n, 0.0), pzA(n, 0.0), pzB(n, 0.0);
    std::vector<double> rhs(n), tmpx(n), tmpz(n);

    // Map of forward snapshots by absolute step for pairing.
    std::vector<int> fwd_slot;
    if (fwd) {
        fwd_slot.assign(nt, -1);
        for (size_t k = 0; k < fwd->steps.size(); ++k) fwd_slot[fwd->steps[k]] = static_cast<int>(k);
    }

    auto pair_step = [&](int step, const std::vector<double>& uadj) {
        if (adj_out && step % shot.subsample == 0) {
            adj_out->steps.push_back(step);
            adj_out->u.push_back(uadj);
        }
        if (!grad_rhs || !fwd || step % shot.subsample != 0) return;
        const int slot = fwd_slot[step];
        if (slot < 0) return;
        const std::vector<double>& ufwd = fwd->u[slot];
        const int nn = fs.element.n_nodes;
        const auto& gph = fs.grad_phys();
        for (int t = 0; t < fs.mesh.n_triangles(); ++t) {
            const int* dofs = &fs.dofmap.elem_dofs[static_cast<size_t>(t) * nn];
            const double* G = &gph[static_cast<size_t>(t) * nn * nn * 2];
            for (int q = 0; q < nn; ++q) {
                const double* Gq = G + static_cast<size_t>(q) * nn * 2;
                double fx = 0.0, fz = 0.0, ax = 0.0, az = 0.0;
                for (int j = 0; j < nn; ++j) {
                    fx += Gq[j * 2 + 0] * ufwd[dofs[j]];
                    fz += Gq[j * 2 + 1] * ufwd[dofs[j]];
                    ax += Gq[j * 2 + 0] * uadj[dofs[j]];
                    az += Gq[j * 2 + 1] * uadj[dofs[j]];
                }
                const int g = dofs[q];
                (*grad_rhs)[g] += fs.element.weights[q] * fs.detj()[t] * 2.0 * fs.c[g] *
                                  (fx * ax + fz * az);
            }
        }
        // Absorbing-flux term: d/dc of int_dOmega c phi phi ds pairs the
        // boundary velocity with the adjoint field.
        for (size_t k = 0; k < fwd->boundary_dofs.size(); ++k) {
            const int g = fwd->boundary_dofs[k];
            (*grad_rhs)[g] += uadj[g] * (fs.bdamp[g] / fs.c[g]) * fwd->udot_boundary[slot][k];
        }
        if (consume_fwd) const_cast<StateSnapshots*>(fwd)->u[slot].clear();
    };

    pair_step(nt - 1, uB);

    for (int m = nt - 1; m >= 1; --m) {
        // Solve A+^T u+_{m-1} = -H^T r_m - (A_n row) u+_m - A-^T u+_{m+1}.
        for (int i = 0; i < n; ++i)
            rhs[i] = (2.0 / (dt * dt) * fs.mass[i] - zeroth[i]) * uB[i] - a_minus[i] * uA[i];
        fs.apply_stiffness(uB, rhs, -1.0);
        if (has_pml) fs.apply_pml_grad_T(pxB, pzB, rhs, -1.0);
        for (int rcv = 0; rcv < nrec; ++rcv)
            Hrec.scatter_add(rcv, -residual[static_cast<size_t>(rcv) * nt + m], rhs);
        for (int i = 0; i < n; ++i) uC[i] = rhs[i] / a_plus[i];

        if (has_pml) {
            // (M/(2dt) + Mp1/2) p+_{m-1} = (M/(2dt) - Mp1/2) p+_{m+1} - D^T u+_m
            std::fill(tmpx.begin(), tmpx.end(), 0.0);
            std::fill(tmpz.begin(), tmpz.end(), 0.0);
            fs.apply_p_divergence_T(uB, tmpx, tmpz);
            for (int i = 0; i < n; ++i) {
                const double m2 = fs.mass[i] / (2.0 * dt);
                const double nx = ((m2 - 0.5 * mp1x[i]) * pxA[i] - tmpx[i]) / (m2 + 0.5 * mp1x[i]);
                const double nz = ((m2 - 0.5 * mp1z[i]) * pzA[i] - tmpz[i]) / (m2 + 0.5 * mp1z[i]);
                pxA[i] = pxB[i];
                pzA[i] = pzB[i];
                pxB[i] = nx;
                pzB[i] = nz;
            }
        }

        uA.swap(uB);
        uB.swap(uC);
        pair_step(m - 1, uB);
        if ((m & 15) == 0)
            for (size_t i = 0; i < uB.size(); i += 64)
                if (!std::isfinite(uB[i]))
                    throw std::runtime_error("adjoint unstable: non-finite field at step " +
                                             std::to_string(m - 1));
    }
}

GradientField finalize_gradient(const FieldSetup& fs, std::vector<double>& rhs) {
    GradientField g;
    g.values.assign(fs.n_dofs(), 0.0);
    for (int i = 0; i < fs.n_dofs(); ++i) {
        if (fs.dofmap.region[i] != RegionTag::physical || fs.water[i]) continue;
        g.values[i] = rhs[i] / fs.mass[i];
    }
    return g;
}

}  // namespace

StateSnapshots adjoint(const FieldSetup& fs, const std::vector<double>& residual,
                       const ShotConfig& shot) {
    StateSnapshots out;
    out.r = shot.subsample;
    out.dt = shot.dt;
    backward_sweep(fs, residual, shot, &out, nullptr, false, nullptr);
    return out;
}

GradientField gradient(const StateSnapshots& fwd, const StateSnapshots& adj,
                       const FieldSetup& fs) {
    std::vector<double> rhs(fs.n_dofs(), 0.0);
    const int nn = fs.element.n_nodes;
    const auto& gph = fs.grad_phys();
    for (size_t ka = 0; ka < adj.steps.size(); ++ka) {
        int slot = -1;
        for (size_t kf = 0; kf < fwd.steps.size(); ++kf)
            if (fwd.steps[kf] == adj.steps[ka]) slot = static_cast<int>(kf);
        if (slot < 0) continue;
        const auto& ufwd = fwd.u[slot];
        const auto& uadj = adj.u[ka];
        for (int t = 0; t < fs.mesh.n_triangles(); ++t) {
            const int* dofs = &fs.dofmap.elem_dofs[static_cast<size_t>(t) * nn];
            const double* G = &gph[static_cast<size_t>(t) * nn * nn * 2];
            for (int q = 0; q < nn; ++q) {
                const double* Gq = G + static_cast<size_t>(q) * nn * 2;
                double fx = 0.0, fz = 0.0, ax = 0.0, az = 0.0;
                for (int j = 0; j < nn; ++j) {
                    fx += Gq[j * 2 + 0] * ufwd[dofs[j]];
                    fz += Gq[j * 2 + 1] * ufwd[dofs[j]];
                    ax += Gq[j * 2 + 0] * uadj[dofs[j]];
                    az += Gq[j * 2 + 1] * uadj[dofs[j]];
                }
                const int g = dofs[q];
                rhs[g] += fs.element.weights[q] * fs.detj()[t] * 2.0 * fs.c[g] * (fx * ax + fz * az);
            }
        }
        for (size_t k = 0; k < fwd.boundary_dofs.size(); ++k) {
            const int g = fwd.boundary_dofs[k];
            rhs[g] += uadj[g] * (fs.bdamp[g] / fs.c[g]) * fwd.udot_boundary[slot][k];
        }
    }
    return finalize_gradient(fs, rhs);
}

GradientField adjoint_gradient(const FieldSetup& fs, const std::vector<double>& residual,
                               const ShotConfig& shot, StateSnapshots&& fwd) {
    std::vector<double> rhs(fs.n_dofs(), 0.0);
    backward_sweep(fs, residual, shot, nullptr, &fwd, true, &rhs);
    return finalize_gradient(fs, rhs);
}

double fd_directional(const std::function<double(const std::vector<double>&)>& J_of_c,
                      const std::vector<double>& c, const std::vector<double>& dir, double h,
                      double J0) {
    std::vector<double> cp(c);
    for (size_t i = 0; i < c.size(); ++i) cp[i] += h * dir[i];
    return (J_of_c(cp) - J0) / h;
}

double adjoint_directional(const GradientField& G, const std::vector<double>& dir,
                           const FieldSetup& fs) {
    double s = 0.0;
    for (int i = 0; i < fs.n_dofs(); ++i) {
        if (fs.dofmap.region[i] != RegionTag::physical || fs.water[i]) continue;
        s += dir[i] * fs.mass[i] * G.values[i];
    }
    return s;
}

}  // namespace triwave
