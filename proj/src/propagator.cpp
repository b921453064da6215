#include "triwave/propagator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace triwave {

double ricker(double f, double t) {
    const double t0 = 1.5 / f;
    const double a = M_PI * M_PI * f * f * (t - t0) * (t - t0);
    return (1.0 - 2.0 * a) * std::exp(-a);
}

namespace {

void check_finite(const std::vector<double>& u, int step) {
    for (size_t i = 0; i < u.size(); i += 64)
        if (!std::isfinite(u[i]))
            throw std::runtime_error("propagation unstable: non-finite field at step " +
                                     std::to_string(step));
}

double energy_impl(const FieldSetup& fs, const std::vector<double>& u,
                   const std::vector<double>& u_prev, double dt, bool physical_only) {
    const int n = fs.n_dofs();
    std::vector<double> ubar(n), Ku(n, 0.0);
    for (int i = 0; i < n; ++i) ubar[i] = 0.5 * (u[i] + u_prev[i]);
    double kin = 0.0;
    const int nn = fs.element.n_nodes;
    std::vector<char> elem_ok(fs.mesh.n_triangles(), 1);
    if (physical_only) {
        for (int t = 0; t < fs.mesh.n_triangles(); ++t)
            for (int q = 0; q < nn; ++q)
                if (fs.dofmap.region[fs.dofmap.dof(t, q)] != RegionTag::physical) {
                    elem_ok[t] = 0;
                    break;
                }
        // Kinetic part: lumped mass restricted to the kept elements.
        std::vector<double> mloc(n, 0.0);
        for (int t = 0; t < fs.mesh.n_triangles(); ++t) {
            if (!elem_ok[t]) continue;
            for (int q = 0; q < nn; ++q)
                mloc[fs.dofmap.dof(t, q)] += fs.element.weights[q] * fs.detj()[t];
        }
        for (int i = 0; i < n; ++i) {
            const double v = (u[i] - u_prev[i]) / dt;
            kin += 0.5 * mloc[i] * v * v;
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const double v = (u[i] - u_prev[i]) / dt;
            kin += 0.5 * fs.mass[i] * v * v;
        }
    }

    // Potential part: elementwise c^2 |grad ubar|^2 with the lumped rule.
    double pot = 0.0;
    const auto& gph = fs.grad_phys();
    for (int t = 0; t < fs.mesh.n_triangles(); ++t) {
        if (physical_only && !elem_ok[t]) continue;
        const int* dofs = &fs.dofmap.elem_dofs[static_cast<size_t>(t) * nn];
        const double* G = &gph[static_cast<size_t>(t) * nn * nn * 2];
        for (int q = 0; q < nn; ++q) {
            const double* Gq = G + static_cast<size_t>(q) * nn * 2;
            double gx = 0.0, gz = 0.0;
            for (int j = 0; j < nn; ++j) {
                gx += Gq[j * 2 + 0] * ubar[dofs[j]];
                gz += Gq[j * 2 + 1] * ubar[dofs[j]];
            }
            const double cq = fs.c[dofs[q]];
            pot += 0.5 * fs.element.weights[q] * fs.detj()[t] * cq * cq * (gx * gx + gz * gz);
        }
    }
    return kin + pot;
}

}  // namespace

double energy(const FieldSetup& fs, const std::vector<double>& u,
              const std::vector<double>& u_prev, double dt) {
    return energy_impl(fs, u, u_prev, dt, false);
}

double energy_in_physical(const FieldSetup& fs, const std::vector<double>& u,
                          const std::vector<double>& u_prev, double dt) {
    return energy_impl(fs, u, u_prev, dt, true);
}

ForwardResult forward(const FieldSetup& fs, const ShotConfig& shot, const ForwardOptions& opts) {
    const int n = fs.n_dofs();
    const double dt = shot.dt;
    if (!(dt > 0.0)) throw std::invalid_argument("forward: dt must be positive");
    if (shot.subsample < 1) throw std::invalid_argument("forward: subsample ratio must be >= 1");
    const int nt = static_cast<int>(std::floor(shot.duration / dt)) + 1;

    ForwardResult res;
    res.dt_cfl = fs.estimate_dt_cfl();
    if (opts.check_cfl && dt > 0.9 * res.dt_cfl)
        throw std::invalid_argument("forward: dt " + std::to_string(dt) +
                                    " exceeds 0.9 * dt_CFL = " + std::to_string(0.9 * res.dt_cfl));

    for (const auto& r : shot.receivers)
        if (!fs.mesh.physical.contains(r[0], r[1]))
            throw std::invalid_argument("forward: receiver outside the physical domain");

    PointInterpolator Hrec =
        point_interpolator(fs.mesh, fs.dofmap, fs.element, shot.receivers);
    PointInterpolator Hsrc;
    if (!opts.volume_forcing)
        Hsrc = point_interpolator(fs.mesh, fs.dofmap, fs.element, {shot.source});

    ShotRecord& rec = res.record;
    rec.nt = nt;
    rec.dt = dt;
    rec.receivers = shot.receivers;
    rec.source = shot.source;
    rec.frequency = shot.frequency;
    rec.data.assign(static_cast<size_t>(shot.receivers.size()) * nt, 0.0);

    StateSnapshots& snaps = res.snapshots;
    snaps.r = shot.subsample;
    snaps.dt = dt;
    if (opts.store_snapshots)
        for (int i = 0; i < n; ++i)
            if (fs.bdamp[i] > 0.0) snaps.boundary_dofs.push_back(i);

    // Diagonal pieces of the update. a_plus = M/dt^2 + (Msig1 + B)/(2 dt),
    // a_minus = M/dt^2 - (Msig1 + B)/(2 dt), zeroth = M (sx sy) (tr Psi1 and
    // the sigma_x*sigma_y coefficient of the damped equation).
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

    std::vector<double> u0(n, 0.0), u1(n, 0.0), u2(n);
    if (opts.u_start0) u0 = *opts.u_start0;
    if (opts.u_start1) u1 = *opts.u_start1;
    std::vector<double> px0(n, 0.0), px1(n, 0.0), pz0(n, 0.0), pz1(n, 0.0);
    std::vector<double> rhs(n), tmpx(n), tmpz(n), vals;

    auto record_step = [&](int step, const std::vector<double>& u) {
        Hrec.apply(u, vals);
        for (size_t k = 0; k < vals.size(); ++k) rec.at(static_cast<int>(k), step) = vals[k];
    };
    auto snap_step = [&](int step, const std::vector<double>& u) {
        if (!opts.store_snapshots || step % shot.subsample != 0) return;
        snaps.steps.push_back(step);
        snaps.u.push_back(u);
        snaps.udot_boundary.emplace_back(snaps.boundary_dofs.size(), 0.0);
    };
    auto track_energy = [&](int step, const std::vector<double>& u,
                            const std::vector<double>& uprev) {
        if (opts.energy_stride <= 0 || step % opts.energy_stride != 0) return;
        res.energies.push_back(energy(fs, u, uprev, dt));
        res.energy_steps.push_back(step);
    };

    record_step(0, u0);
    snap_step(0, u0);
    if (nt > 1) {
        record_step(1, u1);
        snap_step(1, u1);
        track_energy(1, u1, u0);
    }

    for (int step = 1; step + 1 < nt; ++step) {
        const double t_n = step * dt;
        // rhs = load - (-2/dt^2 M + M_ss) u1 - K u1 - D p1 - a_minus u0
        for (int i = 0; i < n; ++i)
            rhs[i] = (2.0 / (dt * dt) * fs.mass[i] - zeroth[i]) * u1[i] - a_minus[i] * u0[i];
        fs.apply_stiffness(u1, rhs, -1.0);
        if (has_pml) fs.apply_p_divergence(px1, pz1, rhs, -1.0);
        if (opts.volume_forcing) {
            for (int i = 0; i < n; ++i)
                rhs[i] += fs.mass[i] * opts.volume_forcing(fs.dofmap.coords[i][0],
                                                           fs.dofmap.coords[i][1], t_n);
        } else {
            Hsrc.scatter_add(0, shot.amplitude * ricker(shot.frequency, t_n), rhs);
        }
        for (int i = 0; i < n; ++i) u2[i] = rhs[i] / a_plus[i];

        if (has_pml) {
            // Central two-step update of p. Evaluating the damping at the
            // center level leaves a parasitic root of magnitude > 1 (root
            // product -1), so M_p1 acts on the (n-1, n+1) average instead:
            // (M/(2dt) + M_p1/2) p^{n+1} = (M/(2dt) - M_p1/2) p^{n-1} - D_u2 u^n.
            std::fill(tmpx.begin(), tmpx.end(), 0.0);
            std::fill(tmpz.begin(), tmpz.end(), 0.0);
            fs.apply_pml_grad(u1, tmpx, tmpz);
            for (int i = 0; i < n; ++i) {
                const double m2 = fs.mass[i] / (2.0 * dt);
                const double nx = ((m2 - 0.5 * mp1x[i]) * px0[i] - tmpx[i]) / (m2 + 0.5 * mp1x[i]);
                const double nz = ((m2 - 0.5 * mp1z[i]) * pz0[i] - tmpz[i]) / (m2 + 0.5 * mp1z[i]);
                px0[i] = px1[i];
                pz0[i] = pz1[i];
                px1[i] = nx;
                pz1[i] = nz;
            }
        }

        u0.swap(u1);
        u1.swap(u2);
        // After the swaps u1 = u^{step+1} and u2 = u^{step-1}; attach the
        // centered boundary velocity to the snapshot of step `step`.
        if (opts.store_snapshots && step % shot.subsample == 0 && !snaps.steps.empty() &&
            snaps.steps.back() == step) {
            auto& ud = snaps.udot_boundary.back();
            for (size_t k = 0; k < snaps.boundary_dofs.size(); ++k) {
                const int g = snaps.boundary_dofs[k];
                ud[k] = (u1[g] - u2[g]) / (2.0 * dt);
            }
        }
        record_step(step + 1, u1);
        snap_step(step + 1, u1);
        track_energy(step + 1, u1, u0);
        if ((step & 15) == 0) check_finite(u1, step + 1);
    }
    check_finite(u1, nt - 1);
    return res;
}

}  // namespace triwave
