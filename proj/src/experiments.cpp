#include "triwave/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace triwave {

namespace {

SizingField uniform_sizing(const Rect& covers, double h) {
    SizingField sf;
    sf.nx = 2;
    sf.nz = 2;
    sf.x0 = covers.x0;
    sf.z0 = covers.z0;
    sf.dx = covers.width();
    sf.dz = covers.height();
    sf.values.assign(4, h);
    return sf;
}

}  // namespace

void evaluate_misfit_gradient(const Mesh& mesh, const ElementDef& el, const PmlSpec& pml,
                              double water_threshold, const ShotBundle& bundle,
                              const std::vector<double>& c, int workers, bool want_gradient,
                              double& J, std::vector<double>& G) {
    const auto fs = build_fields(mesh, el, c, pml, water_threshold);
    const int n_shots = static_cast<int>(bundle.shots.size());
    std::vector<double> Js(n_shots, 0.0);
    std::vector<std::vector<double>> Gs(n_shots);

    std::atomic<int> next{0};
    auto work = [&]() {
        for (int i = next.fetch_add(1); i < n_shots; i = next.fetch_add(1)) {
            const ShotConfig& shot = bundle.shots[i];
            ForwardOptions o;
            o.store_snapshots = want_gradient;
            auto fwd = forward(fs, shot, o);
            auto mis = misfit(fwd.record, bundle.observed[i]);
            Js[i] = mis.value;
            if (want_gradient)
                Gs[i] = adjoint_gradient(fs, mis.residual, shot, std::move(fwd.snapshots)).values;
        }
    };
    const int nw = std::max(1, std::min(workers, n_shots));
    std::vector<std::thread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    J = 0.0;
    for (int i = 0; i < n_shots; ++i) J += Js[i];
    if (want_gradient) {
        G.assign(fs.n_dofs(), 0.0);
        for (int i = 0; i < n_shots; ++i)
            for (int g = 0; g < fs.n_dofs(); ++g) G[g] += Gs[i][g];
    }
}

VelocityModel field_to_raster(const std::vector<double>& nodal, const DofMap& dm,
                              const Rect& extent, int nx, int nz) {
    VelocityModel vm;
    vm.nx = nx;
    vm.nz = nz;
    vm.x0 = extent.x0;
    vm.z0 = extent.z0;
    vm.dx = extent.width() / std::max(1, nx - 1);
    vm.dz = extent.height() / std::max(1, nz - 1);
    vm.values.assign(static_cast<size_t>(nx) * nz, 0.0);
    std::vector<int> count(vm.values.size(), 0);
    for (size_t g = 0; g < nodal.size(); ++g) {
        const int ix = std::clamp(
            static_cast<int>(std::lround((dm.coords[g][0] - vm.x0) / vm.dx)), 0, nx - 1);
        const int iz = std::clamp(
            static_cast<int>(std::lround((dm.coords[g][1] - vm.z0) / vm.dz)), 0, nz - 1);
        vm.values[static_cast<size_t>(iz) * nx + ix] += nodal[g];
        count[static_cast<size_t>(iz) * nx + ix]++;
    }
    for (size_t i = 0; i < vm.values.size(); ++i)
        if (count[i] > 0) vm.values[i] /= count[i];
    return vm;
}

// ---------------------------------------------------------------------------

GradCheckResult run_gradcheck(const GradCheckParams& p) {
    const Rect phys{0.0, 1.0, -1.0, 0.0};
    auto sf = uniform_sizing({phys.x0 - 0.2, phys.x1 + 0.2, phys.z0 - 0.2, phys.z1}, p.l_e);
    auto mesh = generate_mesh(phys, PmlWidths::sides_and_bottom(0.2), sf, p.seed);
    auto el = kmv_element(p.degree);
    auto dm = build_dofmap(mesh, el);

    // Fast half on the source side, slow half on the receiver side.
    std::vector<double> c_true(dm.n_dofs), c0(dm.n_dofs, 4.0);
    for (int g = 0; g < dm.n_dofs; ++g) c_true[g] = dm.coords[g][1] >= -0.5 ? 4.0 : 1.0;

    PmlSpec pml;
    pml.widths = PmlWidths::sides_and_bottom(0.2);
    // Pin the damping amplitude: the layer profile belongs to the
    // discretization, not to the probed control.
    pml.sigma_max = 3.0 * 4.0 * std::log(1e3) / (2.0 * 0.2);
    auto fs_true = build_fields(mesh, el, c_true, pml);
    auto fs0 = build_fields(mesh, el, c0, pml);

    ShotConfig shot;
    shot.source = {0.5, -0.1};
    shot.frequency = 5.0;
    shot.duration = p.duration;
    shot.dt = p.dt;
    shot.subsample = p.subsample;
    for (int k = 0; k < p.n_receivers; ++k)
        shot.receivers.push_back(
            {0.1 + 0.8 * k / std::max(1, p.n_receivers - 1), -0.9});

    GradCheckResult res;
    res.n_dofs = dm.n_dofs;
    res.n_triangles = mesh.n_triangles();
    res.dt_cfl = fs_true.estimate_dt_cfl();

    ForwardOptions noSnap;
    noSnap.store_snapshots = false;
    const auto obs = forward(fs_true, shot, noSnap).record;

    auto fwd = forward(fs0, shot);
    auto mis = misfit(fwd.record, obs);
    res.J0 = mis.value;
    auto G = adjoint_gradient(fs0, mis.residual, shot, std::move(fwd.snapshots));
    res.d_co = adjoint_directional(G, G.values, fs0);

    auto eval_J = [&](const std::vector<double>& c) {
        auto fs = build_fields(mesh, el, c, pml);
        return misfit(forward(fs, shot, noSnap).record, obs).value;
    };
    for (double h : p.fd_steps) {
        const double dfd = fd_directional(eval_J, c0, G.values, h, res.J0);
        res.fd_steps.push_back(h);
        res.d_fd.push_back(dfd);
        res.rel_diff.push_back(std::abs(res.d_co - dfd) / std::abs(dfd));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Manufactured solution u = t^2 sin(x) sin(z). The auxiliary field of the
// damped system has the closed form p_k = -psi2_k c^2 (grad u)_k Phi(t, s_k)
// with Phi(t,s) = int_0^t e^{-s(t-tau)} tau^2 dtau, so the volume forcing of
// the full system is available analytically everywhere, PML included.

namespace {

struct MmsMachine {
    Rect phys;
    double w = 0.25;       // layer width
    double c = 1.43;       // wavespeed
    double smax = 0.0;     // damping amplitude

    double sigma(double d) const {  // d = distance into the layer
        if (d <= 0.0) return 0.0;
        const double t = d / w;
        return smax * t * t;
    }
    double dsigma(double d, double sign) const {
        if (d <= 0.0) return 0.0;
        return sign * 2.0 * smax * d / (w * w);
    }
    double sx(double x) const {
        if (x < phys.x0) return sigma(phys.x0 - x);
        if (x > phys.x1) return sigma(x - phys.x1);
        return 0.0;
    }
    double dsx(double x) const {
        if (x < phys.x0) return dsigma(phys.x0 - x, -1.0);
        if (x > phys.x1) return dsigma(x - phys.x1, +1.0);
        return 0.0;
    }
    double sy(double z) const {
        if (z < phys.z0) return sigma(phys.z0 - z);
        if (z > phys.z1) return sigma(z - phys.z1);
        return 0.0;
    }
    double dsy(double z) const {
        if (z < phys.z0) return dsigma(phys.z0 - z, -1.0);
        if (z > phys.z1) return dsigma(z - phys.z1, +1.0);
        return 0.0;
    }

    static double phi_int(double t, double s) {
        if (s * t < 0.1) {
            // series: 2 sum_m (-s)^m t^{m+3} / (m+3)!
            double term = 2.0 * t * t * t / 6.0;
            double sum = term;
            for (int m = 1; m <= 12; ++m) {
                term *= -s * t / (m + 3);
                sum += term;
            }
            return sum;
        }
        const double e = std::exp(-s * t);
        return (t * t * s * s - 2.0 * t * s + 2.0 - 2.0 * e) / (s * s * s);
    }
    static double phi_int_ds(double t, double s) {
        if (s * t < 0.1) {
            // d/ds of the series
            double sum = 0.0;
            double pw = 1.0;  // s^{m-1} at m=1
            double fact = 24.0;  // 4!
            double tm = t * t * t * t;
            for (int m = 1; m <= 12; ++m) {
                const double sgn = (m % 2) ? -1.0 : 1.0;
                sum += 2.0 * sgn * m * pw * tm / fact;
                pw *= s;
                tm *= t;
                fact *= (m + 4);
            }
            return sum;
        }
        const double e = std::exp(-s * t);
        const double N = t * t * s * s - 2.0 * t * s + 2.0 - 2.0 * e;
        const double Np = 2.0 * t * t * s - 2.0 * t + 2.0 * t * e;
        return Np / (s * s * s) - 3.0 * N / (s * s * s * s);
    }

    double u(double x, double z, double t) const { return t * t * std::sin(x) * std::sin(z); }

    // Forcing for the full damped system (sigma-consistent).
    double forcing_full(double x, double z, double t) const {
        const double sxv = sx(x), syv = sy(z);
        const double sinx = std::sin(x), sinz = std::sin(z);
        const double cosx = std::cos(x), cosz = std::cos(z);
        const double utt = 2.0 * sinx * sinz;
        const double ut = 2.0 * t * sinx * sinz;
        const double lap = -2.0 * (t * t) * sinx * sinz;
        double f = utt + (sxv + syv) * ut + sxv * syv * (t * t) * sinx * sinz - c * c * lap;
        // div p with p1 = -psi2x c^2 gx Phi(t,sx), gx = cos sin; psi2x = sx-sy
        const double gx = cosx * sinz, gz = sinx * cosz;
        const double gxx = -sinx * sinz, gzz = -sinx * sinz;
        const double p1x = -c * c * (dsx(x) * gx + (sxv - syv) * gxx) * phi_int(t, sxv) -
                           c * c * (sxv - syv) * gx * phi_int_ds(t, sxv) * dsx(x);
        const double p2z = -c * c * (dsy(z) * gz + (syv - sxv) * gzz) * phi_int(t, syv) -
                           c * c * (syv - sxv) * gz * phi_int_ds(t, syv) * dsy(z);
        f -= p1x + p2z;
        return f;
    }

    // Forcing of the undamped equation only (sigma terms omitted).
    double forcing_plain(double x, double z, double t) const {
        const double sinx = std::sin(x), sinz = std::sin(z);
        return 2.0 * sinx * sinz + 2.0 * c * c * t * t * sinx * sinz;
    }
};

}  // namespace

MmsResult run_mms(const MmsParams& p) {
    MmsResult out;
    const Rect phys{0.0, 1.0, 0.0, 1.0};
    MmsMachine mm;
    mm.phys = phys;
    mm.w = p.pml_width;
    mm.c = p.wavespeed;
    mm.smax = 3.0 * p.wavespeed * std::log(1e3) / (2.0 * p.pml_width);

    auto el = kmv_element(p.degree);
    for (double le : p.edge_lengths) {
        auto sf = uniform_sizing({phys.x0 - mm.w, phys.x1 + mm.w, phys.z0 - mm.w, phys.z1 + mm.w},
                                 le);
        auto mesh = generate_mesh(phys, PmlWidths::all(mm.w), sf, p.seed);
        PmlSpec pml;
        pml.widths = PmlWidths::all(mm.w);
        std::vector<double> c_nodal;
        auto dm = build_dofmap(mesh, el);
        c_nodal.assign(dm.n_dofs, p.wavespeed);
        auto fs = build_fields(mesh, el, c_nodal, pml);

        ShotConfig shot;
        shot.duration = p.duration;
        shot.dt = p.dt;
        const int nt = static_cast<int>(std::floor(p.duration / p.dt)) + 1;
        shot.subsample = nt - 1;  // keep only the first and final states

        std::vector<double> u1(fs.n_dofs());
        for (int g = 0; g < fs.n_dofs(); ++g)
            u1[g] = mm.u(fs.dofmap.coords[g][0], fs.dofmap.coords[g][1], p.dt);

        ForwardOptions o;
        o.u_start1 = &u1;
        o.volume_forcing = [&](double x, double z, double t) {
            return p.pml_consistent_forcing ? mm.forcing_full(x, z, t)
                                            : mm.forcing_plain(x, z, t);
        };
        auto res = forward(fs, shot, o);
        const auto& uh = res.snapshots.u.back();
        const double T = res.snapshots.steps.back() * p.dt;

        double num = 0.0, den = 0.0;
        for (int g = 0; g < fs.n_dofs(); ++g) {
            if (fs.dofmap.region[g] != RegionTag::physical) continue;
            const double ue = mm.u(fs.dofmap.coords[g][0], fs.dofmap.coords[g][1], T);
            num += fs.mass[g] * (uh[g] - ue) * (uh[g] - ue);
            den += fs.mass[g] * ue * ue;
        }
        out.edge_lengths.push_back(le);
        out.errors.push_back(std::sqrt(num / den));
    }
    for (size_t k = 0; k + 1 < out.errors.size(); ++k)
        out.orders.push_back(std::log2(out.errors[k] / out.errors[k + 1]) /
                             std::log2(out.edge_lengths[k] / out.edge_lengths[k + 1]));
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct SweepRun {
    double C = 0.0, G = 0.0, E = 0.0;
    int n_dofs = 0, n_elems = 0;
};

}  // namespace

SweepResult run_sweep(const SweepParams& p) {
    const double lambda = p.wavespeed / p.frequency;
    const Rect phys{0.0, p.domain_wl_x * lambda, -p.domain_wl_z * lambda, 0.0};
    const PmlWidths pw = PmlWidths::all(p.pml_width);
    const std::array<double, 2> src{0.5 * (phys.x0 + phys.x1), 0.5 * (phys.z0 + phys.z1)};

    ShotConfig shot;
    shot.source = src;
    shot.frequency = p.frequency;
    shot.duration = p.duration;
    const double half = 0.5 * p.bin_wl * lambda;
    for (int j = 0; j < p.bin_side; ++j)
        for (int i = 0; i < p.bin_side; ++i)
            shot.receivers.push_back(
                {src[0] + p.offset_wl * lambda - half + p.bin_wl * lambda * i / (p.bin_side - 1),
                 src[1] - half + p.bin_wl * lambda * j / (p.bin_side - 1)});

    PmlSpec pml;
    pml.widths = pw;

    auto build = [&](int degree, double C) {
        const double le = p.wavespeed / (C * p.frequency);
        SizingField sf;
        if (p.heterogeneous) {
            sf = sizing_from_velocity(*p.heterogeneous, p.frequency, C, 1e-4);
            sf.gradation_rate = 0.15;
            sf = gradation_limit(sf);
        } else {
            sf = uniform_sizing({phys.x0 - pw.left, phys.x1 + pw.right, phys.z0 - pw.bottom,
                                 phys.z1 + pw.top},
                                le);
        }
        auto mesh = generate_mesh(phys, pw, sf, p.seed);
        auto el = kmv_element(degree);
        auto dm = build_dofmap(mesh, el);
        std::vector<double> c_nodal(dm.n_dofs);
        for (int g = 0; g < dm.n_dofs; ++g)
            c_nodal[g] = p.heterogeneous
                             ? p.heterogeneous->sample(dm.coords[g][0], dm.coords[g][1])
                             : p.wavespeed;
        return build_fields(mesh, el, c_nodal, pml);
    };

    // Reference: refined degree-3 mesh; its 0.8 dt_CFL is the common step.
    auto fs_ref = build(3, p.reference_C);
    SweepResult out;
    out.dt = 0.8 * fs_ref.estimate_dt_cfl();
    out.reference_G =
        p.reference_C * std::sqrt(static_cast<double>(fs_ref.n_dofs()) / fs_ref.mesh.n_triangles());
    shot.dt = out.dt;

    ForwardOptions o;
    o.store_snapshots = false;
    const auto ref_rec = forward(fs_ref, shot, o).record;

    auto error_pct = [&](const ShotRecord& rec) {
        double num = 0.0, den = 0.0;
        for (size_t r = 0; r < rec.receivers.size(); ++r) {
            for (int nn = 0; nn < rec.nt; ++nn) {
                const double d = rec.at(static_cast<int>(r), nn) -
                                 ref_rec.at(static_cast<int>(r), nn);
                const double w = (nn == 0 || nn == rec.nt - 1) ? 0.5 : 1.0;  // trapezoid
                num += w * d * d * rec.dt;
                den += w * ref_rec.at(static_cast<int>(r), nn) *
                       ref_rec.at(static_cast<int>(r), nn) * rec.dt;
            }
        }
        return 100.0 * std::sqrt(num / den);
    };

    auto run_one = [&](int degree, double C) {
        auto fs = build(degree, C);
        SweepRun r;
        r.C = C;
        r.G = C * std::sqrt(static_cast<double>(fs.n_dofs()) / fs.mesh.n_triangles());
        r.n_dofs = fs.n_dofs();
        r.n_elems = fs.mesh.n_triangles();
        r.E = error_pct(forward(fs, shot, o).record);
        out.rows.push_back({degree, r.C, r.G, r.E, r.n_dofs, r.n_elems});
        return r;
    };

    auto crossing = [&](int degree, const std::vector<double>& Cs) {
        std::vector<SweepRun> runs;
        for (double C : Cs) runs.push_back(run_one(degree, C));
        // Bracket the threshold, refine by bisection, then log-interpolate.
        int hi = -1;
        for (size_t k = 0; k + 1 < runs.size(); ++k)
            if (runs[k].E > p.threshold_pct && runs[k + 1].E <= p.threshold_pct)
                hi = static_cast<int>(k);
        if (hi < 0) {
            // No bracket: fall back to a log-linear fit through all samples.
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (const auto& r : runs) {
                sx += r.C;
                sy += std::log(r.E);
                sxx += r.C * r.C;
                sxy += r.C * std::log(r.E);
            }
            const double nq = static_cast<double>(runs.size());
            const double b = (nq * sxy - sx * sy) / (nq * sxx - sx * sx);
            const double a = (sy - b * sx) / nq;
            return (std::log(p.threshold_pct) - a) / b;
        }
        SweepRun lo = runs[hi], up = runs[hi + 1];
        for (int it = 0; it < p.bisection_steps; ++it) {
            const double Cm = 0.5 * (lo.C + up.C);
            auto rm = run_one(degree, Cm);
            if (rm.E > p.threshold_pct)
                lo = rm;
            else
                up = rm;
        }
        const double t = (std::log(p.threshold_pct) - std::log(lo.E)) /
                         (std::log(up.E) - std::log(lo.E));
        return lo.C + t * (up.C - lo.C);
    };

    out.C_min_deg2 = crossing(2, p.sweep_C2);
    out.C_min_deg3 = crossing(3, p.sweep_C3);
    out.ratio = out.C_min_deg3 / out.C_min_deg2;
    return out;
}

// ---------------------------------------------------------------------------

ToyFwiResult run_toy_fwi(const ToyFwiParams& p) {
    const Rect phys{0.0, 1.0, -1.0, 0.0};
    const double le = p.background / (p.cells_per_wavelength * p.frequency);
    auto sf = uniform_sizing(
        {phys.x0 - p.pml_width, phys.x1 + p.pml_width, phys.z0 - p.pml_width, phys.z1}, le);
    auto mesh = generate_mesh(phys, PmlWidths::sides_and_bottom(p.pml_width), sf, p.seed);
    auto el = kmv_element(p.degree);
    auto dm = build_dofmap(mesh, el);

    auto model = [&](bool with_anomaly) {
        std::vector<double> c(dm.n_dofs);
        for (int g = 0; g < dm.n_dofs; ++g) {
            const double x = dm.coords[g][0], z = dm.coords[g][1];
            double v = p.background;
            if (with_anomaly) {
                const double dx = x - p.anomaly_center[0], dz = z - p.anomaly_center[1];
                const double q = (dx * dx + dz * dz) / (p.anomaly_radius * p.anomaly_radius);
                if (q < 1.0) v += p.anomaly_amplitude * (1.0 - q) * (1.0 - q);
            }
            if (z > -p.water_depth) v = p.water_c;
            c[g] = v;
        }
        return c;
    };
    auto c_true = model(true);
    auto c0 = model(false);

    PmlSpec pml;
    pml.widths = PmlWidths::sides_and_bottom(p.pml_width);
    pml.sigma_max = 3.0 * p.hi * std::log(1e3) / (2.0 * p.pml_width);

    // dt from the CFL bound at the velocity upper bound: stable for every
    // admissible model the optimizer can visit.
    std::vector<double> c_hi(dm.n_dofs, p.hi);
    const double dt = 0.8 * build_fields(mesh, el, c_hi, pml).estimate_dt_cfl();

    ShotBundle bundle;
    for (int s = 0; s < p.n_shots; ++s) {
        ShotConfig shot;
        shot.source = {0.2 + 0.6 * s / std::max(1, p.n_shots - 1), -0.05};
        shot.frequency = p.frequency;
        shot.duration = p.duration;
        shot.dt = dt;
        shot.subsample = p.subsample;
        for (int k = 0; k < p.n_receivers; ++k)
            shot.receivers.push_back(
                {0.05 + 0.9 * k / std::max(1, p.n_receivers - 1), -0.9});
        bundle.shots.push_back(shot);
    }

    // Observed data from the true model.
    {
        auto fs_true = build_fields(mesh, el, c_true, pml, p.water_threshold);
        ForwardOptions o;
        o.store_snapshots = false;
        for (const auto& shot : bundle.shots)
            bundle.observed.push_back(forward(fs_true, shot, o).record);
    }

    InversionProblem problem;
    problem.n = dm.n_dofs;
    problem.evaluate = [&](const std::vector<double>& c, double& J, std::vector<double>& G) {
        evaluate_misfit_gradient(mesh, el, pml, p.water_threshold, bundle, c, p.workers, true, J,
                                 G);
    };

    InversionOptions opts;
    opts.iter_max = p.iter_max;
    opts.tol = p.tol;
    opts.lo = p.lo;
    opts.hi = p.hi;
    opts.log = p.log;

    ToyFwiResult out;
    out.state = invert(problem, c0, opts);
    out.mesh = mesh;
    out.dofmap = dm;
    out.c_initial = c0;
    out.c_true = c_true;
    out.dt = dt;
    out.n_dofs = dm.n_dofs;
    out.misfit_reduction = out.state.history.front() / out.state.history.back();

    auto H = point_interpolator(mesh, dm, el, {p.anomaly_center});
    std::vector<double> v;
    H.apply(c_true, v);
    out.center_true = v[0];
    H.apply(c0, v);
    out.center_initial = v[0];
    H.apply(out.state.c, v);
    out.center_recovered = v[0];

    auto fs0 = build_fields(mesh, el, c0, pml, p.water_threshold);
    for (int g = 0; g < dm.n_dofs; ++g) {
        const bool masked = fs0.dofmap.region[g] != RegionTag::physical || fs0.water[g];
        if (!masked) continue;
        if (fs0.water[g] && out.state.c[g] != c0[g]) out.water_unchanged = false;
        if (fs0.dofmap.region[g] != RegionTag::physical && out.state.c[g] != c0[g])
            out.pml_unchanged = false;
    }
    return out;
}

}  // namespace triwave
