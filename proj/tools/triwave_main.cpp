// triwave command-line driver: meshing, forward modeling, gradient
// verification, manufactured-solution checks, grid sweeps and inversion.
#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "triwave/experiments.hpp"
#include "triwave/io.hpp"

namespace fs = std::filesystem;
using namespace triwave;

namespace {

struct CommonArgs {
    std::string config;
    std::string out_dir;
    int workers = 2;
    std::uint64_t seed = 1;
    bool override_cfl = false;
};

const std::set<std::string> kDomainKeys = {
    "domain.x0", "domain.x1", "domain.z0", "domain.z1",
    "pml.width", "pml.all_sides", "pml.sigma_max",
    "element.degree",
    "mesh.cells_per_wavelength", "mesh.l_min", "mesh.gradation_rate", "mesh.top",
    "velocity.file", "velocity.constant",
    "source.frequency", "source.x", "source.z", "source.amplitude",
    "shots.n", "shots.x0", "shots.x1", "shots.z",
    "receivers.n", "receivers.x0", "receivers.x1", "receivers.z",
    "time.duration", "time.dt", "time.safety", "time.subsample",
    "inversion.iter_max", "inversion.tol", "inversion.lo", "inversion.hi",
    "inversion.water_threshold",
    "gradcheck.l_e", "gradcheck.duration", "gradcheck.dt", "gradcheck.receivers",
    "mms.edge_lengths", "mms.dt", "mms.duration", "mms.pml_width", "mms.plain_forcing",
    "sweep.C2", "sweep.C3", "sweep.reference_C", "sweep.duration", "sweep.domain_wl_x",
    "sweep.domain_wl_z", "sweep.offset_wl", "sweep.bisection_steps",
    "fwi.background", "fwi.anomaly_amplitude", "fwi.anomaly_radius", "fwi.anomaly_x",
    "fwi.anomaly_z", "fwi.water_depth", "fwi.water_c", "fwi.duration",
};

Config load_config(const CommonArgs& a) {
    if (a.config.empty()) return Config{};
    return parse_config(a.config, kDomainKeys);
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

int element_degree(const Config& cfg) {
    const int degree = cfg.get_int("element.degree", 2);
    kmv_element(degree);  // rejects unsupported degrees up front
    return degree;
}

VelocityModel load_velocity(const Config& cfg, const Rect& full) {
    if (cfg.has("velocity.file")) return read_velocity(cfg.get_string("velocity.file", ""));
    VelocityModel vm;
    vm.nx = 41;
    vm.nz = 41;
    vm.x0 = full.x0;
    vm.z0 = full.z0;
    vm.dx = full.width() / 40.0;
    vm.dz = full.height() / 40.0;
    vm.values.assign(41 * 41, cfg.get_double("velocity.constant", 1.5));
    return vm;
}

struct BuiltScene {
    Rect physical;
    PmlWidths pml_widths;
    Mesh mesh;
    ElementDef element;
    VelocityModel vm;
    double C = 0.0;
    double f = 5.0;
};

BuiltScene build_scene(const Config& cfg, std::uint64_t seed) {
    BuiltScene sc;
    sc.physical = {cfg.get_double("domain.x0", 0.0), cfg.get_double("domain.x1", 1.0),
                   cfg.get_double("domain.z0", -1.0), cfg.get_double("domain.z1", 0.0)};
    const double pw = cfg.get_double("pml.width", 0.2);
    sc.pml_widths = cfg.get_bool("pml.all_sides", false) ? PmlWidths::all(pw)
                                                         : PmlWidths::sides_and_bottom(pw);
    sc.element = kmv_element(element_degree(cfg));
    sc.f = cfg.get_double("source.frequency", 5.0);
    sc.C = cfg.get_double("mesh.cells_per_wavelength", 5.0);
    const Rect full{sc.physical.x0 - sc.pml_widths.left, sc.physical.x1 + sc.pml_widths.right,
                    sc.physical.z0 - sc.pml_widths.bottom, sc.physical.z1 + sc.pml_widths.top};
    sc.vm = load_velocity(cfg, full);
    auto sf = sizing_from_velocity(sc.vm, sc.f, sc.C, cfg.get_double("mesh.l_min", 1e-4));
    sf.gradation_rate = cfg.get_double("mesh.gradation_rate", 0.15);
    sf = gradation_limit(sf);
    MeshOptions mo;
    mo.top_tag = cfg.get_string("mesh.top", "absorbing") == "free_surface"
                     ? BoundaryTag::free_surface
                     : BoundaryTag::absorbing;
    sc.mesh = generate_mesh(sc.physical, sc.pml_widths, sf, seed, mo);
    return sc;
}

void finish_run(const std::string& out_dir, std::vector<std::string>& artifacts) {
    const std::string manifest = out_dir + "/manifest.txt";
    write_manifest(manifest, artifacts);
    std::cout << "wrote " << artifacts.size() << " artifact(s) under " << out_dir << "\n";
}

int cmd_mesh(const CommonArgs& a) {
    auto cfg = load_config(a);
    auto sc = build_scene(cfg, a.seed);
    fs::create_directories(a.out_dir);
    const std::string mesh_path = a.out_dir + "/mesh.txt";
    write_mesh(mesh_path, sc.mesh);

    auto sf = sizing_from_velocity(sc.vm, sc.f, sc.C, cfg.get_double("mesh.l_min", 1e-4));
    sf.gradation_rate = cfg.get_double("mesh.gradation_rate", 0.15);
    sf = gradation_limit(sf);
    auto q = mesh_quality(sc.mesh, &sf);
    const std::string report_path = a.out_dir + "/sizing_report.txt";
    {
        std::ofstream os(report_path);
        os << q.summary() << "\n";
    }
    std::cout << q.summary() << "\n";
    std::vector<std::string> artifacts = {mesh_path, report_path};
    finish_run(a.out_dir, artifacts);
    return 0;
}

int cmd_forward(const CommonArgs& a) {
    auto cfg = load_config(a);
    auto sc = build_scene(cfg, a.seed);
    PmlSpec pml;
    pml.widths = sc.pml_widths;
    pml.sigma_max = cfg.get_double("pml.sigma_max", 0.0);
    auto fsu = build_fields(sc.mesh, sc.element, sc.vm, pml);

    const double dt_cfl = fsu.estimate_dt_cfl();
    const double safety = cfg.get_double("time.safety", 0.8);
    const double dt = cfg.get_double("time.dt", safety * dt_cfl);
    const double alpha = std::sqrt(static_cast<double>(fsu.n_dofs()) / sc.mesh.n_triangles());
    std::cout << "dt_cfl " << dt_cfl << " s, dt " << dt << " s\n";
    std::cout << "dofs " << fsu.n_dofs() << ", elements " << sc.mesh.n_triangles()
              << ", alpha " << alpha << ", G " << alpha * sc.C << "\n";

    const int n_shots = cfg.get_int("shots.n", 1);
    const int n_rec = cfg.get_int("receivers.n", 10);
    std::vector<ShotConfig> shots;
    for (int s = 0; s < n_shots; ++s) {
        ShotConfig shot;
        const double sx0 = cfg.get_double("shots.x0", 0.5), sx1 = cfg.get_double("shots.x1", 0.5);
        shot.source = {n_shots > 1 ? sx0 + (sx1 - sx0) * s / (n_shots - 1) : sx0,
                       cfg.get_double("shots.z", -0.05)};
        shot.frequency = sc.f;
        shot.amplitude = cfg.get_double("source.amplitude", 1.0);
        shot.duration = cfg.get_double("time.duration", 1.0);
        shot.dt = dt;
        shot.subsample = cfg.get_int("time.subsample", 1);
        for (int k = 0; k < n_rec; ++k) {
            const double rx0 = cfg.get_double("receivers.x0", 0.1);
            const double rx1 = cfg.get_double("receivers.x1", 0.9);
            shot.receivers.push_back(
                {n_rec > 1 ? rx0 + (rx1 - rx0) * k / (n_rec - 1) : rx0,
                 cfg.get_double("receivers.z", -0.9)});
        }
        shots.push_back(shot);
    }

    fs::create_directories(a.out_dir);
    std::vector<std::string> artifacts;
    std::vector<ShotRecord> records(shots.size());
    std::atomic<int> next{0};
    auto work = [&]() {
        for (int i = next.fetch_add(1); i < static_cast<int>(shots.size());
             i = next.fetch_add(1)) {
            ForwardOptions o;
            o.store_snapshots = false;
            o.check_cfl = !a.override_cfl;
            records[i] = forward(fsu, shots[i], o).record;
        }
    };
    {
        std::vector<std::thread> pool;
        for (int w = 1; w < std::max(1, a.workers); ++w) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
    }
    for (size_t i = 0; i < records.size(); ++i) {
        const std::string p = a.out_dir + "/shot_" + std::to_string(i) + ".bin";
        write_shotrecord(p, records[i]);
        artifacts.push_back(p);
    }
    finish_run(a.out_dir, artifacts);
    return 0;
}

int cmd_gradcheck(const CommonArgs& a) {
    auto cfg = load_config(a);
    GradCheckParams p;
    p.l_e = cfg.get_double("gradcheck.l_e", 0.02);
    p.degree = element_degree(cfg);
    p.duration = cfg.get_double("gradcheck.duration", 1.0);
    p.dt = cfg.get_double("gradcheck.dt", 5e-4);
    p.n_receivers = cfg.get_int("gradcheck.receivers", 100);
    p.seed = a.seed;
    auto r = run_gradcheck(p);

    fs::create_directories(a.out_dir);
    const std::string path = a.out_dir + "/gradcheck.txt";
    std::ofstream os(path);
    auto emit = [&](std::ostream& o) {
        o << "dofs " << r.n_dofs << " triangles " << r.n_triangles << " dt_cfl " << r.dt_cfl
          << "\n";
        o << "J0 " << r.J0 << "\n";
        o << "d_co " << r.d_co << "\n";
        for (size_t i = 0; i < r.fd_steps.size(); ++i)
            o << "h " << r.fd_steps[i] << "  d_fd " << r.d_fd[i] << "  rel_diff "
              << 100.0 * r.rel_diff[i] << "%\n";
    };
    emit(os);
    os.close();
    emit(std::cout);
    std::vector<std::string> artifacts = {path};
    finish_run(a.out_dir, artifacts);
    return 0;
}

int cmd_mms(const CommonArgs& a) {
    auto cfg = load_config(a);
    MmsParams p;
    p.degree = element_degree(cfg);
    if (cfg.has("mms.edge_lengths")) p.edge_lengths = parse_list(cfg.get_string("mms.edge_lengths", ""));
    p.dt = cfg.get_double("mms.dt", 2.5e-4);
    p.duration = cfg.get_double("mms.duration", 0.1);
    p.pml_width = cfg.get_double("mms.pml_width", 0.25);
    p.pml_consistent_forcing = !cfg.get_bool("mms.plain_forcing", false);
    p.seed = a.seed;
    auto r = run_mms(p);

    fs::create_directories(a.out_dir);
    const std::string path = a.out_dir + "/mms.txt";
    std::ofstream os(path);
    auto emit = [&](std::ostream& o) {
        for (size_t i = 0; i < r.errors.size(); ++i)
            o << "l_e " << r.edge_lengths[i] << "  rel_L2_error " << r.errors[i] << "\n";
        for (size_t i = 0; i < r.orders.size(); ++i) o << "order " << r.orders[i] << "\n";
    };
    emit(os);
    os.close();
    emit(std::cout);
    std::vector<std::string> artifacts = {path};
    finish_run(a.out_dir, artifacts);
    return 0;
}

int cmd_sweep(const CommonArgs& a) {
    auto cfg = load_config(a);
    SweepParams p;
    if (cfg.has("sweep.C2")) p.sweep_C2 = parse_list(cfg.get_string("sweep.C2", ""));
    if (cfg.has("sweep.C3")) p.sweep_C3 = parse_list(cfg.get_string("sweep.C3", ""));
    p.reference_C = cfg.get_double("sweep.reference_C", 5.9);
    p.duration = cfg.get_double("sweep.duration", 3.0);
    p.domain_wl_x = cfg.get_double("sweep.domain_wl_x", 24.0);
    p.domain_wl_z = cfg.get_double("sweep.domain_wl_z", 8.0);
    p.offset_wl = cfg.get_double("sweep.offset_wl", 10.0);
    p.bisection_steps = cfg.get_int("sweep.bisection_steps", 2);
    p.seed = a.seed;

    VelocityModel het;
    SweepResult hom = run_sweep(p);
    double dc2 = 0.0, dc3 = 0.0;
    if (cfg.has("velocity.file")) {
        het = read_velocity(cfg.get_string("velocity.file", ""));
        SweepParams ph = p;
        ph.heterogeneous = &het;
        auto r2 = run_sweep(ph);
        dc2 = 100.0 * (r2.C_min_deg2 - hom.C_min_deg2) / hom.C_min_deg2;
        dc3 = 100.0 * (r2.C_min_deg3 - hom.C_min_deg3) / hom.C_min_deg3;
        for (const auto& row : r2.rows) hom.rows.push_back(row);
    }

    fs::create_directories(a.out_dir);
    const std::string path = a.out_dir + "/sweep.txt";
    std::ofstream os(path);
    auto emit = [&](std::ostream& o) {
        o << "# degree C G E_pct dofs elems\n";
        for (const auto& row : hom.rows)
            o << row.degree << " " << row.C << " " << row.G << " " << row.E << " " << row.n_dofs
              << " " << row.n_elems << "\n";
        o << "dt " << hom.dt << "\nreference_G " << hom.reference_G << "\n";
        o << "C_min_deg2 " << hom.C_min_deg2 << "\nC_min_deg3 " << hom.C_min_deg3 << "\nratio "
          << hom.ratio << "\n";
        if (cfg.has("velocity.file"))
            o << "delta_C_deg2_pct " << dc2 << "\ndelta_C_deg3_pct " << dc3 << "\n";
    };
    emit(os);
    emit(std::cout);
    std::vector<std::string> artifacts = {path};
    finish_run(a.out_dir, artifacts);
    return 0;
}

int cmd_invert(const CommonArgs& a) {
    auto cfg = load_config(a);
    fs::create_directories(a.out_dir);
    const std::string log_path = a.out_dir + "/iterations.txt";
    std::ofstream log_os(log_path);

    ToyFwiParams p;
    p.background = cfg.get_double("fwi.background", 2.0);
    p.anomaly_amplitude = cfg.get_double("fwi.anomaly_amplitude", 0.4);
    p.anomaly_radius = cfg.get_double("fwi.anomaly_radius", 0.18);
    p.anomaly_center = {cfg.get_double("fwi.anomaly_x", 0.5), cfg.get_double("fwi.anomaly_z", -0.5)};
    p.water_depth = cfg.get_double("fwi.water_depth", 0.1);
    p.water_c = cfg.get_double("fwi.water_c", 1.43);
    p.water_threshold = cfg.get_double("inversion.water_threshold", 1.51);
    p.n_shots = cfg.get_int("shots.n", 4);
    p.n_receivers = cfg.get_int("receivers.n", 50);
    p.frequency = cfg.get_double("source.frequency", 5.0);
    p.pml_width = cfg.get_double("pml.width", 0.2);
    p.cells_per_wavelength = cfg.get_double("mesh.cells_per_wavelength", 5.0);
    p.degree = element_degree(cfg);
    p.duration = cfg.get_double("fwi.duration", 1.1);
    p.subsample = cfg.get_int("time.subsample", 1);
    p.lo = cfg.get_double("inversion.lo", 1.0);
    p.hi = cfg.get_double("inversion.hi", 3.0);
    p.iter_max = cfg.get_int("inversion.iter_max", 50);
    p.tol = cfg.get_double("inversion.tol", 1e-10);
    p.workers = a.workers;
    p.seed = a.seed;
    p.log = [&](const std::string& s) {
        log_os << s << "\n";
        std::cout << "iter " << s << "\n";
    };

    auto r = run_toy_fwi(p);
    log_os.close();

    const std::string model_path = a.out_dir + "/final_model.bin";
    write_velocity(model_path, field_to_raster(r.state.c, r.dofmap, r.mesh.full, 101, 101));
    // Final-iterate gradient raster, diagnostic only. Raster values may be
    // nonpositive, so it bypasses the wavespeed reader's positivity check.
    const std::string grad_path = a.out_dir + "/final_gradient.txt";
    {
        auto gr = field_to_raster(r.state.gradient, r.dofmap, r.mesh.full, 101, 101);
        std::ofstream os(grad_path);
        os << "# gradient raster " << gr.nx << " x " << gr.nz << "\n";
        for (int iz = 0; iz < gr.nz; ++iz) {
            for (int ix = 0; ix < gr.nx; ++ix) os << gr.at(ix, iz) << " ";
            os << "\n";
        }
    }
    const std::string misfit_path = a.out_dir + "/misfit_history.txt";
    {
        std::ofstream os(misfit_path);
        for (size_t k = 0; k < r.state.history.size(); ++k)
            os << k << " " << r.state.history[k] << "\n";
    }
    std::cout << "misfit reduced " << r.misfit_reduction << "x over " << r.state.iterations
              << " iterations (" << r.state.termination << ")\n";
    std::cout << "anomaly center: true " << r.center_true << ", recovered "
              << r.center_recovered << " km/s\n";
    std::vector<std::string> artifacts = {log_path, model_path, grad_path, misfit_path};
    finish_run(a.out_dir, artifacts);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"triwave: 2D full-waveform inversion on waveform-adapted triangular meshes"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonArgs a;
    app.add_option("--config", a.config, "configuration file (section.key = value)");
    app.add_option("--workers", a.workers, "shot-level worker threads")->default_val(2);
    app.add_option("--seed", a.seed, "mesh generation seed")->default_val(1);
    app.add_option("--out", a.out_dir, "run directory for artifacts");
    app.add_flag("--override-cfl", a.override_cfl, "allow dt above 0.9 dt_CFL");

    auto* mesh_cmd = app.add_subcommand("mesh", "sizing field, gradation and mesh generation");
    auto* fwd_cmd = app.add_subcommand("forward", "forward shots, writes shot records");
    auto* gc_cmd = app.add_subcommand("grad-check", "two-layer adjoint-vs-FD gradient check");
    auto* mms_cmd = app.add_subcommand("mms", "manufactured-solution convergence ladder");
    auto* sweep_cmd = app.add_subcommand("sweep", "homogeneous grid sweep E(C) per degree");
    auto* inv_cmd = app.add_subcommand("invert", "toy anomaly inversion end-to-end");

    CLI11_PARSE(app, argc, argv);

    try {
        if (a.out_dir.empty())
            a.out_dir = "runs/" + app.get_subcommands().front()->get_name();
        if (mesh_cmd->parsed()) return cmd_mesh(a);
        if (fwd_cmd->parsed()) return cmd_forward(a);
        if (gc_cmd->parsed()) return cmd_gradcheck(a);
        if (mms_cmd->parsed()) return cmd_mms(a);
        if (sweep_cmd->parsed()) return cmd_sweep(a);
        if (inv_cmd->parsed()) return cmd_invert(a);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
