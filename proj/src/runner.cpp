#include "spdelab/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "spdelab/heat.hpp"
#include "spdelab/rng.hpp"
#include "spdelab/stats.hpp"

namespace spdelab {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mtx;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mtx);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

int default_workers() {
    if (const char* env = std::getenv("SPDE_LAB_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 2;
}

GridFunction smoothed_mass_cdf(const GridSpec& grid, double center, double width,
                               double mass, CdfConvention convention) {
    double offset = convention == CdfConvention::FromLeft
                        ? 0.0
                        : normal_cdf((0.0 - center) / width);
    return GridFunction::sample(grid, [&](double y) {
        return mass * (normal_cdf((y - center) / width) - offset);
    });
}

namespace {

/// Deterministic particle cloud matching the smoothed-mass CDF.
std::vector<double> initial_cloud(int n, double center, double width) {
    std::vector<double> pos(n);
    for (int i = 0; i < n; ++i)
        pos[i] = center + width * normal_quantile((i + 0.5) / n);
    return pos;
}

double cdf_at(const AtomicMeasure& m, double y) {
    double s = 0.0;
    for (size_t i = 0; i < m.size(); ++i)
        if (m.positions[i] <= y) s += m.masses[i];
    return s;
}

} // namespace

Json CompareReport::to_json() const {
    Json j;
    j["p_values"] = p_values;
    j["min_p"] = min_p;
    j["threshold"] = threshold;
    j["ks_pass"] = ks_pass;
    j["mp_ratio_mean"] = mp_ratio_mean;
    j["mp_pass"] = mp_pass;
    j["max_range_violation"] = max_range_violation;
    j["max_monotonicity_violation"] = max_monotonicity_violation;
    j["structure_pass"] = structure_pass;
    j["pass"] = pass;
    return j;
}

CompareReport compare_pipeline(const CompareConfig& config) {
    if (config.n_replicas < 100)
        throw std::invalid_argument(
            "compare_pipeline: need at least 100 replicas per side");
    const bool fv = config.system == MpKind::Fv;
    const size_t n_probes = config.probes.size();
    const int R = config.n_replicas;

    // Particle side: replica r on stream r.
    std::vector<std::vector<double>> particle_probe(n_probes,
                                                    std::vector<double>(R, 0.0));
    std::vector<double> mp_ratios(R, 0.0);
    TestFunction bump = TestFunction::gaussian_bump(0.0, 1.0);
    auto cloud = initial_cloud(config.n_particles, config.initial_center,
                               config.initial_width);
    parallel_for(R, config.workers, [&](int r) {
        ParticleConfig pc;
        pc.n_init = config.n_particles;
        pc.initial_mass = 1.0;
        pc.rate_factor = config.rate_factor;
        pc.dt = config.particle_dt;
        pc.horizon = config.t_probe;
        pc.seed = config.seed;
        pc.stream_id = static_cast<std::uint64_t>(r);
        pc.snapshot_every = config.mp_snapshot_every;
        MeasurePath path = fv ? simulate_fv_particles(pc, cloud)
                              : simulate_sbm_particles(pc, cloud);
        for (size_t q = 0; q < n_probes; ++q)
            particle_probe[q][r] = cdf_at(path.snapshots.back(), config.probes[q]);
        mp_ratios[r] = mp_check(path, bump, config.system).ratio;
    });

    // Solver side: replica r on stream 1e6 + r, from-left initial condition.
    GridFunction F = smoothed_mass_cdf(config.grid, config.initial_center,
                                       config.initial_width, 1.0,
                                       CdfConvention::FromLeft);
    int n_steps = static_cast<int>(std::llround(config.t_probe / config.solver_dt));
    CoefficientKernel kernel =
        fv ? CoefficientKernel::fv(config.fv_n_levels)
           : CoefficientKernel::sbm(
                 sbm_level_band(F, config.t_probe, 1.5, config.level_da));
    std::vector<std::vector<double>> solver_probe(n_probes,
                                                  std::vector<double>(R, 0.0));
    std::vector<double> range_viol(R, 0.0), mono_viol(R, 0.0);
    parallel_for(R, config.workers, [&](int r) {
        NoiseField noise =
            sample_noise(n_steps, config.solver_dt, kernel.level(), config.seed,
                         1000000ull + static_cast<std::uint64_t>(r));
        SolverConfig sc;
        sc.grid = config.grid;
        sc.dt = config.solver_dt;
        sc.n_steps = n_steps;
        sc.kernel = kernel;
        sc.initial = F;
        sc.save_every = n_steps;
        Trajectory traj = solve(sc, noise);
        for (size_t q = 0; q < n_probes; ++q)
            solver_probe[q][r] = traj.final_state().interpolate(config.probes[q]);
        range_viol[r] = traj.max_range_violation;
        mono_viol[r] = traj.max_monotonicity_violation;
    });

    CompareReport rep;
    rep.threshold = config.alpha / static_cast<double>(n_probes);
    rep.min_p = 1.0;
    for (size_t q = 0; q < n_probes; ++q) {
        LawDistance d = law_distance(particle_probe[q], solver_probe[q]);
        rep.p_values.push_back(d.ks.p_value);
        rep.min_p = std::min(rep.min_p, d.ks.p_value);
    }
    rep.ks_pass = rep.min_p > rep.threshold;
    rep.mp_ratio_mean = mean(mp_ratios);
    rep.mp_pass = rep.mp_ratio_mean >= config.mp_band_lo &&
                  rep.mp_ratio_mean <= config.mp_band_hi;
    for (int r = 0; r < R; ++r) {
        rep.max_range_violation = std::max(rep.max_range_violation, range_viol[r]);
        rep.max_monotonicity_violation =
            std::max(rep.max_monotonicity_violation, mono_viol[r]);
    }
    // Range/monotonicity are [0,1]-structure diagnostics: gate them for FV.
    rep.structure_pass =
        !fv || (rep.max_range_violation <= 0.02 &&
                rep.max_monotonicity_violation <= 0.02);
    rep.pass = rep.ks_pass && rep.mp_pass && rep.structure_pass;
    return rep;
}

Json MpEnsembleReport::to_json() const {
    Json j;
    j["ratios"] = ratios;
    j["mean_ratio"] = mean_ratio;
    j["mean_z"] = mean_z;
    return j;
}

MpEnsembleReport mp_ensemble(const MpEnsembleConfig& config) {
    TestFunction bump = TestFunction::gaussian_bump(config.bump_center,
                                                    config.bump_width);
    auto cloud = initial_cloud(config.n_particles, config.initial_center,
                               config.initial_width);
    std::vector<double> ratios(config.n_replicas), zs(config.n_replicas);
    parallel_for(config.n_replicas, config.workers, [&](int r) {
        ParticleConfig pc;
        pc.n_init = config.n_particles;
        pc.initial_mass = 1.0;
        pc.rate_factor = config.rate_factor;
        pc.dt = config.dt;
        pc.horizon = config.horizon;
        pc.seed = config.seed;
        pc.stream_id = static_cast<std::uint64_t>(r);
        pc.snapshot_every = config.snapshot_every;
        MeasurePath path = config.kind == MpKind::Sbm
                               ? simulate_sbm_particles(pc, cloud)
                               : simulate_fv_particles(pc, cloud);
        MpReport rep = mp_check(path, bump, config.kind);
        ratios[r] = rep.ratio;
        zs[r] = rep.mean_z;
    });
    MpEnsembleReport rep;
    rep.ratios = ratios;
    rep.mean_ratio = mean(ratios);
    rep.mean_z = mean(zs);
    return rep;
}

// ---------------------------------------------------------------------
// CLI command implementations
// ---------------------------------------------------------------------

namespace {

GridSpec parse_grid(const Json& j) {
    require_keys(j, {"x_min", "x_max", "n_cells"}, "grid");
    return GridSpec(j.value("x_min", -8.0), j.value("x_max", 8.0),
                    j.value("n_cells", 256));
}

GridFunction parse_initial(const Json& j, const GridSpec& grid) {
    require_keys(j, {"kind", "center", "width", "mass", "convention", "path"},
                 "initial");
    std::string kind = j.value("kind", "smoothed_mass");
    if (kind == "zero") return GridFunction(grid, 0.0);
    if (kind == "csv") {
        std::string path = j.at("path").get<std::string>();
        return GridFunction::from_csv(grid, read_text_file(path));
    }
    if (kind != "smoothed_mass")
        throw std::invalid_argument("initial.kind must be smoothed_mass, csv or zero");
    std::string conv = j.value("convention", "from_left");
    if (conv != "from_left" && conv != "signed")
        throw std::invalid_argument("initial.convention must be from_left or signed");
    return smoothed_mass_cdf(grid, j.value("center", 0.0), j.value("width", 0.25),
                             j.value("mass", 1.0),
                             conv == "from_left" ? CdfConvention::FromLeft
                                                 : CdfConvention::SignedFromOrigin);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

void finish_manifest(const std::string& out_dir, const std::string& command,
                     const Json& config, std::vector<std::string> outputs,
                     const Json& diagnostics, double wall_seconds) {
    RunManifest m;
    m.command = command;
    m.config_hash = config_hash(config);
    m.seed = config.value("seed", 0ull);
    m.artifact_version = kArtifactVersion;
    m.outputs = std::move(outputs);
    m.wall_seconds = wall_seconds;
    m.diagnostics = diagnostics;
    write_manifest(out_dir, m);
}

std::string state_filename(int step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "state_%06d.csv", step);
    return buf;
}

std::shared_ptr<const RkhsKernel> squared_exponential_kernel(const GridSpec& grid,
                                                             int n_modes) {
    return std::make_shared<RkhsKernel>(
        [](double x, double y) { return std::exp(-(x - y) * (x - y)); }, grid,
        n_modes);
}

} // namespace

int cmd_solve(Json config, const std::string& out_dir) {
    require_keys(config,
                 {"seed", "stream", "grid", "dt", "n_steps", "save_every", "scheme",
                  "picard_iters", "kernel", "level", "initial", "include_laplacian",
                  "workers", "probes"},
                 "solve");
    Timer timer;
    GridSpec grid = parse_grid(config.at("grid"));
    GridFunction F = parse_initial(config.at("initial"), grid);

    SolverConfig sc;
    sc.grid = grid;
    sc.dt = config.value("dt", 1e-3);
    sc.n_steps = config.value("n_steps", 250);
    sc.save_every = config.value("save_every", 10);
    sc.picard_iters = config.value("picard_iters", 8);
    sc.include_laplacian = config.value("include_laplacian", true);
    sc.initial = F;
    std::string scheme = config.value("scheme", "mild-euler");
    if (scheme == "mild-euler") sc.scheme = Scheme::MildEuler;
    else if (scheme == "picard") sc.scheme = Scheme::Picard;
    else throw std::invalid_argument("scheme must be mild-euler or picard");

    std::string kernel_id = config.value("kernel", "sbm");
    Json level = config.value("level", Json::object());
    require_keys(level, {"da", "headroom", "n_levels", "n_modes"}, "level");
    if (kernel_id == "sbm") {
        LevelSpec band = sbm_level_band(F, sc.horizon(), level.value("headroom", 1.5),
                                        level.value("da", 0.02));
        sc.kernel = CoefficientKernel::sbm(band);
    } else if (kernel_id == "fv") {
        sc.kernel = CoefficientKernel::fv(level.value("n_levels", 64));
    } else if (kernel_id == "colored") {
        auto rk = squared_exponential_kernel(grid, level.value("n_modes", 16));
        sc.kernel = CoefficientKernel::colored(rk, 1.5);
    } else if (kernel_id == "none") {
        sc.kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    } else {
        throw std::invalid_argument("kernel must be sbm, fv, colored or none");
    }

    std::uint64_t seed = config.value("seed", 1ull);
    std::uint64_t stream = config.value("stream", 0ull);
    NoiseField noise = sample_noise(sc.n_steps, sc.dt, sc.kernel.level(), seed, stream);

    Trajectory traj = sc.scheme == Scheme::MildEuler
                          ? solve(sc, noise)
                          : solve_picard(sc, noise).trajectory;

    std::vector<std::string> outputs;
    for (size_t i = 0; i < traj.states.size(); ++i) {
        std::string name = state_filename(traj.saved_steps[i]);
        write_text_file((std::filesystem::path(out_dir) / name).string(),
                        traj.states[i].to_csv());
        outputs.push_back(name);
    }

    Json diag;
    diag["sup_norm0_sq"] = traj.sup_norm0_sq;
    diag["max_range_violation"] = traj.max_range_violation;
    diag["max_monotonicity_violation"] = traj.max_monotonicity_violation;
    diag["noise_hash"] = traj.noise_hash;
    diag["noise_manifest"] = {
        {"seed", noise.seed()},
        {"stream_id", noise.stream_id()},
        {"n_steps", noise.n_steps()},
        {"dt", noise.dt()},
        {"level", {{"kind", static_cast<int>(noise.level().kind)},
                   {"a_min", noise.level().a_min},
                   {"a_max", noise.level().a_max},
                   {"n_cells", noise.level().n_cells}}}};

    int exit_code = kExitPass;
    if (kernel_id == "none") {
        // Deterministic control: the final state must match the semigroup.
        GridFunction ref = apply_semigroup(F, sc.horizon());
        double err = 0.0;
        for (int i = 0; i < grid.n_points(); ++i)
            err = std::max(err, std::fabs(ref[i] - traj.final_state()[i]));
        diag["heat_control_sup_error"] = err;
        if (err > 5e-3) exit_code = kExitCheckFailed;
    }

    finish_manifest(out_dir, "solve", config, std::move(outputs), diag,
                    timer.seconds());
    return exit_code;
}

int cmd_particles(Json config, const std::string& out_dir) {
    require_keys(config,
                 {"seed", "stream", "system", "n_particles", "dt", "horizon",
                  "rate_factor", "snapshot_every", "initial", "workers", "probes"},
                 "particles");
    Timer timer;
    Json init = config.value("initial", Json::object());
    require_keys(init, {"center", "width"}, "initial");

    ParticleConfig pc;
    pc.n_init = config.value("n_particles", 2000);
    pc.initial_mass = 1.0;
    pc.rate_factor = config.value("rate_factor", 1.0);
    pc.dt = config.value("dt", 4e-5);
    pc.horizon = config.value("horizon", 0.25);
    pc.seed = config.value("seed", 1ull);
    pc.stream_id = config.value("stream", 0ull);
    pc.snapshot_every = config.value("snapshot_every", 250);

    auto cloud = initial_cloud(pc.n_init, init.value("center", 0.0),
                               init.value("width", 0.25));
    std::string system = config.value("system", "sbm");
    MeasurePath path;
    if (system == "sbm") path = simulate_sbm_particles(pc, cloud);
    else if (system == "fv") path = simulate_fv_particles(pc, cloud);
    else throw std::invalid_argument("system must be sbm or fv");

    std::vector<std::string> outputs;
    for (size_t i = 0; i < path.snapshots.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "snapshot_%04zu.csv", i);
        write_text_file((std::filesystem::path(out_dir) / buf).string(),
                        path.snapshots[i].to_csv());
        outputs.push_back(buf);
    }
    Json diag;
    diag["final_total_mass"] = path.snapshots.back().total_mass();
    diag["final_particles"] = path.snapshots.back().size();
    finish_manifest(out_dir, "particles", config, std::move(outputs), diag,
                    timer.seconds());
    return kExitPass;
}

namespace {

int verify_yw(const Json& config, const std::string& out_dir, const Timer& timer) {
    int k_max = config.value("k_max", 10);
    bool all_pass = true;
    Json rows = Json::array();
    for (int k = 1; k <= k_max; ++k) {
        YwFamily fam(k);
        double a_closed = std::exp(-0.5 * k * (k + 1));
        double a_err = std::fabs(yw_a(k) - a_closed);
        double mass_err = std::fabs(fam.psi_integral() - 1.0);
        // Scan phi'' bound and the |z| - phi envelope over the support and
        // beyond it.
        double worst_bound = 0.0, worst_env_low = 0.0, worst_env_high = 0.0;
        double R = fam.a_upper();
        for (int i = 0; i <= 20000; ++i) {
            double z = 1.5 * R * i / 20000.0;
            worst_bound = std::max(worst_bound, std::fabs(z) * fam.phi_second(z));
            double env = std::fabs(z) - fam.phi(z);
            worst_env_low = std::min(worst_env_low, env);
            worst_env_high = std::max(worst_env_high, env);
        }
        bool pass = a_err <= 1e-10 && mass_err <= 1e-6 &&
                    worst_bound <= 2.0 / k + 1e-9 && worst_env_low >= -1e-12 &&
                    worst_env_high <= R + 1e-12;
        all_pass = all_pass && pass;
        Json row;
        row["k"] = k;
        row["a_k"] = yw_a(k);
        row["a_closed_form_error"] = a_err;
        row["psi_mass_error"] = mass_err;
        row["sup_z_phi_second"] = worst_bound;
        row["bound_2_over_k"] = 2.0 / k;
        row["envelope_max"] = worst_env_high;
        row["a_upper"] = R;
        row["pass"] = pass;
        rows.push_back(row);
    }
    Json report;
    report["family"] = rows;
    report["pass"] = all_pass;
    write_text_file((std::filesystem::path(out_dir) / "yw_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "verify yw", config, {"yw_report.json"}, report,
                    timer.seconds());
    return all_pass ? kExitPass : kExitCheckFailed;
}

int verify_mp(const Json& config, const std::string& out_dir, const Timer& timer) {
    MpEnsembleConfig mc;
    std::string system = config.value("system", "sbm");
    mc.kind = system == "fv" ? MpKind::Fv : MpKind::Sbm;
    mc.n_replicas = config.value("n_replicas", 100);
    mc.n_particles = config.value("n_particles", system == "fv" ? 500 : 2000);
    mc.dt = config.value("dt", system == "fv" ? 2e-4 : 4e-5);
    mc.horizon = config.value("horizon", 0.25);
    mc.rate_factor = config.value("rate_factor", 1.0);
    mc.snapshot_every = config.value("snapshot_every", 50);
    mc.seed = config.value("seed", 42ull);
    mc.workers = config.value("workers", default_workers());
    Json band = config.value("band", Json::object());
    require_keys(band, {"lo", "hi"}, "band");
    double lo = band.value("lo", system == "fv" ? 0.85 : 0.9);
    double hi = band.value("hi", system == "fv" ? 1.15 : 1.1);

    MpEnsembleReport rep = mp_ensemble(mc);
    bool pass = rep.mean_ratio >= lo && rep.mean_ratio <= hi;
    Json report = rep.to_json();
    report["band"] = {{"lo", lo}, {"hi", hi}};
    report["pass"] = pass;
    write_text_file((std::filesystem::path(out_dir) / "mp_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "verify mp", config, {"mp_report.json"}, report,
                    timer.seconds());
    return pass ? kExitPass : kExitCheckFailed;
}

int verify_coupling(const Json& config, const std::string& out_dir,
                    const Timer& timer) {
    GridSpec grid = config.contains("grid") ? parse_grid(config.at("grid"))
                                            : GridSpec(-8.0, 8.0, 256);
    double dt = config.value("dt", 1e-3);
    int n_steps = config.value("n_steps", 250);
    double da = config.value("level_da", 0.15);
    int picard_iters = config.value("picard_iters", 8);
    double tol_rel = config.value("tolerance_rel", 0.05);
    std::uint64_t seed = config.value("seed", 42ull);
    std::uint64_t stream = config.value("stream", 0ull);

    GridFunction F = config.contains("initial")
                         ? parse_initial(config.at("initial"), grid)
                         : smoothed_mass_cdf(grid, 0.0, 0.25, 1.0,
                                             CdfConvention::FromLeft);
    double sup_f = 0.0;
    for (double v : F.values()) sup_f = std::max(sup_f, std::fabs(v));

    LevelSpec band = sbm_level_band(F, dt * n_steps, 1.5, da);
    NoiseField noise = sample_noise(n_steps, dt, band, seed, stream);

    SolverConfig sc;
    sc.grid = grid;
    sc.dt = dt;
    sc.n_steps = n_steps;
    sc.kernel = CoefficientKernel::sbm(band);
    sc.initial = F;
    sc.save_every = config.value("save_every", 10);

    Trajectory euler = solve(sc, noise);
    sc.scheme = Scheme::Picard;
    sc.picard_iters = picard_iters;
    PicardResult picard = solve_picard(sc, noise);

    double gap = coupling_gap(euler, picard.trajectory);
    double tol = tol_rel * sup_f;
    bool pass = gap <= tol;

    Json report;
    report["gap"] = gap;
    report["tolerance"] = tol;
    report["sup_initial"] = sup_f;
    report["picard_contraction"] = picard.contraction;
    report["contraction_warning"] = picard.contraction_warning;
    report["pass"] = pass;
    write_text_file((std::filesystem::path(out_dir) / "coupling_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "verify coupling", config, {"coupling_report.json"},
                    report, timer.seconds());
    return pass ? kExitPass : kExitCheckFailed;
}

std::vector<double> read_sample_csv(const std::string& path) {
    std::string text = read_text_file(path);
    std::vector<double> out;
    size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (header) {
            header = false;
            continue;
        }
        if (!line.empty()) out.push_back(std::stod(line));
    }
    return out;
}

int verify_law(const Json& config, const std::string& out_dir, const Timer& timer) {
    auto a = read_sample_csv(config.at("samples_a").get<std::string>());
    auto b = read_sample_csv(config.at("samples_b").get<std::string>());
    double alpha = config.value("alpha", 0.01);
    LawDistance d = law_distance(a, b);
    bool pass = d.ks.p_value > alpha;
    Json report;
    report["statistic"] = d.ks.statistic;
    report["p_value"] = d.ks.p_value;
    report["alpha"] = alpha;
    report["n_a"] = d.ks.n_a;
    report["n_b"] = d.ks.n_b;
    report["pass"] = pass;
    write_text_file((std::filesystem::path(out_dir) / "law_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "verify law", config, {"law_report.json"}, report,
                    timer.seconds());
    return pass ? kExitPass : kExitCheckFailed;
}

int verify_holder(const Json& config, const std::string& out_dir,
                  const Timer& timer) {
    GridSpec grid = config.contains("grid") ? parse_grid(config.at("grid"))
                                            : GridSpec(-8.0, 8.0, 256);
    double dt = config.value("dt", 1e-3);
    int n_steps = config.value("n_steps", 250);
    std::string kernel_id = config.value("kernel", "sbm");
    std::uint64_t seed = config.value("seed", 42ull);

    GridFunction F = config.contains("initial")
                         ? parse_initial(config.at("initial"), grid)
                         : smoothed_mass_cdf(grid, 0.0, 0.25, 1.0,
                                             CdfConvention::FromLeft);
    SolverConfig sc;
    sc.grid = grid;
    sc.dt = dt;
    sc.n_steps = n_steps;
    sc.initial = F;
    sc.save_every = config.value("save_every", 5);
    if (kernel_id == "sbm") {
        LevelSpec band = sbm_level_band(F, dt * n_steps, 1.5,
                                        config.value("level_da", 0.02));
        sc.kernel = CoefficientKernel::sbm(band);
    } else if (kernel_id == "none") {
        sc.kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    } else {
        throw std::invalid_argument("holder: kernel must be sbm or none");
    }
    NoiseField noise =
        sample_noise(sc.n_steps, sc.dt, sc.kernel.level(), seed, 0);
    Trajectory traj = solve(sc, noise);
    HolderReport rep = holder_modulus(traj);

    Json report;
    report["time_exponent"] = rep.time_exponent;
    report["time_defined"] = rep.time_defined;
    report["space_exponent"] = rep.space_exponent;
    report["space_defined"] = rep.space_defined;
    write_text_file((std::filesystem::path(out_dir) / "holder_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "verify holder", config, {"holder_report.json"}, report,
                    timer.seconds());
    return kExitPass;
}

} // namespace

int cmd_verify(const std::string& what, Json config, const std::string& out_dir) {
    Timer timer;
    if (what == "yw") {
        require_keys(config, {"seed", "k_max", "workers", "probes"}, "verify yw");
        return verify_yw(config, out_dir, timer);
    }
    if (what == "mp") {
        require_keys(config,
                     {"seed", "system", "n_replicas", "n_particles", "dt", "horizon",
                      "rate_factor", "snapshot_every", "band", "workers", "probes"},
                     "verify mp");
        return verify_mp(config, out_dir, timer);
    }
    if (what == "coupling") {
        require_keys(config,
                     {"seed", "stream", "grid", "dt", "n_steps", "level_da",
                      "picard_iters", "tolerance_rel", "save_every", "initial",
                      "workers", "probes"},
                     "verify coupling");
        return verify_coupling(config, out_dir, timer);
    }
    if (what == "law") {
        require_keys(config, {"seed", "samples_a", "samples_b", "alpha", "workers",
                               "probes"},
                     "verify law");
        return verify_law(config, out_dir, timer);
    }
    if (what == "holder") {
        require_keys(config,
                     {"seed", "grid", "dt", "n_steps", "kernel", "level_da",
                      "save_every", "initial", "workers", "probes"},
                     "verify holder");
        return verify_holder(config, out_dir, timer);
    }
    throw std::invalid_argument("verify: unknown check '" + what + "'");
}

namespace {

int bdsde_solve_cmd(const Json& config, const std::string& out_dir,
                    const Timer& timer) {
    std::string terminal_id = config.value("terminal", "x");
    std::string kernel_id = config.value("kernel", "none");
    int n_paths = config.value("n_paths", 10000);
    int n_steps = config.value("n_steps", 50);
    double horizon = config.value("horizon", 0.5);
    double y0 = config.value("y0", 0.0);
    int degree = config.value("basis_degree", 3);
    std::uint64_t seed = config.value("seed", 42ull);
    double dt = horizon / n_steps;

    std::function<double(double)> terminal;
    if (terminal_id == "x") terminal = [](double x) { return x; };
    else if (terminal_id == "x2") terminal = [](double x) { return x * x; };
    else throw std::invalid_argument("bdsde solve: terminal must be x or x2");

    CoefficientKernel kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    if (kernel_id == "fv")
        kernel = CoefficientKernel::fv(config.value("n_levels", 64));
    else if (kernel_id != "none")
        throw std::invalid_argument("bdsde solve: kernel must be none or fv");

    ForwardEnsemble forward = simulate_forward(0.0, y0, dt, n_steps, n_paths, seed, 1);
    NoiseField tilde = sample_noise(n_steps, dt, kernel.level(), seed, 2);
    BdsdeConfig bc;
    bc.basis_degree = degree;
    BdsdeSolution sol = solve_bdsde(terminal, kernel, tilde, forward, bc);

    Json report;
    report["n_paths"] = n_paths;
    report["n_steps"] = n_steps;
    report["expected_int_z2"] = sol.expected_int_z2;

    int exit_code = kExitPass;
    if (kernel_id == "none") {
        // Closed forms: terminal x gives (Y, Z) = (X, 1); x^2 gives
        // (X^2 + (T - s), 2X).
        double y_err = 0.0, y_ref = 0.0, z_err = 0.0, z_ref = 0.0;
        for (int p = 0; p < n_paths; ++p)
            for (int s = 0; s < n_steps; ++s) {
                double x = forward.position(p, s);
                double ty = terminal_id == "x" ? x : x * x + (horizon - s * dt);
                double tz = terminal_id == "x" ? 1.0 : 2.0 * x;
                y_err += (sol.y_at(p, s) - ty) * (sol.y_at(p, s) - ty);
                y_ref += ty * ty;
                z_err += (sol.z_at(p, s) - tz) * (sol.z_at(p, s) - tz);
                z_ref += tz * tz;
            }
        double y_rel = std::sqrt(y_err / std::max(y_ref, 1e-300));
        double z_rel = std::sqrt(z_err / std::max(z_ref, 1e-300));
        report["y_rms_relative_error"] = y_rel;
        report["z_rms_relative_error"] = z_rel;
        double tol = config.value("tolerance", 0.02);
        report["tolerance"] = tol;
        bool pass = y_rel <= tol && z_rel <= tol;
        report["pass"] = pass;
        if (!pass) exit_code = kExitCheckFailed;
    }
    write_text_file((std::filesystem::path(out_dir) / "bdsde_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "bdsde solve", config, {"bdsde_report.json"}, report,
                    timer.seconds());
    return exit_code;
}

int bdsde_ipp_cmd(const Json& config, const std::string& out_dir,
                  const Timer& timer) {
    std::string f_id = config.value("f", "x2");
    int n_paths = config.value("n_paths", 1000);
    int n_steps = config.value("n_steps", 250);
    double horizon = config.value("horizon", 0.25);
    double alpha_const = config.value("alpha_const", 1.0);
    double z_const = config.value("z_const", 0.0);
    std::uint64_t seed = config.value("seed", 42ull);
    double dt = horizon / n_steps;

    std::function<double(double)> f, df, d2f;
    if (f_id == "x") {
        f = [](double x) { return x; };
        df = [](double) { return 1.0; };
        d2f = [](double) { return 0.0; };
    } else if (f_id == "x2") {
        f = [](double x) { return x * x; };
        df = [](double x) { return 2.0 * x; };
        d2f = [](double) { return 2.0; };
    } else {
        throw std::invalid_argument("bdsde ipp: f must be x or x2");
    }

    ForwardEnsemble forward = simulate_forward(0.0, 0.0, dt, n_steps, n_paths, seed, 1);
    std::vector<double> xi(n_paths);
    for (int p = 0; p < n_paths; ++p) xi[p] = forward.position(p, n_steps);

    IppResidual res = ipp_residual(
        xi, [&](int, int) { return alpha_const; },
        [&](int, int) { return z_const; }, LevelSpec::unit_interval(1), seed, 2,
        forward, f, df, d2f, 0);

    double tol = config.value("max_relative", 0.03);
    bool pass = res.relative() <= tol;
    Json report;
    report["rms"] = res.rms;
    report["scale"] = res.scale;
    report["relative"] = res.relative();
    report["max_relative"] = tol;
    report["pass"] = pass;
    write_text_file((std::filesystem::path(out_dir) / "ipp_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "bdsde ipp", config, {"ipp_report.json"}, report,
                    timer.seconds());
    return pass ? kExitPass : kExitCheckFailed;
}

int bdsde_represent_cmd(const Json& config, const std::string& out_dir,
                        const Timer& timer) {
    GridSpec grid = config.contains("grid") ? parse_grid(config.at("grid"))
                                            : GridSpec(-8.0, 8.0, 256);
    double dt = config.value("dt", 1e-3);
    int n_steps = config.value("n_steps", 250);
    std::string kernel_id = config.value("kernel", "fv");
    std::uint64_t seed = config.value("seed", 42ull);

    GridFunction F = config.contains("initial")
                         ? parse_initial(config.at("initial"), grid)
                         : smoothed_mass_cdf(grid, 0.0, 0.5, 1.0,
                                             CdfConvention::FromLeft);
    CoefficientKernel kernel = CoefficientKernel::zero(LevelSpec::unit_interval(1));
    if (kernel_id == "fv")
        kernel = CoefficientKernel::fv(config.value("n_levels", 64));
    else if (kernel_id != "none")
        throw std::invalid_argument("bdsde represent: kernel must be fv or none");

    SolverConfig sc;
    sc.grid = grid;
    sc.dt = dt;
    sc.n_steps = n_steps;
    sc.kernel = kernel;
    sc.initial = F;
    sc.save_every = 1;
    NoiseField noise = sample_noise(n_steps, dt, kernel.level(), seed, 3);
    Trajectory traj = solve(sc, noise);

    RepresentationConfig rc;
    rc.t = config.value("t", 0.1);
    rc.y = config.value("y", 0.0);
    rc.n_paths = config.value("n_paths", 10000);
    rc.seed = seed;
    rc.stream_id = 7777;
    RepresentationReport rep = check_representation(traj, F, kernel, noise, rc);

    Json report;
    report["residual_mean"] = rep.residual_mean;
    report["residual_rms"] = rep.residual_rms;
    report["terminal_scale"] = rep.terminal_scale;
    report["relative_residual"] = rep.relative_residual();
    report["candidate_value"] = rep.candidate_value;
    report["feynman_kac_gap"] = rep.feynman_kac_gap;
    report["x1_integral"] = rep.x1_integral;

    bool pass;
    if (kernel_id == "none") {
        double tol = config.value("max_relative", 0.01);
        pass = rep.feynman_kac_gap <= tol * std::max(rep.terminal_scale, 1e-300);
        report["max_relative"] = tol;
    } else {
        double tol = config.value("max_relative", 0.05);
        pass = rep.relative_residual() <= tol;
        report["max_relative"] = tol;
    }
    report["pass"] = pass;
    write_text_file((std::filesystem::path(out_dir) / "represent_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "bdsde represent", config, {"represent_report.json"},
                    report, timer.seconds());
    return pass ? kExitPass : kExitCheckFailed;
}

} // namespace

int cmd_bdsde(const std::string& what, Json config, const std::string& out_dir) {
    Timer timer;
    if (what == "solve") {
        require_keys(config,
                     {"seed", "terminal", "kernel", "n_paths", "n_steps", "horizon",
                      "y0", "basis_degree", "n_levels", "tolerance", "workers",
                      "probes"},
                     "bdsde solve");
        return bdsde_solve_cmd(config, out_dir, timer);
    }
    if (what == "ipp") {
        require_keys(config,
                     {"seed", "f", "n_paths", "n_steps", "horizon", "alpha_const",
                      "z_const", "max_relative", "workers", "probes"},
                     "bdsde ipp");
        return bdsde_ipp_cmd(config, out_dir, timer);
    }
    if (what == "represent") {
        require_keys(config,
                     {"seed", "grid", "dt", "n_steps", "kernel", "n_levels",
                      "initial", "t", "y", "n_paths", "max_relative", "workers",
                      "probes"},
                     "bdsde represent");
        return bdsde_represent_cmd(config, out_dir, timer);
    }
    throw std::invalid_argument("bdsde: unknown mode '" + what + "'");
}

int cmd_compare(Json config, const std::string& out_dir) {
    require_keys(config,
                 {"seed", "system", "grid", "t_probe", "probes", "n_replicas",
                  "n_particles", "particle_dt", "solver_dt", "level_da", "n_levels",
                  "rate_factor", "alpha", "workers", "initial"},
                 "compare");
    Timer timer;
    CompareConfig cc;
    std::string system = config.value("system", "sbm");
    if (system == "fv") cc.system = MpKind::Fv;
    else if (system != "sbm")
        throw std::invalid_argument("compare: system must be sbm or fv");
    cc.fv_n_levels = config.value("n_levels", 64);
    if (config.contains("grid")) cc.grid = parse_grid(config.at("grid"));
    cc.t_probe = config.value("t_probe", 0.1);
    if (config.contains("probes"))
        cc.probes = config.at("probes").get<std::vector<double>>();
    cc.n_replicas = config.value("n_replicas", 200);
    cc.n_particles = config.value("n_particles", 2000);
    cc.particle_dt = config.value("particle_dt", 4e-5);
    cc.solver_dt = config.value("solver_dt", 1e-3);
    cc.level_da = config.value("level_da", 0.02);
    cc.rate_factor = config.value("rate_factor", 1.0);
    cc.alpha = config.value("alpha", 0.01);
    cc.seed = config.value("seed", 42ull);
    cc.workers = config.value("workers", default_workers());
    if (config.contains("initial")) {
        Json init = config.at("initial");
        require_keys(init, {"center", "width"}, "initial");
        cc.initial_center = init.value("center", 0.0);
        cc.initial_width = init.value("width", 0.25);
    }

    CompareReport rep = compare_pipeline(cc);
    Json report = rep.to_json();
    write_text_file((std::filesystem::path(out_dir) / "compare_report.json").string(),
                    report.dump(2) + "\n");
    finish_manifest(out_dir, "compare", config, {"compare_report.json"}, report,
                    timer.seconds());
    return rep.pass ? kExitPass : kExitCheckFailed;
}

} // namespace spdelab
