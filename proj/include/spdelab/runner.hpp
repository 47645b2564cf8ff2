#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spdelab/bdsde.hpp"
#include "spdelab/io.hpp"
#include "spdelab/particles.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/verify.hpp"

namespace spdelab {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Exit codes shared by every subcommand: pass / operational error /
/// verification failure, never conflated.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// Runs fn(0), ..., fn(n-1) on a bounded pool of worker threads.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

/// SPDE_LAB_WORKERS environment variable, defaulting to 2.
int default_workers();

/// CDF of mass * N(center, width^2) sampled on the grid, in either
/// distribution-function convention.
GridFunction smoothed_mass_cdf(const GridSpec& grid, double center, double width,
                               double mass, CdfConvention convention);

// ---------------------------------------------------------------------
// Canonical experiments (used by the CLI, the tests and the acceptance
// suite, so tolerances and stream allocation live in one place).
// ---------------------------------------------------------------------

struct CompareConfig {
    MpKind system = MpKind::Sbm;
    GridSpec grid{-8.0, 8.0, 256};
    double t_probe = 0.1;
    std::vector<double> probes{-1.0, 0.0, 1.0};
    int n_replicas = 200;
    int n_particles = 2000;
    double particle_dt = 4e-5;
    double solver_dt = 1e-3;
    int fv_n_levels = 64;     // level cells of the resampling kernel
    // The tail probe carries only a few percent of the mass; the level cells
    // must stay well below that so the fractional-cell read does not
    // suppress the tail variance (the read has variance dt u^2/da once
    // u < da). The initial spread keeps ~100 particles left of the tail
    // probe so its law is effectively continuous on both sides.
    double level_da = 0.002;
    double rate_factor = 1.0; // branch-rate multiplier; 2 is the negative control
    double initial_center = 0.0;
    double initial_width = 0.5;
    double alpha = 0.01;      // Bonferroni budget across probes
    double mp_band_lo = 0.85;
    double mp_band_hi = 1.15;
    std::uint64_t seed = 42;
    int workers = 2;
    int mp_snapshot_every = 50;
};

struct CompareReport {
    std::vector<double> p_values;
    double min_p = 1.0;
    double threshold = 0.0;
    bool ks_pass = false;
    double mp_ratio_mean = 0.0;
    bool mp_pass = false;
    double max_range_violation = 0.0;        // over the solver replicas
    double max_monotonicity_violation = 0.0;
    bool structure_pass = true;              // violations <= 0.02 (FV side)
    bool pass = false;
    Json to_json() const;
};

/// Particle ensemble vs SPDE solver ensemble for the chosen system
/// (branching Brownian / super-Brownian, or Moran / Fleming-Viot):
/// two-sample KS at the probe points, the martingale-problem verdict on the
/// particle side, and for FV the solver's range/monotonicity diagnostics.
/// The distribution functions are compared in the from-left convention,
/// which keeps every probe non-degenerate.
CompareReport compare_pipeline(const CompareConfig& config);

struct MpEnsembleConfig {
    MpKind kind = MpKind::Sbm;
    int n_replicas = 100;
    int n_particles = 2000;
    double dt = 4e-5;
    double horizon = 0.25;
    double rate_factor = 1.0;
    double bump_center = 0.0;
    double bump_width = 1.0;
    double initial_center = 0.0;
    double initial_width = 0.25;
    std::uint64_t seed = 42;
    int workers = 2;
    int snapshot_every = 50;
};

struct MpEnsembleReport {
    std::vector<double> ratios;
    double mean_ratio = 0.0;
    double mean_z = 0.0;
    Json to_json() const;
};

/// Martingale-problem quadratic-variation ratios over particle replicas.
MpEnsembleReport mp_ensemble(const MpEnsembleConfig& config);

// ---------------------------------------------------------------------
// CLI subcommands. Each takes the parsed config (strict schema: unknown
// keys are errors), writes its artifacts plus manifest.json into out_dir,
// and returns the exit code.
// ---------------------------------------------------------------------

int cmd_solve(Json config, const std::string& out_dir);
int cmd_particles(Json config, const std::string& out_dir);
int cmd_verify(const std::string& what, Json config, const std::string& out_dir);
int cmd_bdsde(const std::string& what, Json config, const std::string& out_dir);
int cmd_compare(Json config, const std::string& out_dir);

} // namespace spdelab
