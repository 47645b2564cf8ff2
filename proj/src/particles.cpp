#include "spdelab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "spdelab/rng.hpp"

namespace spdelab {

double AtomicMeasure::total_mass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
}

std::string AtomicMeasure::to_csv() const {
    std::string out = "position,mass\n";
    char buf[80];
    for (size_t i = 0; i < positions.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", positions[i], masses[i]);
        out += buf;
    }
    return out;
}

void ParticleConfig::validate_sbm() const {
    if (n_init < 1) throw std::invalid_argument("ParticleConfig: n_init >= 1");
    if (!(dt > 0.0) || !(horizon > 0.0) || !(rate_factor > 0.0))
        throw std::invalid_argument("ParticleConfig: rates and steps must be positive");
    double event_prob = rate_factor / particle_mass() * dt;
    if (event_prob >= 0.1)
        throw std::invalid_argument(
            "ParticleConfig: branching probability per step per particle is " +
            std::to_string(event_prob) + "; shrink dt below 0.1/rate");
}

void ParticleConfig::validate_fv() const {
    if (n_init < 2) throw std::invalid_argument("ParticleConfig: FV needs N >= 2");
    if (!(dt > 0.0) || !(horizon > 0.0) || !(rate_factor > 0.0))
        throw std::invalid_argument("ParticleConfig: rates and steps must be positive");
    double event_prob = rate_factor * (n_init - 1) * dt;
    if (event_prob >= 0.1)
        throw std::invalid_argument(
            "ParticleConfig: resampling probability per step per particle is " +
            std::to_string(event_prob) + "; shrink dt below 0.1/((N-1) rate)");
}

namespace {

AtomicMeasure snapshot_of(const std::vector<double>& pos, double mass, double time) {
    AtomicMeasure m;
    m.positions = pos;
    m.masses.assign(pos.size(), mass);
    m.time = time;
    return m;
}

} // namespace

MeasurePath simulate_sbm_particles(const ParticleConfig& config,
                                   const std::vector<double>& initial_positions) {
    config.validate_sbm();
    if (static_cast<int>(initial_positions.size()) != config.n_init)
        throw std::invalid_argument("simulate_sbm_particles: initial positions size");

    const double mass = config.particle_mass();
    const double branch_rate = config.rate_factor / mass;
    const double branch_prob = branch_rate * config.dt;
    const double sqrt_dt = std::sqrt(config.dt);
    const int n_steps = static_cast<int>(std::llround(config.horizon / config.dt));
    const size_t cap = static_cast<size_t>(config.population_cap_factor * config.n_init);

    CounterRng rng(config.seed, config.stream_id);
    std::vector<double> pos = initial_positions;
    // Unique ids address the counter RNG so that trajectories do not depend
    // on container order after splits/removals.
    std::vector<std::uint64_t> ids(pos.size());
    for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    std::uint64_t next_id = ids.size();

    MeasurePath path;
    path.dt_snapshot = config.dt * config.snapshot_every;
    path.seed = config.seed;
    path.stream_id = config.stream_id;
    path.snapshots.push_back(snapshot_of(pos, mass, 0.0));

    std::vector<double> new_pos;
    std::vector<std::uint64_t> new_ids;
    for (int step = 1; step <= n_steps; ++step) {
        for (size_t i = 0; i < pos.size(); ++i)
            pos[i] += sqrt_dt * rng.normal(step, 2 * ids[i]);
        // Branch decisions after the move; newborns join from the next step.
        new_pos.clear();
        new_ids.clear();
        for (size_t i = 0; i < pos.size(); ++i) {
            double u = rng.uniform(step, 2 * ids[i] + 1);
            if (u < branch_prob) {
                if (u < 0.5 * branch_prob) continue; // death
                new_pos.push_back(pos[i]);           // split into two
                new_ids.push_back(ids[i]);
                new_pos.push_back(pos[i]);
                new_ids.push_back(next_id++);
            } else {
                new_pos.push_back(pos[i]);
                new_ids.push_back(ids[i]);
            }
        }
        pos.swap(new_pos);
        ids.swap(new_ids);
        if (pos.size() > cap)
            throw std::runtime_error("simulate_sbm_particles: population " +
                                     std::to_string(pos.size()) +
                                     " exceeded the configured cap");
        if (step % config.snapshot_every == 0 || step == n_steps)
            path.snapshots.push_back(snapshot_of(pos, mass, step * config.dt));
    }
    return path;
}

MeasurePath simulate_fv_particles(const ParticleConfig& config,
                                  const std::vector<double>& initial_positions) {
    config.validate_fv();
    if (static_cast<int>(initial_positions.size()) != config.n_init)
        throw std::invalid_argument("simulate_fv_particles: initial positions size");

    const int n = config.n_init;
    const double mass = config.initial_mass / n;
    const double pair_rate = config.rate_factor;
    const double total_rate = pair_rate * 0.5 * n * (n - 1);
    const double sqrt_dt = std::sqrt(config.dt);
    const int n_steps = static_cast<int>(std::llround(config.horizon / config.dt));

    CounterRng rng(config.seed, config.stream_id);
    std::vector<double> pos = initial_positions;

    MeasurePath path;
    path.dt_snapshot = config.dt * config.snapshot_every;
    path.seed = config.seed;
    path.stream_id = config.stream_id;
    path.snapshots.push_back(snapshot_of(pos, mass, 0.0));

    for (int step = 1; step <= n_steps; ++step) {
        for (int i = 0; i < n; ++i)
            pos[i] += sqrt_dt * rng.normal(step, static_cast<std::uint64_t>(i));
        // Resampling events this step: Poisson count of pair clocks ringing,
        // each event copies one uniformly chosen particle onto another.
        SequentialRng ev = rng.sequence(step, 0x45564E54ull);
        int n_events = ev.poisson(total_rate * config.dt);
        for (int e = 0; e < n_events; ++e) {
            int i = static_cast<int>(ev.uniform() * n);
            int j = static_cast<int>(ev.uniform() * (n - 1));
            if (j >= i) ++j;
            pos[j] = pos[i]; // j dies, i reproduces
        }
        if (step % config.snapshot_every == 0 || step == n_steps)
            path.snapshots.push_back(snapshot_of(pos, mass, step * config.dt));
    }
    return path;
}

std::vector<double> quantile_positions(const GridFunction& cdf, int n) {
    if (n < 1) throw std::invalid_argument("quantile_positions: n >= 1");
    double lo = cdf.values().front(), hi = cdf.values().back();
    std::vector<double> pos(n);
    for (int i = 0; i < n; ++i) {
        double a = lo + (hi - lo) * (i + 0.5) / n;
        pos[i] = generalized_inverse(cdf, a);
    }
    return pos;
}

GridFunction empirical_cdf(const AtomicMeasure& m, const GridSpec& grid,
                           CdfConvention convention) {
    const int n_pts = grid.n_points();
    std::vector<double> u(n_pts, 0.0);
    if (convention == CdfConvention::FromLeft) {
        for (size_t k = 0; k < m.size(); ++k) {
            double x = m.positions[k];
            // smallest grid index with point >= x
            int i = static_cast<int>(std::ceil((x - grid.x_min) / grid.dx() - 1e-12));
            i = std::max(i, 0);
            for (int j = std::max(i, 0); j < n_pts; ++j) u[j] += m.masses[k];
        }
        return GridFunction(grid, std::move(u));
    }
    // Signed convention: u(y) = mass((0, y]) for y >= 0, -mass((y, 0]) for y < 0.
    for (size_t k = 0; k < m.size(); ++k) {
        double x = m.positions[k];
        double w = m.masses[k];
        if (x > 0.0) {
            // contributes to u(y) for grid points y >= x
            int i = static_cast<int>(std::ceil((x - grid.x_min) / grid.dx() - 1e-12));
            for (int j = std::max(i, 0); j < n_pts; ++j) u[j] += w;
        } else {
            // atom at x <= 0 contributes -w to u(y) for y < x (strictly), since
            // the atom lies in (y, 0] exactly when y < x.
            int i = static_cast<int>(std::floor((x - grid.x_min) / grid.dx() + 1e-12));
            // grid points strictly below x: indices 0 .. i-1 when point(i) == x,
            // else 0 .. i
            double xi = grid.point(std::clamp(i, 0, n_pts - 1));
            int last = (std::fabs(xi - x) < 1e-12 * std::max(1.0, std::fabs(x))) ? i - 1 : i;
            for (int j = 0; j <= std::min(last, n_pts - 1); ++j) u[j] -= w;
        }
    }
    return GridFunction(grid, std::move(u));
}

double generalized_inverse(const GridFunction& u, double a) {
    const auto& v = u.values();
    const GridSpec& spec = u.spec();
    for (size_t i = 0; i + 1 < v.size(); ++i)
        if (v[i + 1] < v[i] - 1e-12)
            throw std::invalid_argument("generalized_inverse: input not nondecreasing");
    if (a <= v.front()) return spec.x_min;
    if (a > v.back()) return spec.x_max;
    // sup{x : u(x) < a}: find the last index with u < a, interpolate toward
    // the first index with u >= a.
    size_t last_below = 0;
    for (size_t i = 0; i < v.size(); ++i)
        if (v[i] < a) last_below = i;
    size_t next = last_below + 1;
    if (next >= v.size()) return spec.x_max;
    double lo = v[last_below], hi = v[next];
    if (hi <= lo) return spec.point(static_cast<int>(next));
    double frac = (a - lo) / (hi - lo);
    return spec.point(static_cast<int>(last_below)) + frac * spec.dx();
}

} // namespace spdelab
