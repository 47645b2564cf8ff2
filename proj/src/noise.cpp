#include "spdelab/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "spdelab/linalg.hpp"

namespace spdelab {

LevelSpec LevelSpec::interval(double a_min, double a_max, int n_levels) {
    if (!(a_min < a_max)) throw std::invalid_argument("LevelSpec: a_min must be < a_max");
    if (n_levels < 1) throw std::invalid_argument("LevelSpec: need >= 1 level");
    LevelSpec s;
    s.kind = LevelKind::Interval;
    s.a_min = a_min;
    s.a_max = a_max;
    s.n_cells = n_levels;
    return s;
}

LevelSpec LevelSpec::unit_interval(int n_levels) {
    LevelSpec s = interval(0.0, 1.0, n_levels);
    s.kind = LevelKind::UnitInterval;
    return s;
}

LevelSpec LevelSpec::index_set(int n_modes) {
    if (n_modes < 1) throw std::invalid_argument("LevelSpec: need >= 1 mode");
    LevelSpec s;
    s.kind = LevelKind::IndexSet;
    s.a_min = 0.0;
    s.a_max = static_cast<double>(n_modes);
    s.n_cells = n_modes;
    return s;
}

NoiseField sample_noise(int n_steps, double dt, const LevelSpec& level,
                        std::uint64_t seed, std::uint64_t stream_id) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_noise: dt must be > 0");
    if (level.n_cells < 1) throw std::invalid_argument("sample_noise: zero cells");
    if (n_steps < 1) throw std::invalid_argument("sample_noise: need >= 1 step");
    NoiseField f;
    f.n_steps_ = n_steps;
    f.dt_ = dt;
    f.level_ = level;
    f.seed_ = seed;
    f.stream_id_ = stream_id;
    f.increments_.resize(static_cast<size_t>(n_steps) * level.n_cells);
    const CounterRng rng(seed, stream_id);
    const double sigma = std::sqrt(dt * level.cell_measure());
    for (int s = 0; s < n_steps; ++s)
        for (int c = 0; c < level.n_cells; ++c)
            f.increments_[static_cast<size_t>(s) * level.n_cells + c] =
                sigma * rng.normal(static_cast<std::uint64_t>(s),
                                   static_cast<std::uint64_t>(c));
    return f;
}

std::uint64_t NoiseField::manifest_hash() const {
    std::uint64_t h = mix64(seed_);
    h = mix64(h ^ stream_id_);
    h = mix64(h ^ static_cast<std::uint64_t>(n_steps_));
    h = mix64(h ^ static_cast<std::uint64_t>(level_.n_cells));
    h = mix64(h ^ static_cast<std::uint64_t>(level_.kind));
    auto bits = [](double x) {
        std::uint64_t u;
        static_assert(sizeof(u) == sizeof(x));
        __builtin_memcpy(&u, &x, sizeof(u));
        return u;
    };
    h = mix64(h ^ bits(dt_));
    h = mix64(h ^ bits(level_.a_min));
    h = mix64(h ^ bits(level_.a_max));
    h = mix64(h ^ (reversed_ ? 0x52455645525345ull : 0ull));
    return h;
}

NoiseField NoiseField::time_reversed() const {
    NoiseField out = *this;
    out.reversed_ = !reversed_;
    const int nc = level_.n_cells;
    for (int s = 0; s < n_steps_; ++s)
        for (int c = 0; c < nc; ++c)
            out.increments_[static_cast<size_t>(s) * nc + c] =
                increments_[static_cast<size_t>(n_steps_ - 1 - s) * nc + c];
    return out;
}

LevelBasis haar_basis(const LevelSpec& level, int n_modes) {
    if (level.kind == LevelKind::IndexSet)
        throw std::invalid_argument("haar_basis: needs an interval level space");
    if (n_modes < 1 || n_modes > level.n_cells)
        throw std::invalid_argument("haar_basis: n_modes out of range");
    const int nc = level.n_cells;
    const double len = level.a_max - level.a_min;
    LevelBasis basis;
    basis.emplace_back(nc, 1.0 / std::sqrt(len)); // h_1 = constant
    // Haar wavelets indexed by scale 2^s and shift.
    for (int s = 0; static_cast<int>(basis.size()) < n_modes; ++s) {
        int blocks = 1 << s;
        for (int b = 0; b < blocks && static_cast<int>(basis.size()) < n_modes; ++b) {
            std::vector<double> h(nc, 0.0);
            double amp = std::sqrt(static_cast<double>(blocks) / len);
            for (int c = 0; c < nc; ++c) {
                double u = (c + 0.5) / nc; // relative position in [0,1]
                double lo = static_cast<double>(b) / blocks;
                double mid = (b + 0.5) / blocks;
                double hi = static_cast<double>(b + 1) / blocks;
                if (u >= lo && u < mid) h[c] = amp;
                else if (u >= mid && u < hi) h[c] = -amp;
            }
            basis.push_back(std::move(h));
        }
    }
    return basis;
}

std::vector<std::vector<double>> cons_brownian_increments(const NoiseField& noise,
                                                          const LevelBasis& basis) {
    const LevelSpec& level = noise.level();
    const int nc = level.n_cells;
    const int nmodes = static_cast<int>(basis.size());
    for (const auto& h : basis)
        if (static_cast<int>(h.size()) != nc)
            throw std::invalid_argument("cons_brownian_increments: basis size mismatch");
    // Gram check: <h_i, h_j>_lambda = delta_ij.
    const double meas = level.cell_measure();
    for (int i = 0; i < nmodes; ++i)
        for (int j = i; j < nmodes; ++j) {
            double g = 0.0;
            for (int c = 0; c < nc; ++c) g += basis[i][c] * basis[j][c] * meas;
            double target = (i == j) ? 1.0 : 0.0;
            if (std::fabs(g - target) > 1e-8)
                throw std::invalid_argument(
                    "cons_brownian_increments: basis is not orthonormal");
        }
    std::vector<std::vector<double>> db(nmodes,
                                        std::vector<double>(noise.n_steps(), 0.0));
    for (int j = 0; j < nmodes; ++j)
        for (int s = 0; s < noise.n_steps(); ++s) {
            double sum = 0.0;
            for (int c = 0; c < nc; ++c) sum += basis[j][c] * noise.increment(s, c);
            db[j][s] = sum;
        }
    return db;
}

RkhsKernel::RkhsKernel(std::function<double(double, double)> phi,
                       const GridSpec& grid, int n_modes)
    : phi_(std::move(phi)), grid_(grid) {
    const int n = grid.n_points();
    if (n_modes < 1 || n_modes > n)
        throw std::invalid_argument("RkhsKernel: n_modes out of range");
    std::vector<double> cov(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double v = phi_(grid.point(i), grid.point(j));
            cov[static_cast<size_t>(i) * n + j] = v;
            cov[static_cast<size_t>(j) * n + i] = v;
        }
        if (phi_(grid.point(i), grid.point(i)) < 0.0)
            throw std::invalid_argument("RkhsKernel: phi(x,x) must be >= 0");
    }
    std::vector<double> evals, evecs;
    jacobi_eigen_sym(std::move(cov), n, evals, evecs);
    modes_.resize(n_modes);
    for (int j = 0; j < n_modes; ++j) {
        double lam = std::max(evals[j], 0.0);
        double s = std::sqrt(lam);
        modes_[j].resize(n);
        for (int i = 0; i < n; ++i)
            modes_[j][i] = s * evecs[static_cast<size_t>(i) * n + j];
    }
}

double RkhsKernel::truncation_error() const {
    double worst = 0.0;
    for (int i = 0; i < grid_.n_points(); ++i) {
        double sum = 0.0;
        for (const auto& m : modes_) sum += m[i] * m[i];
        worst = std::max(worst, std::fabs(phi_(grid_.point(i), grid_.point(i)) - sum));
    }
    return worst;
}

GridFunction colored_increment(const RkhsKernel& kernel, const NoiseField& noise,
                               int step) {
    if (noise.level().kind != LevelKind::IndexSet)
        throw std::invalid_argument("colored_increment: noise must be index-kind");
    if (noise.level().n_cells != kernel.n_modes())
        throw std::invalid_argument("colored_increment: mode-count mismatch");
    const int n = kernel.grid().n_points();
    std::vector<double> field(n, 0.0);
    for (int j = 0; j < kernel.n_modes(); ++j) {
        double xi = noise.increment(step, j);
        for (int i = 0; i < n; ++i) field[i] += kernel.mode(j, i) * xi;
    }
    return GridFunction(kernel.grid(), std::move(field));
}

} // namespace spdelab
