#include "spdelab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spdelab {

double g_sbm(double a, double /*y*/, double u) {
    if (u >= 0.0) return (a >= 0.0 && a <= u) ? 1.0 : 0.0;
    return (a >= u && a <= 0.0) ? 1.0 : 0.0;
}

double g_fv(double a, double /*y*/, double u) { return (a <= u ? 1.0 : 0.0) - u; }

double g_colored(const RkhsKernel& kernel, int mode, int y_index, double u) {
    return kernel.mode(mode, y_index) * std::sqrt(std::max(u, 0.0));
}

CoefficientKernel::CoefficientKernel(KernelId id, LevelSpec level, double holder_k,
                                     std::shared_ptr<const RkhsKernel> rkhs)
    : id_(id), level_(level), holder_k_(holder_k), rkhs_(std::move(rkhs)) {}

CoefficientKernel CoefficientKernel::sbm(const LevelSpec& level, double holder_k) {
    if (level.kind != LevelKind::Interval)
        throw std::invalid_argument("CoefficientKernel::sbm: needs an interval level");
    return CoefficientKernel(KernelId::Sbm, level, holder_k, nullptr);
}

CoefficientKernel CoefficientKernel::fv(int n_levels, double holder_k) {
    return CoefficientKernel(KernelId::Fv, LevelSpec::unit_interval(n_levels),
                             holder_k, nullptr);
}

CoefficientKernel CoefficientKernel::colored(
    std::shared_ptr<const RkhsKernel> kernel, double holder_k) {
    if (!kernel) throw std::invalid_argument("CoefficientKernel::colored: null kernel");
    LevelSpec level = LevelSpec::index_set(kernel->n_modes());
    return CoefficientKernel(KernelId::Colored, level, holder_k, std::move(kernel));
}

CoefficientKernel CoefficientKernel::zero(const LevelSpec& level) {
    return CoefficientKernel(KernelId::Zero, level, 1.0, nullptr);
}

double CoefficientKernel::evaluate(double a, int y_index, double y, double u) const {
    switch (id_) {
        case KernelId::Sbm: return g_sbm(a, y, u);
        case KernelId::Fv: return g_fv(a, y, u);
        case KernelId::Colored: {
            int mode = static_cast<int>(a);
            return g_colored(*rkhs_, mode, y_index, u);
        }
        case KernelId::Zero: return 0.0;
    }
    return 0.0;
}

CoefficientKernel::StepContext CoefficientKernel::step_context(
    const NoiseField& noise, int step) const {
    if (!(noise.level() == level_))
        throw std::invalid_argument("CoefficientKernel: noise level spec mismatch");
    StepContext ctx;
    if (id_ == KernelId::Zero) return ctx;
    if (id_ == KernelId::Colored) {
        ctx.colored.assign(rkhs_->grid().n_points(), 0.0);
        for (int j = 0; j < rkhs_->n_modes(); ++j) {
            double xi = noise.increment(step, j);
            for (int i = 0; i < rkhs_->grid().n_points(); ++i)
                ctx.colored[i] += rkhs_->mode(j, i) * xi;
        }
        return ctx;
    }
    const int nc = level_.n_cells;
    ctx.prefix.resize(nc + 1);
    ctx.prefix[0] = 0.0;
    for (int c = 0; c < nc; ++c)
        ctx.prefix[c + 1] = ctx.prefix[c] + noise.increment(step, c);
    ctx.total = ctx.prefix[nc];
    return ctx;
}

double CoefficientKernel::prefix_at(const StepContext& ctx, double a) const {
    const double da = level_.da();
    double s = (a - level_.a_min) / da;
    int c = static_cast<int>(std::floor(s));
    if (c < 0) return ctx.prefix.front();
    if (c >= level_.n_cells) return ctx.prefix.back();
    double frac = s - c;
    return ctx.prefix[c] + frac * (ctx.prefix[c + 1] - ctx.prefix[c]);
}

double CoefficientKernel::noise_term(const StepContext& ctx, int y_index, double y,
                                     double u) const {
    switch (id_) {
        case KernelId::Zero:
            return 0.0;
        case KernelId::Colored:
            return std::sqrt(std::max(u, 0.0)) * ctx.colored[y_index];
        case KernelId::Sbm: {
            if (u < level_.a_min || u > level_.a_max)
                throw std::runtime_error(
                    "sbm kernel: solution value " + std::to_string(u) + " at y=" +
                    std::to_string(y) + " escaped the level band [" +
                    std::to_string(level_.a_min) + ", " + std::to_string(level_.a_max) +
                    "]; enlarge the band");
            double c0 = prefix_at(ctx, 0.0);
            double cu = prefix_at(ctx, u);
            return u >= 0.0 ? cu - c0 : c0 - cu;
        }
        case KernelId::Fv: {
            double cu = prefix_at(ctx, std::clamp(u, 0.0, 1.0));
            return cu - u * ctx.total;
        }
    }
    return 0.0;
}

double CoefficientKernel::holder_integral(int y_index, double y, double u1,
                                          double u2) const {
    double sum = 0.0;
    const double meas = level_.cell_measure();
    for (int c = 0; c < level_.n_cells; ++c) {
        double a = id_ == KernelId::Colored ? static_cast<double>(c)
                                            : level_.cell_center(c);
        double d = evaluate(a, y_index, y, u1) - evaluate(a, y_index, y, u2);
        sum += d * d * meas;
    }
    return sum;
}

double CoefficientKernel::growth_integral(int y_index, double y, double u) const {
    double sum = 0.0;
    const double meas = level_.cell_measure();
    for (int c = 0; c < level_.n_cells; ++c) {
        double a = id_ == KernelId::Colored ? static_cast<double>(c)
                                            : level_.cell_center(c);
        double g = evaluate(a, y_index, y, u);
        sum += g * g * meas;
    }
    return sum;
}

LevelSpec sbm_level_band(const GridFunction& initial, double horizon,
                         double headroom, double da) {
    double fmin = 0.0, fmax = 0.0;
    for (double v : initial.values()) {
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    // Mass scale drives the martingale excursions of the total mass; cover
    // several standard deviations of sup_t u plus the static range.
    double mass = std::max({std::fabs(fmax), std::fabs(fmin), fmax - fmin, 0.1});
    double excursion = 4.0 * std::sqrt(std::max(horizon, 0.0) * mass) + 0.5 * mass;
    double hi = std::max(0.0, fmax) + headroom * excursion;
    double lo = std::min(0.0, fmin) - headroom * excursion;
    int n_levels = std::max(2, static_cast<int>(std::ceil((hi - lo) / da)));
    return LevelSpec::interval(lo, lo + n_levels * da, n_levels);
}

} // namespace spdelab
