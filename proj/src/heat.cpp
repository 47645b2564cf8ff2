#include "spdelab/heat.hpp"

#include <cmath>
#include <stdexcept>

#include "spdelab/linalg.hpp"
#include "spdelab/quadrature.hpp"

namespace spdelab {

double heat_kernel(double t, double x) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be > 0");
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * M_PI * t);
}

double kt_constant(double t) {
    if (t < 0.0) throw std::invalid_argument("kt_constant: t must be >= 0");
    if (t == 0.0) return 1.0;
    // Integrand e^{t z} p_1(z) on z >= 0, doubled by symmetry. The effective
    // support ends a few standard deviations past z = t.
    auto integrand = [t](double z) {
        return std::exp(t * z - 0.5 * z * z) / std::sqrt(2.0 * M_PI);
    };
    double hi = t + 12.0;
    double k2 = 2.0 * adaptive_simpson(integrand, 0.0, hi, 1e-13);
    return std::sqrt(k2);
}

GridFunction apply_semigroup(const GridFunction& f, double t) {
    if (t < 0.0) throw std::invalid_argument("apply_semigroup: t must be >= 0");
    if (t == 0.0) return f;
    const GridSpec& spec = f.spec();
    const int n = spec.n_points();
    const double dx = spec.dx();
    std::vector<double> out(n);
    // Method of images: direct kernel plus reflections about both ends.
    for (int i = 0; i < n; ++i) {
        const double xi = spec.point(i);
        double sum = 0.0, wsum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double xj = spec.point(j);
            double w = heat_kernel(t, xi - xj) +
                       heat_kernel(t, xi + xj - 2.0 * spec.x_min) +
                       heat_kernel(t, 2.0 * spec.x_max - xi - xj);
            w *= (j == 0 || j == n - 1) ? 0.5 * dx : dx; // trapezoid weights
            sum += w * f[j];
            wsum += w;
        }
        out[i] = sum / wsum;
    }
    return GridFunction(spec, std::move(out));
}

HeatOperator::HeatOperator(const GridSpec& spec, double dt, HeatScheme scheme)
    : spec_(spec), dt_(dt), scheme_(scheme) {
    if (!(dt > 0.0)) throw std::invalid_argument("HeatOperator: dt must be > 0");
    const int n = spec.n_points();
    const double half = scheme == HeatScheme::BackwardEuler ? 0.5 : 0.25;
    r_ = half * dt / (spec.dx() * spec.dx());
    lower_.assign(n - 1, -r_);
    diag_.assign(n, 1.0 + 2.0 * r_);
    upper_.assign(n - 1, -r_);
    // Mirror-Neumann ends: ghost value equals the inner neighbor, which
    // doubles the off-diagonal entry and keeps row sums at 1.
    upper_[0] = -2.0 * r_;
    lower_[n - 2] = -2.0 * r_;
}

GridFunction HeatOperator::apply(const GridFunction& f) const {
    if (!(f.spec() == spec_))
        throw std::invalid_argument("HeatOperator::apply: mismatched grids");
    std::vector<double> v = f.values();
    apply_in_place(v);
    return GridFunction(spec_, std::move(v));
}

void HeatOperator::apply_in_place(std::vector<double>& values) const {
    if (scheme_ == HeatScheme::CrankNicolson) {
        // Explicit half step (I + (dt/4) D2) with mirror ends.
        const int n = static_cast<int>(values.size());
        std::vector<double> rhs(n);
        rhs[0] = (1.0 - 2.0 * r_) * values[0] + 2.0 * r_ * values[1];
        for (int i = 1; i < n - 1; ++i)
            rhs[i] = r_ * values[i - 1] + (1.0 - 2.0 * r_) * values[i] +
                     r_ * values[i + 1];
        rhs[n - 1] = 2.0 * r_ * values[n - 2] + (1.0 - 2.0 * r_) * values[n - 1];
        values = solve_tridiagonal(lower_, diag_, upper_, rhs);
        return;
    }
    values = solve_tridiagonal(lower_, diag_, upper_, values);
}

GridFunction implicit_half_laplacian_step(const GridFunction& f, double dt) {
    return HeatOperator(f.spec(), dt).apply(f);
}

} // namespace spdelab
