#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spdelab {

/// Uniform spatial grid on [x_min, x_max] with n_cells cells
/// (n_cells + 1 points at x_min + i*dx).
struct GridSpec {
    double x_min = -8.0;
    double x_max = 8.0;
    int n_cells = 256;

    GridSpec() = default;
    GridSpec(double xmin, double xmax, int cells);

    double dx() const { return (x_max - x_min) / n_cells; }
    int n_points() const { return n_cells + 1; }
    double point(int i) const { return x_min + i * dx(); }
    std::vector<double> points() const;

    bool operator==(const GridSpec& o) const {
        return x_min == o.x_min && x_max == o.x_max && n_cells == o.n_cells;
    }
};

/// Real-valued function sampled at the grid points.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(GridSpec spec, std::vector<double> values);
    GridFunction(GridSpec spec, double fill);

    /// Samples a callable at the grid points.
    template <typename F>
    static GridFunction sample(const GridSpec& spec, F&& f) {
        std::vector<double> v(spec.n_points());
        for (int i = 0; i < spec.n_points(); ++i) v[i] = f(spec.point(i));
        return GridFunction(spec, std::move(v));
    }

    const GridSpec& spec() const { return spec_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](int i) const { return values_[i]; }
    double& operator[](int i) { return values_[i]; }
    int size() const { return static_cast<int>(values_.size()); }

    /// Value at arbitrary x by linear interpolation (clamped at the ends).
    double interpolate(double x) const;

    /// Second-order derivative samples: central differences in the interior,
    /// one-sided three-point stencils at the ends.
    GridFunction derivative() const;

    bool all_finite() const;

    /// CSV with header "x,value", 17 significant digits.
    std::string to_csv() const;
    static GridFunction from_csv(const GridSpec& spec, const std::string& csv);

private:
    GridSpec spec_;
    std::vector<double> values_;
};

enum class WeightKind { Exponential, MollifiedJ };

/// Integration weight for the X_0 / X_1 norms: either e^{-|x|} or its
/// mollification J = e^{-|.|} * rho. J satisfies the two-sided bound
/// c0 e^{-|x|} <= J(x) <= C0 e^{-|x|}; the constants are fitted on the grid.
class Weight {
public:
    static Weight exponential(const GridSpec& spec);
    static Weight mollified_j(const GridSpec& spec);

    WeightKind kind() const { return kind_; }
    const GridSpec& spec() const { return spec_; }
    const std::vector<double>& values() const { return values_; }
    double c0() const { return c0_; }
    double C0() const { return C0_; }

private:
    Weight(WeightKind kind, GridSpec spec, std::vector<double> values);

    WeightKind kind_;
    GridSpec spec_;
    std::vector<double> values_;
    double c0_ = 0.0;
    double C0_ = 0.0;
};

/// The mollified weight J(x) = int e^{-|y|} rho(x - y) dy, with rho the
/// bump mollifier normalized to unit mass; evaluated by Gauss-Legendre
/// over the unit support, split at the kink of e^{-|.|}.
double weight_j(double x);

/// Weighted X_0 norm: (sum f^2 w dx)^{1/2}, trapezoid rule.
double norm0(const GridFunction& f, const Weight& w);

/// Weighted X_1 norm: (norm0(f)^2 + norm0(f')^2)^{1/2}.
double norm1(const GridFunction& f, const Weight& w);

/// Weighted X_0 inner product.
double inner0(const GridFunction& f, const GridFunction& g, const Weight& w);

/// Plain L^2(dx) pairing <f,g> = int f g dx, trapezoid rule.
double inner_plain(const GridFunction& f, const GridFunction& g);

} // namespace spdelab
