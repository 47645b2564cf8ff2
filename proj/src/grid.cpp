#include "spdelab/grid.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "spdelab/quadrature.hpp"

namespace spdelab {

GridSpec::GridSpec(double xmin, double xmax, int cells)
    : x_min(xmin), x_max(xmax), n_cells(cells) {
    if (!(x_min < x_max)) throw std::invalid_argument("GridSpec: x_min must be < x_max");
    if (n_cells < 2) throw std::invalid_argument("GridSpec: need at least 2 cells");
}

std::vector<double> GridSpec::points() const {
    std::vector<double> p(n_points());
    for (int i = 0; i < n_points(); ++i) p[i] = point(i);
    return p;
}

GridFunction::GridFunction(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != spec_.n_points())
        throw std::invalid_argument("GridFunction: values length != grid point count");
}

GridFunction::GridFunction(GridSpec spec, double fill)
    : spec_(spec), values_(spec.n_points(), fill) {}

double GridFunction::interpolate(double x) const {
    const double dx = spec_.dx();
    if (x <= spec_.x_min) return values_.front();
    if (x >= spec_.x_max) return values_.back();
    double s = (x - spec_.x_min) / dx;
    int i = static_cast<int>(s);
    if (i >= spec_.n_cells) i = spec_.n_cells - 1;
    double frac = s - i;
    return values_[i] * (1.0 - frac) + values_[i + 1] * frac;
}

GridFunction GridFunction::derivative() const {
    const int n = size();
    const double dx = spec_.dx();
    std::vector<double> d(n);
    d[0] = (-3.0 * values_[0] + 4.0 * values_[1] - values_[2]) / (2.0 * dx);
    for (int i = 1; i < n - 1; ++i)
        d[i] = (values_[i + 1] - values_[i - 1]) / (2.0 * dx);
    d[n - 1] = (3.0 * values_[n - 1] - 4.0 * values_[n - 2] + values_[n - 3]) / (2.0 * dx);
    return GridFunction(spec_, std::move(d));
}

bool GridFunction::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string GridFunction::to_csv() const {
    std::string out = "x,value\n";
    char buf[80];
    for (int i = 0; i < size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", spec_.point(i), values_[i]);
        out += buf;
    }
    return out;
}

GridFunction GridFunction::from_csv(const GridSpec& spec, const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,value", 0) != 0)
        throw std::runtime_error("GridFunction::from_csv: missing header");
    std::vector<double> v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("GridFunction::from_csv: malformed row");
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    return GridFunction(spec, std::move(v));
}

namespace {

// Bump mollifier rho(x) = K exp(-1/(1-x^2)) on |x|<1, with K fixed once so
// that rho integrates to 1.
double rho_unnormalized(double x) {
    return std::fabs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
}

double rho_norm_constant() {
    static const double K = [] {
        double z = gauss_legendre_integrate(rho_unnormalized, -1.0, 1.0, 64);
        return 1.0 / z;
    }();
    return K;
}

} // namespace

double weight_j(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("weight_j: x must be finite");
    const double K = rho_norm_constant();
    auto integrand = [&](double y) { return std::exp(-std::fabs(y)) * rho_unnormalized(x - y); };
    double lo = x - 1.0, hi = x + 1.0;
    double result;
    if (lo < 0.0 && hi > 0.0) {
        result = gauss_legendre_integrate(integrand, lo, 0.0, 64) +
                 gauss_legendre_integrate(integrand, 0.0, hi, 64);
    } else {
        result = gauss_legendre_integrate(integrand, lo, hi, 64);
    }
    return K * result;
}

Weight::Weight(WeightKind kind, GridSpec spec, std::vector<double> values)
    : kind_(kind), spec_(spec), values_(std::move(values)) {
    c0_ = 1e300;
    C0_ = 0.0;
    for (int i = 0; i < spec_.n_points(); ++i) {
        if (!(values_[i] > 0.0))
            throw std::runtime_error("Weight: values must be strictly positive");
        double ratio = values_[i] * std::exp(std::fabs(spec_.point(i)));
        c0_ = std::min(c0_, ratio);
        C0_ = std::max(C0_, ratio);
    }
}

Weight Weight::exponential(const GridSpec& spec) {
    std::vector<double> v(spec.n_points());
    for (int i = 0; i < spec.n_points(); ++i) v[i] = std::exp(-std::fabs(spec.point(i)));
    return Weight(WeightKind::Exponential, spec, std::move(v));
}

Weight Weight::mollified_j(const GridSpec& spec) {
    std::vector<double> v(spec.n_points());
    for (int i = 0; i < spec.n_points(); ++i) v[i] = weight_j(spec.point(i));
    return Weight(WeightKind::MollifiedJ, spec, std::move(v));
}

namespace {

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* who) {
    if (!(a == b)) throw std::invalid_argument(std::string(who) + ": mismatched grids");
}

} // namespace

double inner0(const GridFunction& f, const GridFunction& g, const Weight& w) {
    require_same_grid(f.spec(), g.spec(), "inner0");
    require_same_grid(f.spec(), w.spec(), "inner0");
    const int n = f.size();
    std::vector<double> prod(n);
    for (int i = 0; i < n; ++i) prod[i] = f[i] * g[i] * w.values()[i];
    return trapezoid(prod, f.spec().dx());
}

double norm0(const GridFunction& f, const Weight& w) {
    return std::sqrt(inner0(f, f, w));
}

double norm1(const GridFunction& f, const Weight& w) {
    double n0 = norm0(f, w);
    double n0d = norm0(f.derivative(), w);
    return std::sqrt(n0 * n0 + n0d * n0d);
}

double inner_plain(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f.spec(), g.spec(), "inner_plain");
    const int n = f.size();
    std::vector<double> prod(n);
    for (int i = 0; i < n; ++i) prod[i] = f[i] * g[i];
    return trapezoid(prod, f.spec().dx());
}

} // namespace spdelab
