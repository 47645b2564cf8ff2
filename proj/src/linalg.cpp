#include "spdelab/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace spdelab {

std::vector<double> solve_tridiagonal(const std::vector<double>& lower,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& upper,
                                      const std::vector<double>& rhs) {
    const size_t n = diag.size();
    if (lower.size() != n - 1 || upper.size() != n - 1 || rhs.size() != n)
        throw std::invalid_argument("solve_tridiagonal: inconsistent sizes");
    std::vector<double> cp(n - 1), dp(n), x(n);
    cp[0] = upper[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (size_t i = 1; i < n; ++i) {
        double m = diag[i] - lower[i - 1] * cp[i - 1];
        if (i < n - 1) cp[i] = upper[i] / m;
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / m;
    }
    x[n - 1] = dp[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
}

void jacobi_eigen_sym(std::vector<double> a, int n,
                      std::vector<double>& eigenvalues,
                      std::vector<double>& vectors) {
    vectors.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) vectors[static_cast<size_t>(i) * n + i] = 1.0;
    auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
    auto V = [&](int i, int j) -> double& { return vectors[static_cast<size_t>(i) * n + j]; };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = A(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) eigenvalues[i] = A(i, i);
    // Sort descending, permuting eigenvector columns alongside.
    for (int i = 0; i < n - 1; ++i) {
        int best = i;
        for (int j = i + 1; j < n; ++j)
            if (eigenvalues[j] > eigenvalues[best]) best = j;
        if (best != i) {
            std::swap(eigenvalues[i], eigenvalues[best]);
            for (int k = 0; k < n; ++k)
                std::swap(V(k, i), V(k, best));
        }
    }
}

std::vector<double> least_squares(const std::vector<double>& X, int n_rows,
                                  int n_cols, const std::vector<double>& y) {
    if (static_cast<int>(y.size()) != n_rows ||
        static_cast<int>(X.size()) != n_rows * n_cols)
        throw std::invalid_argument("least_squares: inconsistent sizes");
    // Column scales for equilibration.
    std::vector<double> scale(n_cols, 0.0);
    for (int r = 0; r < n_rows; ++r)
        for (int c = 0; c < n_cols; ++c) {
            double v = X[static_cast<size_t>(r) * n_cols + c];
            scale[c] += v * v;
        }
    for (int c = 0; c < n_cols; ++c) {
        scale[c] = std::sqrt(scale[c]);
        if (scale[c] == 0.0)
            throw std::runtime_error("least_squares: zero column (rank deficient)");
    }
    // Normal equations on the scaled system.
    std::vector<double> G(static_cast<size_t>(n_cols) * n_cols, 0.0);
    std::vector<double> b(n_cols, 0.0);
    for (int r = 0; r < n_rows; ++r) {
        const double* row = &X[static_cast<size_t>(r) * n_cols];
        for (int i = 0; i < n_cols; ++i) {
            double xi = row[i] / scale[i];
            b[i] += xi * y[r];
            for (int j = i; j < n_cols; ++j)
                G[static_cast<size_t>(i) * n_cols + j] += xi * row[j] / scale[j];
        }
    }
    // Cholesky G = L L^T.
    std::vector<double> L(static_cast<size_t>(n_cols) * n_cols, 0.0);
    for (int i = 0; i < n_cols; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = G[static_cast<size_t>(j) * n_cols + i];
            for (int k = 0; k < j; ++k)
                s -= L[static_cast<size_t>(i) * n_cols + k] *
                     L[static_cast<size_t>(j) * n_cols + k];
            if (i == j) {
                if (s < 1e-10)
                    throw std::runtime_error(
                        "least_squares: rank-deficient design matrix; "
                        "increase the sample size or shrink the basis");
                L[static_cast<size_t>(i) * n_cols + i] = std::sqrt(s);
            } else {
                L[static_cast<size_t>(i) * n_cols + j] =
                    s / L[static_cast<size_t>(j) * n_cols + j];
            }
        }
    }
    // Forward/back substitution.
    std::vector<double> z(n_cols), beta(n_cols);
    for (int i = 0; i < n_cols; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k)
            s -= L[static_cast<size_t>(i) * n_cols + k] * z[k];
        z[i] = s / L[static_cast<size_t>(i) * n_cols + i];
    }
    for (int i = n_cols; i-- > 0;) {
        double s = z[i];
        for (int k = i + 1; k < n_cols; ++k)
            s -= L[static_cast<size_t>(k) * n_cols + i] * beta[k];
        beta[i] = s / L[static_cast<size_t>(i) * n_cols + i];
    }
    for (int c = 0; c < n_cols; ++c) beta[c] /= scale[c];
    return beta;
}

} // namespace spdelab
