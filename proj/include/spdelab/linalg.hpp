#pragma once

#include <vector>

namespace spdelab {

/// Solves a tridiagonal system (Thomas algorithm).
/// lower/upper have size n-1, diag and rhs size n. No pivoting; intended for
/// diagonally dominant systems.
std::vector<double> solve_tridiagonal(const std::vector<double>& lower,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& upper,
                                      const std::vector<double>& rhs);

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Fills eigenvalues (descending) and the matching eigenvectors as columns
/// of `vectors` (row-major n x n). Input is row-major symmetric n x n.
void jacobi_eigen_sym(std::vector<double> matrix, int n,
                      std::vector<double>& eigenvalues,
                      std::vector<double>& vectors);

/// Ordinary least squares: finds beta minimizing ||X beta - y||^2.
/// X is row-major n_rows x n_cols. Solves the normal equations with column
/// equilibration and Cholesky. Throws std::runtime_error on rank deficiency.
std::vector<double> least_squares(const std::vector<double>& X, int n_rows,
                                  int n_cols, const std::vector<double>& y);

} // namespace spdelab
