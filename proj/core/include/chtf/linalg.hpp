#pragma once

#include <Eigen/Dense>

namespace chtf {

/// Singular-value cutoff for pseudo-inverses and rank decisions:
/// max(rows, cols) * sigma_max * 2^-52.
double pinv_cutoff(Eigen::Index rows, Eigen::Index cols, double sigma_max);

/// Moore-Penrose pseudo-inverse with the cutoff above.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& a);

/// Minimum-norm least-squares solve pinv(a) * b without forming pinv.
Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct Svd {
  Eigen::MatrixXd u;        // left singular vectors, one column per value
  Eigen::VectorXd sigma;    // non-increasing, >= 0
};

/// Leading left singular vectors and singular values of x.  When the
/// matrix is very wide they come from the eigendecomposition of x*x^T,
/// otherwise from a direct SVD; the two paths agree to ~1e-8 away from
/// degenerate spectra.
Svd left_singular(const Eigen::MatrixXd& x);

/// In-place deterministic sign convention: each column's first entry with
/// |entry| > 1e-12 is made nonnegative.  Returns the per-column signs
/// applied (+1/-1) so callers can compensate a paired factor.
Eigen::VectorXd fix_column_signs(Eigen::MatrixXd& u);

/// Principal angles (radians, largest first) between the column spans of
/// a and b; small angles are computed through the sine residual so they
/// stay meaningful down to rounding error.
Eigen::VectorXd principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// ||u^T u - I||_inf, the orthonormality defect.
double orthonormality_defect(const Eigen::MatrixXd& u);

} // namespace chtf
