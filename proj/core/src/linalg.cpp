#include "chtf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace chtf {

double pinv_cutoff(Eigen::Index rows, Eigen::Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * sigma_max * 0x1.0p-52;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() ? pinv_cutoff(a.rows(), a.cols(), s[0]) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() ? pinv_cutoff(a.rows(), a.cols(), s[0]) : 0.0;
  Eigen::MatrixXd proj = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    proj.row(i) = (s[i] > cutoff) ? (proj.row(i) / s[i]).eval()
                                  : Eigen::RowVectorXd::Zero(b.cols()).eval();
  return svd.matrixV() * proj;
}

Svd left_singular(const Eigen::MatrixXd& x) {
  Svd out;
  const bool gram_path = x.cols() > std::max<Eigen::Index>(64, 4 * x.rows());
  if (gram_path) {
    Eigen::MatrixXd g = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::Index n = x.rows();
    out.u.resize(n, n);
    out.sigma.resize(n);
    // eigenvalues come back ascending; flip to non-increasing sigma
    for (Eigen::Index i = 0; i < n; ++i) {
      out.u.col(i) = es.eigenvectors().col(n - 1 - i);
      out.sigma[i] = std::sqrt(std::max(0.0, es.eigenvalues()[n - 1 - i]));
    }
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
    out.u = svd.matrixU();
    out.sigma = svd.singularValues();
  }
  return out;
}

Eigen::VectorXd fix_column_signs(Eigen::MatrixXd& u) {
  Eigen::VectorXd signs = Eigen::VectorXd::Ones(u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > 1e-12) {
        if (u(i, j) < 0) {
          u.col(j) = -u.col(j);
          signs[j] = -1.0;
        }
        break;
      }
    }
  }
  return signs;
}

Eigen::VectorXd principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qa(a), qb(b);
  Eigen::MatrixXd qa_thin = qa.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd qb_thin = qb.householderQ() * Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::MatrixXd m = qa_thin.transpose() * qb_thin;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  Eigen::VectorXd cosines = svd.singularValues();
  // sine-based residual resolves small angles far below the acos floor
  Eigen::BDCSVD<Eigen::MatrixXd> res(qb_thin - qa_thin * m);
  Eigen::VectorXd sines = res.singularValues();
  Eigen::VectorXd angles(cosines.size());
  for (Eigen::Index i = 0; i < cosines.size(); ++i) {
    const double c = std::clamp(cosines[i], -1.0, 1.0);
    const Eigen::Index j = std::min<Eigen::Index>(i, sines.size() - 1);
    const double s = std::clamp(sines[sines.size() - 1 - j], 0.0, 1.0);
    angles[cosines.size() - 1 - i] = (c * c > 0.5) ? std::asin(s) : std::acos(c);
  }
  return angles;
}

double orthonormality_defect(const Eigen::MatrixXd& u) {
  if (u.cols() == 0) return 0.0;
  Eigen::MatrixXd g = u.transpose() * u;
  g -= Eigen::MatrixXd::Identity(u.cols(), u.cols());
  return g.cwiseAbs().maxCoeff();
}

} // namespace chtf
