#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace glfa {

// m_ij = d_j + A_j . F_i, dense N x J
using NaturalParamMatrix = Eigen::MatrixXd;

// Factor scores, loadings, intercepts, and the feasibility data (C, phi).
// Feasible iff (||F_i||^2 + 1)^{1/2} <= C for every row and
// (d_j^2 + ||A_j||^2)^{1/2} <= C for every column; both together bound every
// natural parameter by C^2.
struct ParameterSet {
  Eigen::MatrixXd F;  // N x K
  Eigen::MatrixXd A;  // J x K
  Eigen::VectorXd d;  // J
  double C = 4.0;
  double phi = 1.0;

  int n_rows() const { return static_cast<int>(F.rows()); }
  int n_cols() const { return static_cast<int>(A.rows()); }
  int n_factors() const { return static_cast<int>(F.cols()); }

  void check_shapes() const {
    if (F.cols() != A.cols()) throw std::invalid_argument("ParameterSet: F and A factor counts differ");
    if (d.size() != A.rows()) throw std::invalid_argument("ParameterSet: d length does not match A rows");
    if (!(C > 0.0)) throw std::invalid_argument("ParameterSet: C must be positive");
    if (!(phi > 0.0)) throw std::invalid_argument("ParameterSet: phi must be positive");
  }

  bool satisfies_constraints(double tol = 1e-9) const {
    const double c2 = C * C;
    for (int i = 0; i < F.rows(); ++i)
      if (F.row(i).squaredNorm() + 1.0 > c2 * (1.0 + tol) + tol) return false;
    for (int j = 0; j < A.rows(); ++j)
      if (d(j) * d(j) + A.row(j).squaredNorm() > c2 * (1.0 + tol) + tol) return false;
    return true;
  }
};

inline NaturalParamMatrix natural_params(const ParameterSet& p) {
  p.check_shapes();
  NaturalParamMatrix M = p.F * p.A.transpose();
  M.rowwise() += p.d.transpose();
  return M;
}

}  // namespace glfa
