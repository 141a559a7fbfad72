#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace glfa {

// Euclidean projection onto the centered ball of the given radius. The small
// relative slack makes repeated application a no-op on boundary points.
inline Eigen::VectorXd project_ball(Eigen::VectorXd v, double radius) {
  const double nrm = v.norm();
  if (nrm > radius * (1.0 + 1e-13)) v *= radius / nrm;
  return v;
}

// Factor rows are feasible when (||F_i||^2 + 1)^{1/2} <= C, i.e. inside the
// ball of radius sqrt(C^2 - 1). C <= 1 leaves no room for any factor score.
inline Eigen::VectorXd project_factor(const Eigen::VectorXd& v, double C) {
  if (!(C > 1.0)) throw std::invalid_argument("project_factor: C must exceed 1");
  return project_ball(v, std::sqrt(C * C - 1.0));
}

// Stacked (d_j, A_j) vectors live in the ball of radius C.
inline Eigen::VectorXd project_item(const Eigen::VectorXd& v, double C) {
  if (!(C > 0.0)) throw std::invalid_argument("project_item: C must be positive");
  return project_ball(v, C);
}

}  // namespace glfa
