#pragma once

#include <Eigen/Core>

#include "glfa/family.hpp"
#include "glfa/observations.hpp"
#include "glfa/parameters.hpp"

namespace glfa {

namespace detail {
inline void check_dims(const ParameterSet& p, const ObservationSet& obs) {
  p.check_shapes();
  if (p.n_rows() != obs.rows() || p.n_cols() != obs.cols())
    throw std::invalid_argument("parameter/observation dimensions disagree");
}
}  // namespace detail

// Parameter-dependent part of the log-likelihood,
//   sum over observed cells of [y*m - b(m)] / phi.
inline double centered_log_likelihood(const ParameterSet& p, const ObservationSet& obs,
                                      const Family& fam) {
  detail::check_dims(p, obs);
  double acc = 0.0;
  for (int i = 0; i < obs.rows(); ++i) {
    const auto cells = obs.row(i);
    const auto f = p.F.row(i);
    for (std::size_t t = 0; t < cells.size(); ++t) {
      const int j = cells.idx[t];
      const double m = p.d(j) + p.A.row(j).dot(f);
      acc += cells.y[t] * m - fam.b(m);
    }
  }
  return acc / p.phi;
}

// Sum of c(y, phi) over observed cells; constant in the parameters.
inline double log_normalizer_total(const ObservationSet& obs, const Family& fam, double phi) {
  double acc = 0.0;
  for (int i = 0; i < obs.rows(); ++i) {
    const auto cells = obs.row(i);
    for (std::size_t t = 0; t < cells.size(); ++t) acc += fam.log_normalizer(cells.y[t], phi);
  }
  return acc;
}

// Full joint log-likelihood over the observed cells. Validates the stored
// values against the family's support.
inline double joint_log_likelihood(const ParameterSet& p, const ObservationSet& obs,
                                   const Family& fam) {
  detail::check_dims(p, obs);
  obs.validate_for(fam);
  return centered_log_likelihood(p, obs, fam) + log_normalizer_total(obs, fam, p.phi);
}

// Objective of one person row at F_i = x with (A, d) frozen:
//   sum_{j observed} [y_ij * m - b(m)] / phi,  m = d_j + A_j . x.
inline double row_objective(const Eigen::VectorXd& x, const Eigen::MatrixXd& A,
                            const Eigen::VectorXd& d, CellsView cells, const Family& fam,
                            double phi) {
  double acc = 0.0;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const int j = cells.idx[t];
    const double m = d(j) + A.row(j).dot(x);
    acc += cells.y[t] * m - fam.b(m);
  }
  return acc / phi;
}

// Gradient of row_objective: sum_j w_ij (y_ij - b'(m)) A_j / phi.
inline void row_gradient(Eigen::VectorXd& g, const Eigen::VectorXd& x, const Eigen::MatrixXd& A,
                         const Eigen::VectorXd& d, CellsView cells, const Family& fam,
                         double phi) {
  g.setZero();
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const int j = cells.idx[t];
    const double m = d(j) + A.row(j).dot(x);
    g.noalias() += (cells.y[t] - fam.b_prime(m)) * A.row(j).transpose();
  }
  g /= phi;
}

inline Eigen::VectorXd row_gradient(const Eigen::VectorXd& x, const Eigen::MatrixXd& A,
                                    const Eigen::VectorXd& d, CellsView cells, const Family& fam,
                                    double phi) {
  Eigen::VectorXd g(x.size());
  row_gradient(g, x, A, d, cells, fam, phi);
  return g;
}

// Objective of one item column at u = (d_j, A_j) with F frozen:
//   sum_{i observed} [y_ij * m - b(m)] / phi,  m = u_0 + F_i . u_{1:K}.
inline double column_objective(const Eigen::VectorXd& u, const Eigen::MatrixXd& F, CellsView cells,
                               const Family& fam, double phi) {
  const auto a = u.tail(u.size() - 1);
  double acc = 0.0;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const int i = cells.idx[t];
    const double m = u(0) + F.row(i).dot(a);
    acc += cells.y[t] * m - fam.b(m);
  }
  return acc / phi;
}

inline void column_gradient(Eigen::VectorXd& g, const Eigen::VectorXd& u, const Eigen::MatrixXd& F,
                            CellsView cells, const Family& fam, double phi) {
  const auto a = u.tail(u.size() - 1);
  g.setZero();
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const int i = cells.idx[t];
    const double m = u(0) + F.row(i).dot(a);
    const double w = cells.y[t] - fam.b_prime(m);
    g(0) += w;
    g.tail(g.size() - 1).noalias() += w * F.row(i).transpose();
  }
  g /= phi;
}

inline Eigen::VectorXd column_gradient(const Eigen::VectorXd& u, const Eigen::MatrixXd& F,
                                       CellsView cells, const Family& fam, double phi) {
  Eigen::VectorXd g(u.size());
  column_gradient(g, u, F, cells, fam, phi);
  return g;
}

}  // namespace glfa
