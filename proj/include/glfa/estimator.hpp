#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "glfa/errors.hpp"
#include "glfa/likelihood.hpp"
#include "glfa/projection.hpp"
#include "glfa/rng.hpp"

namespace glfa {

struct FitConfig {
  int max_sweeps = 500;
  double rel_tol = 1e-4;    // relative improvement of the objective per sweep
  int inner_max_iter = 50;  // projected gradient iterations per block update
  double inner_tol = 1e-6;  // projected-gradient norm stop
  std::uint64_t seed = 0;

  void validate() const {
    if (max_sweeps < 1) throw std::invalid_argument("FitConfig: max_sweeps must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("FitConfig: rel_tol must be positive");
    if (inner_max_iter < 1) throw std::invalid_argument("FitConfig: inner_max_iter must be >= 1");
    if (!(inner_tol > 0.0)) throw std::invalid_argument("FitConfig: inner_tol must be positive");
  }
};

struct FitResult {
  ParameterSet params;
  double loglik = 0.0;
  int sweeps_used = 0;
  bool converged = false;
  int K = 0;
  // Joint log-likelihood after each sweep; entry 0 is the starting point.
  std::vector<double> loglik_trace;
};

namespace detail {

// Scratch buffers for one block subproblem. The observed cells of the block
// are gathered into a dense regressor matrix so every objective/gradient
// evaluation is a GEMV plus vectorized cumulant arithmetic.
struct BlockWorkspace {
  Eigen::MatrixXd X;    // cells x dim
  Eigen::VectorXd off;  // per-cell intercept offset
  Eigen::VectorXd y;
  Eigen::ArrayXd m, e, w;
  Eigen::VectorXd g, cand;

  void ensure(Eigen::Index n, Eigen::Index dim) {
    if (X.cols() != dim) X.resize(0, dim);
    if (X.rows() < n) X.resize(n, dim);
    if (off.size() < n) off.resize(n);
    if (y.size() < n) y.resize(n);
    if (m.size() < n) m.resize(n);
    if (e.size() < n) e.resize(n);
    if (w.size() < n) w.resize(n);
  }
};

// Objective sum over the gathered cells of [y*m - b(m)]/phi at m = off + X z.
inline double block_objective(const Family& fam, BlockWorkspace& ws, Eigen::Index n,
                              const Eigen::VectorXd& z, double phi) {
  const auto X = ws.X.topRows(n);
  const auto off = ws.off.head(n);
  const auto y = ws.y.head(n);
  ws.m.head(n) = (off + X * z).array();
  const auto m = ws.m.head(n);
  if (!m.allFinite()) throw numerical_error("block objective: non-finite natural parameter");
  double bsum = 0.0;
  switch (fam.kind) {
    case FamilyKind::Logistic:
      ws.e.head(n) = (-m.abs()).exp();
      bsum = m.max(0.0).sum() + ws.e.head(n).log1p().sum();
      break;
    case FamilyKind::Poisson:
      bsum = m.exp().sum();
      break;
    case FamilyKind::Gaussian:
      bsum = 0.5 * m.matrix().squaredNorm();
      break;
  }
  return (y.dot(m.matrix()) - bsum) / phi;
}

// g = X^T (y - b'(m)) / phi at m = off + X z.
inline void block_gradient(const Family& fam, BlockWorkspace& ws, Eigen::Index n,
                           const Eigen::VectorXd& z, double phi, Eigen::VectorXd& g) {
  const auto X = ws.X.topRows(n);
  const auto off = ws.off.head(n);
  const auto y = ws.y.head(n);
  ws.m.head(n) = (off + X * z).array();
  const auto m = ws.m.head(n);
  switch (fam.kind) {
    case FamilyKind::Logistic:
      ws.e.head(n) = (-m.abs()).exp();
      ws.w.head(n) =
          y.array() - (m >= 0.0).select(1.0, ws.e.head(n)) / (1.0 + ws.e.head(n));
      break;
    case FamilyKind::Poisson:
      ws.w.head(n) = y.array() - m.exp();
      break;
    case FamilyKind::Gaussian:
      ws.w.head(n) = y.array() - m;
      break;
  }
  g.noalias() = X.transpose() * ws.w.head(n).matrix();
  g /= phi;
}

inline Eigen::Index gather_row(BlockWorkspace& ws, const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& d, CellsView cells) {
  const auto n = static_cast<Eigen::Index>(cells.size());
  ws.ensure(n, A.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    const int j = cells.idx[t];
    ws.X.row(t) = A.row(j);
    ws.off(t) = d(j);
    ws.y(t) = cells.y[t];
  }
  return n;
}

inline Eigen::Index gather_column(BlockWorkspace& ws, const Eigen::MatrixXd& F, CellsView cells) {
  const auto n = static_cast<Eigen::Index>(cells.size());
  const auto K = F.cols();
  ws.ensure(n, K + 1);
  for (Eigen::Index t = 0; t < n; ++t) {
    const int i = cells.idx[t];
    ws.X(t, 0) = 1.0;
    ws.X.row(t).tail(K) = F.row(i);
    ws.off(t) = 0.0;
    ws.y(t) = cells.y[t];
  }
  return n;
}

// Projected gradient ascent on a concave block objective over the centered
// ball of the given radius. Backtracking halves the step from 1.0 until the
// Armijo condition holds; only improving steps are accepted, so the returned
// point never scores below the input. Stops once the projected gradient step
// stalls below tol.
inline Eigen::VectorXd gathered_ascent(const Family& fam, BlockWorkspace& ws, Eigen::Index n,
                                       Eigen::VectorXd z, double radius, double phi, int max_iter,
                                       double tol) {
  constexpr double armijo_c1 = 1e-4;
  constexpr double min_step = 1e-14;

  double fz = block_objective(fam, ws, n, z, phi);
  Eigen::VectorXd& g = ws.g;
  Eigen::VectorXd& cand = ws.cand;
  for (int it = 0; it < max_iter; ++it) {
    block_gradient(fam, ws, n, z, phi, g);
    cand = project_ball(z + g, radius);
    if ((cand - z).norm() <= tol) break;  // stationary for the constrained problem

    double step = 1.0;
    bool accepted = false;
    while (step > min_step) {
      if (step != 1.0) cand = project_ball(z + step * g, radius);
      const double fc = block_objective(fam, ws, n, cand, phi);
      // projection onto a convex set keeps g.dot(cand - z) >= 0
      if (fc >= fz + armijo_c1 * g.dot(cand - z)) {
        z.swap(cand);
        fz = fc;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return z;
}

}  // namespace detail

// One block update of a person row: ascend the row objective over the factor
// ball with (A, d) frozen. A row with no observed cells is returned unchanged.
inline Eigen::VectorXd update_row(const Eigen::VectorXd& f, const Eigen::MatrixXd& A,
                                  const Eigen::VectorXd& d, CellsView cells, const Family& fam,
                                  double C, double phi, const FitConfig& cfg = {}) {
  if (cells.empty()) return f;
  if (!(C > 1.0)) throw std::invalid_argument("update_row: C must exceed 1");
  if (f.size() != A.cols()) throw std::invalid_argument("update_row: factor dimension mismatch");
  detail::BlockWorkspace ws;
  const auto n = detail::gather_row(ws, A, d, cells);
  const double radius = std::sqrt(C * C - 1.0);
  return detail::gathered_ascent(fam, ws, n, project_ball(f, radius), radius, phi,
                                 cfg.inner_max_iter, cfg.inner_tol);
}

// Mirror image for one item column: u stacks (d_j, A_j) and lives in the
// radius-C ball, with F frozen.
inline Eigen::VectorXd update_column(const Eigen::VectorXd& u, const Eigen::MatrixXd& F,
                                     CellsView cells, const Family& fam, double C, double phi,
                                     const FitConfig& cfg = {}) {
  if (cells.empty()) return u;
  if (!(C > 0.0)) throw std::invalid_argument("update_column: C must be positive");
  if (u.size() != F.cols() + 1)
    throw std::invalid_argument("update_column: stacked vector dimension mismatch");
  detail::BlockWorkspace ws;
  const auto n = detail::gather_column(ws, F, cells);
  return detail::gathered_ascent(fam, ws, n, project_ball(u, C), C, phi, cfg.inner_max_iter,
                                 cfg.inner_tol);
}

// Starting point: map observed values through a naive per-family link, fill
// missing cells with column means, take the best rank-(K+1) approximation,
// peel off column means as intercepts, factor the rest at rank K, and project
// everything into the feasible balls. Deterministic given the seed (the seed
// only matters when a factor direction is exactly degenerate and gets a tiny
// jitter instead).
inline ParameterSet initialize(const ObservationSet& obs, int K, const Family& fam, double C,
                               std::uint64_t seed) {
  if (K < 1) throw std::invalid_argument("initialize: K must be >= 1");
  const int N = obs.rows(), J = obs.cols();
  if (K + 1 > std::min(N, J))
    throw std::invalid_argument("initialize: K+1 exceeds min(N,J); model is overparameterized");
  if (!(C > 1.0)) throw std::invalid_argument("initialize: C must exceed 1");

  auto naive_link = [&fam](double y) {
    switch (fam.kind) {
      case FamilyKind::Logistic: return y - 0.5;  // (2y-1) scaled by 0.5
      case FamilyKind::Poisson: return std::log1p(y);
      case FamilyKind::Gaussian: return y;
    }
    return y;
  };

  Eigen::MatrixXd X(N, J);
  {
    for (int j = 0; j < J; ++j) {
      const auto cells = obs.col(j);
      double sum = 0.0;
      for (std::size_t t = 0; t < cells.size(); ++t) sum += naive_link(cells.y[t]);
      const double mean = cells.empty() ? 0.0 : sum / static_cast<double>(cells.size());
      X.col(j).setConstant(mean);
    }
    for (int i = 0; i < N; ++i) {
      const auto cells = obs.row(i);
      for (std::size_t t = 0; t < cells.size(); ++t) X(i, cells.idx[t]) = naive_link(cells.y[t]);
    }
  }

  const int r = K + 1;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd B = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
  Eigen::MatrixXd Vr = svd.matrixV().leftCols(r);  // J x r

  // column means of the rank-r approximation become the intercepts
  const Eigen::RowVectorXd b_mean = B.colwise().mean();
  Eigen::VectorXd d = Vr * b_mean.transpose();
  Eigen::MatrixXd Bc = B.rowwise() - b_mean;

  // rank-K factorization of the centered part via the small r x r core
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Bc);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, r);
  Eigen::MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> core(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sig = core.singularValues();

  const Eigen::VectorXd scale = sig.head(K).cwiseSqrt();
  Eigen::MatrixXd F = (Q * core.matrixU().leftCols(K)) * scale.asDiagonal();
  Eigen::MatrixXd A = (Vr * core.matrixV().leftCols(K)) * scale.asDiagonal();

  // exact zero directions would freeze the alternating updates at a saddle
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1e-6);
  for (int k = 0; k < K; ++k) {
    if (sig(k) <= 1e-12 * std::max(sig(0), 1e-300)) {
      for (int i = 0; i < N; ++i) F(i, k) = jitter(rng);
    }
  }

  ParameterSet p{std::move(F), std::move(A), std::move(d), C, 1.0};
  for (int i = 0; i < N; ++i) p.F.row(i) = project_factor(p.F.row(i), C).transpose();
  Eigen::VectorXd u(K + 1);
  for (int j = 0; j < J; ++j) {
    u(0) = p.d(j);
    u.tail(K) = p.A.row(j).transpose();
    u = project_item(u, C);
    p.d(j) = u(0);
    p.A.row(j) = u.tail(K).transpose();
  }
  return p;
}

// Alternating constrained maximization from a caller-supplied start. Sweeps
// all rows (A, d frozen), then all columns (F frozen); both phases only
// accept improving steps, so the per-sweep log-likelihood trace is
// non-decreasing up to floating-point accumulation.
inline FitResult fit_jml_from(ParameterSet start, const ObservationSet& obs, const Family& fam,
                              const FitConfig& cfg = {}) {
  cfg.validate();
  detail::check_dims(start, obs);
  if (obs.n() == 0) throw std::invalid_argument("fit_jml: observation set is empty");
  obs.validate_for(fam);

  ParameterSet p = std::move(start);
  const int N = obs.rows(), J = obs.cols(), K = p.n_factors();
  const double radius = std::sqrt(p.C * p.C - 1.0);
  const double c_total = log_normalizer_total(obs, fam, p.phi);

  double obj = centered_log_likelihood(p, obs, fam);
  std::vector<double> trace{obj + c_total};

  int sweeps = 0;
  bool converged = false;
  detail::BlockWorkspace row_ws, col_ws;
  Eigen::VectorXd z(K), u(K + 1);
  for (int s = 1; s <= cfg.max_sweeps; ++s) {
    for (int i = 0; i < N; ++i) {
      const auto cells = obs.row(i);
      if (cells.empty()) continue;
      const auto n = detail::gather_row(row_ws, p.A, p.d, cells);
      z = project_ball(p.F.row(i).transpose(), radius);
      p.F.row(i) = detail::gathered_ascent(fam, row_ws, n, std::move(z), radius, p.phi,
                                           cfg.inner_max_iter, cfg.inner_tol)
                       .transpose();
    }
    for (int j = 0; j < J; ++j) {
      const auto cells = obs.col(j);
      if (cells.empty()) continue;
      const auto n = detail::gather_column(col_ws, p.F, cells);
      u(0) = p.d(j);
      u.tail(K) = p.A.row(j).transpose();
      u = detail::gathered_ascent(fam, col_ws, n, project_ball(u, p.C), p.C, p.phi,
                                  cfg.inner_max_iter, cfg.inner_tol);
      p.d(j) = u(0);
      p.A.row(j) = u.tail(K).transpose();
    }

    const double obj_new = centered_log_likelihood(p, obs, fam);
    trace.push_back(obj_new + c_total);
    sweeps = s;
    if (obj_new - obj < cfg.rel_tol * std::max(1.0, std::abs(obj))) {
      obj = obj_new;
      converged = true;
      break;
    }
    obj = obj_new;
  }

  FitResult res;
  res.loglik = joint_log_likelihood(p, obs, fam);
  res.params = std::move(p);
  res.sweeps_used = sweeps;
  res.converged = converged;
  res.K = K;
  res.loglik_trace = std::move(trace);
  return res;
}

// Constrained joint maximum likelihood fit with K factors.
inline FitResult fit_jml(const ObservationSet& obs, int K, const Family& fam, double C,
                         const FitConfig& cfg = {}) {
  if (obs.n() == 0) throw std::invalid_argument("fit_jml: observation set is empty");
  return fit_jml_from(initialize(obs, K, fam, C, cfg.seed), obs, fam, cfg);
}

}  // namespace glfa
