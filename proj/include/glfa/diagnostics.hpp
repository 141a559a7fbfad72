#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "glfa/simulation.hpp"

namespace glfa {

// (NJ)^{-1/2} * ||M_hat - M_star||_F
inline double scaled_frobenius_error(const Eigen::MatrixXd& M_hat, const Eigen::MatrixXd& M_star) {
  if (M_hat.rows() != M_star.rows() || M_hat.cols() != M_star.cols())
    throw std::invalid_argument("scaled_frobenius_error: shape mismatch");
  return (M_hat - M_star).norm() / std::sqrt(static_cast<double>(M_hat.size()));
}

// Full spectrum, descending.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
  return Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues();
}

inline double nuclear_norm(const Eigen::MatrixXd& M) { return singular_values(M).sum(); }

// Estimation-error rate sqrt(K * max(N,J) / n).
inline double rate_bound(int K, int N, int J, double n) {
  return std::sqrt(static_cast<double>(K) * std::max(N, J) / n);
}

struct ErrorReport {
  double scaled_frobenius = 0.0;
  Eigen::VectorXd singular_values;  // spectrum of M_star, descending
  double n_star_proxy = 0.0;        // observed count stands in for the expected one
  double rate_bound_value = 0.0;
};

inline ErrorReport make_error_report(const Eigen::MatrixXd& M_hat, const Eigen::MatrixXd& M_star,
                                     long long n_observed, int K) {
  ErrorReport rep;
  rep.scaled_frobenius = scaled_frobenius_error(M_hat, M_star);
  rep.singular_values = singular_values(M_star);
  rep.n_star_proxy = static_cast<double>(n_observed);
  rep.rate_bound_value =
      rate_bound(K, static_cast<int>(M_star.rows()), static_cast<int>(M_star.cols()),
                 rep.n_star_proxy);
  return rep;
}

struct HadamardCheck {
  double lhs = 0.0;  // nuclear norm of the entrywise square of M - M_star
  double rhs = 0.0;  // 2 C^2 sqrt(r + r_star) ||M - M_star||_F
  bool holds = false;
};

// Nuclear-norm bound for the entrywise square of a difference of two
// factor-structured matrices with ball-bounded rows and columns.
inline HadamardCheck hadamard_nuclear_check(const Eigen::MatrixXd& M,
                                            const Eigen::MatrixXd& M_star, double C, int r,
                                            int r_star) {
  if (M.rows() != M_star.rows() || M.cols() != M_star.cols())
    throw std::invalid_argument("hadamard_nuclear_check: shape mismatch");
  const Eigen::MatrixXd D = M - M_star;
  HadamardCheck out;
  out.lhs = nuclear_norm(D.cwiseProduct(D));
  out.rhs = 2.0 * C * C * std::sqrt(static_cast<double>(r + r_star)) * D.norm();
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

// Rows drawn uniformly from the radius-C ball in R^r.
inline Eigen::MatrixXd random_ball_rows(int n, int r, double C, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd X(n, r);
  Eigen::VectorXd v(r);
  for (int i = 0; i < n; ++i) {
    double nrm = 0.0;
    do {
      for (int k = 0; k < r; ++k) v(k) = gauss(rng);
      nrm = v.norm();
    } while (nrm == 0.0);
    const double radius = C * std::pow(unif(rng), 1.0 / r);
    X.row(i) = (v * (radius / nrm)).transpose();
  }
  return X;
}

struct HadamardAudit {
  int trials = 0;
  int violations = 0;
  double max_ratio = 0.0;  // max over trials of lhs / rhs
};

// Randomized audit of the inequality over feasible factor-structured pairs.
inline HadamardAudit run_hadamard_audit(int trials, int N, int J, int r, int r_star, double C,
                                        std::uint64_t seed) {
  auto rng = make_rng(seed);
  HadamardAudit audit;
  audit.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const Eigen::MatrixXd M = random_ball_rows(N, r, C, rng) * random_ball_rows(J, r, C, rng).transpose();
    const Eigen::MatrixXd Ms =
        random_ball_rows(N, r_star, C, rng) * random_ball_rows(J, r_star, C, rng).transpose();
    const HadamardCheck chk = hadamard_nuclear_check(M, Ms, C, r, r_star);
    if (!chk.holds) ++audit.violations;
    if (chk.rhs > 0.0) audit.max_ratio = std::max(audit.max_ratio, chk.lhs / chk.rhs);
  }
  return audit;
}

struct ScalingRow {
  int N = 0, J = 0;
  double n_star = 0.0;
  int reps = 0;
  double mean_scaled_error = 0.0;
  double rate_bound_value = 0.0;
  std::vector<double> errors;
};

// Oracle-K fits on synthetic data across sizes, pairing the empirical mean
// scaled Frobenius error with the theoretical rate for ratio analysis.
// p >= 1 means fully observed.
inline std::vector<ScalingRow> error_scaling_study(const Family& fam, int K_star,
                                                   const std::vector<std::pair<int, int>>& sizes,
                                                   double p, int reps, double phi, double C,
                                                   const FitConfig& cfg, std::uint64_t seed) {
  std::vector<ScalingRow> table;
  for (std::size_t sidx = 0; sidx < sizes.size(); ++sidx) {
    const auto [N, J] = sizes[sidx];
    SimSetting s;
    s.family = fam;
    s.N = N;
    s.J = J;
    s.K_star = K_star;
    s.scheme = p >= 1.0 ? MissingScheme::None : MissingScheme::Uniform;
    s.p = p;
    s.phi = phi;
    s.C = C;
    s.replications = reps;
    s.seed = seed;

    ScalingRow row;
    row.N = N;
    row.J = J;
    row.reps = reps;
    row.n_star = (p >= 1.0 ? 1.0 : p) * static_cast<double>(N) * J;
    row.rate_bound_value = rate_bound(K_star, N, J, row.n_star);

    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
      auto rng = make_rng(stream_seed(splitmix64(seed ^ sidx), static_cast<std::uint64_t>(r)));
      const Truth truth = generate_truth(s, rng);
      const Mask mask = generate_mask(s, truth.params.F, rng);
      const ObservationSet obs = generate_data(fam, truth.M, phi, mask, rng);
      FitConfig fc = cfg;
      fc.seed = stream_seed(splitmix64(seed ^ sidx), static_cast<std::uint64_t>(r));
      const FitResult fit = fit_jml(obs, K_star, fam, C, fc);
      const double err = scaled_frobenius_error(natural_params(fit.params), truth.M);
      row.errors.push_back(err);
      total += err;
    }
    row.mean_scaled_error = total / reps;
    table.push_back(std::move(row));
  }
  return table;
}

struct CurvatureBounds {
  double kappa_sup = 0.0;      // sup of b'' over |x| <= 2 C^2
  double delta_inf_half = 0.0; // half the inf of b'' over |x| <= C^2
};

// Closed-form curvature extremes of the variance function on the natural-
// parameter ranges induced by the constraint radius.
inline CurvatureBounds curvature_bounds(const Family& fam, double C) {
  const double c2 = C * C;
  CurvatureBounds out;
  switch (fam.kind) {
    case FamilyKind::Logistic:
      // b'' peaks at 0 and decays symmetrically
      out.kappa_sup = 0.25;
      out.delta_inf_half = 0.5 * fam.b_double_prime(c2);
      break;
    case FamilyKind::Poisson:
      out.kappa_sup = std::exp(2.0 * c2);
      out.delta_inf_half = 0.5 * std::exp(-c2);
      break;
    case FamilyKind::Gaussian:
      out.kappa_sup = 1.0;
      out.delta_inf_half = 0.5;
      break;
  }
  return out;
}

}  // namespace glfa
