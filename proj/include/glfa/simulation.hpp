#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "glfa/rng.hpp"
#include "glfa/selection.hpp"

namespace glfa {

enum class MissingScheme { None, Uniform, NonUniformFactor1 };

inline const char* missing_scheme_name(MissingScheme s) {
  switch (s) {
    case MissingScheme::None: return "none";
    case MissingScheme::Uniform: return "uniform";
    case MissingScheme::NonUniformFactor1: return "nonuniform_factor1";
  }
  return "unknown";
}

inline MissingScheme parse_missing_scheme(const std::string& s) {
  if (s == "none") return MissingScheme::None;
  if (s == "uniform") return MissingScheme::Uniform;
  if (s == "nonuniform_factor1") return MissingScheme::NonUniformFactor1;
  throw std::invalid_argument("unknown missing scheme '" + s +
                              "' (expected none|uniform|nonuniform_factor1)");
}

struct SimSetting {
  Family family = Family::logistic();
  int N = 1000;
  int J = 100;
  int K_star = 5;
  MissingScheme scheme = MissingScheme::None;
  double p = 1.0;  // observation probability under Uniform
  int replications = 20;
  std::vector<int> candidates{4, 5, 6};
  std::uint64_t seed = 0;
  double C = 4.0;    // constraint radius used when fitting
  double phi = 1.0;  // Gaussian generation variance
  FitConfig fit;
  int threads = 1;

  void validate() const {
    if (N < 1 || J < 1) throw std::invalid_argument("SimSetting: N and J must be positive");
    if (K_star < 1) throw std::invalid_argument("SimSetting: K_star must be >= 1");
    if (scheme == MissingScheme::Uniform && !(p > 0.0 && p < 1.0))
      throw std::invalid_argument("SimSetting: uniform scheme requires 0 < p < 1");
    if (replications < 1) throw std::invalid_argument("SimSetting: replications must be >= 1");
    if (candidates.empty()) throw std::invalid_argument("SimSetting: empty candidate set");
    if (!(phi > 0.0)) throw std::invalid_argument("SimSetting: phi must be positive");
    if (threads < 1) throw std::invalid_argument("SimSetting: threads must be >= 1");
  }
};

struct Mask {
  int N = 0, J = 0;
  std::vector<std::uint8_t> obs;  // row-major
  bool at(int i, int j) const { return obs[static_cast<std::size_t>(i) * J + j] != 0; }
  long long count() const {
    long long n = 0;
    for (auto v : obs) n += v;
    return n;
  }
};

// Standard normal vector conditioned on the ball of the given radius, by
// rejection. The acceptance rate is high for the radii used here; a bound on
// attempts guards against misconfiguration.
inline Eigen::VectorXd sample_ball_truncated_normal(int dim, double radius, std::mt19937_64& rng) {
  if (!(radius > 0.0)) throw std::invalid_argument("sample_ball_truncated_normal: radius must be positive");
  if (dim < 1) throw std::invalid_argument("sample_ball_truncated_normal: dim must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (long attempt = 0; attempt < 1000000L; ++attempt) {
    for (int k = 0; k < dim; ++k) v(k) = gauss(rng);
    if (v.norm() <= radius) return v;
  }
  throw std::invalid_argument("sample_ball_truncated_normal: acceptance probability too low");
}

struct Truth {
  ParameterSet params;
  NaturalParamMatrix M;
};

// True parameters: factor rows truncated in the radius 2*sqrt(2) ball (so
// (||F_i||^2+1)^{1/2} <= 3) and stacked (d_j, A_j) rows in the radius-3 ball.
inline Truth generate_truth(const SimSetting& s, std::mt19937_64& rng) {
  const double factor_radius = 2.0 * std::sqrt(2.0);
  const double item_radius = 3.0;
  const int K = s.K_star;

  Eigen::MatrixXd F(s.N, K);
  for (int i = 0; i < s.N; ++i)
    F.row(i) = sample_ball_truncated_normal(K, factor_radius, rng).transpose();

  Eigen::MatrixXd A(s.J, K);
  Eigen::VectorXd d(s.J);
  for (int j = 0; j < s.J; ++j) {
    const Eigen::VectorXd u = sample_ball_truncated_normal(K + 1, item_radius, rng);
    d(j) = u(0);
    A.row(j) = u.tail(K).transpose();
  }

  Truth t;
  t.params = ParameterSet{std::move(F), std::move(A), std::move(d), 3.0, s.phi};
  t.M = natural_params(t.params);
  return t;
}

// Observation mask. NonUniformFactor1 observes cell (i, j) with probability
// sigmoid(f*_{i1}), constant across the row.
inline Mask generate_mask(const SimSetting& s, const Eigen::MatrixXd& F_star,
                          std::mt19937_64& rng) {
  Mask m;
  m.N = s.N;
  m.J = s.J;
  m.obs.assign(static_cast<std::size_t>(s.N) * s.J, 1);
  if (s.scheme == MissingScheme::None) return m;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (s.scheme == MissingScheme::Uniform) {
    for (auto& v : m.obs) v = unif(rng) < s.p ? 1 : 0;
    return m;
  }
  if (F_star.rows() != s.N || F_star.cols() < 1)
    throw std::invalid_argument("generate_mask: nonuniform scheme needs the true factor scores");
  for (int i = 0; i < s.N; ++i) {
    const double pi = sigmoid(F_star(i, 0));
    for (int j = 0; j < s.J; ++j)
      m.obs[static_cast<std::size_t>(i) * s.J + j] = unif(rng) < pi ? 1 : 0;
  }
  return m;
}

// Draws the observed cells from the family at the true natural parameters.
inline ObservationSet generate_data(const Family& fam, const NaturalParamMatrix& M_star,
                                    double phi, const Mask& mask, std::mt19937_64& rng) {
  if (mask.N != M_star.rows() || mask.J != M_star.cols())
    throw std::invalid_argument("generate_data: mask and matrix shapes disagree");
  std::vector<Triplet> cells;
  cells.reserve(static_cast<std::size_t>(mask.count()));
  for (int i = 0; i < mask.N; ++i)
    for (int j = 0; j < mask.J; ++j)
      if (mask.at(i, j)) cells.push_back({i, j, fam.sample(M_star(i, j), phi, rng)});
  return ObservationSet::from_triplets(mask.N, mask.J, std::move(cells));
}

struct ReplicationOutcome {
  int rep = 0;
  int chosen_K = -1;
  double runtime_seconds = 0.0;
  bool ok = false;
  std::string error;
};

struct StudySummary {
  int replications = 0;
  int correct = 0;
  int under = 0;
  int over = 0;
  int failures = 0;
  std::vector<ReplicationOutcome> reps;
};

// Replication study: generate truth, mask, and data, then run the selection
// pipeline and tally the chosen K against K_star. Each replication has its
// own RNG stream derived from the base seed, so results do not depend on the
// thread count or execution order.
inline StudySummary run_study(const SimSetting& s) {
  s.validate();
  StudySummary sum;
  sum.replications = s.replications;
  sum.reps.resize(s.replications);

  auto worker = [&](int first, int stride) {
    for (int r = first; r < s.replications; r += stride) {
      auto& out = sum.reps[r];
      out.rep = r;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        auto rng = make_rng(stream_seed(s.seed, static_cast<std::uint64_t>(r)));
        const Truth truth = generate_truth(s, rng);
        const Mask mask = generate_mask(s, truth.params.F, rng);
        const ObservationSet obs = generate_data(s.family, truth.M, s.phi, mask, rng);
        FitConfig cfg = s.fit;
        cfg.seed = stream_seed(s.seed, static_cast<std::uint64_t>(r));
        const SelectionResult sel = select_K(obs, s.candidates, s.family, s.C, cfg);
        out.chosen_K = sel.chosen_K;
        out.ok = true;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      out.runtime_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  const int T = std::min(s.threads, s.replications);
  if (T <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(T);
    for (int t = 0; t < T; ++t) pool.emplace_back(worker, t, T);
    for (auto& th : pool) th.join();
  }

  for (const auto& r : sum.reps) {
    if (!r.ok) {
      ++sum.failures;
    } else if (r.chosen_K == s.K_star) {
      ++sum.correct;
    } else if (r.chosen_K < s.K_star) {
      ++sum.under;
    } else {
      ++sum.over;
    }
  }
  return sum;
}

}  // namespace glfa
