#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "glfa/errors.hpp"
#include "glfa/estimator.hpp"

namespace glfa {

// Criterion penalty v(n, N, J, K) = K * max(N,J) * log(n / max(N,J)), natural
// logarithm. Linear in K by construction. With no missing data (n = N*J) the
// log argument reduces to min(N, J) exactly.
inline double penalty(long long n, int N, int J, int K) {
  if (n < 1) throw std::invalid_argument("penalty: n must be >= 1");
  if (N < 1 || J < 1) throw std::invalid_argument("penalty: N and J must be >= 1");
  if (K < 0) throw std::invalid_argument("penalty: K must be >= 0");
  const double nj = static_cast<double>(std::max(N, J));
  const double base = nj * std::log(static_cast<double>(n) / nj);
  return static_cast<double>(K) * base;
}

// The criterion is only trustworthy when the penalty is positive.
inline bool penalty_reliable(long long n, int N, int J) {
  return n > static_cast<long long>(std::max(N, J));
}

using PenaltyFn = std::function<double(long long n, int N, int J, int K)>;

inline double jic(const FitResult& fit, long long n, int N, int J) {
  return -2.0 * fit.loglik + penalty(n, N, J, fit.K);
}

// Plug-in dispersion from the largest fitted model: mean squared residual
// over the observed cells. Families with fixed dispersion return 1 exactly.
// An (almost) interpolating fit is floored at 1e-12.
inline double estimate_dispersion(const FitResult& fit_kmax, const ObservationSet& obs,
                                  const Family& fam) {
  if (fam.dispersion_known()) return 1.0;
  if (obs.n() == 0) throw std::invalid_argument("estimate_dispersion: no observed cells");
  const ParameterSet& p = fit_kmax.params;
  detail::check_dims(p, obs);
  double rss = 0.0;
  for (int i = 0; i < obs.rows(); ++i) {
    const auto cells = obs.row(i);
    const auto f = p.F.row(i);
    for (std::size_t t = 0; t < cells.size(); ++t) {
      const int j = cells.idx[t];
      const double r = cells.y[t] - (p.d(j) + p.A.row(j).dot(f));
      rss += r * r;
    }
  }
  return std::max(rss / static_cast<double>(obs.n()), 1e-12);
}

struct SelectionRow {
  int K = 0;
  double deviance = std::numeric_limits<double>::quiet_NaN();
  double penalty = std::numeric_limits<double>::quiet_NaN();
  double jic = std::numeric_limits<double>::quiet_NaN();
  int sweeps_used = 0;
  bool converged = false;
  bool ok = false;
  std::string error;
};

struct SelectionResult {
  std::vector<SelectionRow> rows;  // sorted by K ascending, one per candidate
  int chosen_K = 0;
  double phi_used = 1.0;
  long long n = 0;
  int N = 0;
  int J = 0;
};

// Fits every candidate K and scores it with the criterion. Candidates are
// deduplicated and sorted, so the outcome does not depend on their order;
// ties go to the smaller K. Per-candidate fit seeds are cfg.seed XOR K. For
// the Gaussian family the dispersion is estimated once from the largest
// successfully fitted candidate and shared across all rows. Failed fits are
// recorded per row; if every fit fails this throws.
inline SelectionResult select_K(const ObservationSet& obs, std::vector<int> candidates,
                                const Family& fam, double C, const FitConfig& cfg = {},
                                const PenaltyFn& penalty_fn = {}) {
  if (candidates.empty()) throw std::invalid_argument("select_K: empty candidate set");
  for (int K : candidates)
    if (K < 1) throw std::invalid_argument("select_K: candidates must be >= 1");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<std::optional<FitResult>> fits(candidates.size());
  std::vector<std::string> errors(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    FitConfig ck = cfg;
    ck.seed = cfg.seed ^ static_cast<std::uint64_t>(candidates[c]);
    try {
      fits[c] = fit_jml(obs, candidates[c], fam, C, ck);
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  }

  SelectionResult out;
  out.n = obs.n();
  out.N = obs.rows();
  out.J = obs.cols();

  // dispersion plug-in from the largest successful fit
  out.phi_used = 1.0;
  if (!fam.dispersion_known()) {
    for (std::size_t c = candidates.size(); c-- > 0;) {
      if (fits[c]) {
        out.phi_used = estimate_dispersion(*fits[c], obs, fam);
        break;
      }
    }
  }

  bool any_ok = false;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    SelectionRow row;
    row.K = candidates[c];
    row.penalty = penalty_fn ? penalty_fn(out.n, out.N, out.J, row.K)
                             : penalty(out.n, out.N, out.J, row.K);
    if (fits[c]) {
      double ll = fits[c]->loglik;
      if (!fam.dispersion_known()) {
        ParameterSet p = fits[c]->params;
        p.phi = out.phi_used;
        ll = joint_log_likelihood(p, obs, fam);
      }
      row.deviance = -2.0 * ll;
      row.jic = row.deviance + row.penalty;
      row.sweeps_used = fits[c]->sweeps_used;
      row.converged = fits[c]->converged;
      row.ok = true;
      any_ok = true;
    } else {
      row.error = errors[c];
    }
    out.rows.push_back(std::move(row));
  }
  if (!any_ok) throw numerical_error("select_K: every candidate fit failed");

  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : out.rows) {
    if (row.ok && row.jic < best) {
      best = row.jic;
      out.chosen_K = row.K;
    }
  }
  return out;
}

}  // namespace glfa
