#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glfa/diagnostics.hpp"
#include "glfa/simulation.hpp"

using namespace glfa;
using doctest::Approx;

TEST_CASE("ball-truncated draws respect the factor radius") {
  auto rng = make_rng(1);
  const double radius = 2.0 * std::sqrt(2.0);
  for (int t = 0; t < 10000; ++t)
    CHECK(sample_ball_truncated_normal(5, radius, rng).norm() <= radius);
}

TEST_CASE("ball-truncated draws respect the item radius") {
  auto rng = make_rng(2);
  for (int t = 0; t < 2000; ++t)
    CHECK(sample_ball_truncated_normal(6, 3.0, rng).norm() <= 3.0);
}

TEST_CASE("a huge radius recovers untruncated normal moments") {
  auto rng = make_rng(3);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) mean += sample_ball_truncated_normal(5, 100.0, rng);
  mean /= draws;
  for (int k = 0; k < 5; ++k) CHECK(std::abs(mean(k)) <= 0.05);
}

TEST_CASE("an unreachable radius is reported as a configuration problem") {
  auto rng = make_rng(4);
  CHECK_THROWS_AS(sample_ball_truncated_normal(80, 1e-6, rng), std::invalid_argument);
}

TEST_CASE("generated truth satisfies the feasibility margins") {
  SimSetting s;
  s.N = 200;
  s.J = 40;
  s.K_star = 5;
  auto rng = make_rng(5);
  const Truth truth = generate_truth(s, rng);
  for (int i = 0; i < s.N; ++i)
    CHECK(std::sqrt(truth.params.F.row(i).squaredNorm() + 1.0) <= 3.0 + 1e-12);
  for (int j = 0; j < s.J; ++j) {
    const double norm2 =
        truth.params.d(j) * truth.params.d(j) + truth.params.A.row(j).squaredNorm();
    CHECK(std::sqrt(norm2) <= 3.0 + 1e-12);
  }
  // feasible with margin for the fitting constraint C = 4
  CHECK(truth.params.satisfies_constraints());
  // every natural parameter is bounded by the product of the ball radii
  CHECK(truth.M.cwiseAbs().maxCoeff() <= 9.0 + 1e-12);
}

TEST_CASE("generated truth has numerical rank K_star + 1") {
  SimSetting s;
  s.N = 120;
  s.J = 30;
  s.K_star = 3;
  auto rng = make_rng(6);
  const Truth truth = generate_truth(s, rng);
  const Eigen::VectorXd sv = singular_values(truth.M);
  CHECK(sv(s.K_star) > 1e-8 * sv(0));      // K*+1 nonzero values
  CHECK(sv(s.K_star + 1) <= 1e-8 * sv(0));  // and nothing beyond
}

TEST_CASE("no missingness observes every cell") {
  SimSetting s;
  s.N = 30;
  s.J = 20;
  s.K_star = 2;
  auto rng = make_rng(7);
  const Truth truth = generate_truth(s, rng);
  const Mask m = generate_mask(s, truth.params.F, rng);
  CHECK(m.count() == 600);
}

TEST_CASE("uniform missingness concentrates near its rate") {
  SimSetting s;
  s.N = 100;
  s.J = 100;
  s.K_star = 2;
  s.scheme = MissingScheme::Uniform;
  s.p = 0.5;
  auto rng = make_rng(8);
  const Truth truth = generate_truth(s, rng);
  const Mask m = generate_mask(s, truth.params.F, rng);
  const double rate = double(m.count()) / (100.0 * 100.0);
  CHECK(rate >= 0.45);
  CHECK(rate <= 0.55);
}

TEST_CASE("first-factor missingness keeps observation rates inside the stated band") {
  SimSetting s;
  s.N = 400;
  s.J = 50;
  s.K_star = 5;
  s.scheme = MissingScheme::NonUniformFactor1;
  auto rng = make_rng(9);
  const Truth truth = generate_truth(s, rng);
  for (int i = 0; i < s.N; ++i) {
    const double p = sigmoid(truth.params.F(i, 0));
    CHECK(p >= 0.0557);
    CHECK(p <= 0.9443);
  }
  const Mask m = generate_mask(s, truth.params.F, rng);
  CHECK(m.count() > 0);
  CHECK(m.count() < static_cast<long long>(s.N) * s.J);
}

TEST_CASE("sampled data match the family moments") {
  auto rng = make_rng(10);
  const int n = 100000;

  SUBCASE("fair-coin logistic mean") {
    double sum = 0.0;
    for (int t = 0; t < n; ++t) sum += Family::logistic().sample(0.0, 1.0, rng);
    CHECK(sum / n >= 0.495);
    CHECK(sum / n <= 0.505);
  }
  SUBCASE("poisson mean at natural parameter one") {
    double sum = 0.0;
    for (int t = 0; t < n; ++t) sum += Family::poisson().sample(1.0, 1.0, rng);
    const double e = std::exp(1.0);
    CHECK(std::abs(sum / n - e) <= 3.0 * std::sqrt(e / n));
  }
  SUBCASE("gaussian variance at unit dispersion") {
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < n; ++t) {
      const double y = Family::gaussian().sample(0.0, 1.0, rng);
      sum += y;
      sumsq += y * y;
    }
    const double var = sumsq / n - (sum / n) * (sum / n);
    CHECK(var >= 0.98);
    CHECK(var <= 1.02);
  }
}

TEST_CASE("generate_data only fills observed cells") {
  SimSetting s;
  s.N = 40;
  s.J = 10;
  s.K_star = 2;
  s.scheme = MissingScheme::Uniform;
  s.p = 0.4;
  auto rng = make_rng(11);
  const Truth truth = generate_truth(s, rng);
  const Mask m = generate_mask(s, truth.params.F, rng);
  const auto obs = generate_data(s.family, truth.M, 1.0, m, rng);
  CHECK(obs.n() == m.count());
  for (const auto& c : obs.to_triplets()) CHECK(m.at(c.i, c.j));
}

TEST_CASE("studies replay identically and ignore the thread count") {
  SimSetting s;
  s.family = Family::logistic();
  s.N = 150;
  s.J = 24;
  s.K_star = 2;
  s.candidates = {1, 2, 3};
  s.replications = 4;
  s.scheme = MissingScheme::Uniform;
  s.p = 0.8;
  s.seed = 404;
  s.fit.max_sweeps = 200;

  const StudySummary one = run_study(s);
  const StudySummary again = run_study(s);
  SimSetting threaded = s;
  threaded.threads = 3;
  const StudySummary par = run_study(threaded);

  CHECK(one.correct + one.under + one.over == s.replications);
  CHECK(one.failures == 0);
  REQUIRE(one.reps.size() == 4);
  for (int r = 0; r < 4; ++r) {
    CHECK(one.reps[r].chosen_K == again.reps[r].chosen_K);
    CHECK(one.reps[r].chosen_K == par.reps[r].chosen_K);
  }
  CHECK(one.correct == par.correct);
  CHECK(one.under == par.under);
  CHECK(one.over == par.over);
  // this easy setting should mostly recover the truth
  CHECK(one.correct >= 3);
}

TEST_CASE("per-replication failures are recorded without aborting the study") {
  SimSetting s;
  s.family = Family::logistic();
  s.N = 30;
  s.J = 6;
  s.K_star = 1;
  s.candidates = {6};  // K+1 = 7 > min(N,J): every fit fails
  s.replications = 3;
  s.seed = 1;
  const StudySummary sum = run_study(s);
  CHECK(sum.failures == 3);
  CHECK(sum.correct + sum.under + sum.over == 0);
  for (const auto& r : sum.reps) {
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.error.empty());
  }
}

TEST_CASE("setting validation") {
  SimSetting s;
  s.scheme = MissingScheme::Uniform;
  s.p = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.p = 0.5;
  s.K_star = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.K_star = 2;
  s.replications = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.replications = 5;
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS(parse_missing_scheme("sometimes"), std::invalid_argument);
}
