#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "glfa/likelihood.hpp"
#include "glfa/observations.hpp"
#include "glfa/parameters.hpp"

using namespace glfa;
using doctest::Approx;

namespace {

ParameterSet random_params(int N, int J, int K, std::mt19937_64& rng, double C = 4.0) {
  std::uniform_real_distribution<double> unif(-0.6, 0.6);
  ParameterSet p;
  p.F.resize(N, K);
  p.A.resize(J, K);
  p.d.resize(J);
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < K; ++k) p.F(i, k) = unif(rng);
  for (int j = 0; j < J; ++j) {
    p.d(j) = unif(rng);
    for (int k = 0; k < K; ++k) p.A(j, k) = unif(rng);
  }
  p.C = C;
  return p;
}

}  // namespace

TEST_CASE("natural params: zero factors give zero matrix") {
  ParameterSet p;
  p.F = Eigen::MatrixXd::Zero(3, 2);
  p.A = Eigen::MatrixXd::Ones(4, 2);
  p.d = Eigen::VectorXd::Zero(4);
  CHECK(natural_params(p).isZero(0.0));
}

TEST_CASE("natural params: constant structure") {
  ParameterSet p;
  p.F = Eigen::MatrixXd::Ones(4, 1);
  p.A = Eigen::MatrixXd::Constant(3, 1, 2.0);
  p.d = Eigen::VectorXd::Constant(3, 0.5);
  const auto M = natural_params(p);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(M(i, j) == Approx(2.5).epsilon(1e-15));
}

TEST_CASE("natural params match a direct triple loop") {
  std::mt19937_64 rng(19);
  const auto p = random_params(5, 4, 3, rng);
  const auto M = natural_params(p);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      double m = p.d(j);
      for (int k = 0; k < 3; ++k) m += p.A(j, k) * p.F(i, k);
      CHECK(std::abs(M(i, j) - m) <= 1e-12);
    }
  }
}

TEST_CASE("natural params reject mismatched shapes") {
  ParameterSet p;
  p.F = Eigen::MatrixXd::Zero(5, 3);
  p.A = Eigen::MatrixXd::Zero(4, 2);
  p.d = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(natural_params(p), std::invalid_argument);
  p.A = Eigen::MatrixXd::Zero(4, 3);
  p.d = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(natural_params(p), std::invalid_argument);
}

TEST_CASE("constraint checks") {
  ParameterSet p;
  p.C = 2.0;
  p.F = Eigen::MatrixXd::Zero(2, 1);
  p.A = Eigen::MatrixXd::Zero(2, 1);
  p.d = Eigen::VectorXd::Zero(2);
  CHECK(p.satisfies_constraints());
  p.F(0, 0) = std::sqrt(3.0) * (1.0 - 1e-12);  // boundary of sqrt(C^2-1)
  CHECK(p.satisfies_constraints());
  p.F(0, 0) = 2.0;  // (4+1)^{1/2} > 2
  CHECK_FALSE(p.satisfies_constraints());
  p.F(0, 0) = 0.0;
  p.d(0) = 2.5;
  CHECK_FALSE(p.satisfies_constraints());
}

TEST_CASE("observation set bookkeeping") {
  auto obs = ObservationSet::from_triplets(3, 2, {{0, 0, 1.0}, {2, 1, 0.0}, {0, 1, 1.0}});
  CHECK(obs.rows() == 3);
  CHECK(obs.cols() == 2);
  CHECK(obs.n() == 3);
  CHECK(obs.row(0).size() == 2);
  CHECK(obs.row(1).empty());
  CHECK(obs.col(1).size() == 2);
  const auto trips = obs.to_triplets();
  REQUIRE(trips.size() == 3);
  CHECK(trips[0].i == 0);
  CHECK(trips[0].j == 0);
  CHECK(trips[1].j == 1);
  CHECK(trips[2].i == 2);
}

TEST_CASE("observation set rejects bad cells") {
  CHECK_THROWS_WITH_AS(ObservationSet::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 0.0}}),
                       doctest::Contains("duplicate cell (0,0)"), std::invalid_argument);
  CHECK_THROWS_AS(ObservationSet::from_triplets(2, 2, {{2, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(ObservationSet::from_triplets(2, 2, {{0, -1, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(ObservationSet::from_triplets(0, 2, {}), std::invalid_argument);
  CHECK_THROWS_AS(ObservationSet::from_triplets(2, 2, {{0, 0, std::nan("")}}),
                  std::invalid_argument);
}

TEST_CASE("dense construction treats NaN as missing") {
  Eigen::MatrixXd Y(2, 2);
  Y << 1.0, std::nan(""), 0.0, 1.0;
  const auto obs = ObservationSet::from_dense(Y);
  CHECK(obs.n() == 3);
  CHECK(obs.row(0).size() == 1);
  CHECK(obs.row(0).idx[0] == 0);
}

TEST_CASE("family support validation") {
  const auto obs = ObservationSet::from_triplets(2, 2, {{0, 0, 2.0}});
  CHECK_THROWS_AS(obs.validate_for(Family::logistic()), std::domain_error);
  CHECK_NOTHROW(obs.validate_for(Family::poisson()));
  CHECK_NOTHROW(obs.validate_for(Family::gaussian()));
}

TEST_CASE("joint log-likelihood of an empty observation set is zero") {
  ParameterSet p;
  p.F = Eigen::MatrixXd::Zero(2, 1);
  p.A = Eigen::MatrixXd::Zero(2, 1);
  p.d = Eigen::VectorXd::Zero(2);
  const auto obs = ObservationSet::from_triplets(2, 2, {});
  CHECK(joint_log_likelihood(p, obs, Family::logistic()) == 0.0);
}

TEST_CASE("a fair coin scores log one half") {
  ParameterSet p;
  p.F = Eigen::MatrixXd::Zero(1, 1);
  p.A = Eigen::MatrixXd::Zero(1, 1);
  p.d = Eigen::VectorXd::Zero(1);
  const auto obs = ObservationSet::from_triplets(1, 1, {{0, 0, 1.0}});
  CHECK(joint_log_likelihood(p, obs, Family::logistic()) ==
        Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("poisson likelihood matches a per-cell mass oracle") {
  std::mt19937_64 rng(23);
  const auto p = random_params(5, 4, 2, rng);
  const auto M = natural_params(p);
  std::vector<Triplet> cells;
  std::uniform_int_distribution<int> ygen(0, 8);
  for (int t = 0; t < 10; ++t) cells.push_back({t % 5, (t * 3 + 1) % 4, double(ygen(rng))});
  const auto obs = ObservationSet::from_triplets(5, 4, cells);

  double expect = 0.0;
  for (const auto& c : cells) {
    const double lambda = std::exp(M(c.i, c.j));
    double logfact = 0.0;
    for (int v = 2; v <= static_cast<int>(c.y); ++v) logfact += std::log(double(v));
    expect += c.y * std::log(lambda) - lambda - logfact;
  }
  const double got = joint_log_likelihood(p, obs, Family::poisson());
  CHECK(std::abs(got - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
}

TEST_CASE("likelihood adds over disjoint observation subsets") {
  std::mt19937_64 rng(29);
  const auto p = random_params(6, 5, 2, rng);
  const auto M = natural_params(p);
  std::vector<Triplet> all, part1, part2;
  std::bernoulli_distribution split(0.5);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 5; ++j) {
      const Triplet t{i, j, coin(rng) ? 1.0 : 0.0};
      all.push_back(t);
      (split(rng) ? part1 : part2).push_back(t);
    }
  }
  const Family fam = Family::logistic();
  const double whole = joint_log_likelihood(p, ObservationSet::from_triplets(6, 5, all), fam);
  const double a = joint_log_likelihood(p, ObservationSet::from_triplets(6, 5, part1), fam);
  const double b = joint_log_likelihood(p, ObservationSet::from_triplets(6, 5, part2), fam);
  CHECK(std::abs(whole - (a + b)) <= 1e-12 * std::abs(whole));
}

TEST_CASE("likelihood rejects values outside the family support") {
  ParameterSet p;
  p.F = Eigen::MatrixXd::Zero(1, 1);
  p.A = Eigen::MatrixXd::Zero(1, 1);
  p.d = Eigen::VectorXd::Zero(1);
  const auto obs = ObservationSet::from_triplets(1, 1, {{0, 0, 3.5}});
  CHECK_THROWS_AS(joint_log_likelihood(p, obs, Family::logistic()), std::domain_error);
  CHECK_THROWS_AS(joint_log_likelihood(p, obs, Family::poisson()), std::domain_error);
}

TEST_CASE("likelihood rejects mismatched dimensions") {
  ParameterSet p;
  p.F = Eigen::MatrixXd::Zero(2, 1);
  p.A = Eigen::MatrixXd::Zero(2, 1);
  p.d = Eigen::VectorXd::Zero(2);
  const auto obs = ObservationSet::from_triplets(3, 2, {{0, 0, 1.0}});
  CHECK_THROWS_AS(joint_log_likelihood(p, obs, Family::logistic()), std::invalid_argument);
}
