#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace glfa {

enum class FamilyKind { Logistic, Poisson, Gaussian };

// Numerically stable logistic mean exp(x)/(1+exp(x)).
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Exponential-family ingredients: cumulant b, mean b', variance b'', and the
// parameter-free normaliser c(y, phi) of the log density
//   [y*x - b(x)]/phi + c(y, phi).
struct Family {
  FamilyKind kind = FamilyKind::Logistic;

  static Family logistic() { return {FamilyKind::Logistic}; }
  static Family poisson() { return {FamilyKind::Poisson}; }
  static Family gaussian() { return {FamilyKind::Gaussian}; }

  // Logistic and Poisson fix phi = 1; only the Gaussian dispersion is free.
  bool dispersion_known() const { return kind != FamilyKind::Gaussian; }

  const char* name() const {
    switch (kind) {
      case FamilyKind::Logistic: return "logistic";
      case FamilyKind::Poisson: return "poisson";
      case FamilyKind::Gaussian: return "gaussian";
    }
    return "unknown";
  }

  static Family parse(const std::string& s) {
    if (s == "logistic") return logistic();
    if (s == "poisson") return poisson();
    if (s == "gaussian") return gaussian();
    throw std::invalid_argument("unknown family '" + s + "' (expected logistic|poisson|gaussian)");
  }

  double b(double x) const {
    check_finite(x);
    switch (kind) {
      case FamilyKind::Logistic:
        // log(1+exp(x)) without overflow for large |x|
        return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
      case FamilyKind::Poisson:
        return std::exp(x);
      case FamilyKind::Gaussian:
        return 0.5 * x * x;
    }
    return 0.0;
  }

  double b_prime(double x) const {
    check_finite(x);
    switch (kind) {
      case FamilyKind::Logistic: return sigmoid(x);
      case FamilyKind::Poisson: return std::exp(x);
      case FamilyKind::Gaussian: return x;
    }
    return 0.0;
  }

  double b_double_prime(double x) const {
    check_finite(x);
    switch (kind) {
      case FamilyKind::Logistic: {
        const double p = sigmoid(x);
        return p * (1.0 - p);
      }
      case FamilyKind::Poisson: return std::exp(x);
      case FamilyKind::Gaussian: return 1.0;
    }
    return 0.0;
  }

  double log_normalizer(double y, double phi) const {
    switch (kind) {
      case FamilyKind::Logistic: return 0.0;
      case FamilyKind::Poisson: return -std::lgamma(y + 1.0);
      case FamilyKind::Gaussian:
        return -0.5 * y * y / phi - 0.5 * std::log(2.0 * std::numbers::pi * phi);
    }
    return 0.0;
  }

  bool valid_y(double y) const {
    if (!std::isfinite(y)) return false;
    switch (kind) {
      case FamilyKind::Logistic: return y == 0.0 || y == 1.0;
      case FamilyKind::Poisson: return y >= 0.0 && std::floor(y) == y;
      case FamilyKind::Gaussian: return true;
    }
    return false;
  }

  // One draw with natural parameter m (and variance phi for Gaussian).
  double sample(double m, double phi, std::mt19937_64& rng) const {
    switch (kind) {
      case FamilyKind::Logistic: {
        std::bernoulli_distribution coin(sigmoid(m));
        return coin(rng) ? 1.0 : 0.0;
      }
      case FamilyKind::Poisson: {
        std::poisson_distribution<long> pois(std::exp(m));
        return static_cast<double>(pois(rng));
      }
      case FamilyKind::Gaussian: {
        std::normal_distribution<double> gauss(m, std::sqrt(phi));
        return gauss(rng);
      }
    }
    return 0.0;
  }

 private:
  static void check_finite(double x) {
    if (!std::isfinite(x)) throw std::domain_error("Family: non-finite natural parameter");
  }
};

}  // namespace glfa
