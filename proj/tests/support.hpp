#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fiberasym/brackets.hpp"
#include "fiberasym/germ.hpp"

namespace testing_support {

using namespace fiberasym;

inline constexpr double pi = std::numbers::pi;

inline double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

// g(t, x) = e^{-|x|^2} / (1 + t^2)
inline Symbol cauchy_gauss(int n) {
  Symbol s;
  s.name = "cauchy*gaussian";
  s.t_part = [](double t) { return 1.0 / (1.0 + t * t); };
  s.x_part = [](std::span<const double> x) { return std::exp(-sq_norm(x)); };
  s.g = [](double t, std::span<const double> x) { return std::exp(-sq_norm(x)) / (1.0 + t * t); };
  s.x0.assign(n, 0.0);
  s.t_decay_plus = Decay::power(2.0, 2.0);
  s.t_decay_minus = Decay::power(2.0, 2.0);
  s.x_decay = {XDecay::Kind::Gaussian, 1.0, 1.0, 1.0};
  return s;
}

// g(t, x) = e^{-t} 1_{t >= 0} e^{-|x|^2}
inline Symbol exp_gauss(int n) {
  Symbol s;
  s.name = "exp-decay*gaussian";
  s.t_part = [](double t) { return t >= 0.0 ? std::exp(-t) : 0.0; };
  s.x_part = [](std::span<const double> x) { return std::exp(-sq_norm(x)); };
  s.g = [](double t, std::span<const double> x) { return t >= 0.0 ? std::exp(-t - sq_norm(x)) : 0.0; };
  s.x0.assign(n, 0.0);
  s.t_decay_plus = Decay::exponential(1.0);
  s.t_decay_minus = Decay::compact(0.0);
  s.x_decay = {XDecay::Kind::Gaussian, 1.0, 1.0, 1.0};
  return s;
}

inline Germ sum_of_powers(int n, int p, std::vector<double> a, double sign = 1.0) {
  std::vector<Monomial> m;
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(n, 0);
    e[i] = p;
    m.push_back({sign * a[i], e});
  }
  return Germ::make(n, p, m);
}

inline Germ conical() { return Germ::make(2, 2, {{1.0, {2, 0}}, {-1.0, {0, 2}}}); }
inline Germ quartic() { return Germ::make(2, 4, {{1.0, {4, 0}}, {-1.0, {0, 4}}}); }
inline Germ cone3() { return Germ::make(3, 2, {{1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}, {-1.0, {0, 0, 2}}}); }

// Haar-random orthogonal matrix, row-major.
inline std::vector<double> random_rotation(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = N(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ();
  std::vector<double> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.push_back(Q(i, j));
  return out;
}

inline Germ rotated(const Germ& g, const std::vector<double>& R) { return g.with_fk(g.fk().composed_linear(R)); }

}  // namespace testing_support
