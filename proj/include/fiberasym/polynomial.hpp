#pragma once

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "fiberasym/error.hpp"

namespace fiberasym {

struct Monomial {
  double coeff = 0.0;
  std::vector<int> exponents;

  int degree() const {
    int d = 0;
    for (int e : exponents) d += e;
    return d;
  }
};

// Real polynomial in n variables stored as a monomial list. Evaluation and
// differentiation are exact per monomial.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int n, std::vector<Monomial> terms) : n_(n), terms_(std::move(terms)) {
    if (n_ < 1) throw Error(ErrorKind::Input, "germ", "polynomial", "dimension must be >= 1");
    for (const auto& m : terms_) {
      if (static_cast<int>(m.exponents.size()) != n_)
        throw Error(ErrorKind::Input, "germ", "polynomial", "monomial exponent vector has wrong length");
      for (int e : m.exponents)
        if (e < 0) throw Error(ErrorKind::Input, "germ", "polynomial", "negative exponent");
    }
  }

  int dimension() const { return n_; }
  const std::vector<Monomial>& terms() const { return terms_; }

  double operator()(std::span<const double> x) const {
    check(x.size(), "eval");
    double sum = 0.0;
    for (const auto& m : terms_) {
      double v = m.coeff;
      for (int i = 0; i < n_; ++i) v *= ipow(x[i], m.exponents[i]);
      sum += v;
    }
    return sum;
  }

  std::vector<double> gradient(std::span<const double> x) const {
    check(x.size(), "gradient");
    std::vector<double> g(n_, 0.0);
    for (const auto& m : terms_) {
      for (int j = 0; j < n_; ++j) {
        if (m.exponents[j] == 0) continue;
        double v = m.coeff * m.exponents[j];
        for (int i = 0; i < n_; ++i) v *= ipow(x[i], m.exponents[i] - (i == j ? 1 : 0));
        g[j] += v;
      }
    }
    return g;
  }

  bool is_homogeneous(int degree) const {
    for (const auto& m : terms_)
      if (m.degree() != degree) return false;
    return true;
  }

  bool is_zero() const {
    for (const auto& m : terms_)
      if (m.coeff != 0.0) return false;
    return true;
  }

  Polynomial scaled(double c) const {
    auto t = terms_;
    for (auto& m : t) m.coeff *= c;
    return {n_, std::move(t)};
  }

  // p(A x) with A given row-major (n x n); expanded back into monomials.
  Polynomial composed_linear(std::span<const double> a) const {
    if (static_cast<int>(a.size()) != n_ * n_)
      throw Error(ErrorKind::Input, "germ", "compose_linear", "matrix size mismatch");
    using Key = std::vector<int>;
    std::map<Key, double> acc;
    for (const auto& m : terms_) {
      std::map<Key, double> prod{{Key(n_, 0), m.coeff}};
      for (int i = 0; i < n_; ++i) {
        for (int rep = 0; rep < m.exponents[i]; ++rep) {
          // multiply by row i of A: sum_j a_ij x_j
          std::map<Key, double> next;
          for (const auto& [key, c] : prod) {
            for (int j = 0; j < n_; ++j) {
              const double aij = a[i * n_ + j];
              if (aij == 0.0) continue;
              Key k2 = key;
              ++k2[j];
              next[k2] += c * aij;
            }
          }
          prod = std::move(next);
        }
      }
      for (const auto& [key, c] : prod) acc[key] += c;
    }
    std::vector<Monomial> out;
    for (const auto& [key, c] : acc)
      if (c != 0.0) out.push_back({c, key});
    return {n_, std::move(out)};
  }

 private:
  static double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  }
  void check(std::size_t size, const char* op) const {
    if (static_cast<int>(size) != n_) throw Error(ErrorKind::Input, "germ", op, "dimension mismatch");
  }

  int n_ = 0;
  std::vector<Monomial> terms_;
};

}  // namespace fiberasym
