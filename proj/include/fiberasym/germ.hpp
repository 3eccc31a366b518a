#pragma once

// Singularity germ f = f_k + r near x0 and the numerical classification of
// the critical point: definite jet (extremum), real principal type (f_k has
// an isolated singularity), or unsupported.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fiberasym/error.hpp"
#include "fiberasym/polynomial.hpp"
#include "fiberasym/random.hpp"

namespace fiberasym {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Remainders are referenced by registry name so that germs stay serializable.
// Each entry maps (n, k, scale) to an evaluator r(y), y = x - x0, with
// r = O(|y|^{k+1}).
struct Remainder {
  std::string name = "none";
  double scale = 0.0;
  std::function<double(std::span<const double>)> eval;
};

inline Remainder make_remainder(const std::string& name, int n, int k, double scale) {
  (void)n;
  if (name == "none") return {name, 0.0, nullptr};
  if (name == "x1-power") {
    // scale * y_1^{k+1}
    return {name, scale, [k, scale](std::span<const double> y) { return scale * std::pow(y[0], k + 1); }};
  }
  if (name == "radial-power") {
    // scale * |y|^{k+2}
    return {name, scale, [k, scale](std::span<const double> y) { return scale * std::pow(norm(y), k + 2); }};
  }
  throw Error(ErrorKind::Input, "germ", "remainder", "unknown remainder registry name '" + name + "'");
}

class Germ {
 public:
  static Germ make(int n, int k, std::vector<Monomial> monomials, Vec x0 = {}, const std::string& remainder = "none",
                   double remainder_scale = 0.1) {
    if (n < 2) throw Error(ErrorKind::Input, "germ", "make", "dimension n must be >= 2");
    if (k < 2) throw Error(ErrorKind::Input, "germ", "make", "degree k must be >= 2");
    Polynomial fk(n, std::move(monomials));
    if (!fk.is_homogeneous(k))
      throw Error(ErrorKind::Input, "germ", "make", "every monomial must have total degree exactly k");
    if (fk.is_zero()) throw Error(ErrorKind::Input, "germ", "make", "f_k is identically zero");
    if (x0.empty()) x0.assign(n, 0.0);
    if (static_cast<int>(x0.size()) != n) throw Error(ErrorKind::Input, "germ", "make", "x0 has wrong length");
    Germ g;
    g.n_ = n;
    g.k_ = k;
    g.fk_ = std::move(fk);
    g.x0_ = std::move(x0);
    g.remainder_ = make_remainder(remainder, n, k, remainder_scale);
    return g;
  }

  int n() const { return n_; }
  int k() const { return k_; }
  const Polynomial& fk() const { return fk_; }
  const Vec& x0() const { return x0_; }
  const Remainder& remainder() const { return remainder_; }

  // Full germ f(x) = f_k(x - x0) + r(x - x0).
  double full(std::span<const double> x) const {
    Vec y(n_);
    for (int i = 0; i < n_; ++i) y[i] = x[i] - x0_[i];
    double v = fk_(y);
    if (remainder_.eval) v += remainder_.eval(y);
    return v;
  }

  Germ with_fk(Polynomial fk) const {
    Germ g = *this;
    g.fk_ = std::move(fk);
    return g;
  }

 private:
  int n_ = 0;
  int k_ = 0;
  Polynomial fk_;
  Vec x0_;
  Remainder remainder_;
};

inline double eval_fk(const Germ& germ, std::span<const double> x) {
  if (static_cast<int>(x.size()) != germ.n())
    throw Error(ErrorKind::Input, "germ", "eval_fk", "point has wrong dimension");
  return germ.fk()(x);
}

// P_θ ∇f_k(θ): the gradient with its radial component removed.
inline Vec tangential_gradient(const Germ& germ, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != germ.n())
    throw Error(ErrorKind::Input, "germ", "tangential_gradient", "point has wrong dimension");
  if (std::abs(norm(theta) - 1.0) > 1e-12)
    throw Error(ErrorKind::Input, "germ", "tangential_gradient", "theta must be a unit vector");
  Vec g = germ.fk().gradient(theta);
  const double radial = dot(g, theta);
  for (int i = 0; i < germ.n(); ++i) g[i] -= radial * theta[i];
  return g;
}

enum class CaseTag { ExtremumMin, ExtremumMax, PrincipalType, RegularFiber, Unsupported };

inline const char* to_string(CaseTag c) {
  switch (c) {
    case CaseTag::ExtremumMin: return "ExtremumMin";
    case CaseTag::ExtremumMax: return "ExtremumMax";
    case CaseTag::PrincipalType: return "PrincipalType";
    case CaseTag::RegularFiber: return "RegularFiber";
    case CaseTag::Unsupported: return "Unsupported";
  }
  return "Unsupported";
}

inline CaseTag case_from_string(const std::string& s) {
  for (auto c : {CaseTag::ExtremumMin, CaseTag::ExtremumMax, CaseTag::PrincipalType, CaseTag::RegularFiber,
                 CaseTag::Unsupported})
    if (s == to_string(c)) return c;
  throw Error(ErrorKind::Input, "germ", "classify", "unknown case tag '" + s + "'");
}

struct ClassifyOptions {
  double eps_def = 1e-8;
  double eps_grad = 1e-6;
  int sample_order = 0;  // 0: automatic (>= 8k points per great circle)
};

struct Classification {
  CaseTag tag = CaseTag::Unsupported;
  double min_abs_fk = 0.0;
  double max_abs_fk = 0.0;
  double min_tangential_gradient = std::numeric_limits<double>::infinity();
  std::vector<Vec> zeros;  // located points of C(f_k)
  std::vector<double> zero_gradient_norms;
  ClassifyOptions tolerances;
  int sample_order = 0;
  std::size_t sample_count = 0;
  std::string reason;

  bool is_extremum() const { return tag == CaseTag::ExtremumMin || tag == CaseTag::ExtremumMax; }
};

namespace detail {

// Sample points on S^{n-1} with an adjacency list of short geodesic edges.
struct SphereGrid {
  std::vector<Vec> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  double spacing = 0.0;
};

inline SphereGrid classification_grid(int n, int order) {
  SphereGrid grid;
  const double pi = std::numbers::pi;
  if (n == 2) {
    const double d = 2.0 * pi / order;
    grid.spacing = d;
    for (int i = 0; i < order; ++i) {
      const double t = (i + 0.1234) * d;
      grid.nodes.push_back({std::cos(t), std::sin(t)});
      grid.edges.emplace_back(i, (i + 1) % order);
    }
    return grid;
  }
  if (n == 3) {
    const int rings = std::max(order / 2, 4);
    const int lon = 2 * rings;
    grid.spacing = pi / rings;
    for (int i = 0; i < rings; ++i) {
      const double phi = (i + 0.5) * pi / rings;
      for (int j = 0; j < lon; ++j) {
        const double psi = 2.0 * pi * (j + 0.3719) / lon;
        grid.nodes.push_back({std::sin(phi) * std::cos(psi), std::sin(phi) * std::sin(psi), std::cos(phi)});
      }
    }
    auto id = [lon](int i, int j) { return static_cast<std::size_t>(i * lon + (j % lon)); };
    for (int i = 0; i < rings; ++i)
      for (int j = 0; j < lon; ++j) {
        grid.edges.emplace_back(id(i, j), id(i, j + 1));
        if (i + 1 < rings) grid.edges.emplace_back(id(i, j), id(i + 1, j));
      }
    for (int j = 0; j < lon / 2; ++j) {  // across the poles
      grid.edges.emplace_back(id(0, j), id(0, j + lon / 2));
      grid.edges.emplace_back(id(rings - 1, j), id(rings - 1, j + lon / 2));
    }
    return grid;
  }
  // n >= 4: seeded random great circles.
  const int circles = 24 * n;
  const double d = 2.0 * pi / order;
  grid.spacing = d;
  CounterRng rng(0x5eed5eedULL);
  for (int c = 0; c < circles; ++c) {
    Vec u(n), v(n);
    for (int i = 0; i < n; ++i) {
      u[i] = rng.normal(2 * c, i);
      v[i] = rng.normal(2 * c + 1, i);
    }
    const double nu = norm(u);
    for (auto& x : u) x /= nu;
    const double proj = dot(u, v);
    for (int i = 0; i < n; ++i) v[i] -= proj * u[i];
    const double nv = norm(v);
    for (auto& x : v) x /= nv;
    const std::size_t base = grid.nodes.size();
    for (int i = 0; i < order; ++i) {
      const double t = i * d;
      Vec p(n);
      for (int a = 0; a < n; ++a) p[a] = std::cos(t) * u[a] + std::sin(t) * v[a];
      grid.nodes.push_back(std::move(p));
      grid.edges.emplace_back(base + i, base + (i + 1) % order);
    }
  }
  return grid;
}

inline Vec normalized(Vec v) {
  const double r = norm(v);
  for (auto& x : v) x /= r;
  return v;
}

inline Vec arc_point(const Vec& p, const Vec& q, double t) {
  Vec r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = (1.0 - t) * p[i] + t * q[i];
  return normalized(std::move(r));
}

// Orthonormal basis of the tangent space at p.
inline std::vector<Vec> tangent_basis(const Vec& p) {
  const std::size_t n = p.size();
  std::vector<Vec> basis;
  for (std::size_t c = 0; c < n && basis.size() + 1 < n; ++c) {
    Vec e(n, 0.0);
    e[c] = 1.0;
    const double pr = dot(e, p);
    for (std::size_t i = 0; i < n; ++i) e[i] -= pr * p[i];
    for (const auto& b : basis) {
      const double pb = dot(e, b);
      for (std::size_t i = 0; i < n; ++i) e[i] -= pb * b[i];
    }
    const double r = norm(e);
    if (r < 1e-6) continue;
    for (auto& x : e) x /= r;
    basis.push_back(std::move(e));
  }
  return basis;
}

// Coordinate-wise golden-section descent of |f| along tangent geodesics.
template <class F>
Vec refine_touch_point(F&& f, Vec p, double radius) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < 30; ++sweep) {
    for (const auto& e : tangent_basis(p)) {
      auto along = [&](double s) {
        Vec q(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) q[i] = std::cos(s) * p[i] + std::sin(s) * e[i];
        return q;
      };
      double lo = -radius, hi = radius;
      double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
      double fc = std::abs(f(along(c))), fd = std::abs(f(along(d)));
      for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - phi * (hi - lo);
          fc = std::abs(f(along(c)));
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + phi * (hi - lo);
          fd = std::abs(f(along(d)));
        }
      }
      Vec cand = normalized(along(0.5 * (lo + hi)));
      if (std::abs(f(cand)) <= std::abs(f(p))) p = std::move(cand);
    }
    radius *= 0.5;
  }
  return p;
}

}  // namespace detail

// Decide the regime of the critical point from sphere samples of f_k.
inline Classification classify(const Germ& germ, const ClassifyOptions& tol = {}) {
  const int n = germ.n();
  const int k = germ.k();
  Classification out;
  out.tolerances = tol;
  int order = tol.sample_order > 0 ? tol.sample_order : 0;
  order = std::max(order, 8 * k);
  if (n == 2) order = std::max(order, 64);
  if (n == 3) order = std::max(order, 48);
  if (n >= 4) order = std::max(order, 32);
  out.sample_order = order;

  const auto grid = detail::classification_grid(n, order);
  out.sample_count = grid.nodes.size();
  std::vector<double> vals(grid.nodes.size());
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) vals[i] = eval_fk(germ, grid.nodes[i]);
  out.min_abs_fk = std::numeric_limits<double>::infinity();
  out.max_abs_fk = 0.0;
  for (double v : vals) {
    out.min_abs_fk = std::min(out.min_abs_fk, std::abs(v));
    out.max_abs_fk = std::max(out.max_abs_fk, std::abs(v));
  }
  auto fk = [&](const Vec& p) { return eval_fk(germ, p); };

  // Sign-change edges, refined by bisection along the geodesic segment.
  std::vector<char> touches_change(grid.nodes.size(), 0);
  for (auto [a, b] : grid.edges) {
    const double fa = vals[a], fb = vals[b];
    if (fa == 0.0) {
      out.zeros.push_back(grid.nodes[a]);
      continue;
    }
    if ((fa < 0.0) == (fb < 0.0) || fb == 0.0) continue;
    touches_change[a] = touches_change[b] = 1;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = fk(detail::arc_point(grid.nodes[a], grid.nodes[b], mid));
      if ((fm < 0.0) == (fa < 0.0))
        lo = mid;
      else
        hi = mid;
    }
    out.zeros.push_back(detail::arc_point(grid.nodes[a], grid.nodes[b], 0.5 * (lo + hi)));
  }

  // Touching zeros: local minima of |f_k| with no sign change around them.
  std::vector<std::vector<std::size_t>> nbrs(grid.nodes.size());
  for (auto [a, b] : grid.edges) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  }
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    if (touches_change[i] || vals[i] == 0.0) continue;
    const double v = std::abs(vals[i]);
    if (v > 1e-2 * out.max_abs_fk) continue;
    bool is_min = true;
    for (auto j : nbrs[i])
      if (std::abs(vals[j]) < v) is_min = false;
    if (!is_min) continue;
    Vec p = detail::refine_touch_point(fk, grid.nodes[i], 2.0 * grid.spacing);
    out.min_abs_fk = std::min(out.min_abs_fk, std::abs(fk(p)));
    if (std::abs(fk(p)) <= tol.eps_def) out.zeros.push_back(std::move(p));
  }

  if (out.zeros.empty()) {
    if (out.min_abs_fk <= tol.eps_def) {
      out.tag = CaseTag::Unsupported;
      out.reason = "f_k nearly vanishes on the sphere sample but no zero could be located";
      return out;
    }
    if (k % 2 == 1) {
      out.tag = CaseTag::Unsupported;
      out.reason = "odd degree with a definite-looking sample: f_k(-x) = -f_k(x) forbids definiteness";
      return out;
    }
    out.tag = vals.front() > 0.0 ? CaseTag::ExtremumMin : CaseTag::ExtremumMax;
    out.reason = "f_k is definite on the sphere sample";
    return out;
  }

  for (const auto& z : out.zeros) {
    const double g = norm(tangential_gradient(germ, detail::normalized(z)));
    out.zero_gradient_norms.push_back(g);
    out.min_tangential_gradient = std::min(out.min_tangential_gradient, g);
  }
  if (out.min_tangential_gradient > tol.eps_grad) {
    out.tag = CaseTag::PrincipalType;
    out.reason = "grad f_k is nonzero on every located point of the zero cone";
  } else {
    out.tag = CaseTag::Unsupported;
    out.reason = "tangential gradient of f_k vanishes at a located zero (non-isolated singularity)";
  }
  return out;
}

// ---- JSON ---------------------------------------------------------------

inline nlohmann::json to_json(const Germ& g) {
  nlohmann::json mons = nlohmann::json::array();
  for (const auto& m : g.fk().terms()) mons.push_back({m.coeff, m.exponents});
  nlohmann::json j{{"n", g.n()}, {"k", g.k()}, {"monomials", mons}, {"x0", g.x0()}};
  if (g.remainder().name != "none") j["remainder"] = {{"name", g.remainder().name}, {"scale", g.remainder().scale}};
  return j;
}

inline std::vector<Monomial> monomials_from_json(const nlohmann::json& j, int n) {
  std::vector<Monomial> mons;
  for (const auto& m : j) {
    if (!m.is_array() || m.size() != 2 || !m[1].is_array())
      throw Error(ErrorKind::Input, "germ", "from_json", "monomial must be [coeff, [e1,...,en]]");
    Monomial mono{m[0].get<double>(), m[1].get<std::vector<int>>()};
    if (static_cast<int>(mono.exponents.size()) != n)
      throw Error(ErrorKind::Input, "germ", "from_json", "exponent vector length differs from n");
    mons.push_back(std::move(mono));
  }
  return mons;
}

inline Germ germ_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int k = j.at("k").get<int>();
    auto mons = monomials_from_json(j.at("monomials"), n);
    Vec x0 = j.contains("x0") ? j["x0"].get<Vec>() : Vec{};
    std::string rname = "none";
    double rscale = 0.1;
    if (j.contains("remainder")) {
      const auto& r = j["remainder"];
      if (r.is_string()) {
        rname = r.get<std::string>();
      } else {
        rname = r.at("name").get<std::string>();
        rscale = r.value("scale", 0.1);
      }
    }
    return Germ::make(n, k, std::move(mons), std::move(x0), rname, rscale);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, "germ", "from_json", e.what());
  }
}

inline nlohmann::json to_json(const Classification& c) {
  nlohmann::json zeros = nlohmann::json::array();
  for (const auto& z : c.zeros) zeros.push_back(z);
  return {{"schema", 1},
          {"case", to_string(c.tag)},
          {"reason", c.reason},
          {"diagnostics",
           {{"min_abs_fk", c.min_abs_fk},
            {"max_abs_fk", c.max_abs_fk},
            {"min_tangential_gradient",
             std::isfinite(c.min_tangential_gradient) ? nlohmann::json(c.min_tangential_gradient) : nlohmann::json()},
            {"zero_count", c.zeros.size()},
            {"zeros", zeros},
            {"zero_gradient_norms", c.zero_gradient_norms},
            {"sample_order", c.sample_order},
            {"sample_count", c.sample_count}}},
          {"tolerances", {{"eps_def", c.tolerances.eps_def}, {"eps_grad", c.tolerances.eps_grad}}}};
}

}  // namespace fiberasym
