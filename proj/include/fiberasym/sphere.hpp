#pragma once

// Quadrature on S^{n-1}: rules, singular integrals of |f_k|^{-alpha} over the
// sign regions of f_k, and the co-area (Liouville) density LVol(w) of the
// pushforward of the sphere measure under f_k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiberasym/cubature.hpp"
#include "fiberasym/error.hpp"
#include "fiberasym/germ.hpp"
#include "fiberasym/quadrature.hpp"
#include "fiberasym/random.hpp"

namespace fiberasym {

inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

enum class RuleKind { UniformCircle, ProductGauss, MonteCarlo };

inline const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::UniformCircle: return "uniform-circle";
    case RuleKind::ProductGauss: return "product-gauss";
    case RuleKind::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

inline RuleKind rule_kind_from_string(const std::string& s) {
  if (s == "uniform-circle") return RuleKind::UniformCircle;
  if (s == "product-gauss") return RuleKind::ProductGauss;
  if (s == "monte-carlo") return RuleKind::MonteCarlo;
  throw Error(ErrorKind::Input, "sphere", "build_rule", "unknown rule kind '" + s + "'");
}

struct SphereRule {
  int n = 0;
  int order = 0;
  RuleKind kind = RuleKind::UniformCircle;
  std::uint64_t seed = 0;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  template <class F>
  double sum(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

// n = 2: `order` equally spaced angles. n = 3: `order` Gauss-Legendre nodes in
// cos(latitude) times 2*order uniform longitudes, exact for spherical
// polynomials of degree <= 2*order-1. Monte Carlo: `order` seeded uniform points.
inline SphereRule build_rule(int n, int order, RuleKind kind, std::uint64_t seed = 0) {
  if (n < 2) throw Error(ErrorKind::Input, "sphere", "build_rule", "n must be >= 2");
  if (order < 1) throw Error(ErrorKind::Input, "sphere", "build_rule", "order must be >= 1");
  SphereRule rule;
  rule.n = n;
  rule.order = order;
  rule.kind = kind;
  rule.seed = seed;
  const double pi = std::numbers::pi;
  switch (kind) {
    case RuleKind::UniformCircle: {
      if (n != 2) throw Error(ErrorKind::Input, "sphere", "build_rule", "uniform-circle requires n = 2");
      for (int i = 0; i < order; ++i) {
        const double t = 2.0 * pi * i / order;
        rule.nodes.push_back({std::cos(t), std::sin(t)});
        rule.weights.push_back(2.0 * pi / order);
      }
      break;
    }
    case RuleKind::ProductGauss: {
      if (n != 3)
        throw Error(ErrorKind::Input, "sphere", "build_rule",
                    "product-gauss is provided for n = 3 only (use monte-carlo for n >= 4)");
      auto [x, w] = gauss_legendre(order);
      const int lon = 2 * order;
      for (int i = 0; i < order; ++i) {
        const double c = x[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < lon; ++j) {
          const double psi = 2.0 * pi * j / lon;
          rule.nodes.push_back({s * std::cos(psi), s * std::sin(psi), c});
          rule.weights.push_back(w[i] * 2.0 * pi / lon);
        }
      }
      break;
    }
    case RuleKind::MonteCarlo: {
      CounterRng rng(seed);
      const double w = sphere_area(n) / order;
      for (int i = 0; i < order; ++i) {
        Vec p(n);
        for (int a = 0; a < n; ++a) p[a] = rng.normal(static_cast<std::uint64_t>(i), a);
        rule.nodes.push_back(detail::normalized(std::move(p)));
        rule.weights.push_back(w);
      }
      break;
    }
  }
  return rule;
}

inline std::string rule_csv(const SphereRule& rule) {
  std::ostringstream os;
  for (int a = 0; a < rule.n; ++a) os << "x" << (a + 1) << ",";
  os << "weight\n";
  char buf[64];
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    for (double x : rule.nodes[i]) {
      std::snprintf(buf, sizeof buf, "%.17g,", x);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", rule.weights[i]);
    os << buf;
  }
  return os.str();
}

enum class Region { Plus, Minus, All };

struct InversePowerOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  int max_intervals = 4000;
  int zero_samples = 0;  // samples per circle/meridian used to locate zeros (0: automatic)
};

namespace detail {

// Zeros of f on [a,b]. Sign changes between samples are bisected. At every
// sample triple where s*f has an interior minimum without changing sign, the
// extremum is located by golden-section search; if f flips sign there the
// close pair of zeros on either side is bisected too. An extremum where f
// vanishes to rounding is kept as a double zero.
template <class F>
std::vector<double> line_roots(F&& f, double a, double b, int samples) {
  std::vector<double> xs(samples + 1), fs(samples + 1);
  double scale = 0.0;
  for (int i = 0; i <= samples; ++i) {
    xs[i] = a + (b - a) * i / samples;
    fs[i] = f(xs[i]);
    scale = std::max(scale, std::abs(fs[i]));
  }
  auto out = level_points(f, a, b, samples, 0.0);
  // Bisect g on [l, r] given g(l) and g(r) of opposite sign.
  auto bisect = [](auto&& g, double l, double r) {
    const bool left_negative = g(l) < 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (l + r);
      if (mid <= l || mid >= r) break;
      ((g(mid) < 0.0) == left_negative ? l : r) = mid;
    }
    return 0.5 * (l + r);
  };
  for (int i = 1; i < samples; ++i) {
    if (fs[i] == 0.0 || (fs[i - 1] < 0.0) != (fs[i] < 0.0) || (fs[i + 1] < 0.0) != (fs[i] < 0.0)) continue;
    const double s = fs[i] < 0.0 ? -1.0 : 1.0;
    if (s * fs[i] > s * fs[i - 1] || s * fs[i] > s * fs[i + 1]) continue;
    auto g = [&](double x) { return s * f(x); };
    constexpr double inv_phi = 0.6180339887498949;
    double x0 = xs[i - 1], x1 = xs[i + 1];
    double c = x1 - inv_phi * (x1 - x0), d = x0 + inv_phi * (x1 - x0);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 100 && (gc > 0.0 && gd > 0.0); ++it) {
      if (gc < gd) {
        x1 = d; d = c; gd = gc;
        c = x1 - inv_phi * (x1 - x0); gc = g(c);
      } else {
        x0 = c; c = d; gc = gd;
        d = x0 + inv_phi * (x1 - x0); gd = g(d);
      }
    }
    const double m = gc < gd ? c : d;
    const double gm = std::min(gc, gd);
    if (gm < 0.0) {
      out.push_back(bisect(g, xs[i - 1], m));
      out.push_back(bisect(g, m, xs[i + 1]));
    } else if (gm <= 1e-13 * scale) {
      out.push_back(m);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline QuadResult circle_inverse_power(const Germ& germ, double alpha, Region region, const InversePowerOptions& opt) {
  const double two_pi = 2.0 * std::numbers::pi;
  auto F = [&](double t) {
    const double p[2] = {std::cos(t), std::sin(t)};
    return germ.fk()(p);
  };
  const int samples = opt.zero_samples > 0 ? opt.zero_samples : std::max(256, 64 * germ.k());
  const double shift = 0.0731;  // keep the seam off symmetric zeros
  auto zeros = level_points([&](double t) { return F(t + shift); }, 0.0, two_pi, samples, 0.0);
  for (auto& z : zeros) z += shift;
  AdaptiveOptions ao{opt.abs_tol, opt.rel_tol, opt.max_intervals, 1};
  QuadResult out;
  auto integrand = [&](double t) { return std::pow(std::abs(F(t)), -alpha); };
  if (zeros.empty()) {
    const double s = F(shift) > 0.0 ? 1.0 : -1.0;
    if (region == Region::All || (region == Region::Plus) == (s > 0.0))
      out += integrate(integrand, shift, shift + two_pi, AdaptiveOptions{opt.abs_tol, opt.rel_tol, opt.max_intervals, 8});
    return out;
  }
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    const double a = zeros[i];
    const double b = (i + 1 < zeros.size()) ? zeros[i + 1] : zeros[0] + two_pi;
    const double mid = F(0.5 * (a + b));
    if (region != Region::All && (region == Region::Plus) != (mid > 0.0)) continue;
    out += integrate_singular_ends(integrand, a, b, alpha, alpha, ao);
  }
  return out;
}

// φ ↦ f_k on the meridian at longitude ψ, integrated with the sin φ measure.
inline QuadResult meridian_inverse_power(const Germ& germ, double alpha, Region region, double psi,
                                         const InversePowerOptions& opt) {
  const double pi = std::numbers::pi;
  const double cp = std::cos(psi), sp = std::sin(psi);
  auto F = [&](double phi) {
    const double p[3] = {std::sin(phi) * cp, std::sin(phi) * sp, std::cos(phi)};
    return germ.fk()(p);
  };
  const int samples = opt.zero_samples > 0 ? opt.zero_samples : std::max(96, 16 * germ.k());
  auto zeros = line_roots(F, 0.0, pi, samples);
  std::vector<double> cuts{0.0};
  std::vector<char> is_zero{F(0.0) == 0.0};
  for (double z : zeros) {
    if (z <= 0.0 || z >= pi) continue;
    cuts.push_back(z);
    is_zero.push_back(1);
  }
  cuts.push_back(pi);
  is_zero.push_back(F(pi) == 0.0);
  AdaptiveOptions ao{opt.abs_tol, opt.rel_tol, opt.max_intervals, 1};
  QuadResult out;
  auto integrand = [&](double phi) {
    const double v = F(phi);
    if (v == 0.0) return 0.0;
    return std::pow(std::abs(v), -alpha) * std::sin(phi);
  };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b - a <= 0.0) continue;
    const double mid = F(0.5 * (a + b));
    if (region != Region::All && (region == Region::Plus) != (mid > 0.0)) continue;
    out += integrate_singular_ends(integrand, a, b, is_zero[i] ? alpha : 0.0, is_zero[i + 1] ? alpha : 0.0, ao);
  }
  return out;
}

}  // namespace detail

// ∫_{region} |f_k(θ)|^{-alpha} dθ. Definite f_k: plain rule summation.
// Principal type: the zero set is located and each sign arc (n = 2) or
// meridian segment (n = 3) is integrated with a power substitution at the
// zeros. n >= 4 falls back to rule summation (Monte Carlo accuracy).
inline QuadResult inverse_power_integral(const Germ& germ, double alpha, Region region, const SphereRule& rule,
                                         const InversePowerOptions& opt = {}) {
  if (rule.n != germ.n()) throw Error(ErrorKind::Input, "sphere", "inverse_power_integral", "rule dimension differs");
  if (region == Region::All) {
    auto plus = inverse_power_integral(germ, alpha, Region::Plus, rule, opt);
    auto minus = inverse_power_integral(germ, alpha, Region::Minus, rule, opt);
    plus += minus;
    return plus;
  }
  const auto cls = classify(germ);
  if (cls.tag == CaseTag::Unsupported)
    throw Error(ErrorKind::Unsupported, "sphere", "inverse_power_integral", "germ is unsupported: " + cls.reason);
  const bool want_plus = region == Region::Plus;
  QuadResult out;
  if (cls.is_extremum()) {
    const bool positive = cls.tag == CaseTag::ExtremumMin;
    if (positive != want_plus) return out;
    out.value = rule.sum([&](const Vec& p) { return std::pow(std::abs(eval_fk(germ, p)), -alpha); });
    out.evals = rule.nodes.size();
    return out;
  }
  if (alpha >= 1.0)
    throw Error(ErrorKind::Divergence, "sphere", "inverse_power_integral",
                "alpha >= 1 is not integrable across the zero set of f_k");
  if (germ.n() == 2) return detail::circle_inverse_power(germ, alpha, region, opt);
  if (germ.n() == 3) {
    AdaptiveOptions outer{opt.abs_tol, std::max(opt.rel_tol, 1e-10), opt.max_intervals, 16};
    InversePowerOptions inner = opt;
    std::size_t evals = 0;
    double inner_err = 0.0;
    auto G = [&](double psi) {
      auto r = detail::meridian_inverse_power(germ, alpha, region, psi, inner);
      evals += r.evals;
      inner_err = std::max(inner_err, r.error);
      return r.value;
    };
    const int samples = opt.zero_samples > 0 ? opt.zero_samples : std::max(96, 16 * germ.k());
    auto count = [&](double psi) {
      const double cp = std::cos(psi), sp = std::sin(psi);
      return detail::line_roots(
                 [&](double phi) {
                   const double p[3] = {std::sin(phi) * cp, std::sin(phi) * sp, std::cos(phi)};
                   return germ.fk()(p);
                 },
                 0.0, std::numbers::pi, samples)
          .size();
    };
    const auto tangent = count_jumps(count, 0.0, 2.0 * std::numbers::pi, 256);
    out = integrate(G, 0.0, 2.0 * std::numbers::pi, outer, tangent);
    out.evals = evals;
    out.error += 2.0 * std::numbers::pi * inner_err;
    return out;
  }
  out.value = rule.sum([&](const Vec& p) {
    const double v = eval_fk(germ, p);
    if (v == 0.0 || (v > 0.0) != want_plus) return 0.0;
    return std::pow(std::abs(v), -alpha);
  });
  out.evals = rule.nodes.size();
  out.converged = false;  // Monte Carlo: no deterministic error control
  return out;
}

// ---- co-area density ----------------------------------------------------

struct PolyFit {
  std::vector<double> coeffs;  // in powers of w (unscaled)
  double window = 0.0;
  int degree = 0;
  std::size_t points = 0;

  double eval(double w) const {
    double s = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) s = s * w + coeffs[i];
    return s;
  }
  double derivative(double w, int m) const {
    double s = 0.0;
    for (std::size_t i = coeffs.size(); i-- > static_cast<std::size_t>(m);) {
      double c = coeffs[i];
      for (int j = 0; j < m; ++j) c *= static_cast<double>(i - j);
      s = s * w + c;
    }
    return s;
  }
};

struct CoareaDensity {
  std::vector<double> w_grid;
  std::vector<double> values;
  double bandwidth = 0.0;
  double sample_min = 0.0;
  double sample_max = 0.0;
  double sample_mass = 0.0;  // Σ weights of the rule
  PolyFit derivative_fit;
  std::optional<double> zero_sum;  // n = 2: Σ 1/|∇_θ f_k| over zeros (exact LVol(0))
  std::vector<std::string> warnings;

  double grid_mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < w_grid.size(); ++i)
      s += 0.5 * (values[i] + values[i + 1]) * (w_grid[i + 1] - w_grid[i]);
    return s;
  }
};

struct FitOptions {
  int degree = 0;                // 0: max(m + 2, 4)
  double window_multiple = 4.0;  // window half-width in bandwidths
};

namespace detail {

inline PolyFit local_poly_fit(const std::vector<double>& w, const std::vector<double>& v, int degree, double window,
                              const char* op) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) <= window) idx.push_back(i);
  if (static_cast<int>(idx.size()) < degree + 1)
    throw Error(ErrorKind::Input, "sphere", op, "fit window contains fewer than degree+1 grid points");
  Eigen::MatrixXd A(idx.size(), degree + 1);
  Eigen::VectorXd b(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double s = w[idx[r]] / window;
    double p = 1.0;
    for (int c = 0; c <= degree; ++c) {
      A(r, c) = p;
      p *= s;
    }
    b(r) = v[idx[r]];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  PolyFit fit;
  fit.window = window;
  fit.degree = degree;
  fit.points = idx.size();
  fit.coeffs.resize(degree + 1);
  for (int i = 0; i <= degree; ++i) fit.coeffs[i] = c(i) / std::pow(window, i);
  return fit;
}

inline double biweight(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  const double t = 1.0 - u * u;
  return 15.0 / 16.0 * t * t;
}

}  // namespace detail

inline double default_bandwidth(const Germ& germ, const SphereRule& rule) {
  double lo = 1e300, hi = -1e300, amax = 0.0;
  for (const auto& p : rule.nodes) {
    const double v = eval_fk(germ, p);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    amax = std::max(amax, std::abs(v));
  }
  const double range = hi - lo;
  return range > 1e-12 * std::max(amax, 1.0) ? range / 50.0 : std::max(amax, 1.0) / 50.0;
}

inline std::vector<double> default_w_grid(const Germ& germ, const SphereRule& rule, double bandwidth) {
  double lo = 1e300, hi = -1e300;
  for (const auto& p : rule.nodes) {
    const double v = eval_fk(germ, p);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double step = bandwidth / 8.0;
  // symmetric lattice through w = 0
  const long i0 = static_cast<long>(std::floor((lo - 2.0 * bandwidth) / step));
  const long i1 = static_cast<long>(std::ceil((hi + 2.0 * bandwidth) / step));
  std::vector<double> grid;
  for (long i = i0; i <= i1; ++i) grid.push_back(i * step);
  return grid;
}

// Σ over zeros of f_k on S^1 of 1/|∇_θ f_k|: LVol(0) for n = 2.
inline double circle_zero_sum(const Germ& germ) {
  if (germ.n() != 2) throw Error(ErrorKind::Input, "sphere", "coarea_density", "zero sum is defined for n = 2");
  auto F = [&](double t) {
    const double p[2] = {std::cos(t), std::sin(t)};
    return germ.fk()(p);
  };
  const double shift = 0.0731;
  auto zeros = level_points([&](double t) { return F(t + shift); }, 0.0, 2.0 * std::numbers::pi,
                            std::max(256, 64 * germ.k()), 0.0);
  double s = 0.0;
  for (double z : zeros) {
    const double t = z + shift;
    const double p[2] = {std::cos(t), std::sin(t)};
    s += 1.0 / norm(tangential_gradient(germ, p));
  }
  return s;
}

namespace detail {

inline Vec longitude_point(double psi, double c) {
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return {s * std::cos(psi), s * std::sin(psi), c};
}

}  // namespace detail

// LVol(w) without smoothing, from the co-area formula along coordinate curves:
// for n = 2 the sum of 1/|∂_t f_k| over the points of the circle where f_k = w;
// for n = 3 the same sum along each line of constant longitude in (ψ, c = cos φ),
// where dθ = dψ dc, integrated over ψ.
inline QuadResult level_density(const Germ& germ, double w, const InversePowerOptions& opt = {}) {
  const double two_pi = 2.0 * std::numbers::pi;
  QuadResult out;
  if (germ.n() == 2) {
    const double shift = 0.0731;
    auto F = [&](double t) {
      const double p[2] = {std::cos(t + shift), std::sin(t + shift)};
      return germ.fk()(p) - w;
    };
    const int samples = opt.zero_samples > 0 ? opt.zero_samples : std::max(256, 64 * germ.k());
    for (double t : level_points(F, 0.0, two_pi, samples, 0.0)) {
      const double p[2] = {std::cos(t + shift), std::sin(t + shift)};
      const auto g = germ.fk().gradient(p);
      const double dt = std::abs(-g[0] * p[1] + g[1] * p[0]);
      if (dt > 0.0) out.value += 1.0 / dt;
    }
    return out;
  }
  if (germ.n() != 3)
    throw Error(ErrorKind::Unsupported, "sphere", "level_density", "direct co-area evaluation needs n = 2 or 3");
  const int samples = opt.zero_samples > 0 ? opt.zero_samples : std::max(128, 16 * germ.k());
  auto roots = [&](double psi) {
    auto F = [&](double c) { return germ.fk()(detail::longitude_point(psi, c)) - w; };
    return detail::line_roots(F, -1.0, 1.0, samples);
  };
  auto line_sum = [&](double psi) {
    double s = 0.0;
    for (double c : roots(psi)) {
      if (std::abs(c) >= 1.0) continue;
      const auto p = detail::longitude_point(psi, c);
      const auto g = germ.fk().gradient(p);
      const double r = std::sqrt(1.0 - c * c);
      const double dc = std::abs(-c / r * (g[0] * std::cos(psi) + g[1] * std::sin(psi)) + g[2]);
      if (dc > 0.0) s += 1.0 / dc;
    }
    return s;
  };
  const auto tangent = count_jumps([&](double psi) { return roots(psi).size(); }, 0.0, two_pi, 256);
  out = integrate(line_sum, 0.0, two_pi, {opt.abs_tol, std::max(opt.rel_tol, 1e-10), opt.max_intervals, 16}, tangent);
  return out;
}

// ∫_{S^{n-1}} h(f_k(θ)) dθ for n = 2, 3 by adaptive quadrature with
// breakpoints where f_k crosses each of `levels`.
template <class H>
QuadResult sphere_level_integral(const Germ& germ, H&& h, std::span<const double> levels,
                                 double rel_tol = 1e-10) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (germ.n() == 2) {
    auto F = [&](double t) {
      const double p[2] = {std::cos(t), std::sin(t)};
      return germ.fk()(p);
    };
    std::vector<double> bps;
    for (double lv : levels) {
      auto pts = level_points([&](double t) { return F(t) - lv; }, 0.0, two_pi, 512, 0.0);
      bps.insert(bps.end(), pts.begin(), pts.end());
    }
    return integrate([&](double t) { return h(F(t)); }, 0.0, two_pi, {1e-300, rel_tol, 8000, 16}, bps);
  }
  if (germ.n() != 3)
    throw Error(ErrorKind::Unsupported, "sphere", "sphere_level_integral", "adaptive sphere integration needs n = 2 or 3");
  const Box box{{0.0, -1.0}, {two_pi, 1.0}};
  auto level_fn = [&](std::span<const double> x) { return germ.fk()(detail::longitude_point(x[0], x[1])); };
  auto integrand = [&](std::span<const double> x) { return h(level_fn(x)); };
  NestedOptions q;
  q.rel_tol = rel_tol;
  q.levels.assign(levels.begin(), levels.end());
  q.feature_scale = 1e-4;
  q.line_samples = 128;
  return nested_integrate(integrand, level_fn, box, {}, q);
}

// Kernel estimate of the pushforward density of the sphere measure under f_k:
// LVol(w) = Σ_i w_i K_h(w - f_k(θ_i)) with the biweight kernel.
inline CoareaDensity coarea_density(const Germ& germ, std::vector<double> w_grid, const SphereRule& rule,
                                    double bandwidth, const FitOptions& fit = {}) {
  if (!(bandwidth > 0.0)) throw Error(ErrorKind::Input, "sphere", "coarea_density", "bandwidth must be positive");
  if (rule.n != germ.n()) throw Error(ErrorKind::Input, "sphere", "coarea_density", "rule dimension differs");
  if (w_grid.empty()) w_grid = default_w_grid(germ, rule, bandwidth);
  for (std::size_t i = 1; i < w_grid.size(); ++i)
    if (!(w_grid[i] > w_grid[i - 1]))
      throw Error(ErrorKind::Input, "sphere", "coarea_density", "w_grid must be strictly increasing");

  std::vector<std::pair<double, double>> samples;
  samples.reserve(rule.nodes.size());
  CoareaDensity d;
  d.bandwidth = bandwidth;
  d.sample_min = 1e300;
  d.sample_max = -1e300;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = eval_fk(germ, rule.nodes[i]);
    samples.emplace_back(v, rule.weights[i]);
    d.sample_min = std::min(d.sample_min, v);
    d.sample_max = std::max(d.sample_max, v);
    d.sample_mass += rule.weights[i];
  }
  std::sort(samples.begin(), samples.end());
  if (w_grid.front() > d.sample_min - bandwidth || w_grid.back() < d.sample_max + bandwidth)
    d.warnings.push_back("w_grid does not cover the sample range plus one bandwidth; uncovered mass is dropped");

  d.values.resize(w_grid.size());
  for (std::size_t j = 0; j < w_grid.size(); ++j) {
    const double w = w_grid[j];
    auto lo = std::lower_bound(samples.begin(), samples.end(), std::make_pair(w - bandwidth, -1e300));
    double s = 0.0;
    for (auto it = lo; it != samples.end() && it->first < w + bandwidth; ++it)
      s += it->second * detail::biweight((w - it->first) / bandwidth);
    d.values[j] = s / bandwidth;
  }
  d.w_grid = std::move(w_grid);
  if (germ.n() == 2) {
    const auto cls = classify(germ);
    if (cls.tag == CaseTag::PrincipalType) d.zero_sum = circle_zero_sum(germ);
    if (cls.is_extremum()) d.zero_sum = 0.0;
  }
  const int degree = fit.degree > 0 ? fit.degree : 4;
  try {
    d.derivative_fit = detail::local_poly_fit(d.w_grid, d.values, degree, fit.window_multiple * bandwidth, "coarea_density");
  } catch (const Error&) {
    d.warnings.push_back("default derivative fit unavailable: window too small for the grid");
  }
  return d;
}

// m-th derivative of LVol at w = 0 from a local least-squares polynomial fit.
inline double coarea_derivative_at_zero(const CoareaDensity& density, int m, const FitOptions& fit = {}) {
  if (m < 0) throw Error(ErrorKind::Input, "sphere", "coarea_derivative_at_zero", "order must be >= 0");
  const int degree = fit.degree > 0 ? std::max(fit.degree, m + 2) : std::max(m + 2, 4);
  const auto p = detail::local_poly_fit(density.w_grid, density.values, degree, fit.window_multiple * density.bandwidth,
                                        "coarea_derivative_at_zero");
  return p.derivative(0.0, m);
}

inline PolyFit coarea_local_fit(const CoareaDensity& density, int degree, const FitOptions& fit = {}) {
  return detail::local_poly_fit(density.w_grid, density.values, degree, fit.window_multiple * density.bandwidth,
                                "coarea_local_fit");
}

inline std::string density_csv(const CoareaDensity& d) {
  std::ostringstream os;
  os << "w,lvol\n";
  char buf[80];
  for (std::size_t i = 0; i < d.w_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", d.w_grid[i], d.values[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace fiberasym
