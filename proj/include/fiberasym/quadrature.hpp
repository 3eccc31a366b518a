#pragma once

// One-dimensional quadrature building blocks shared by every module:
// a global adaptive Gauss-Kronrod integrator with breakpoints, Gauss-Legendre
// nodes of arbitrary order, endpoint-singular and half-line integrals driven
// by a declared decay envelope, level-point location along a segment, and
// polynomial extrapolation to zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fiberasym/error.hpp"

namespace fiberasym {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  bool converged = true;

  QuadResult& operator+=(const QuadResult& other) {
    value += other.value;
    error += other.error;
    evals += other.evals;
    converged = converged && other.converged;
    return *this;
  }
};

struct AdaptiveOptions {
  double abs_tol = 1e-14;
  double rel_tol = 1e-11;
  int max_intervals = 4000;
  int initial_panels = 1;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

// G10/K21 pair on [a,b] with the QUADPACK error heuristic.
template <class F>
Panel gk21(F& f, double a, double b) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
  using gauss = boost::math::quadrature::gauss<double, 10>;
  const auto& xk = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fvals_p[11];
  double fvals_m[11];
  const double fc = f(center);
  double resk = fc * wk[0];
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fp = f(center + half * xk[i]);
    const double fm = f(center - half * xk[i]);
    fvals_p[i] = fp;
    fvals_m[i] = fm;
    resk += wk[i] * (fp + fm);
    resabs += wk[i] * (std::abs(fp) + std::abs(fm));
    if (i % 2 == 1) resg += wg[i / 2] * (fp + fm);
  }
  const double mean = 0.5 * resk;
  double resasc = wk[0] * std::abs(fc - mean);
  for (std::size_t i = 1; i < xk.size(); ++i)
    resasc += wk[i] * (std::abs(fvals_p[i] - mean) + std::abs(fvals_m[i] - mean));

  resk *= half;
  resg *= half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs(resk - resg);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(err, 50.0 * eps * resabs);
  if (!std::isfinite(resk)) err = std::numeric_limits<double>::infinity();
  return {a, b, resk, err};
}

}  // namespace detail

inline constexpr int kKronrodPoints = 21;

// Global adaptive integration of f over [a,b]. Interior breakpoints outside
// (a,b) are ignored. Panels with the largest error estimate are bisected until
// the total error meets max(abs_tol, rel_tol*|I|) or the interval budget runs out.
template <class F>
QuadResult integrate(F&& f, double a, double b, const AdaptiveOptions& opts = {},
                     std::span<const double> breakpoints = {}) {
  QuadResult out;
  if (a == b) return out;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> cuts{a};
  std::vector<double> inner(breakpoints.begin(), breakpoints.end());
  std::sort(inner.begin(), inner.end());
  for (double c : inner)
    if (c > cuts.back() && c < b) cuts.push_back(c);
  cuts.push_back(b);

  std::priority_queue<detail::Panel> heap;
  double total = 0.0;
  double total_err = 0.0;
  const int per = std::max(1, opts.initial_panels);
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double h = (cuts[s + 1] - cuts[s]) / per;
    for (int p = 0; p < per; ++p) {
      const double lo = cuts[s] + p * h;
      const double hi = (p + 1 == per) ? cuts[s + 1] : lo + h;
      auto panel = detail::gk21(f, lo, hi);
      out.evals += kKronrodPoints;
      total += panel.value;
      total_err += panel.error;
      heap.push(panel);
    }
  }

  const double tiny = std::numeric_limits<double>::epsilon();
  while (!heap.empty()) {
    if (total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) break;
    if (static_cast<int>(heap.size()) >= opts.max_intervals) {
      out.converged = false;
      break;
    }
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < tiny * std::max(1.0, std::abs(mid))) {
      out.converged = false;
      break;
    }
    heap.pop();
    auto left = detail::gk21(f, worst.a, mid);
    auto right = detail::gk21(f, mid, worst.b);
    out.evals += 2 * kKronrodPoints;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum to shed the drift of the running totals.
  double sum = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sign * sum;
  out.error = err;
  return out;
}

// Gauss-Legendre nodes and weights on [-1,1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorKind::Input, "quadrature", "gauss_legendre", "order must be >= 1");
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Final derivative at the converged node.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

// ∫_a^b f where f ~ |x-a|^{-left} near a and ~ |x-b|^{-right} near b
// (exponents < 1). Each half is mapped by a power substitution that makes the
// leading singular behavior constant in the new variable.
template <class F>
QuadResult integrate_singular_ends(F&& f, double a, double b, double left, double right,
                                   const AdaptiveOptions& opts = {}) {
  if (left >= 1.0 || right >= 1.0)
    throw Error(ErrorKind::Divergence, "quadrature", "integrate_singular_ends", "endpoint exponent >= 1");
  const double mid = 0.5 * (a + b);
  const double h = mid - a;
  QuadResult out;
  auto half = [&](double base, double dir, double expo) {
    const double q = 1.0 / (1.0 - std::max(expo, 0.0));
    auto g = [&](double s) {
      const double x = base + dir * h * std::pow(s, q);
      return f(x) * h * q * std::pow(s, q - 1.0);
    };
    return integrate(g, 0.0, 1.0, opts);
  };
  out += half(a, 1.0, left);
  out += half(b, -1.0, right);
  return out;
}

// Decay envelope of a one-dimensional function on [0, ∞):
// |h(t)| <= constant * (1+t)^{-rate} (Power), constant * exp(-rate t)
// (Exponential), or h = 0 for t > rate (Compact).
struct Decay {
  enum class Kind { Compact, Power, Exponential };
  Kind kind = Kind::Exponential;
  double rate = 1.0;
  double constant = 1.0;

  static Decay compact(double support_end) { return {Kind::Compact, support_end, 1.0}; }
  static Decay power(double beta, double c = 1.0) { return {Kind::Power, beta, c}; }
  static Decay exponential(double r, double c = 1.0) { return {Kind::Exponential, r, c}; }
};

struct HalfLineResult {
  QuadResult quad;
  double truncation = std::numeric_limits<double>::infinity();
  double tail_bound = 0.0;
};

// ∫_s^∞ t^alpha h(t) dt. Exponential envelopes are truncated at T with the
// tail bound recorded; compact ones stop at the support end; power envelopes
// are mapped onto (0,1] by t = s v^{-1/γ}, γ = β - alpha - 1, which turns the
// envelope into a constant. `panel_width` > 0 seeds the truncated range with
// panels of that width (oscillatory integrands).
template <class H>
HalfLineResult tail_moment(H&& h, double alpha, const Decay& decay, double s, const AdaptiveOptions& opts = {},
                           double panel_width = 0.0) {
  HalfLineResult out;
  auto direct = [&](double t) { return std::pow(t, alpha) * h(t); };
  switch (decay.kind) {
    case Decay::Kind::Compact: {
      out.truncation = decay.rate;
      if (decay.rate > s) out.quad += integrate(direct, s, decay.rate, opts);
      break;
    }
    case Decay::Kind::Exponential: {
      const double r = decay.rate;
      auto bound = [&](double T) { return decay.constant * std::pow(T, std::max(alpha, 0.0)) * std::exp(-r * T) / r; };
      double T = std::max(2.0 * s, s + 1.0 / r);
      while (bound(T) > 1e-17 && T < 1e9 / r) T *= 1.25;
      out.truncation = T;
      out.tail_bound = bound(T);
      AdaptiveOptions tail_opts = opts;
      int panels = static_cast<int>(std::ceil((T - s) * r / 4.0));
      if (panel_width > 0.0) panels = std::max(panels, static_cast<int>(std::ceil((T - s) / panel_width)));
      tail_opts.initial_panels = std::max(opts.initial_panels, panels);
      tail_opts.max_intervals = std::max(opts.max_intervals, 4 * tail_opts.initial_panels);
      out.quad += integrate(direct, s, T, tail_opts);
      out.quad.error += out.tail_bound;
      break;
    }
    case Decay::Kind::Power: {
      const double gamma = decay.rate - alpha - 1.0;
      if (!(gamma > 0.0))
        throw Error(ErrorKind::Divergence, "quadrature", "tail_moment", "power decay too slow for the requested moment");
      const double scale = std::pow(s, alpha + 1.0) / gamma;
      auto tail = [&](double v) {
        const double t = s * std::pow(v, -1.0 / gamma);
        if (!std::isfinite(t)) return 0.0;
        const double val = h(t);
        if (val == 0.0) return 0.0;
        return val * scale * std::pow(v, -(alpha + 1.0) / gamma - 1.0);
      };
      out.quad += integrate(tail, 0.0, 1.0, opts);
      break;
    }
  }
  return out;
}

// ∫_0^∞ t^alpha h(t) dt for alpha > -1. The head [0,s] is flattened by
// t = s u^{1/(1+alpha)}; the tail is handled by tail_moment.
template <class H>
HalfLineResult half_line_moment(H&& h, double alpha, const Decay& decay, const AdaptiveOptions& opts = {},
                                double split = 1.0, double panel_width = 0.0) {
  if (!(alpha > -1.0))
    throw Error(ErrorKind::Divergence, "quadrature", "half_line_moment", "exponent alpha must exceed -1");
  double s = split;
  if (decay.kind == Decay::Kind::Compact) s = std::min(s, decay.rate);
  const double p = 1.0 / (1.0 + alpha);
  const double head_scale = std::pow(s, 1.0 + alpha) * p;
  auto head = [&](double u) {
    const double t = s * std::pow(u, p);
    return h(t) * head_scale;
  };
  auto head_res = integrate(head, 0.0, 1.0, opts);
  HalfLineResult out = tail_moment(h, alpha, decay, s, opts, panel_width);
  out.quad += head_res;
  return out;
}

// Points of [a,b] where f crosses zero (bisection) or where |f| touches down
// to a small local minimum without a sign change (golden section). Intended
// for breakpoints; spurious entries are harmless.
template <class F>
std::vector<double> level_points(F&& f, double a, double b, int samples = 64, double touch_ratio = 1e-2) {
  std::vector<double> xs(samples + 1), fs(samples + 1);
  double fmax = 0.0;
  for (int i = 0; i <= samples; ++i) {
    xs[i] = a + (b - a) * i / samples;
    fs[i] = f(xs[i]);
    fmax = std::max(fmax, std::abs(fs[i]));
  }
  std::vector<double> out;
  for (int i = 0; i < samples; ++i) {
    if (fs[i] == 0.0) {
      out.push_back(xs[i]);
      continue;
    }
    if ((fs[i] < 0.0) != (fs[i + 1] < 0.0) && fs[i + 1] != 0.0) {
      double lo = xs[i], hi = xs[i + 1];
      double flo = fs[i];
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
  }
  if (fs[samples] == 0.0) out.push_back(xs[samples]);
  for (int i = 1; i < samples; ++i) {
    const double v = std::abs(fs[i]);
    const bool local_min = v <= std::abs(fs[i - 1]) && v <= std::abs(fs[i + 1]);
    const bool no_change = (fs[i - 1] < 0.0) == (fs[i] < 0.0) && (fs[i + 1] < 0.0) == (fs[i] < 0.0);
    if (!local_min || !no_change || v > touch_ratio * fmax || v == 0.0) continue;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = xs[i - 1], hi = xs[i + 1];
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc = std::abs(f(c)), fd = std::abs(f(d));
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - phi * (hi - lo);
        fc = std::abs(f(c));
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + phi * (hi - lo);
        fd = std::abs(f(d));
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Abscissae in [a,b] where the integer-valued count(x) jumps, located by
// bisection from a uniform grid. Used as breakpoints for outer integrals whose
// inner lines become tangent to a level set.
template <class C>
std::vector<double> count_jumps(C&& count, double a, double b, int grid) {
  std::vector<double> out;
  double x0 = a;
  auto c0 = count(a);
  for (int i = 1; i <= grid; ++i) {
    const double x1 = a + (b - a) * i / grid;
    const auto c1 = count(x1);
    if (c1 != c0) {
      double lo = x0, hi = x1;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (count(mid) == c0 ? lo : hi) = mid;
      }
      out.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    c0 = c1;
  }
  return out;
}

// Neville evaluation at 0 of the interpolating polynomial through (x_i, y_i).
template <class T>
T extrapolate_to_zero(std::span<const double> x, std::span<const T> y) {
  std::vector<T> p(y.begin(), y.end());
  const std::size_t n = p.size();
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i)
      p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
  return p[0];
}

}  // namespace fiberasym
