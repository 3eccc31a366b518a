#pragma once

// Box integration for integrands that concentrate near level sets of a known
// function: nested adaptive Gauss-Kronrod with breakpoints graded towards the
// level set (low dimension), and randomly shifted Halton points (high dimension).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fiberasym/quadrature.hpp"
#include "fiberasym/random.hpp"

namespace fiberasym {

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box cube(int n, double half_width, std::span<const double> center = {}) {
    Box b;
    for (int i = 0; i < n; ++i) {
      const double c = center.empty() ? 0.0 : center[i];
      b.lo.push_back(c - half_width);
      b.hi.push_back(c + half_width);
    }
    return b;
  }
  int dimension() const { return static_cast<int>(lo.size()); }
  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }
};

// Sorted breakpoints inside (a,b): each center plus a geometric ladder
// center ± (b-a)/ratio^j that stops once the spacing falls below its scale.
struct GradedPoint {
  double center;
  double scale;
};

inline std::vector<double> graded_breakpoints(std::span<const GradedPoint> points, double a, double b,
                                              double ratio = 4.0) {
  std::vector<double> out;
  for (const auto& p : points) {
    if (p.center > a && p.center < b) out.push_back(p.center);
    const double floor = std::max(p.scale, 1e-13 * (b - a));
    for (double d = (b - a) / ratio; d >= floor; d /= ratio) {
      if (p.center - d > a) out.push_back(p.center - d);
      if (p.center + d < b) out.push_back(p.center + d);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct NestedOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  int max_intervals = 2000;
  // Characteristic width of the integrand across a level set at unit gradient.
  double feature_scale = 1e-3;
  std::vector<double> levels{0.0};
  int line_samples = 64;
};

namespace detail {

struct NestedState {
  const std::function<double(std::span<const double>)>& integrand;
  const std::function<double(std::span<const double>)>& level_fn;
  const Box& box;
  std::span<const double> anchor;
  const NestedOptions& opt;
  std::vector<double> x;
  bool converged = true;
  std::size_t evals = 0;
};

inline double nested_level(NestedState& s, int d, double tol_scale, double* err_out) {
  const int n = s.box.dimension();
  const double a = s.box.lo[d];
  const double b = s.box.hi[d];
  std::vector<GradedPoint> pts;
  if (!s.anchor.empty()) pts.push_back({s.anchor[d], s.opt.feature_scale});
  if (d == n - 1) {
    for (double level : s.opt.levels) {
      auto line = [&](double t) {
        s.x[d] = t;
        return s.level_fn(s.x) - level;
      };
      for (double r : level_points(line, a, b, s.opt.line_samples)) {
        const double h = 1e-6 * (b - a);
        const double slope = std::abs(line(std::min(r + h, b)) - line(std::max(r - h, a))) / (2.0 * h);
        double scale = s.opt.feature_scale;
        if (slope > 1.0) scale /= slope;
        pts.push_back({r, scale});
      }
    }
  }
  if (d == n - 2) {
    // The innermost line changes shape where it enters, leaves or becomes
    // tangent to a requested level set. Those abscissae are jumps or kinks of
    // this coordinate's integrand, and a thin tail of width feature_scale can
    // sit just past them, so they are graded like the inner crossings.
    const double ia = s.box.lo[n - 1], ib = s.box.hi[n - 1];
    auto signature = [&](double t) {
      s.x[d] = t;
      std::size_t sig = 0;
      for (double level : s.opt.levels) {
        auto line = [&](double u) {
          s.x[n - 1] = u;
          return s.level_fn(s.x) - level;
        };
        const bool above = line(ia) > 0.0;
        sig = sig * 131 + 2 * level_points(line, ia, ib, s.opt.line_samples, 0.0).size() + (above ? 1 : 0);
      }
      return sig;
    };
    for (double j : count_jumps(signature, a, b, 4 * s.opt.line_samples)) pts.push_back({j, s.opt.feature_scale});
  }
  auto bps = graded_breakpoints(pts, a, b);
  AdaptiveOptions ao{s.opt.abs_tol * tol_scale, s.opt.rel_tol * tol_scale, s.opt.max_intervals, 1};
  QuadResult r;
  if (d == n - 1) {
    auto f = [&](double t) {
      s.x[d] = t;
      ++s.evals;
      return s.integrand(s.x);
    };
    r = integrate(f, a, b, ao, bps);
  } else {
    auto f = [&](double t) {
      s.x[d] = t;
      return nested_level(s, d + 1, tol_scale * 0.1, nullptr);
    };
    r = integrate(f, a, b, ao, bps);
  }
  s.converged = s.converged && r.converged;
  if (err_out) *err_out = r.error;
  return r.value;
}

}  // namespace detail

// ∫_box F(x) dx by iterated adaptive quadrature. Every coordinate line gets
// breakpoints at the anchor; the innermost line also gets the crossings of
// level_fn with each requested level, graded down to feature_scale/|slope|.
// Inner integrals run at a tenth of the outer tolerance.
inline QuadResult nested_integrate(const std::function<double(std::span<const double>)>& integrand,
                                   const std::function<double(std::span<const double>)>& level_fn, const Box& box,
                                   std::span<const double> anchor, const NestedOptions& opt = {}) {
  if (box.dimension() < 1) throw Error(ErrorKind::Input, "cubature", "nested_integrate", "empty box");
  detail::NestedState s{integrand, level_fn, box, anchor, opt, std::vector<double>(box.dimension(), 0.0)};
  QuadResult out;
  out.value = detail::nested_level(s, 0, 1.0, &out.error);
  out.evals = s.evals;
  out.converged = s.converged;
  return out;
}

// Radical inverse in base b.
inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

struct QmcOptions {
  std::uint64_t points = 1 << 15;
  int shifts = 8;
  std::uint64_t seed = 0;
};

// Randomly shifted Halton rule: mean over shifts, error = standard error of
// the per-shift means. Shifts come from a counter-based stream, so the value
// does not depend on evaluation order.
inline QuadResult qmc_integrate(const std::function<double(std::span<const double>)>& integrand, const Box& box,
                                const QmcOptions& opt = {}) {
  static constexpr std::array<unsigned, 16> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  const int n = box.dimension();
  if (n > static_cast<int>(primes.size()))
    throw Error(ErrorKind::Unsupported, "cubature", "qmc_integrate", "dimension above 16");
  if (opt.shifts < 2) throw Error(ErrorKind::Input, "cubature", "qmc_integrate", "need at least two shifts");
  CounterRng rng(opt.seed);
  std::vector<double> means;
  std::vector<double> x(n);
  const double vol = box.volume();
  for (int s = 0; s < opt.shifts; ++s) {
    double acc = 0.0;
    for (std::uint64_t i = 0; i < opt.points; ++i) {
      for (int d = 0; d < n; ++d) {
        double u = radical_inverse(i + 1, primes[d]) + rng.uniform(static_cast<std::uint64_t>(d), s);
        u -= std::floor(u);
        x[d] = box.lo[d] + u * (box.hi[d] - box.lo[d]);
      }
      acc += integrand(x);
    }
    means.push_back(vol * acc / static_cast<double>(opt.points));
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= means.size();
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (means.size() - 1);
  QuadResult out;
  out.value = mean;
  out.error = std::sqrt(var / means.size());
  out.evals = opt.points * opt.shifts;
  out.converged = false;
  return out;
}

}  // namespace fiberasym
