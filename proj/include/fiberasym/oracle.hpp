#pragma once

// Brute-force evaluation of I(z) = ∫ g(z f(x), x) dx and least-squares
// extraction of asymptotic coefficients from a geometric z grid.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fiberasym/brackets.hpp"
#include "fiberasym/cubature.hpp"
#include "fiberasym/expansion.hpp"
#include "fiberasym/sphere.hpp"

namespace fiberasym {

struct OracleProblem {
  std::function<double(std::span<const double>)> f;
  Symbol symbol;
  Box box;
  Vec anchor;  // critical point (empty for a regular fiber)
};

struct OracleOptions {
  double rel_tol = 1e-10;
  int max_intervals = 3000;
  QmcOptions qmc;
  int threads = 1;
};

struct OracleSample {
  double z = 0.0;
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  bool flagged = false;
};

// Mass of the declared x-envelope outside the box (via the largest centred
// ball inside it).
inline double envelope_tail(const XDecay& xd, const Box& box) {
  const int n = box.dimension();
  double rho = std::numeric_limits<double>::infinity();
  for (int d = 0; d < n; ++d) rho = std::min({rho, -box.lo[d], box.hi[d]});
  if (!(rho > 0.0)) return std::numeric_limits<double>::infinity();
  auto radial = [&](auto&& profile) {
    auto h = [&](double r) { return std::pow(r, n - 1) * profile(r); };
    return xd.amplitude * sphere_area(n) * integrate(h, rho, rho + 60.0, {1e-300, 1e-8, 400, 8}).value;
  };
  switch (xd.kind) {
    case XDecay::Kind::None: return std::numeric_limits<double>::infinity();
    case XDecay::Kind::Gaussian: return radial([&](double r) { return std::exp(-xd.rate * r * r); });
    case XDecay::Kind::Shell:
      if (rho <= xd.radius) return std::numeric_limits<double>::infinity();
      return radial([&](double r) {
        const double s = r * r - xd.radius * xd.radius;
        return std::exp(-s * s);
      });
    case XDecay::Kind::Box: {
      for (int d = 0; d < n; ++d)
        if (box.lo[d] > -xd.radius || box.hi[d] < xd.radius) return std::numeric_limits<double>::infinity();
      return 0.0;
    }
  }
  return std::numeric_limits<double>::infinity();
}

// One oracle sample. n <= 3: nested adaptive quadrature whose breakpoints are
// graded towards the anchor and towards the zero set of f on each inner line,
// down to the width 1/z of the supporting shell. n >= 4: shifted Halton points.
inline OracleSample integrate_fiber(const OracleProblem& prob, double z, const OracleOptions& opt = {}) {
  if (!(z > 0.0)) throw Error(ErrorKind::Input, "oracle", "integrate_fiber", "z must be positive");
  const int n = prob.box.dimension();
  if (!prob.anchor.empty() && static_cast<int>(prob.anchor.size()) != n)
    throw Error(ErrorKind::Input, "oracle", "integrate_fiber", "anchor dimension differs from the box");
  auto integrand = [&](std::span<const double> x) { return prob.symbol.g(z * prob.f(x), x); };
  OracleSample s;
  s.z = z;
  QuadResult r;
  if (n <= 3) {
    NestedOptions q;
    q.rel_tol = opt.rel_tol;
    q.max_intervals = opt.max_intervals;
    q.feature_scale = 0.1 * std::min(1.0, 1.0 / z);
    r = nested_integrate(integrand, prob.f, prob.box, prob.anchor, q);
  } else {
    r = qmc_integrate(integrand, prob.box, opt.qmc);
    s.flagged = true;
  }
  s.value = r.value;
  s.evals = r.evals;
  const double tail = envelope_tail(prob.symbol.x_decay, prob.box);
  s.error = r.error + (std::isfinite(tail) ? tail : 0.0);
  if (!std::isfinite(tail)) s.flagged = true;
  if (n <= 3 && !r.converged) {
    s.error *= 10.0;
    s.flagged = true;
  }
  return s;
}

// Samples at each z, spread over `threads` workers; results land by index so
// the output does not depend on scheduling.
inline std::vector<OracleSample> sample_fiber(const OracleProblem& prob, const std::vector<double>& zs,
                                              const OracleOptions& opt = {}) {
  for (std::size_t i = 1; i < zs.size(); ++i)
    if (!(zs[i] > zs[i - 1])) throw Error(ErrorKind::Input, "oracle", "sample_fiber", "z grid must be increasing");
  std::vector<OracleSample> out(zs.size());
  const int workers = std::max(1, std::min<int>(opt.threads, static_cast<int>(zs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < zs.size(); ++i) out[i] = integrate_fiber(prob, zs[i], opt);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < zs.size();) out[i] = integrate_fiber(prob, zs[i], opt);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::vector<double> z_grid(double z_min, double z_max, int count) {
  if (!(z_min > 0.0) || !(z_max > z_min) || count < 2)
    throw Error(ErrorKind::Input, "oracle", "z_grid", "need 0 < z_min < z_max and at least two points");
  std::vector<double> zs;
  const double r = std::log(z_max / z_min) / (count - 1);
  for (int i = 0; i < count; ++i) zs.push_back(i + 1 == count ? z_max : z_min * std::exp(r * i));
  return zs;
}

inline std::string samples_csv(const std::vector<OracleSample>& samples) {
  std::ostringstream os;
  os << "z,value,error,evals\n";
  char buf[128];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu\n", s.z, s.value, s.error, s.evals);
    os << buf;
  }
  return os.str();
}

// ---- fitting ------------------------------------------------------------

inline std::string basis_name(const Order& o) {
  std::string s = "z^-" + to_string(o.exponent);
  if (o.logpower == 1) s += " log z";
  if (o.logpower > 1) s += " log^" + std::to_string(o.logpower) + " z";
  return s;
}

inline double basis_value(const Order& o, double z) {
  return std::pow(z, -o.exponent.value()) * std::pow(std::log(z), o.logpower);
}

// Fit model dictated by the exponent schedule. A logarithmic entry z^{-e} log z
// brings its plain companion z^{-e}; principal-type and regular fibers also
// carry the integer powers z^{-1}, z^{-2}, ... of the regular part of the fiber.
inline std::vector<Order> model_basis(CaseTag tag, int n, int k, int nterms) {
  if (nterms < 1) throw Error(ErrorKind::Input, "oracle", "model_basis", "nterms must be >= 1");
  std::vector<Order> b;
  if (tag == CaseTag::RegularFiber) {
    for (int j = 1; j <= nterms; ++j) b.push_back({Rational(j, 1), 0});
    return b;
  }
  if (tag == CaseTag::Unsupported) throw Error(ErrorKind::Unsupported, "oracle", "model_basis", "no model for Unsupported");
  const bool extremum = tag == CaseTag::ExtremumMin || tag == CaseTag::ExtremumMax;
  const auto sched = extremum ? extremum_schedule(n, k, 2 * nterms + 2) : pole_schedule(n, k, 2 * nterms + 2);
  for (const auto& t : sched) {
    b.push_back({t.exponent, t.logpower});
    if (t.logpower > 0) b.push_back({t.exponent, 0});
  }
  if (!extremum) {
    const Rational last = sched.back().exponent;
    for (long j = 1; Rational(j, 1) <= last; ++j) b.push_back({Rational(j, 1), 0});
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  b.resize(nterms);
  return b;
}

struct FitResult {
  std::vector<Order> basis;
  std::vector<double> coeffs;
  std::vector<double> stderrs;
  double residual_norm = 0.0;  // weighted
  double chi2_reduced = 0.0;
  double condition = 0.0;
  int dof = 0;

  std::optional<double> coefficient(const Order& o) const {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == o) return coeffs[i];
    return std::nullopt;
  }
  std::optional<double> stderr_of(const Order& o) const {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == o) return stderrs[i];
    return std::nullopt;
  }
};

struct FitOptionsLsq {
  double relative_error_floor = 1e-9;
  double max_condition = 1e12;
};

// Weighted least squares of I(z) on the first `nterms` basis functions, with
// weights 1/error^2 (errors floored relative to |I|). Columns are scaled to
// unit maximum before the SVD; the condition number refers to that design.
inline FitResult fit_asymptotics(const std::vector<OracleSample>& samples, const std::vector<Order>& schedule,
                                 int nterms, const FitOptionsLsq& opt = {}) {
  if (nterms < 1 || nterms > static_cast<int>(schedule.size()))
    throw Error(ErrorKind::Input, "oracle", "fit_asymptotics", "nterms must be between 1 and the schedule length");
  const int m = static_cast<int>(samples.size());
  if (m < nterms + 2) throw Error(ErrorKind::Input, "oracle", "fit_asymptotics", "need at least nterms + 2 samples");
  FitResult out;
  out.basis.assign(schedule.begin(), schedule.begin() + nterms);
  Eigen::MatrixXd A(m, nterms);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    const auto& s = samples[i];
    if (!(s.z > 0.0)) throw Error(ErrorKind::Input, "oracle", "fit_asymptotics", "z must be positive");
    const double sigma = std::max(s.error, opt.relative_error_floor * std::abs(s.value));
    const double w = sigma > 0.0 ? 1.0 / sigma : 1.0;
    for (int j = 0; j < nterms; ++j) A(i, j) = w * basis_value(out.basis[j], s.z);
    b(i) = w * s.value;
  }
  Eigen::VectorXd colscale(nterms);
  for (int j = 0; j < nterms; ++j) {
    colscale(j) = A.col(j).cwiseAbs().maxCoeff();
    if (colscale(j) == 0.0) colscale(j) = 1.0;
    A.col(j) /= colscale(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  out.condition = sv(nterms - 1) > 0.0 ? sv(0) / sv(nterms - 1) : std::numeric_limits<double>::infinity();
  if (!(out.condition <= opt.max_condition)) {
    const Eigen::VectorXd v = svd.matrixV().col(nterms - 1).cwiseAbs();
    int i0 = 0, i1 = nterms > 1 ? 1 : 0;
    for (int j = 0; j < nterms; ++j) {
      if (v(j) > v(i0)) {
        i1 = i0;
        i0 = j;
      } else if (j != i0 && (i1 == i0 || v(j) > v(i1))) {
        i1 = j;
      }
    }
    throw Error(ErrorKind::RankDeficient, "oracle", "fit_asymptotics",
                "design condition " + std::to_string(out.condition) + " exceeds limit; colliding terms: " +
                    basis_name(out.basis[i0]) + " and " + basis_name(out.basis[i1]));
  }
  const Eigen::VectorXd c = svd.solve(b);
  const Eigen::VectorXd r = A * c - b;
  out.residual_norm = r.norm();
  out.dof = m - nterms;
  out.chi2_reduced = out.dof > 0 ? r.squaredNorm() / out.dof : 0.0;
  const Eigen::MatrixXd Vs = svd.matrixV() * sv.cwiseInverse().asDiagonal();
  const double inflate = out.dof > 0 ? std::sqrt(out.chi2_reduced) : 1.0;
  for (int j = 0; j < nterms; ++j) {
    out.coeffs.push_back(c(j) / colscale(j));
    out.stderrs.push_back(inflate * Vs.row(j).norm() / colscale(j));
  }
  return out;
}

inline nlohmann::json to_json(const FitResult& fr) {
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t i = 0; i < fr.basis.size(); ++i)
    terms.push_back({{"num", fr.basis[i].exponent.num},
                     {"den", fr.basis[i].exponent.den},
                     {"logpower", fr.basis[i].logpower},
                     {"coeff", fr.coeffs[i]},
                     {"stderr", fr.stderrs[i]}});
  return {{"schema", 1},
          {"terms", terms},
          {"residual_norm", fr.residual_norm},
          {"chi2_reduced", fr.chi2_reduced},
          {"condition", fr.condition},
          {"dof", fr.dof}};
}

// Least-squares slope of log|r| against log z.
inline double loglog_slope(std::span<const double> z, std::span<const double> r) {
  if (z.size() != r.size() || z.size() < 2)
    throw Error(ErrorKind::Input, "oracle", "loglog_slope", "need matching sequences of length >= 2");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = std::log(z[i]);
    const double y = std::log(std::abs(r[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// Residual after removing the first `leading` fitted terms, and its slope.
inline double remainder_slope(const std::vector<OracleSample>& samples, const FitResult& fit, int leading) {
  std::vector<double> z, r;
  for (const auto& s : samples) {
    double v = s.value;
    for (int j = 0; j < leading; ++j) v -= fit.coeffs[j] * basis_value(fit.basis[j], s.z);
    z.push_back(s.z);
    r.push_back(v);
  }
  return loglog_slope(z, r);
}

}  // namespace fiberasym
