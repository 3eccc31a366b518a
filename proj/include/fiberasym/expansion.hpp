#pragma once

// Prediction engine: exponent schedules, leading coefficients for extremum
// and principal-type germs, the one-dimensional radial expansion, and the
// leading term for a regular fiber.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fiberasym/brackets.hpp"
#include "fiberasym/cubature.hpp"
#include "fiberasym/germ.hpp"
#include "fiberasym/sphere.hpp"

namespace fiberasym {

struct Rational {
  long num = 0;
  long den = 1;

  Rational() = default;
  Rational(long p, long q) : num(p), den(q) {
    if (q == 0) throw Error(ErrorKind::Input, "expansion", "Rational", "zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long g = std::gcd(std::labs(num), den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool is_integer() const { return den == 1; }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend auto operator<=>(const Rational& a, const Rational& b) { return a.num * b.den <=> b.num * a.den; }
};

inline std::string to_string(const Rational& r) {
  return r.den == 1 ? std::to_string(r.num) : std::to_string(r.num) + "/" + std::to_string(r.den);
}

// One term c · z^{-exponent} (log z)^{logpower}.
struct ExpansionTerm {
  Rational exponent;
  int logpower = 0;
  std::optional<double> coeff;
  std::optional<double> error;
  int pole_order = 1;
};

// Decay order of z^{-e} (log z)^l: larger means faster decay.
struct Order {
  Rational exponent;
  int logpower = 0;
  friend bool operator==(const Order&, const Order&) = default;
  friend auto operator<=>(const Order& a, const Order& b) {
    if (auto c = a.exponent <=> b.exponent; c != 0) return c;
    return b.logpower <=> a.logpower;
  }
};

// b_k(ξ) = (1-ξ) ∏_{j=1}^k (j - kξ); the weighted variant shifts each factor by n-1.
inline double bernstein_value(double xi, int n, int k, bool weighted) {
  double v = 1.0 - xi;
  const double shift = weighted ? n - 1.0 : 0.0;
  for (int j = 1; j <= k; ++j) v *= j - k * xi + shift;
  return v;
}

// Poles p + (j+n-1)/k, j = 1..k, p = 0,1,...: every m/k with m >= n. Integer
// poles are double (logarithmic terms).
inline std::vector<ExpansionTerm> pole_schedule(int n, int k, int count) {
  if (count < 1) throw Error(ErrorKind::Input, "expansion", "pole_schedule", "count must be >= 1");
  if (n < 1 || k < 1) throw Error(ErrorKind::Input, "expansion", "pole_schedule", "n and k must be positive");
  std::vector<Rational> lattice;
  const Rational first(n, k);
  for (long p = 0; static_cast<int>(lattice.size()) < 4 * count + 4 * k; ++p)
    for (int j = 1; j <= k; ++j) {
      Rational r(p * k + j + n - 1, k);
      if (!(r < first)) lattice.push_back(r);
    }
  std::sort(lattice.begin(), lattice.end());
  lattice.erase(std::unique(lattice.begin(), lattice.end()), lattice.end());
  std::vector<ExpansionTerm> out;
  for (int i = 0; i < count; ++i) {
    ExpansionTerm t;
    t.exponent = lattice[i];
    t.logpower = lattice[i].is_integer() ? 1 : 0;
    t.pole_order = t.logpower + 1;
    out.push_back(t);
  }
  return out;
}

// Extremum germs expand in plain powers z^{-m/k}, m >= n.
inline std::vector<ExpansionTerm> extremum_schedule(int n, int k, int count) {
  if (count < 1) throw Error(ErrorKind::Input, "expansion", "extremum_schedule", "count must be >= 1");
  std::vector<ExpansionTerm> out;
  for (int m = n; static_cast<int>(out.size()) < count; ++m) out.push_back({Rational(m, k), 0, {}, {}, 1});
  return out;
}

struct Prediction {
  CaseTag tag = CaseTag::Unsupported;
  int n = 0;
  int k = 0;
  std::vector<ExpansionTerm> terms;
  Order remainder;
  nlohmann::json provenance = nlohmann::json::object();

  const ExpansionTerm& leading() const { return terms.front(); }
};

inline nlohmann::json to_json(const Prediction& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : p.terms) {
    nlohmann::json e{{"num", t.exponent.num}, {"den", t.exponent.den}, {"logpower", t.logpower},
                     {"pole_order", t.pole_order}};
    if (t.coeff) e["coeff"] = *t.coeff;
    if (t.error) e["error"] = *t.error;
    terms.push_back(e);
  }
  return {{"schema", 1},
          {"case", to_string(p.tag)},
          {"n", p.n},
          {"k", p.k},
          {"terms", terms},
          {"remainder",
           {{"num", p.remainder.exponent.num}, {"den", p.remainder.exponent.den}, {"logpower", p.remainder.logpower}}},
          {"provenance", p.provenance}};
}

struct PredictOptions {
  SphereRule rule;              // empty: chosen from the dimension
  InversePowerOptions inverse;  // singular sphere integrals
  double bandwidth = 0.0;       // co-area kernel; 0 = default
  FitOptions fit;               // local fit of LVol around 0
  BracketOptions bracket;
  FinitePartMethod fp_method = FinitePartMethod::TaylorSubtraction;
  int fp_order = 0;             // derivative order for the derivative form; 0 = n
  int schedule_terms = 4;       // schedule-only entries listed after the leading term
  std::uint64_t seed = 0;
};

inline SphereRule default_rule(int n, std::uint64_t seed = 0) {
  if (n == 2) return build_rule(2, 4096, RuleKind::UniformCircle);
  if (n == 3) return build_rule(3, 400, RuleKind::ProductGauss);
  return build_rule(n, 400000, RuleKind::MonteCarlo, seed);
}

namespace detail {

// χ(s) = 1 on [0,a], 0 on [b,∞), polynomial smoothstep between with `smooth`
// continuous derivatives at both joints.
class Cutoff {
 public:
  Cutoff(double a, double b, int smooth) : a_(a), b_(b) {
    // S(u) = Σ_j (-1)^j C(s+j, j) C(2s+1, s-j) u^{s+j+1}
    const int s = smooth;
    coeffs_.assign(2 * s + 2, 0.0);
    for (int j = 0; j <= s; ++j) coeffs_[s + j + 1] = ((j % 2) ? -1.0 : 1.0) * binom(s + j, j) * binom(2 * s + 1, s - j);
  }
  double lower() const { return a_; }
  double upper() const { return b_; }

  // m-th derivative of χ at s >= 0
  double d(double s, int m) const {
    if (s <= a_) return m == 0 ? 1.0 : 0.0;
    if (s >= b_) return 0.0;
    const double L = b_ - a_;
    const double u = (s - a_) / L;
    double v = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > static_cast<std::size_t>(m);) {
      double c = coeffs_[i];
      for (int j = 0; j < m; ++j) c *= static_cast<double>(i - j);
      v = v * u + c;
    }
    v /= std::pow(L, m);
    return m == 0 ? 1.0 - v : -v;
  }

 private:
  static double binom(int n, int r) {
    double v = 1.0;
    for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
    return v;
  }
  double a_, b_;
  std::vector<double> coeffs_;
};

inline nlohmann::json bracket_json(const BracketResult& b) {
  return {{"value", b.value}, {"error", b.error}, {"truncation", std::isfinite(b.truncation) ? b.truncation : -1.0}};
}

inline nlohmann::json quad_json(const QuadResult& q) {
  return {{"value", q.value}, {"error", q.error}, {"evals", q.evals}, {"converged", q.converged}};
}

inline Order next_order(int n, int k) {
  Rational r(n + 1, k);
  return {r, r.is_integer() ? 1 : 0};
}

}  // namespace detail

// Leading asymptotic term of I(z) contributed by the critical point x0.
inline Prediction predict_leading(const Germ& germ, const Symbol& symbol, const Classification& cls,
                                  const PredictOptions& opt = {}) {
  if (cls.tag == CaseTag::RegularFiber)
    throw Error(ErrorKind::WrongCase, "expansion", "predict_leading", "regular fiber: use regular_leading");
  if (cls.tag == CaseTag::Unsupported)
    throw Error(ErrorKind::Unsupported, "expansion", "predict_leading",
                "germ classified Unsupported: " + cls.reason);
  const int n = germ.n();
  const int k = germ.k();
  const double alpha = static_cast<double>(n) / k;
  const SphereRule rule = opt.rule.nodes.empty() ? default_rule(n, opt.seed) : opt.rule;

  Prediction out;
  out.tag = cls.tag;
  out.n = n;
  out.k = k;
  auto& prov = out.provenance;
  prov["rule"] = {{"kind", to_string(rule.kind)}, {"order", rule.order}, {"nodes", rule.nodes.size()}};

  ExpansionTerm lead;
  lead.exponent = Rational(n, k);

  if (cls.is_extremum()) {
    const Sign side = cls.tag == CaseTag::ExtremumMin ? Sign::Plus : Sign::Minus;
    const auto bracket = t_power_bracket(symbol, static_cast<double>(n - k) / k, side, opt.bracket);
    const auto sphere = inverse_power_integral(germ, alpha, Region::All, rule, opt.inverse);
    lead.coeff = bracket.value * sphere.value / k;
    lead.error = (std::abs(bracket.error * sphere.value) + std::abs(bracket.value * sphere.error)) / k;
    out.remainder = {Rational(n + 1, k), 0};
    prov["formula"] = "<t_e^((n-k)/k), g(t,x0)> * (1/k) * int_S |f_k|^(-n/k)";
    prov["t_bracket"] = detail::bracket_json(bracket);
    prov["t_bracket"]["side"] = side == Sign::Plus ? "+" : "-";
    prov["sphere_integral"] = detail::quad_json(sphere);
    out.terms.push_back(lead);
    auto rest = extremum_schedule(n, k, opt.schedule_terms + 1);
    out.terms.insert(out.terms.end(), rest.begin() + 1, rest.end());
    return out;
  }

  // principal type
  auto schedule = pole_schedule(n, k, opt.schedule_terms + 1);
  lead.logpower = schedule.front().logpower;
  lead.pole_order = schedule.front().pole_order;

  if (k > n) {
    const auto bp = t_power_bracket(symbol, alpha - 1.0, Sign::Plus, opt.bracket);
    const auto bm = t_power_bracket(symbol, alpha - 1.0, Sign::Minus, opt.bracket);
    const auto sp = inverse_power_integral(germ, alpha, Region::Plus, rule, opt.inverse);
    const auto sm = inverse_power_integral(germ, alpha, Region::Minus, rule, opt.inverse);
    lead.coeff = (bp.value * sp.value + bm.value * sm.value) / k;
    lead.error = (std::abs(bp.error * sp.value) + std::abs(bp.value * sp.error) + std::abs(bm.error * sm.value) +
                  std::abs(bm.value * sm.error)) / k;
    out.remainder = detail::next_order(n, k);
    prov["formula"] = "(1/k) [<t_+^(n/k-1),g> int_{f_k>=0} |f_k|^(-n/k) + <t_-^(n/k-1),g> int_{f_k<=0} |f_k|^(-n/k)]";
    prov["t_bracket_plus"] = detail::bracket_json(bp);
    prov["t_bracket_minus"] = detail::bracket_json(bm);
    prov["sphere_integral_plus"] = detail::quad_json(sp);
    prov["sphere_integral_minus"] = detail::quad_json(sm);
  } else if (n % k == 0) {
    const int p = n / k;
    const auto tint = t_abs_power_integral(symbol, p - 1.0, opt.bracket);
    double lvol = 0.0;
    double lvol_err = 0.0;
    if (n == 2 && p == 1) {
      lvol = circle_zero_sum(germ);
      prov["lvol_derivative"] = {{"order", 0}, {"value", lvol}, {"method", "exact zero sum"}};
    } else {
      const double h = opt.bandwidth > 0.0 ? opt.bandwidth : default_bandwidth(germ, rule);
      const auto density = coarea_density(germ, {}, rule, h, opt.fit);
      lvol = coarea_derivative_at_zero(density, p - 1, opt.fit);
      // spread between two fit degrees as a crude error proxy
      FitOptions alt = opt.fit;
      alt.degree = std::max(p + 1, 4) + 2;
      lvol_err = std::abs(coarea_derivative_at_zero(density, p - 1, alt) - lvol);
      prov["lvol_derivative"] = {{"order", p - 1}, {"value", lvol}, {"method", "local polynomial fit"},
                                 {"bandwidth", h}, {"window", opt.fit.window_multiple * h}};
    }
    lead.coeff = lvol * tint.value / k;
    lead.error = (std::abs(lvol * tint.error) + std::abs(lvol_err * tint.value)) / k;
    out.remainder = {Rational(n, k), 0};
    prov["formula"] = "(1/k) LVol^(p-1)(0) int_R |t|^(p-1) g(t,x0) dt";
    prov["t_integral"] = detail::bracket_json(tint);
  } else {
    // LVol = χ·P + (1-χ)·LVol with P the local fit at 0: the first piece goes
    // through the finite part, the second is a plain sphere integral.
    const double h = opt.bandwidth > 0.0 ? opt.bandwidth : default_bandwidth(germ, rule);
    const double W = opt.fit.window_multiple * h;
    const bool direct = n <= 3;
    int degree = opt.fit.degree > 0 ? opt.fit.degree : std::max(n / k + 2, 4);
    PolyFit P;
    if (direct) {
      // unsmoothed LVol at Chebyshev points of [-W, W]
      degree = opt.fit.degree > 0 ? opt.fit.degree : std::max(n / k + 4, 6);
      const int m = 4 * degree + 1;
      std::vector<double> ws, vs;
      for (int i = 0; i < m; ++i) {
        const double w = W * std::cos(std::numbers::pi * (i + 0.5) / m);
        ws.push_back(w);
        vs.push_back(level_density(germ, w, opt.inverse).value);
      }
      P = detail::local_poly_fit(ws, vs, degree, W, "predict_leading");
    } else {
      const auto density = coarea_density(germ, {}, rule, h, opt.fit);
      P = coarea_local_fit(density, degree, opt.fit);
    }
    const detail::Cutoff chi(0.5 * W, W, n + 2);

    Smooth1D phi;
    phi.d = [&P, &chi](double w, int m) {
      const double sg = w < 0.0 ? -1.0 : 1.0;
      const double s = std::abs(w);
      double v = 0.0;
      double binom = 1.0;
      for (int j = 0; j <= m; ++j) {
        const double cj = (j % 2 && sg < 0.0 ? -1.0 : 1.0) * chi.d(s, j);
        if (cj != 0.0) v += binom * cj * P.derivative(w, m - j);
        binom = binom * (m - j) / (j + 1);
      }
      return v;
    };
    phi.decay_plus = Decay::compact(W);
    phi.decay_minus = Decay::compact(W);

    FinitePartOptions fpo;
    fpo.method = opt.fp_method;
    fpo.derivative_order = opt.fp_order;
    fpo.quad = opt.bracket;
    fpo.series_cut = std::min(fpo.series_cut, 0.5 * chi.lower());  // the series is only valid where χ ≡ 1
    const auto fp_plus = finite_part_bracket(phi, n, k, Sign::Plus, fpo);
    const auto fp_minus = finite_part_bracket(phi, n, k, Sign::Minus, fpo);
    // (1/k) ∫_{±f_k > 0} (1 - χ(|f_k|)) |f_k|^{-n/k} dθ
    auto away = [&](Region region) {
      auto h_region = [&](double v) {
        if (v == 0.0 || (region == Region::Plus) != (v > 0.0)) return 0.0;
        const double s = std::abs(v);
        return (1.0 - chi.d(s, 0)) * std::pow(s, -alpha);
      };
      if (direct) {
        const double lv[5] = {-chi.upper(), -chi.lower(), 0.0, chi.lower(), chi.upper()};
        return sphere_level_integral(germ, h_region, lv).value / k;
      }
      return rule.sum([&](std::span<const double> p) { return h_region(eval_fk(germ, p)); }) / k;
    };
    const double rest_plus = away(Region::Plus);
    const double rest_minus = away(Region::Minus);
    const double FPp = fp_plus.value + rest_plus;
    const double FPm = fp_minus.value + rest_minus;

    const auto bp = t_power_bracket(symbol, alpha - 1.0, Sign::Plus, opt.bracket);
    const auto bm = t_power_bracket(symbol, alpha - 1.0, Sign::Minus, opt.bracket);
    lead.coeff = bp.value * FPp + bm.value * FPm;
    lead.error = std::abs(bp.error * FPp) + std::abs(bm.error * FPm) + std::abs(bp.value) * fp_plus.error +
                 std::abs(bm.value) * fp_minus.error;
    out.remainder = detail::next_order(n, k);
    prov["formula"] = "<t_+^(n/k-1),g> FP_+ + <t_-^(n/k-1),g> FP_-, FP_± = (1/k) FP int_0^inf w^(-n/k) LVol(±w) dw";
    prov["t_bracket_plus"] = detail::bracket_json(bp);
    prov["t_bracket_minus"] = detail::bracket_json(bm);
    prov["finite_part_plus"] = {{"value", FPp}, {"near_zero", fp_plus.value}, {"away", rest_plus}};
    prov["finite_part_minus"] = {{"value", FPm}, {"near_zero", fp_minus.value}, {"away", rest_minus}};
    prov["finite_part_method"] = opt.fp_method == FinitePartMethod::TaylorSubtraction ? "taylor" : "derivative";
    prov["lvol_fit"] = {{"degree", degree}, {"window", W}, {"lvol0", P.eval(0.0)},
                        {"source", direct ? "co-area line sums" : "kernel density"}};
    prov["note"] = "the regular part of the fiber adds integer powers z^-1, z^-2, ... to I(z)";
  }

  out.terms.push_back(lead);
  out.terms.insert(out.terms.end(), schedule.begin() + 1, schedule.end());
  return out;
}

// ---- one-dimensional radial expansion -----------------------------------

struct RadialAmplitude {
  std::function<double(double, double)> a;  // a(τ, u)
  std::function<double(double, int)> du;    // ∂_u^j a(τ, 0)
  Decay tau_decay = Decay::exponential(1.0);
};

// d_j(a) = (1/k)(1/j!) ∫_0^∞ τ^{(j+1-k)/k} ∂_u^j a(τ,0) dτ, j = 0..jmax; the
// coefficient of z^{-(j+1)/k} in J(z) = ∫_0^∞ a(z u^k, u) du.
inline std::vector<BracketResult> radial_expansion(const RadialAmplitude& amp, int k, int jmax,
                                                   const BracketOptions& opt = {}) {
  if (k < 1 || jmax < 0) throw Error(ErrorKind::Input, "expansion", "radial_expansion", "need k >= 1 and jmax >= 0");
  std::vector<BracketResult> out;
  double factorial = 1.0;
  for (int j = 0; j <= jmax; ++j) {
    if (j > 0) factorial *= j;
    auto h = [&](double tau) { return amp.du(tau, j); };
    const double alpha = static_cast<double>(j + 1 - k) / k;
    try {
      const auto r = half_line_moment(h, alpha, amp.tau_decay, adaptive(opt));
      out.push_back({r.quad.value / (k * factorial), r.quad.error / (k * factorial), r.truncation, r.quad.evals});
    } catch (const Error& e) {
      throw Error(e.kind(), "expansion", "radial_expansion", e.what());
    }
  }
  return out;
}

// J(z) = ∫_0^∞ a(z u^k, u) du, evaluated as z^{-1/k} ∫_0^∞ a(v^k, z^{-1/k} v) dv.
inline QuadResult radial_direct(const RadialAmplitude& amp, int k, double z, const AdaptiveOptions& opts = {}) {
  if (!(z > 0.0)) throw Error(ErrorKind::Input, "expansion", "radial_direct", "z must be positive");
  double vmax = 0.0;
  switch (amp.tau_decay.kind) {
    case Decay::Kind::Compact: vmax = std::pow(amp.tau_decay.rate, 1.0 / k); break;
    case Decay::Kind::Exponential: vmax = std::pow(60.0 / amp.tau_decay.rate, 1.0 / k); break;
    case Decay::Kind::Power:
      throw Error(ErrorKind::Unsupported, "expansion", "radial_direct", "power-law tau decay");
  }
  const double s = std::pow(z, -1.0 / k);
  auto f = [&](double v) { return amp.a(std::pow(v, k), s * v); };
  AdaptiveOptions o = opts;
  o.initial_panels = std::max(o.initial_panels, 8);
  auto r = integrate(f, 0.0, vmax, o);
  r.value *= s;
  r.error *= s;
  return r;
}

// ---- regular fiber ------------------------------------------------------

struct RegularOptions {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025, 0.0125};
  Box box = Box::cube(2, 4.0);
  NestedOptions quad{1e-11, 1e-300, 4000, 1e-3, {}, 64};
  double ratio_limit = 0.6;  // successive extrapolation changes must shrink by this factor
  double min_gradient = 1e-6;
  int gradient_samples = 20000;
};

struct RegularResult {
  double value = 0.0;
  double error = 0.0;
  std::vector<double> eps;
  std::vector<double> shell_values;
  std::vector<double> extrapolants;
  double min_gradient = 0.0;
  double t_integral = 0.0;
};

// ∫_S ∫_R g(t,x) dt dσ(x) with σ the Leray measure (df ∧ dσ = dx), as the
// ε -> 0 limit of (1/2ε) ∫_{|f|<ε} ∫ g(t,x) dt dx, extrapolated in ε².
inline RegularResult regular_leading(const std::function<double(std::span<const double>)>& f,
                                     const std::function<std::vector<double>(std::span<const double>)>& grad,
                                     const Symbol& symbol, const RegularOptions& opt = {}) {
  const auto& eps = opt.eps;
  if (eps.size() < 3) throw Error(ErrorKind::Input, "expansion", "regular_leading", "need at least three shell widths");
  for (double e : eps)
    if (!(e > 0.0)) throw Error(ErrorKind::Input, "expansion", "regular_leading", "shell widths must be positive");
  const int n = opt.box.dimension();
  RegularResult out;
  out.eps = eps;

  // spot check of |∇f| on the widest shell
  {
    CounterRng rng(0x5eed);
    double gmin = std::numeric_limits<double>::infinity();
    std::vector<double> x(n);
    const double emax = *std::max_element(eps.begin(), eps.end());
    for (int i = 0; i < opt.gradient_samples; ++i) {
      for (int d = 0; d < n; ++d) x[d] = opt.box.lo[d] + rng.uniform(d, i) * (opt.box.hi[d] - opt.box.lo[d]);
      if (std::abs(f(x)) < emax) gmin = std::min(gmin, norm(grad(x)));
    }
    out.min_gradient = gmin;
    if (std::isfinite(gmin) && gmin < opt.min_gradient)
      throw Error(ErrorKind::WrongCase, "expansion", "regular_leading", "gradient of f nearly vanishes on the fiber");
  }

  std::function<double(std::span<const double>)> G;
  if (symbol.separable()) {
    Symbol tonly = symbol;
    tonly.g = [&symbol](double t, std::span<const double>) { return symbol.t_part(t); };
    out.t_integral = t_abs_power_integral(tonly, 0.0).value;
    const double T = out.t_integral;
    G = [&symbol, T](std::span<const double> x) { return T * symbol.x_part(x); };
  } else {
    G = [&symbol](std::span<const double> x) {
      Symbol at = symbol;
      Vec xv(x.begin(), x.end());
      at.x0 = xv;
      return t_abs_power_integral(at, 0.0, {1e-10, 1e-14, 2000}).value;
    };
  }

  std::vector<double> x2;
  for (double e : eps) {
    NestedOptions q = opt.quad;
    q.levels = {-e, e};
    q.feature_scale = 1e-3 * e;
    auto integrand = [&](std::span<const double> x) {
      return std::abs(f(x)) < e ? G(x) : 0.0;
    };
    const auto r = nested_integrate(integrand, f, opt.box, {}, q);
    out.shell_values.push_back(r.value / (2.0 * e));
    out.error += r.error / (2.0 * e);
    x2.push_back(e * e);
  }
  for (std::size_t m = 2; m <= eps.size(); ++m)
    out.extrapolants.push_back(extrapolate_to_zero<double>(std::span(x2).first(m), std::span(out.shell_values).first(m)));
  const auto& T = out.extrapolants;
  const std::size_t L = T.size();
  const double last = std::abs(T[L - 1] - T[L - 2 < L ? L - 2 : 0]);
  if (L >= 3) {
    const double prev = std::abs(T[L - 2] - T[L - 3]);
    if (last > 1e-9 * std::abs(T.back()) && last > opt.ratio_limit * prev)
      throw Error(ErrorKind::Numerical, "expansion", "regular_leading",
                  "shell extrapolation does not converge (ratio test failed)");
  }
  out.value = T.back();
  out.error += last;
  return out;
}

}  // namespace fiberasym
