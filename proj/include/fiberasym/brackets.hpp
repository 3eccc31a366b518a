#pragma once

// One-dimensional distributional machinery: the Gamma function, brackets
// <t_±^alpha, g(t,x0)>, normalized Hadamard finite parts of w^{-n/k} with the
// 1/k factor folded in, and numerical Mellin transforms.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fiberasym/error.hpp"
#include "fiberasym/germ.hpp"
#include "fiberasym/quadrature.hpp"

namespace fiberasym {

enum class Sign { Plus, Minus };

inline double sign_value(Sign s) { return s == Sign::Plus ? 1.0 : -1.0; }

// x-envelope of a symbol, used by the oracle to bound truncation to a box.
struct XDecay {
  enum class Kind { None, Gaussian, Shell, Box };
  Kind kind = Kind::None;
  double rate = 1.0;    // Gaussian: exp(-rate |x|^2)
  double radius = 1.0;  // Shell: exp(-(|x|^2 - radius^2)^2); Box: half-width of the support
  double amplitude = 1.0;  // |g(t, x)| <= amplitude * envelope(x) for all t
};

// Amplitude g(t, x). The t-envelopes describe t ↦ g(±t, x0) on [0, ∞).
struct Symbol {
  std::string name;
  std::function<double(double, std::span<const double>)> g;
  Vec x0;
  Decay t_decay_plus = Decay::exponential(1.0);
  Decay t_decay_minus = Decay::exponential(1.0);
  XDecay x_decay;
  bool smooth = true;
  // Optional product structure g = t_part(t) * x_part(x).
  std::function<double(double)> t_part;
  std::function<double(std::span<const double>)> x_part;

  double base(double t) const { return g(t, x0); }
  double operator()(double t, std::span<const double> x) const { return g(t, x); }
  const Decay& t_decay(Sign s) const { return s == Sign::Plus ? t_decay_plus : t_decay_minus; }
  bool separable() const { return static_cast<bool>(t_part) && static_cast<bool>(x_part); }
};

// Soft check of |g(±t, x0)| against the declared envelope on a log grid.
inline std::vector<std::string> envelope_violations(const Symbol& s) {
  std::vector<std::string> out;
  for (Sign side : {Sign::Plus, Sign::Minus}) {
    const auto& d = s.t_decay(side);
    for (int i = 0; i <= 90; ++i) {
      const double t = std::pow(10.0, -3.0 + 0.1 * i);
      const double v = std::abs(s.base(sign_value(side) * t));
      double bound = 0.0;
      switch (d.kind) {
        case Decay::Kind::Power: bound = d.constant * std::pow(1.0 + t, -d.rate); break;
        case Decay::Kind::Exponential: bound = d.constant * std::exp(-d.rate * t); break;
        case Decay::Kind::Compact: bound = t <= d.rate ? std::numeric_limits<double>::infinity() : 0.0; break;
      }
      if (v > bound * (1.0 + 1e-9) + 1e-300) {
        out.push_back(std::string(side == Sign::Plus ? "+" : "-") + " side exceeds envelope at t=" + std::to_string(t));
        break;
      }
    }
  }
  return out;
}

inline double gamma(double x) {
  if (x <= 0.0 && x == std::floor(x))
    throw Error(ErrorKind::Divergence, "brackets", "gamma", "pole at non-positive integer");
  return std::tgamma(x);
}

struct BracketResult {
  double value = 0.0;
  double error = 0.0;
  double truncation = std::numeric_limits<double>::infinity();  // cutoff where the tail was dropped
  std::size_t evals = 0;
};

struct BracketOptions {
  double rel_tol = 1e-12;
  double abs_tol = 1e-15;
  int max_intervals = 8000;
};

inline AdaptiveOptions adaptive(const BracketOptions& o) { return {o.abs_tol, o.rel_tol, o.max_intervals, 1}; }

// <t_±^alpha, g(t, x0)> = ∫_0^∞ t^alpha g(±t, x0) dt.
inline BracketResult t_power_bracket(const Symbol& symbol, double alpha, Sign sign, const BracketOptions& opt = {}) {
  if (!(alpha > -1.0)) throw Error(ErrorKind::Divergence, "brackets", "t_power_bracket", "alpha must exceed -1");
  const auto& decay = symbol.t_decay(sign);
  if (decay.kind == Decay::Kind::Power && !(decay.rate > alpha + 1.0))
    throw Error(ErrorKind::Divergence, "brackets", "t_power_bracket", "symbol decay too slow: need beta > alpha + 1");
  const double s = sign_value(sign);
  auto h = [&](double t) { return symbol.base(s * t); };
  try {
    const auto r = half_line_moment(h, alpha, decay, adaptive(opt));
    return {r.quad.value, r.quad.error, r.truncation, r.quad.evals};
  } catch (const Error& e) {
    throw Error(e.kind(), "brackets", "t_power_bracket", e.what());
  }
}

// ∫_R |t|^alpha g(t, x0) dt.
inline BracketResult t_abs_power_integral(const Symbol& symbol, double alpha, const BracketOptions& opt = {}) {
  auto p = t_power_bracket(symbol, alpha, Sign::Plus, opt);
  auto m = t_power_bracket(symbol, alpha, Sign::Minus, opt);
  return {p.value + m.value, p.error + m.error, std::max(p.truncation, m.truncation), p.evals + m.evals};
}

// One-dimensional function with access to its derivatives: d(w, m) = φ^{(m)}(w).
// Envelopes describe w ↦ φ(±w) for w > 0.
struct Smooth1D {
  std::function<double(double, int)> d;
  Decay decay_plus = Decay::exponential(1.0);
  Decay decay_minus = Decay::exponential(1.0);

  double operator()(double w) const { return d(w, 0); }
};

enum class FinitePartMethod { TaylorSubtraction, DerivativeForm };

struct FinitePartOptions {
  FinitePartMethod method = FinitePartMethod::TaylorSubtraction;
  int derivative_order = 0;   // DerivativeForm: 0 means n
  double series_cut = 0.05;   // [0, cut]: Taylor series beyond the subtracted order
  BracketOptions quad;
};

// C_{m,k}(alpha) = (1/k) ∏_{j=1}^m (-1)/(j - alpha).
inline double canonical_constant(int m, int k, double alpha) {
  double c = 1.0 / k;
  for (int j = 1; j <= m; ++j) c *= -1.0 / (j - alpha);
  return c;
}

inline double canonical_constant(int n, int k) { return canonical_constant(n, k, static_cast<double>(n) / k); }

// Normalized bracket <(d̃^n/d̃w^n) w_±^{n-n/k}, φ>: the Hadamard finite part
// (1/k) FP ∫_0^∞ w^{-n/k} φ(±w) dw. For φ vanishing near 0 this is the plain
// integral times 1/k.
//  - TaylorSubtraction: subtract the Taylor polynomial of order ⌊n/k⌋ on [0,1]
//    and add back its finite-part moments.
//  - DerivativeForm: C_{m,k} ∫_0^∞ w^{m-n/k} ψ^{(m)}(w) dw, any m > ⌊n/k⌋.
inline BracketResult finite_part_bracket(const Smooth1D& phi, int n, int k, Sign sign, const FinitePartOptions& opt = {}) {
  if (n < 1 || k < 1) throw Error(ErrorKind::Input, "brackets", "finite_part_bracket", "n and k must be positive");
  if (n % k == 0)
    throw Error(ErrorKind::WrongCase, "brackets", "finite_part_bracket",
                "n/k is an integer: the logarithmic case applies instead");
  const double alpha = static_cast<double>(n) / k;
  const int M = n / k;
  const double s = sign_value(sign);
  // ψ(w) = φ(s w), ψ^{(m)}(w) = s^m φ^{(m)}(s w)
  auto psi = [&](double w, int m) { return ((m % 2 == 1) ? s : 1.0) * phi.d(s * w, m); };
  const Decay& decay = sign == Sign::Plus ? phi.decay_plus : phi.decay_minus;
  const auto ao = adaptive(opt.quad);
  BracketResult out;

  if (opt.method == FinitePartMethod::DerivativeForm) {
    const int m = opt.derivative_order > 0 ? opt.derivative_order : n;
    if (m <= M)
      throw Error(ErrorKind::Input, "brackets", "finite_part_bracket", "derivative order must exceed floor(n/k)");
    auto hm = [&](double w) { return psi(w, m); };
    const auto r = half_line_moment(hm, m - alpha, decay, ao);
    out.value = canonical_constant(m, k, alpha) * r.quad.value;
    out.error = std::abs(canonical_constant(m, k, alpha)) * r.quad.error;
    out.truncation = r.truncation;
    out.evals = r.quad.evals;
    return out;
  }

  std::vector<double> taylor(M + 1);
  double factorial = 1.0;
  for (int m = 0; m <= M; ++m) {
    if (m > 0) factorial *= m;
    taylor[m] = psi(0.0, m) / factorial;
  }
  auto taylor_poly = [&](double w) {
    double v = 0.0;
    for (int m = M; m >= 0; --m) v = v * w + taylor[m];
    return v;
  };

  // FP ∫_0^1 w^{m-alpha} dw = 1/(m+1-alpha)
  double value = 0.0;
  for (int m = 0; m <= M; ++m) value += taylor[m] / (m + 1.0 - alpha);

  // [0, cut]: remaining Taylor series, integrated term by term.
  const double cut = std::min(opt.series_cut, 1.0);
  double series = 0.0;
  bool series_ok = true;
  double fact = factorial;
  double last = 0.0;
  for (int m = M + 1; m <= M + 40; ++m) {
    fact *= m;
    const double dm = psi(0.0, m);
    if (!std::isfinite(dm)) {
      series_ok = false;
      break;
    }
    last = dm / fact * std::pow(cut, m + 1.0 - alpha) / (m + 1.0 - alpha);
    series += last;
    if (m > M + 4 && std::abs(last) < 1e-18 * (1.0 + std::abs(series))) break;
  }
  double lower = cut;
  if (!series_ok) lower = 0.0;
  else value += series;

  auto remainder = [&](double w) { return std::pow(w, -alpha) * (psi(w, 0) - taylor_poly(w)); };
  const auto mid = integrate(remainder, lower, 1.0, ao);
  value += mid.value;
  out.error += mid.error + (series_ok ? std::abs(last) : 0.0);
  out.evals += mid.evals;

  const auto tail = tail_moment([&](double w) { return psi(w, 0); }, -alpha, decay, 1.0, ao);
  value += tail.quad.value;
  out.error += tail.quad.error;
  out.evals += tail.quad.evals;
  out.truncation = tail.truncation;

  out.value = value / k;
  out.error /= k;
  return out;
}

// ---- Mellin transforms --------------------------------------------------

struct MellinDecay {
  Decay decay = Decay::exponential(1.0);
  double order_at_zero = 0.0;  // h(t) = O(t^order) as t -> 0
  double panel_width = 0.0;    // > 0 for oscillatory h
};

struct MellinResult {
  std::complex<double> value;
  double error = 0.0;
};

// M[h](ξ) = ∫_0^∞ h(t) t^{ξ-1} dt, real and imaginary parts integrated separately.
inline MellinResult mellin_transform(const std::function<std::complex<double>(double)>& h, std::complex<double> xi,
                                     const MellinDecay& env, const BracketOptions& opt = {}) {
  const double sigma = xi.real();
  const double tau = xi.imag();
  if (!(sigma > -env.order_at_zero))
    throw Error(ErrorKind::Divergence, "brackets", "mellin_transform", "Re(xi) below the convergence strip");
  if (env.decay.kind == Decay::Kind::Power && !(sigma < env.decay.rate))
    throw Error(ErrorKind::Divergence, "brackets", "mellin_transform", "Re(xi) above the convergence strip");
  const double alpha = sigma - 1.0 + env.order_at_zero;
  auto reduced = [&](double t) {
    const std::complex<double> phase = tau == 0.0 ? 1.0 : std::exp(std::complex<double>(0.0, tau * std::log(t)));
    const double scale = env.order_at_zero == 0.0 ? 1.0 : std::pow(t, -env.order_at_zero);
    return h(t) * phase * scale;
  };
  const auto ao = adaptive(opt);
  const auto re = half_line_moment([&](double t) { return reduced(t).real(); }, alpha, env.decay, ao, 1.0, env.panel_width);
  const auto im = half_line_moment([&](double t) { return reduced(t).imag(); }, alpha, env.decay, ao, 1.0, env.panel_width);
  return {{re.quad.value, im.quad.value}, re.quad.error + im.quad.error};
}

struct DampedMellin {
  std::complex<double> limit;
  std::vector<double> etas;
  std::vector<std::complex<double>> values;
};

// M[e^{±it}](ξ) as the η -> 0 limit of M[e^{±it - ηt}](ξ), extrapolated by
// polynomial (Richardson) extrapolation in η.
inline DampedMellin mellin_exp_it(Sign sign, std::complex<double> xi, std::vector<double> etas = {0.1, 0.01, 0.001},
                                  const BracketOptions& opt = {}) {
  if (etas.size() < 2) throw Error(ErrorKind::Input, "brackets", "mellin_exp_it", "need at least two damping values");
  DampedMellin out;
  out.etas = etas;
  const double s = sign_value(sign);
  for (double eta : etas) {
    auto h = [eta, s](double t) { return std::exp(std::complex<double>(-eta * t, s * t)); };
    MellinDecay env{Decay::exponential(eta), 0.0, std::numbers::pi};
    out.values.push_back(mellin_transform(h, xi, env, opt).value);
  }
  out.limit = extrapolate_to_zero<std::complex<double>>(out.etas, out.values);
  return out;
}

}  // namespace fiberasym
