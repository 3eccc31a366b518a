// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fiberasym/cli.hpp"

using namespace fiberasym;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Germ sum_of_powers(int n, int p, const std::vector<double>& a, double sign = 1.0) {
  std::vector<Monomial> m;
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(n, 0);
    e[i] = p;
    m.push_back({sign * a[i], e});
  }
  return Germ::make(n, p, m);
}

Symbol cauchy_gauss(int n) { return cli::make_symbol({"cauchy", 1.0}, {"gaussian", 1.0, 1.0}, Vec(n, 0.0)); }

OracleProblem problem(const Germ& g, Symbol s, double half_width = 6.0) {
  OracleProblem p;
  p.f = [g](std::span<const double> x) { return g.full(x); };
  p.symbol = std::move(s);
  p.box = Box::cube(g.n(), half_width);
  p.anchor = g.x0();
  return p;
}

nlohmann::json validate(const std::string& fixture) {
  return nlohmann::json::parse(cli::cmd_validate(cli::fixture(fixture)).text);
}

Outcome gamma_product_identity() {
  Outcome o;
  auto expected = [](int n, int p, const std::vector<double>& a) {
    double v = std::pow(2.0 * std::tgamma(1.0 + 1.0 / p), n) / std::tgamma(static_cast<double>(n) / p);
    for (double aj : a) v *= std::pow(aj, -1.0 / p);
    return v;
  };
  double worst2 = 0.0, worst3 = 0.0;
  for (int p : {2, 4})
    for (const auto& a : {std::vector<double>{1, 1}, std::vector<double>{1, 3}}) {
      const auto g = sum_of_powers(2, p, a);
      const double v = inverse_power_integral(g, 2.0 / p, Region::All, default_rule(2)).value / p;
      worst2 = std::max(worst2, rel(v, expected(2, p, a)));
    }
  for (const auto& a : {std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}}) {
    const auto g = sum_of_powers(3, 2, a);
    const double v = inverse_power_integral(g, 1.5, Region::All, default_rule(3)).value / 2.0;
    worst3 = std::max(worst3, rel(v, expected(3, 2, a)));
  }
  o.check(worst2 < 1e-6, fmt("n=2 worst rel %.2e (tol 1e-6)", worst2));
  o.check(worst3 < 1e-4, fmt("n=3 worst rel %.2e (tol 1e-4)", worst3));
  return o;
}

Outcome extremum_end_to_end() {
  Outcome o;
  const auto j = validate("gamma-p2");
  const double pred = j["predicted"], fit = j["fitted"];
  o.check(rel(fit, pred) < 0.02, fmt("predicted %.8f fitted %.8f gap %.2e", pred, fit, rel(fit, pred)));
  o.check(rel(pred, pi) < 0.02 && rel(fit, pi) < 0.02, fmt("vs pi: %.2e / %.2e", rel(pred, pi), rel(fit, pi)));
  return o;
}

Outcome conical_fixture() {
  Outcome o;
  const auto spec = cli::fixture("conical");
  const auto sym = cli::make_symbol(spec.t, spec.x, spec.germ->x0());
  const double lvol0 = circle_zero_sum(*spec.germ);
  const double tint = t_abs_power_integral(sym, 0.0).value;
  o.check(std::abs(lvol0 - 2.0) < 1e-6, fmt("LVol(0) = %.12f", lvol0));
  o.check(std::abs(tint - pi) < 1e-8, fmt("int g(t,0) dt err %.2e", std::abs(tint - pi)));
  const auto j = validate("conical");
  const double pred = j["predicted"], fit = j["fitted"];
  o.check(std::abs(pred - pi) < 1e-6, fmt("D0 = %.10f", pred));
  o.check(rel(fit, pi) < 0.02, fmt("fitted z^-1 log z coeff %.6f (rel %.2e) on [1e2, 1e6]", fit, rel(fit, pi)));
  return o;
}

Outcome quartic_fixture() {
  Outcome o;
  const double exact = std::sqrt(pi) * std::pow(std::tgamma(0.25), 2) / 4.0;
  const auto j = validate("quartic");
  const double pred = j["predicted"], fit = j["fitted"];
  o.check(rel(pred, exact) < 1e-4, fmt("C0 = %.10f vs %.10f", pred, exact));
  o.check(rel(fit, exact) < 0.02, fmt("fitted %.6f (rel %.2e)", fit, rel(fit, exact)));
  return o;
}

Outcome finite_part_consistency() {
  Outcome o;
  // random bumps supported in [0.3, ∞)
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> A(0.3, 1.5), L(0.2, 2.0), Amp(-3.0, 3.0);
  double worst = 0.0;
  const int ns[] = {3, 2, 5}, ks[] = {2, 3, 4};
  for (int i = 0; i < 10; ++i) {
    const double a = A(rng), b = a + L(rng), amp = Amp(rng);
    Smooth1D phi;
    phi.d = [=](double w, int m) {
      if (w <= a || w >= b) return 0.0;
      if (m != 0) throw Error(ErrorKind::Input, "acceptance", "bump", "derivatives inside the support not provided");
      return amp * std::exp(-1.0 / ((w - a) * (b - w)));
    };
    phi.decay_plus = Decay::compact(b);
    phi.decay_minus = Decay::compact(0.0);
    const int n = ns[i % 3], k = ks[i % 3];
    const double alpha = static_cast<double>(n) / k;
    const double direct =
        integrate([&](double w) { return std::pow(w, -alpha) * phi(w); }, a, b, {1e-16, 1e-13, 2000, 4}).value / k;
    worst = std::max(worst, std::abs(finite_part_bracket(phi, n, k, Sign::Plus).value - direct) /
                                std::max(1e-3, std::abs(direct)));
  }
  o.check(worst < 1e-8, fmt("bumps: worst rel %.2e (tol 1e-8)", worst));

  Smooth1D e;
  e.d = [](double w, int m) { return ((m % 2) ? -1.0 : 1.0) * std::exp(-w); };
  e.decay_plus = Decay::exponential(1.0);
  FinitePartOptions d;
  d.method = FinitePartMethod::DerivativeForm;
  const double t = finite_part_bracket(e, 3, 2, Sign::Plus).value;
  const double c = finite_part_bracket(e, 3, 2, Sign::Plus, d).value;
  o.check(rel(t, c) < 1e-6, fmt("e^{-w}: taylor %.12f derivative %.12f", t, c));

  const auto cone = Germ::make(3, 2, {{1.0, {2, 0, 0}}, {1.0, {0, 2, 0}}, {-1.0, {0, 0, 2}}});
  PredictOptions pn, pm;
  pn.fp_method = pm.fp_method = FinitePartMethod::DerivativeForm;
  pn.fp_order = 3;
  pm.fp_order = 2;
  const double vn = *predict_leading(cone, cauchy_gauss(3), classify(cone), pn).leading().coeff;
  const double vm = *predict_leading(cone, cauchy_gauss(3), classify(cone), pm).leading().coeff;
  o.check(rel(vn, vm) < 1e-6, fmt("cone n=3: order 3 %.10f, order 2 %.10f", vn, vm));
  return o;
}

Outcome pole_schedule_check() {
  Outcome o;
  const auto a = pole_schedule(2, 2, 2), b = pole_schedule(2, 4, 2), c = pole_schedule(3, 2, 2);
  o.check(a[0].exponent == Rational(1, 1) && a[0].logpower == 1 && a[0].pole_order == 2, "(2,2): 1 with log");
  o.check(b[0].exponent == Rational(1, 2) && b[0].logpower == 0 && b[0].pole_order == 1, "(2,4): 1/2 without log");
  o.check(c[0].exponent == Rational(3, 2) && c[0].logpower == 0 && c[1].exponent == Rational(2, 1) &&
              c[1].logpower == 1 && c[1].pole_order == 2,
          "(3,2): 3/2 then 2 with log");
  return o;
}

Outcome regular_fiber() {
  Outcome o;
  const auto spec = cli::fixture("regular-circle");
  const double L = cli::spec_regular(spec).value;
  const double exact = std::pow(pi, 1.5);
  o.check(rel(L, exact) < 0.01, fmt("regular_leading %.8f vs %.8f (rel %.2e)", L, exact, rel(L, exact)));

  OracleProblem p;
  const Polynomial f = *spec.f;
  p.f = [f](std::span<const double> x) { return f(x); };
  p.symbol = cli::make_symbol(spec.t, spec.x, Vec(2, 0.0));
  p.box = Box::cube(2, spec.oracle.box);
  const auto zs = z_grid(spec.oracle.z_min, spec.oracle.z_max, spec.oracle.z_points);
  const auto s = sample_fiber(p, zs);
  std::vector<double> r;
  for (const auto& v : s) r.push_back(v.value * v.z - L);
  const double slope = loglog_slope(zs, r);
  o.check(rel(s.back().value * s.back().z, L) < 0.01, fmt("I(z) z at z=%.0f: %.8f", s.back().z, s.back().value * s.back().z));
  o.check(slope <= -0.9, fmt("remainder slope %.3f (need <= -0.9)", slope));
  return o;
}

Outcome radial_expansion_check() {
  Outcome o;
  const AdaptiveOptions q{1e-16, 1e-14, 2000, 8};
  const auto zs = z_grid(1e2, 1e6, 9);

  RadialAmplitude plain;
  plain.a = [](double tau, double u) { return std::exp(-tau) * (1.0 + u); };
  plain.du = [](double tau, int j) { return j <= 1 ? std::exp(-tau) : 0.0; };
  const auto d = radial_expansion(plain, 2, 1);
  double worst = 0.0;
  for (double z : zs) {
    const double J = radial_direct(plain, 2, z, q).value;
    worst = std::max(worst, std::abs(J - d[0].value / std::sqrt(z) - d[1].value / z) / J);
  }
  // J is exactly d0 z^{-1/2} + d1 z^{-1} for this amplitude: the residual is rounding
  o.check(worst < 1e-12, fmt("a = e^-t (1+u): residual/J <= %.2e, expansion exact", worst));

  RadialAmplitude damped;
  damped.a = [](double tau, double u) { return std::exp(-tau - u * u) * (1.0 + u); };
  damped.du = [](double tau, int j) {
    static const double c[] = {1.0, 1.0, -2.0, -6.0};
    return j < 4 ? c[j] * std::exp(-tau) : 0.0;
  };
  const auto dd = radial_expansion(damped, 2, 1);
  std::vector<double> r;
  for (double z : zs) r.push_back(radial_direct(damped, 2, z, q).value - dd[0].value / std::sqrt(z) - dd[1].value / z);
  const double slope = loglog_slope(zs, r);
  o.check(slope <= -1.5 + 0.1, fmt("a = e^-t (1+u) e^-u^2: remainder slope %.3f (need <= -1.4)", slope));
  return o;
}

Outcome mellin_identity() {
  Outcome o;
  const auto d = mellin_exp_it(Sign::Plus, 0.5);
  const auto expected = std::polar(std::sqrt(pi), pi / 4.0);
  const auto r = d.limit - expected;
  o.check(std::abs(r.real()) < 1e-3 && std::abs(r.imag()) < 1e-3,
          fmt("M[e^it](1/2) = %.8f + %.8fi, residual %.2e", d.limit.real(), d.limit.imag(), std::abs(r)));
  return o;
}

Outcome property_suites() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> N;

  // homogeneity
  const auto quartic = Germ::make(2, 4, {{1.0, {4, 0}}, {-1.0, {0, 4}}});
  double hom = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x[2] = {N(rng), N(rng)};
    const double lam = std::exp(N(rng));
    const double y[2] = {lam * x[0], lam * x[1]};
    hom = std::max(hom, std::abs(eval_fk(quartic, y) - std::pow(lam, 4) * eval_fk(quartic, x)) /
                            (1.0 + std::pow(lam, 4) * std::abs(eval_fk(quartic, x))));
  }
  o.check(hom < 1e-10, fmt("homogeneity %.1e", hom));

  // rotation invariance
  const double th = 0.7;
  const std::vector<double> R{std::cos(th), -std::sin(th), std::sin(th), std::cos(th)};
  const auto rule = default_rule(2);
  const double i0 = inverse_power_integral(quartic, 0.5, Region::Plus, rule).value;
  const double i1 = inverse_power_integral(quartic.with_fk(quartic.fk().composed_linear(R)), 0.5, Region::Plus, rule).value;
  o.check(rel(i1, i0) < 1e-8, fmt("rotation %.1e", rel(i1, i0)));

  // region additivity
  const double p = inverse_power_integral(quartic, 0.3, Region::Plus, rule).value;
  const double m = inverse_power_integral(quartic, 0.3, Region::Minus, rule).value;
  const double a = inverse_power_integral(quartic, 0.3, Region::All, rule).value;
  o.check(a == p + m, "additivity exact");

  // co-area duality
  const auto big = build_rule(2, 8192, RuleKind::UniformCircle);
  const auto dens = coarea_density(quartic, {}, big, default_bandwidth(quartic, big));
  const double direct = big.sum([&](const Vec& x) { return std::exp(eval_fk(quartic, x)); });
  double pushed = 0.0;
  for (std::size_t i = 0; i + 1 < dens.w_grid.size(); ++i)
    pushed += 0.5 * (std::exp(dens.w_grid[i]) * dens.values[i] + std::exp(dens.w_grid[i + 1]) * dens.values[i + 1]) *
              (dens.w_grid[i + 1] - dens.w_grid[i]);
  o.check(rel(pushed, direct) < 1e-2, fmt("co-area duality %.1e", rel(pushed, direct)));

  // fit stability under grid doubling
  const auto conical = Germ::make(2, 2, {{1.0, {2, 0}}, {-1.0, {0, 2}}});
  const auto prob = problem(conical, cauchy_gauss(2));
  const auto basis = model_basis(CaseTag::PrincipalType, 2, 2, 6);
  const auto fc = fit_asymptotics(sample_fiber(prob, z_grid(1e2, 1e6, 12)), basis, 6);
  const auto ff = fit_asymptotics(sample_fiber(prob, z_grid(1e2, 1e6, 24)), basis, 6);
  const double tol = 3.0 * (fc.stderrs[0] + ff.stderrs[0]) + 1e-3 * std::abs(ff.coeffs[0]);
  o.check(std::abs(fc.coeffs[0] - ff.coeffs[0]) < tol,
          fmt("fit stability |%.2e| < %.2e", fc.coeffs[0] - ff.coeffs[0], tol));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gamma-product identity for the sphere integral", gamma_product_identity},
      {2, "extremum prediction vs oracle fit", extremum_end_to_end},
      {3, "conical fixture, pi log(z)/z", conical_fixture},
      {4, "quartic fixture, leading coefficient", quartic_fixture},
      {5, "finite-part consistency", finite_part_consistency},
      {6, "pole schedule", pole_schedule_check},
      {7, "regular fiber", regular_fiber},
      {8, "radial expansion remainder", radial_expansion_check},
      {9, "damped Mellin transform of e^{it}", mellin_identity},
      {10, "property suites", property_suites},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %d %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
