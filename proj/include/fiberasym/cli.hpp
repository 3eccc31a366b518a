#pragma once

// Problem descriptions, the closed symbol registry, built-in fixtures, and the
// command implementations behind the fiberasym tool. Commands return their
// output text and an exit code so they can be driven from tests.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fiberasym/brackets.hpp"
#include "fiberasym/expansion.hpp"
#include "fiberasym/germ.hpp"
#include "fiberasym/oracle.hpp"
#include "fiberasym/sphere.hpp"

namespace fiberasym::cli {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 1, kRefused = 2, kValidationFailed = 3 };

inline int exit_code(const Error& e) { return e.kind() == ErrorKind::Input ? kInputError : kRefused; }

// ---- symbol registry ----------------------------------------------------
// To add an entry, extend make_t_part / make_x_part with an evaluator and an
// envelope that genuinely bounds it; the oracle trusts these bounds.

struct TPart {
  std::string name = "cauchy";
  double scale = 1.0;  // g_t(t) = profile(t / scale)
};

struct XPart {
  std::string name = "gaussian";
  double rate = 1.0;
  double radius = 1.0;
};

struct TEntry {
  std::function<double(double)> eval;
  Decay plus, minus;
};

inline TEntry make_t_part(const TPart& t) {
  const double s = t.scale;
  if (!(s > 0.0)) throw Error(ErrorKind::Input, "cli", "symbol", "t scale must be positive");
  if (t.name == "exp-decay")
    return {[s](double x) { return x >= 0.0 ? std::exp(-x / s) : 0.0; }, Decay::exponential(1.0 / s), Decay::compact(0.0)};
  if (t.name == "cauchy") {
    // 1/(1+(t/s)^2) <= s^2 (1+t)^{-2} * max(1, 1/s^2) * 2
    const double c = 2.0 * std::max(1.0, s * s);
    return {[s](double x) { return 1.0 / (1.0 + (x / s) * (x / s)); }, Decay::power(2.0, c), Decay::power(2.0, c)};
  }
  if (t.name == "gaussian") {
    // e^{-u^2} <= e^{1/4} e^{-u}
    const Decay d = Decay::exponential(1.0 / s, std::exp(0.25));
    return {[s](double x) { return std::exp(-(x / s) * (x / s)); }, d, d};
  }
  throw Error(ErrorKind::Input, "cli", "symbol", "unknown t-symbol '" + t.name + "'");
}

inline std::pair<std::function<double(std::span<const double>)>, XDecay> make_x_part(const XPart& x) {
  if (x.name == "none") return {[](std::span<const double>) { return 1.0; }, XDecay{}};
  if (x.name == "gaussian") {
    if (!(x.rate > 0.0)) throw Error(ErrorKind::Input, "cli", "symbol", "gaussian rate must be positive");
    const double r = x.rate;
    return {[r](std::span<const double> p) {
              double s = 0.0;
              for (double v : p) s += v * v;
              return std::exp(-r * s);
            },
            XDecay{XDecay::Kind::Gaussian, r, 1.0, 1.0}};
  }
  if (x.name == "gaussian-shell") {
    const double R2 = x.radius * x.radius;
    return {[R2](std::span<const double> p) {
              double s = -R2;
              for (double v : p) s += v * v;
              return std::exp(-s * s);
            },
            XDecay{XDecay::Kind::Shell, 1.0, x.radius, 1.0}};
  }
  throw Error(ErrorKind::Input, "cli", "symbol", "unknown x-symbol '" + x.name + "'");
}

inline Symbol make_symbol(const TPart& t, const XPart& x, const Vec& x0) {
  auto te = make_t_part(t);
  auto [xe, xd] = make_x_part(x);
  Symbol s;
  s.name = t.name + "*" + x.name;
  s.t_part = te.eval;
  s.x_part = xe;
  s.g = [tp = te.eval, xp = xe](double tt, std::span<const double> p) { return tp(tt) * xp(p); };
  s.x0 = x0;
  s.t_decay_plus = te.plus;
  s.t_decay_minus = te.minus;
  s.x_decay = xd;
  return s;
}

// ---- problem files -----------------------------------------------------

struct OracleSpec {
  double box = 6.0;  // half-width of the integration cube around the origin
  double z_min = 1e2;
  double z_max = 1e7;
  int z_points = 12;
  int nterms = 6;
  double rel_tol = 1e-10;
  int max_intervals = 3000;
  std::uint64_t qmc_points = 1 << 15;
  int shifts = 8;
};

struct GeometrySpec {
  std::string rule = "auto";
  int order = 0;  // 0: automatic
  double bandwidth = 0.0;
  std::uint64_t seed = 0;
  double window_multiple = 4.0;
};

struct ToleranceSpec {
  double eps_def = 1e-8;
  double eps_grad = 1e-6;
  double validate = 0.05;
};

struct ProblemSpec {
  std::string regime = "singular";  // or "regular"
  std::optional<Germ> germ;
  std::optional<Polynomial> f;  // regular regime: the full polynomial
  TPart t;
  XPart x;
  OracleSpec oracle;
  GeometrySpec geometry;
  ToleranceSpec tol;

  int dimension() const { return germ ? germ->n() : f->dimension(); }
};

inline json polynomial_json(const Polynomial& p) {
  json mons = json::array();
  for (const auto& m : p.terms()) mons.push_back({m.coeff, m.exponents});
  return {{"n", p.dimension()}, {"monomials", mons}};
}

inline json to_json(const ProblemSpec& s) {
  json j{{"schema", 1}, {"regime", s.regime}};
  if (s.germ) j["germ"] = to_json(*s.germ);
  if (s.f) j["f"] = polynomial_json(*s.f);
  j["symbol"] = {{"t", {{"name", s.t.name}, {"scale", s.t.scale}}},
                 {"x", {{"name", s.x.name}, {"rate", s.x.rate}, {"radius", s.x.radius}}}};
  const auto& o = s.oracle;
  j["oracle"] = {{"box", o.box},           {"z_min", o.z_min},     {"z_max", o.z_max},
                 {"z_points", o.z_points}, {"nterms", o.nterms},   {"rel_tol", o.rel_tol},
                 {"max_intervals", o.max_intervals}, {"qmc_points", o.qmc_points}, {"shifts", o.shifts}};
  const auto& g = s.geometry;
  j["geometry"] = {{"rule", g.rule}, {"order", g.order}, {"bandwidth", g.bandwidth}, {"seed", g.seed},
                   {"window_multiple", g.window_multiple}};
  j["tolerances"] = {{"eps_def", s.tol.eps_def}, {"eps_grad", s.tol.eps_grad}, {"validate", s.tol.validate}};
  return j;
}

inline ProblemSpec parse_spec(const json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::Input, "cli", "parse_spec", "spec must be a JSON object");
    if (j.value("schema", 1) != 1) throw Error(ErrorKind::Input, "cli", "parse_spec", "unsupported schema version");
    ProblemSpec s;
    s.regime = j.value("regime", std::string("singular"));
    if (s.regime != "singular" && s.regime != "regular")
      throw Error(ErrorKind::Input, "cli", "parse_spec", "regime must be 'singular' or 'regular'");
    if (j.contains("germ")) s.germ = germ_from_json(j["germ"]);
    if (j.contains("f")) {
      const int n = j["f"].at("n").get<int>();
      s.f = Polynomial(n, monomials_from_json(j["f"].at("monomials"), n));
    }
    if (s.regime == "singular" && !s.germ)
      throw Error(ErrorKind::Input, "cli", "parse_spec", "singular regime needs a 'germ'");
    if (s.regime == "regular" && !s.f) throw Error(ErrorKind::Input, "cli", "parse_spec", "regular regime needs 'f'");
    if (j.contains("symbol")) {
      const auto& sy = j["symbol"];
      if (sy.contains("t")) {
        s.t.name = sy["t"].value("name", s.t.name);
        s.t.scale = sy["t"].value("scale", s.t.scale);
      }
      if (sy.contains("x")) {
        s.x.name = sy["x"].value("name", s.x.name);
        s.x.rate = sy["x"].value("rate", s.x.rate);
        s.x.radius = sy["x"].value("radius", s.x.radius);
      }
    }
    make_symbol(s.t, s.x, {});  // validates the registry names
    if (j.contains("oracle")) {
      const auto& o = j["oracle"];
      auto& d = s.oracle;
      d.box = o.value("box", d.box);
      d.z_min = o.value("z_min", d.z_min);
      d.z_max = o.value("z_max", d.z_max);
      d.z_points = o.value("z_points", d.z_points);
      d.nterms = o.value("nterms", d.nterms);
      d.rel_tol = o.value("rel_tol", d.rel_tol);
      d.max_intervals = o.value("max_intervals", d.max_intervals);
      d.qmc_points = o.value("qmc_points", d.qmc_points);
      d.shifts = o.value("shifts", d.shifts);
    }
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      auto& d = s.geometry;
      d.rule = g.value("rule", d.rule);
      d.order = g.value("order", d.order);
      d.bandwidth = g.value("bandwidth", d.bandwidth);
      d.seed = g.value("seed", d.seed);
      d.window_multiple = g.value("window_multiple", d.window_multiple);
    }
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      s.tol.eps_def = t.value("eps_def", s.tol.eps_def);
      s.tol.eps_grad = t.value("eps_grad", s.tol.eps_grad);
      s.tol.validate = t.value("validate", s.tol.validate);
    }
    if (!(s.oracle.box > 0.0) || s.oracle.z_points < 2 || s.oracle.nterms < 1)
      throw Error(ErrorKind::Input, "cli", "parse_spec", "oracle box, z_points or nterms out of range");
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, "cli", "parse_spec", e.what());
  }
}

inline ProblemSpec parse_spec_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, "cli", "parse_spec", std::string("malformed JSON: ") + e.what());
  }
  return parse_spec(j);
}

// ---- fixtures -----------------------------------------------------------

inline std::vector<std::string> fixture_names() { return {"gamma-p2", "gamma-p4", "conical", "quartic", "regular-circle"}; }

inline ProblemSpec fixture(const std::string& name) {
  ProblemSpec s;
  if (name == "gamma-p2" || name == "gamma-p4") {
    const int p = name == "gamma-p2" ? 2 : 4;
    s.germ = Germ::make(2, p, {{1.0, {p, 0}}, {1.0, {0, p}}});
    s.t = {"exp-decay", 1.0};
    s.x = {"gaussian", 1.0, 1.0};
    s.oracle.nterms = 5;
    return s;
  }
  if (name == "conical") {
    s.germ = Germ::make(2, 2, {{1.0, {2, 0}}, {-1.0, {0, 2}}});
    s.oracle.z_max = 1e6;
    return s;
  }
  if (name == "quartic") {
    s.germ = Germ::make(2, 4, {{1.0, {4, 0}}, {-1.0, {0, 4}}});
    s.oracle.nterms = 7;
    return s;
  }
  if (name == "regular-circle") {
    s.regime = "regular";
    s.f = Polynomial(2, {{1.0, {2, 0}}, {1.0, {0, 2}}, {-1.0, {0, 0}}});
    s.t = {"gaussian", 1.0};
    s.x = {"gaussian-shell", 1.0, 1.0};
    s.oracle.box = 4.0;
    s.oracle.z_min = 10.0;
    s.oracle.z_max = 1e3;
    s.oracle.z_points = 8;
    s.oracle.nterms = 3;
    return s;
  }
  throw Error(ErrorKind::Input, "cli", "example", "unknown fixture '" + name + "'");
}

// ---- command plumbing ---------------------------------------------------

struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<double> z_min, z_max;
  std::optional<int> z_points;
  std::optional<int> quad_order;
  int threads = 1;
};

inline void apply_flags(ProblemSpec& s, const Flags& f) {
  if (f.seed) s.geometry.seed = *f.seed;
  if (f.tolerance) s.tol.validate = *f.tolerance;
  if (f.z_min) s.oracle.z_min = *f.z_min;
  if (f.z_max) s.oracle.z_max = *f.z_max;
  if (f.z_points) s.oracle.z_points = *f.z_points;
  if (f.quad_order) s.geometry.order = *f.quad_order;
}

struct Output {
  int code = kOk;
  std::string text;                          // standard output
  std::map<std::string, std::string> files;  // written under --out
};

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline SphereRule spec_rule(const ProblemSpec& s) {
  const int n = s.dimension();
  const auto& g = s.geometry;
  if (g.rule == "auto" && g.order == 0) return default_rule(n, g.seed);
  RuleKind kind = n == 2 ? RuleKind::UniformCircle : (n == 3 ? RuleKind::ProductGauss : RuleKind::MonteCarlo);
  if (g.rule != "auto") kind = rule_kind_from_string(g.rule);
  int order = g.order;
  if (order == 0) order = kind == RuleKind::UniformCircle ? 4096 : (kind == RuleKind::ProductGauss ? 400 : 400000);
  return build_rule(n, order, kind, g.seed);
}

inline PredictOptions predict_options(const ProblemSpec& s) {
  PredictOptions o;
  o.rule = spec_rule(s);
  o.bandwidth = s.geometry.bandwidth;
  o.fit.window_multiple = s.geometry.window_multiple;
  o.seed = s.geometry.seed;
  return o;
}

inline Classification spec_classification(const ProblemSpec& s) {
  if (s.regime == "regular") {
    Classification c;
    c.tag = CaseTag::RegularFiber;
    c.reason = "declared regular fiber";
    return c;
  }
  ClassifyOptions o;
  o.eps_def = s.tol.eps_def;
  o.eps_grad = s.tol.eps_grad;
  return classify(*s.germ, o);
}

inline RegularResult spec_regular(const ProblemSpec& s) {
  const Polynomial f = *s.f;
  const Symbol sym = make_symbol(s.t, s.x, Vec(f.dimension(), 0.0));
  RegularOptions ro;
  ro.box = Box::cube(f.dimension(), s.oracle.box);
  return regular_leading([f](std::span<const double> x) { return f(x); },
                         [f](std::span<const double> x) { return f.gradient(x); }, sym, ro);
}

inline Prediction spec_prediction(const ProblemSpec& s, const Classification& cls) {
  if (s.regime == "regular") {
    const auto r = spec_regular(s);
    Prediction p;
    p.tag = CaseTag::RegularFiber;
    p.n = s.dimension();
    p.k = 1;
    ExpansionTerm lead{Rational(1, 1), 0, r.value, r.error, 1};
    p.terms.push_back(lead);
    for (int j = 2; j <= 4; ++j) p.terms.push_back({Rational(j, 1), 0, {}, {}, 1});
    p.remainder = {Rational(2, 1), 0};
    p.provenance = {{"formula", "int_S int_R g(t,x) dt dsigma(x), thin-shell limit"},
                    {"eps", r.eps},
                    {"shell_values", r.shell_values},
                    {"extrapolants", r.extrapolants},
                    {"min_gradient", r.min_gradient}};
    return p;
  }
  const Symbol sym = make_symbol(s.t, s.x, s.germ->x0());
  return predict_leading(*s.germ, sym, cls, predict_options(s));
}

// ---- commands -----------------------------------------------------------

inline Output cmd_classify(const ProblemSpec& s) {
  Output out;
  const auto cls = spec_classification(s);
  out.text = dump(to_json(cls));
  if (cls.tag == CaseTag::Unsupported) out.code = kRefused;
  return out;
}

inline Output cmd_schedule(int n, int k, int count) {
  Output out;
  std::ostringstream os;
  os << "num,den,logpower\n";
  for (const auto& t : pole_schedule(n, k, count)) os << t.exponent.num << ',' << t.exponent.den << ',' << t.logpower << '\n';
  out.text = os.str();
  return out;
}

inline Output cmd_predict(const ProblemSpec& s) {
  Output out;
  const auto cls = spec_classification(s);
  out.text = dump(to_json(spec_prediction(s, cls)));
  return out;
}

inline Output cmd_coarea(const ProblemSpec& s) {
  if (!s.germ) throw Error(ErrorKind::Input, "cli", "coarea", "coarea needs a germ");
  Output out;
  const auto rule = spec_rule(s);
  const double h = s.geometry.bandwidth > 0.0 ? s.geometry.bandwidth : default_bandwidth(*s.germ, rule);
  FitOptions fit;
  fit.window_multiple = s.geometry.window_multiple;
  out.text = density_csv(coarea_density(*s.germ, {}, rule, h, fit));
  return out;
}

inline Output cmd_validate(const ProblemSpec& s, int threads = 1) {
  Output out;
  const auto cls = spec_classification(s);
  if (cls.tag == CaseTag::Unsupported)
    throw Error(ErrorKind::Unsupported, "cli", "validate", "germ classified Unsupported: " + cls.reason);
  const auto pred = spec_prediction(s, cls);
  const int n = s.dimension();

  OracleProblem prob;
  if (s.germ) {
    const Germ g = *s.germ;
    prob.f = [g](std::span<const double> x) { return g.full(x); };
    prob.anchor = g.x0();
  } else {
    const Polynomial f = *s.f;
    prob.f = [f](std::span<const double> x) { return f(x); };
  }
  prob.symbol = make_symbol(s.t, s.x, s.germ ? s.germ->x0() : Vec(n, 0.0));
  prob.box = Box::cube(n, s.oracle.box);
  OracleOptions oo;
  oo.rel_tol = s.oracle.rel_tol;
  oo.max_intervals = s.oracle.max_intervals;
  oo.qmc = {s.oracle.qmc_points, s.oracle.shifts, s.geometry.seed};
  oo.threads = threads;
  const auto zs = z_grid(s.oracle.z_min, s.oracle.z_max, s.oracle.z_points);
  const auto samples = sample_fiber(prob, zs, oo);

  const int k = s.germ ? s.germ->k() : 1;
  const auto basis = model_basis(cls.tag, n, k, s.oracle.nterms);
  const auto fit = fit_asymptotics(samples, basis, s.oracle.nterms);
  const Order lead{pred.leading().exponent, pred.leading().logpower};
  const auto fitted = fit.coefficient(lead);
  if (!fitted) throw Error(ErrorKind::Input, "cli", "validate", "fit basis does not contain the predicted leading term");
  const double predicted = *pred.leading().coeff;
  const double gap = std::abs(*fitted - predicted) / std::max(std::abs(predicted), 1e-300);
  const bool pass = gap < s.tol.validate;
  json j{{"schema", 1},
         {"case", to_string(cls.tag)},
         {"leading", {{"num", lead.exponent.num}, {"den", lead.exponent.den}, {"logpower", lead.logpower}}},
         {"predicted", predicted},
         {"fitted", *fitted},
         {"stderr", *fit.stderr_of(lead)},
         {"relative_gap", gap},
         {"threshold", s.tol.validate},
         {"pass", pass},
         {"fit", to_json(fit)}};
  out.text = dump(j);
  out.files["prediction.json"] = dump(to_json(pred));
  out.files["samples.csv"] = samples_csv(samples);
  out.files["fit.json"] = dump(to_json(fit));
  out.files["validation.json"] = out.text;
  out.code = pass ? kOk : kValidationFailed;
  return out;
}

inline Output cmd_mellin_check(double tolerance) {
  Output out;
  const auto d = mellin_exp_it(Sign::Plus, 0.5);
  const std::complex<double> expected = std::polar(std::sqrt(std::numbers::pi), std::numbers::pi / 4.0);
  const auto res = d.limit - expected;
  const bool pass = std::abs(res.real()) < tolerance && std::abs(res.imag()) < tolerance;
  json values = json::array();
  for (std::size_t i = 0; i < d.etas.size(); ++i)
    values.push_back({{"eta", d.etas[i]}, {"re", d.values[i].real()}, {"im", d.values[i].imag()}});
  out.text = dump({{"schema", 1},
                   {"xi", 0.5},
                   {"damped", values},
                   {"extrapolated", {d.limit.real(), d.limit.imag()}},
                   {"expected", {expected.real(), expected.imag()}},
                   {"residual", {res.real(), res.imag()}},
                   {"tolerance", tolerance},
                   {"pass", pass}});
  out.code = pass ? kOk : kValidationFailed;
  return out;
}

}  // namespace fiberasym::cli
