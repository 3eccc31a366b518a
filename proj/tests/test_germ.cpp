#include <random>

#include <gtest/gtest.h>

#include "fiberasym/germ.hpp"
#include "support.hpp"

using namespace fiberasym;
using testing_support::conical;

namespace {

Germ x2y2() { return Germ::make(2, 4, {{1.0, {2, 2}}}); }

}  // namespace

TEST(EvalFk, SingleMonomial) {
  const double x[2] = {1.0, 0.0};
  EXPECT_EQ(eval_fk(conical(), x), 1.0);
}

TEST(EvalFk, HomogeneityExample) {
  const double x[2] = {2.0, 0.0};
  EXPECT_EQ(eval_fk(conical(), x), 4.0);
}

TEST(EvalFk, SymmetryCancellation) {
  const double x[2] = {1.0, 1.0};
  EXPECT_EQ(eval_fk(testing_support::quartic(), x), 0.0);
}

TEST(EvalFk, DimensionMismatchIsInputError) {
  const double x[3] = {1.0, 0.0, 0.0};
  try {
    eval_fk(conical(), x);
    FAIL() << "expected an input error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
    EXPECT_EQ(e.module(), "germ");
  }
}

TEST(TangentialGradient, RadialGradientProjectsToZero) {
  const double th[2] = {1.0, 0.0};
  const auto g = tangential_gradient(conical(), th);
  EXPECT_NEAR(g[0], 0.0, 1e-15);
  EXPECT_NEAR(g[1], 0.0, 1e-15);
}

TEST(TangentialGradient, DiagonalHasNormTwo) {
  const double s = 1.0 / std::sqrt(2.0);
  const double th[2] = {s, s};
  const auto g = tangential_gradient(conical(), th);
  EXPECT_NEAR(norm(g), 2.0, 1e-14);
  EXPECT_NEAR(g[0], std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(g[1], -std::sqrt(2.0), 1e-14);
}

TEST(TangentialGradient, DegenerateZeroWitness) {
  const double th[2] = {1.0, 0.0};
  EXPECT_EQ(eval_fk(x2y2(), th), 0.0);
  EXPECT_NEAR(norm(tangential_gradient(x2y2(), th)), 0.0, 1e-15);
}

TEST(TangentialGradient, RejectsNonUnitInput) {
  const double th[2] = {1.0, 1e-3};
  EXPECT_THROW(tangential_gradient(conical(), th), Error);
}

TEST(GermMake, ValidatesStructure) {
  EXPECT_THROW(Germ::make(2, 2, {{1.0, {2, 0}}, {1.0, {1, 0}}}), Error);  // not homogeneous
  EXPECT_THROW(Germ::make(2, 2, {{0.0, {2, 0}}}), Error);                // identically zero
  EXPECT_THROW(Germ::make(1, 2, {{1.0, {2}}}), Error);                   // n < 2
  EXPECT_THROW(Germ::make(2, 1, {{1.0, {1, 0}}}), Error);                // k < 2
  EXPECT_THROW(Germ::make(2, 2, {{1.0, {2, 0}}}, {0.0}), Error);         // x0 length
  EXPECT_THROW(Germ::make(2, 2, {{1.0, {2, 0}}}, {}, "no-such-remainder"), Error);
}

TEST(GermMake, RemainderEntersFullEvaluation) {
  auto g = Germ::make(2, 2, {{1.0, {2, 0}}, {1.0, {0, 2}}}, {1.0, -1.0}, "x1-power", 0.5);
  const double x[2] = {1.5, -1.0};  // y = (0.5, 0)
  EXPECT_NEAR(g.full(x), 0.25 + 0.5 * 0.125, 1e-15);
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify(Germ::make(2, 2, {{1.0, {2, 0}}, {1.0, {0, 2}}})).tag, CaseTag::ExtremumMin);
  EXPECT_EQ(classify(Germ::make(2, 2, {{-1.0, {2, 0}}, {-1.0, {0, 2}}})).tag, CaseTag::ExtremumMax);
  EXPECT_EQ(classify(conical()).tag, CaseTag::PrincipalType);
  const auto c = classify(x2y2());
  EXPECT_EQ(c.tag, CaseTag::Unsupported);
  EXPECT_LE(c.min_tangential_gradient, 1e-6);
}

TEST(Classify, HigherDimensions) {
  EXPECT_EQ(classify(testing_support::cone3()).tag, CaseTag::PrincipalType);
  EXPECT_EQ(classify(testing_support::sum_of_powers(3, 4, {1.0, 2.0, 3.0})).tag, CaseTag::ExtremumMin);
  auto g4 = Germ::make(4, 2, {{1.0, {2, 0, 0, 0}}, {1.0, {0, 2, 0, 0}}, {-1.0, {0, 0, 2, 0}}, {-1.0, {0, 0, 0, 2}}});
  EXPECT_EQ(classify(g4).tag, CaseTag::PrincipalType);
}

TEST(Classify, OddDegree) {
  // x^3 - 3 x y^2 has six simple zeros on the circle
  EXPECT_EQ(classify(Germ::make(2, 3, {{1.0, {3, 0}}, {-3.0, {1, 2}}})).tag, CaseTag::PrincipalType);
  // x^3 vanishes to second order at (0, ±1)
  EXPECT_EQ(classify(Germ::make(2, 3, {{1.0, {3, 0}}})).tag, CaseTag::Unsupported);
}

TEST(Classify, ExtremumDiagnostics) {
  const auto c = classify(testing_support::sum_of_powers(2, 4, {1.0, 3.0}));
  ASSERT_EQ(c.tag, CaseTag::ExtremumMin);
  EXPECT_GT(c.min_abs_fk, c.tolerances.eps_def);
  EXPECT_TRUE(c.zeros.empty());
}

TEST(Property, Homogeneity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0), L(1e-3, 10.0);
  const Germ germs[] = {conical(), testing_support::quartic(), testing_support::cone3(),
                        Germ::make(3, 3, {{1.0, {1, 1, 1}}, {-2.0, {3, 0, 0}}, {0.5, {0, 1, 2}}})};
  for (const auto& g : germs) {
    for (int i = 0; i < 100; ++i) {
      Vec x(g.n()), y(g.n());
      const double lam = L(rng);
      for (int a = 0; a < g.n(); ++a) {
        x[a] = U(rng);
        y[a] = lam * x[a];
      }
      const double fx = eval_fk(g, x);
      const double lk = std::pow(lam, g.k());
      EXPECT_LE(std::abs(eval_fk(g, y) - lk * fx), 1e-10 * (1.0 + std::abs(fx) * lk));
    }
  }
}

TEST(Property, ClassificationScalingInvariance) {
  const Germ germs[] = {testing_support::sum_of_powers(2, 2, {1.0, 2.0}), conical(), testing_support::quartic(),
                        testing_support::cone3(), testing_support::sum_of_powers(3, 2, {1.0, 1.0, 4.0}), x2y2()};
  for (const auto& g : germs) {
    const auto base = classify(g).tag;
    for (double c : {1e-3, 0.5, 7.0, 1e3}) EXPECT_EQ(classify(g.with_fk(g.fk().scaled(c))).tag, base);
    CaseTag flipped = base;
    if (base == CaseTag::ExtremumMin) flipped = CaseTag::ExtremumMax;
    if (base == CaseTag::ExtremumMax) flipped = CaseTag::ExtremumMin;
    EXPECT_EQ(classify(g.with_fk(g.fk().scaled(-2.0))).tag, flipped);
  }
}

TEST(Property, PrincipalTypeZerosHaveTransverseGradient) {
  const Germ germs[] = {conical(), testing_support::quartic(), testing_support::cone3(),
                        Germ::make(2, 3, {{1.0, {3, 0}}, {-3.0, {1, 2}}})};
  for (const auto& g : germs) {
    const auto c = classify(g);
    ASSERT_EQ(c.tag, CaseTag::PrincipalType);
    ASSERT_FALSE(c.zeros.empty());
    ASSERT_EQ(c.zeros.size(), c.zero_gradient_norms.size());
    for (std::size_t i = 0; i < c.zeros.size(); ++i) {
      EXPECT_GT(c.zero_gradient_norms[i], c.tolerances.eps_grad);
      EXPECT_NEAR(norm(tangential_gradient(g, c.zeros[i])), c.zero_gradient_norms[i], 1e-9);
      EXPECT_LE(std::abs(eval_fk(g, c.zeros[i])), 1e-10);
    }
  }
}

TEST(Classify, CircleZeroCountForConical) {
  EXPECT_EQ(classify(conical()).zeros.size(), 4u);
  EXPECT_EQ(classify(testing_support::quartic()).zeros.size(), 4u);
}

TEST(GermJson, RoundTrip) {
  auto g = Germ::make(3, 2, {{1.0, {2, 0, 0}}, {-0.5, {0, 1, 1}}}, {0.1, 0.2, 0.3}, "radial-power", 0.25);
  const auto j = to_json(g);
  const auto back = germ_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.remainder().name, "radial-power");
}

TEST(GermJson, MalformedInputIsInputError) {
  nlohmann::json j = {{"n", 2}, {"k", 2}, {"monomials", {{1.0, {2, 0, 0}}}}};
  try {
    germ_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
  }
  EXPECT_THROW(germ_from_json(nlohmann::json{{"n", 2}}), Error);
}

TEST(ClassificationJson, CarriesDiagnostics) {
  const auto j = to_json(classify(x2y2()));
  EXPECT_EQ(j["case"], "Unsupported");
  EXPECT_TRUE(j["diagnostics"].contains("min_tangential_gradient"));
  EXPECT_EQ(j["schema"], 1);
}
