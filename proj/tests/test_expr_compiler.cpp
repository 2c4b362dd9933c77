#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "semiconf/compiler.hpp"

using namespace semiconf;
using namespace semiconf::compiler;

namespace {

struct Soundness {
  double max_error = 0.0;
  double max_residual = 0.0;
  double min_margin = 1e300;
};

Soundness check(const CompiledQF& c, int samples, std::uint64_t seed) {
  Soundness s;
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    auto in = c.qf.domain.sample(rng);
    Realization r = c.qf.place(std::span<const Point>(in), gadgets::Branch::random(rng));
    Point expect = evaluate(c.expr, std::span<const Point>(in));
    s.max_error = std::max(s.max_error, std::abs(c.qf.outputs_of(r)[0] - expect));
    s.max_residual =
        std::max({s.max_residual, max_edge_residual(c.qf.linkage, r), max_pin_residual(c.qf.linkage, r)});
    s.min_margin = std::min(s.min_margin, c.qf.min_margin(r));
  }
  return s;
}

}  // namespace

TEST(Expr, EvaluateMatchesHorner) {
  auto e = parse_expression("z^3 - 2*z + 1");
  std::vector<Point> coeffs = {1.0, 0.0, -2.0, 1.0};
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    Point z = uniform_in_disk(rng, 0.0, 2.0);
    EXPECT_LT(std::abs(evaluate(e, {z}) - oracle::horner(coeffs, z)), 1e-12);
  }
  EXPECT_EQ(degree(e), 3);
}

TEST(Expr, PrintParseRoundTrip) {
  for (const char* src : {"z^2", "z*conj(z)", "z*w + 3", "(1+2i)*z - w^3", "0.5*z", "z/4 - conj(w)", "-z", "z^5"}) {
    auto e = parse_expression(src);
    auto again = parse_expression(to_string(e));
    EXPECT_EQ(to_string(again), to_string(e)) << src;
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      std::vector<Point> z = {uniform_in_disk(rng, 0.0, 1.0), uniform_in_disk(rng, 0.0, 1.0)};
      EXPECT_LT(std::abs(evaluate(e, std::span<const Point>(z)) - evaluate(again, std::span<const Point>(z))), 1e-12);
    }
  }
}

TEST(Expr, ParseErrors) {
  EXPECT_THROW(parse_expression("z +"), ParseError);
  EXPECT_THROW(parse_expression("z / w"), ParseError);
  EXPECT_THROW(parse_expression("foo(z)"), ParseError);
  EXPECT_THROW(parse_expression("(z"), ParseError);
}

TEST(Expr, ConstantsFold) {
  auto e = parse_expression("2*3 + i*i");
  EXPECT_FALSE(has_variables(e));
  EXPECT_LT(std::abs(evaluate(e, std::span<const Point>{}) - Point(5.0)), 1e-15);
}

TEST(Expr, MagnitudeBoundDominates) {
  auto e = parse_expression("z*w - 3*conj(z)^2 + (1+i)");
  Rng rng(11);
  double b = magnitude_bound(e, 1.5);
  for (int i = 0; i < 500; ++i) {
    std::vector<Point> z = {uniform_in_disk(rng, 0.0, 1.5), uniform_in_disk(rng, 0.0, 1.5)};
    EXPECT_LE(std::abs(evaluate(e, std::span<const Point>(z))), b);
  }
}

TEST(Compiler, SquareIsSound) {
  auto c = compile("z^2", 1, 1.0);
  auto s = check(c, 1000, 1);
  EXPECT_LT(s.max_error, 1e-8);
  EXPECT_LT(s.max_residual, 1e-8);
  EXPECT_GT(s.min_margin, 0.0);
  EXPECT_TRUE(c.margins_ok());
}

TEST(Compiler, AbsSquaredIsRealAndSound) {
  auto c = compile("z*conj(z)", 1, 1.0);
  auto s = check(c, 1000, 2);
  EXPECT_LT(s.max_error, 1e-8);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    auto in = c.qf.domain.sample(rng);
    auto r = c.qf.place(std::span<const Point>(in), gadgets::Branch::random(rng));
    Point out = c.qf.outputs_of(r)[0];
    EXPECT_LT(std::abs(out.imag()), 1e-8);
    EXPECT_NEAR(out.real(), std::norm(in[0]), 1e-8);
  }
  EXPECT_TRUE(c.margins_ok());
}

TEST(Compiler, ProductOfTwoVariables) {
  auto c = compile("z*w", 2, 1.0);
  auto s = check(c, 1000, 3);
  EXPECT_LT(s.max_error, 1e-8);
  EXPECT_LT(s.max_residual, 1e-8);
  EXPECT_TRUE(c.margins_ok());
}

TEST(Compiler, MixedExpression) {
  auto c = compile("(1+2i)*z - w^3 + 0.5*conj(w) - 2", 2, 0.8);
  auto s = check(c, 300, 4);
  EXPECT_LT(s.max_error, 1e-8);
  EXPECT_GT(s.min_margin, 0.0);
  EXPECT_TRUE(c.margins_ok());
}

TEST(Compiler, BareVariableGetsDistinctOutput) {
  auto c = compile("z", 1, 1.0);
  ASSERT_EQ(c.qf.inputs.size(), 1u);
  ASSERT_EQ(c.qf.outputs.size(), 1u);
  EXPECT_NE(c.qf.inputs[0], c.qf.outputs[0]);
  auto s = check(c, 1000, 5);
  EXPECT_LT(s.max_error, 1e-9);
}

TEST(Compiler, ConstantExpressionGetsDistinctOutput) {
  auto c = compile("3 - i", 1, 1.0);
  EXPECT_NE(c.qf.inputs[0], c.qf.outputs[0]);
  auto s = check(c, 100, 6);
  EXPECT_LT(s.max_error, 1e-9);
}

TEST(Compiler, InputsAndOutputsDisjoint) {
  for (const char* src : {"z", "z^2", "z*w", "w", "z + w"}) {
    auto c = compile(src, 2, 1.0);
    std::set<VertexId> in(c.qf.inputs.begin(), c.qf.inputs.end());
    for (const auto& o : c.qf.outputs) EXPECT_FALSE(in.count(o)) << src;
    EXPECT_TRUE(validate(c.qf.linkage).ok()) << src;
  }
}

TEST(Compiler, SharedSubexpressionsAreReused) {
  auto once = compile("z^2", 1, 1.0);
  auto twice = compile("z^2 + z^2", 1, 1.0);
  std::size_t squarings = 0;
  for (const auto& rec : twice.log) squarings += rec.gadget == "squaring";
  EXPECT_EQ(squarings, 1u);
  EXPECT_GT(twice.qf.linkage.vertex_count(), once.qf.linkage.vertex_count());
}

TEST(Compiler, RejectsBadArguments) {
  EXPECT_THROW(compile("z", 1, 0.0), Error);
  EXPECT_THROW(compile("z*w", 1, 1.0), Error);
  EXPECT_THROW(compile("z", 0, 1.0), Error);
}

TEST(Compiler, RebuildFromSpecReproducesLinkage) {
  auto c = compile("z*w - 1", 2, 0.5);
  auto g = rebuild_gadget(c.qf.spec);
  EXPECT_TRUE(g.linkage == c.qf.linkage);
}

TEST(Compiler, ZeroSetLinkagePinsOutput) {
  auto z = linkage_for_zero_set(parse_expression("z^2 - 0.25"), 1, 1.0);
  EXPECT_TRUE(z.linkage.is_pinned(z.output));
  EXPECT_EQ(z.linkage.pin_of(z.output).value(), Point(0.0));
  ASSERT_EQ(z.markers.vertices.size(), 1u);
  // The forward placement at a root is a realization of the pinned linkage.
  Realization r = z.compiled.qf.place({Point(0.5)}, gadgets::Branch{0, 0.3});
  EXPECT_LT(max_pin_residual(z.linkage, r), 1e-8);
  EXPECT_LT(max_edge_residual(z.linkage, r), 1e-8);
}
