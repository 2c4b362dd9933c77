#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "semiconf/analysis.hpp"

using namespace semiconf;
using namespace semiconf::analysis;

namespace {

Linkage four_bar() {
  Linkage l;
  l.add_edge("a", "p", 1.0).add_edge("p", "q", 2.0).add_edge("q", "b", 1.5);
  l.set_pin("a", 0.0).set_pin("b", 2.0);
  return l;
}

PointCloud cloud(std::vector<std::vector<Point>> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

}  // namespace

TEST(Verify, SquaringPasses) {
  auto g = gadgets::squaring(1.0);
  Expr z = Expr::var(0);
  auto rep = verify_quasifunctional(g, z * z, 200, 1);
  EXPECT_TRUE(rep.passed()) << rep.first_failure;
  EXPECT_LT(rep.max_error, 1e-9);
  EXPECT_EQ(rep.placements, 2u * 200u);  // two random branches per sample
  EXPECT_GT(rep.solver_converged, 0u);
}

TEST(Verify, IdentityPasses) {
  auto rep = verify_quasifunctional(gadgets::identity_gadget(), Expr::var(0), 200, 2);
  EXPECT_TRUE(rep.passed());
  EXPECT_LT(rep.max_error, 1e-12);
}

TEST(Verify, WrongFunctionFails) {
  auto g = gadgets::squaring(1.0);
  auto rep = verify_quasifunctional(g, Expr::var(0), 50, 3);
  EXPECT_FALSE(rep.passed());
  EXPECT_FALSE(rep.properties.at("functional"));
}

TEST(Verify, CompiledMultiplication) {
  auto c = compiler::compile("z1*z2", 2, 0.5);
  auto rep = verify_quasifunctional(c.qf, c.expr, 40, 4, {.spot_fraction = 0.0});
  EXPECT_TRUE(rep.passed()) << rep.first_failure;
  EXPECT_LT(rep.max_error, 1e-9);
}

TEST(Invariance, UnpinnedIsEuclidean) {
  Linkage l;
  l.add_edge("a", "b", 1.0).add_edge("b", "c", 1.0).add_edge("a", "c", 1.5);
  auto rep = check_invariance(l, 20, 5);
  EXPECT_EQ(rep.pinned, 0u);
  EXPECT_EQ(rep.group, "Euc(2)");
  EXPECT_TRUE(rep.passed);
}

TEST(Invariance, OnePinIsOrthogonalAboutPin) {
  Linkage l;
  l.add_edge("a", "b", 1.0).add_edge("b", "c", 1.0).set_pin("a", Point(1.0, 2.0));
  auto rep = check_invariance(l, 20, 6);
  EXPECT_EQ(rep.group, "O(2)");
  EXPECT_TRUE(rep.passed);
  // Translations are not symmetries once a vertex is pinned.
  auto rs = solver::sample_configurations(l, 10, 6);
  ASSERT_FALSE(rs.empty());
  auto c = check_motion(l, rs, EuclideanMotion::translation(Point(0.3, 0.0)));
  EXPECT_FALSE(c.ok());
  EXPECT_NEAR(c.max_pin_residual, 0.3, 1e-9);
}

TEST(Invariance, TwoPinsReflect) {
  auto rep = check_invariance(four_bar(), 20, 7);
  EXPECT_EQ(rep.pinned, 2u);
  EXPECT_EQ(rep.group, "reflection");
  EXPECT_TRUE(rep.passed);
}

TEST(Invariance, PinsAtOnePointCountOnce) {
  Linkage l;
  l.add_edge("a", "b", 1.0).add_edge("b", "c", 1.0).set_pin("a", 0.0).set_pin("c", 0.0);
  auto rep = check_invariance(l, 10, 8);
  EXPECT_EQ(rep.pinned, 1u);
  EXPECT_TRUE(rep.passed);
}

TEST(Compactness, UnpinnedViolatesPrecondition) {
  Linkage l;
  l.add_edge("a", "b", 1.0);
  auto rep = check_compactness(l, cloud({}));
  EXPECT_FALSE(rep.precondition);
  EXPECT_NE(rep.message.find("precondition"), std::string::npos);
}

TEST(Compactness, FourBarWithinTotalLength) {
  auto l = four_bar();
  auto c = sample_semiconfiguration(l, {{"p", "q"}}, 50, 9);
  ASSERT_GT(c.size(), 0u);
  auto rep = check_compactness(l, c);
  EXPECT_TRUE(rep.precondition);
  EXPECT_TRUE(rep.passed);
  EXPECT_DOUBLE_EQ(rep.bound, 4.5);
  EXPECT_LE(rep.max_radius, 3.0 + 1e-6);  // |q| <= |p| + |q - p|
}

TEST(Cloud, SliceIsIdempotentAndZeroesLast) {
  Rng rng(10);
  std::vector<std::vector<Point>> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({uniform_in_disk(rng, 0.0, 3.0), uniform_in_disk(rng, 0.0, 3.0)});
  auto once = slice_last_zero(cloud(pts));
  auto twice = slice_last_zero(once);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(once.points[i].back(), Point(0.0));
    EXPECT_EQ(once.points[i], twice.points[i]);
    EXPECT_NEAR(std::abs(once.points[i][0] - (pts[i][0] - pts[i][1])), 0.0, 1e-15);
  }
}

TEST(Cloud, HausdorffMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<Point>> A, B;
    for (int i = 0; i < 40; ++i) A.push_back({uniform_in_disk(rng, 0.0, 1.0), uniform_in_disk(rng, 0.0, 1.0)});
    for (int i = 0; i < 55; ++i) B.push_back({uniform_in_disk(rng, 0.0, 1.0), uniform_in_disk(rng, 0.0, 1.0)});
    double brute = 0.0;
    for (const auto& a : A) {
      double best = 1e300;
      for (const auto& b : B) best = std::min(best, std::sqrt(std::norm(a[0] - b[0]) + std::norm(a[1] - b[1])));
      brute = std::max(brute, best);
    }
    EXPECT_NEAR(hausdorff_one_sided(A, B), brute, 1e-15);
  }
}

TEST(Cloud, HausdorffOfShiftedCopy) {
  std::vector<std::vector<Point>> A{{0.0}, {1.0}, {2.0}}, B{{0.25}, {1.25}, {2.25}};
  EXPECT_DOUBLE_EQ(hausdorff(A, B), 0.25);
  EXPECT_DOUBLE_EQ(hausdorff(A, A), 0.0);
}

TEST(Cloud, ProductConcatenates) {
  auto p = product_cloud(cloud({{1.0}, {2.0}}), cloud({{3.0, 4.0}, {5.0, 6.0}, {7.0, 8.0}}));
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p.points[5], (std::vector<Point>{2.0, 7.0, 8.0}));
}

TEST(ZeroSet, SquareRootsOfQuarter) {
  auto zs = compiler::linkage_for_zero_set(parse_expression("z1^2 - 0.25"), 1, 1.0);
  auto c = sample_zero_set(zs, 60, 11);
  ASSERT_GT(c.size(), 10u);
  bool plus = false, minus = false;
  for (const auto& p : c.points) {
    EXPECT_LT(std::abs(p[0] * p[0] - 0.25), 1e-6);
    (p[0].real() > 0 ? plus : minus) = true;
  }
  EXPECT_TRUE(plus && minus);
  EXPECT_GT(c.spot_converged, 0u);
  EXPECT_LT(c.spot_max_shift, 1e-4);
}

TEST(ZeroSet, CircleInTwoVariables) {
  // z1 + z2 = 0 with |z_i| <= 1: the anti-diagonal disk.
  auto zs = compiler::linkage_for_zero_set(parse_expression("z1 + z2"), 2, 1.0);
  auto c = sample_zero_set(zs, 40, 12);
  ASSERT_GT(c.size(), 20u);
  for (const auto& p : c.points) EXPECT_LT(std::abs(p[0] + p[1]), 1e-6);
}
