#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "occlab/maps.hpp"

using namespace occlab;

namespace {

// T on the right branch including its limit T(c+) = 0 at the shared point.
double right_branch(const MapParams& m, double x) { return x == m.c() ? 0.0 : evaluate_map(m, x); }

}  // namespace

TEST(MapParams, DerivedConstants) {
  MapParams m(0.5, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(m.a0(), 2.0);
  EXPECT_DOUBLE_EQ(m.a1(), 2.0);
  EXPECT_NEAR(m.theta_plus(), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.theta_minus(), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.alpha(), 1.0);

  MapParams q(0.5, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(q.a0(), 4.0);
  EXPECT_NEAR(q.theta_minus(), 0.25, 1e-15);
  EXPECT_NEAR(q.theta_plus(), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(q.alpha(), 0.5);
  EXPECT_DOUBLE_EQ(MapParams(0.3, 1.5, 3.0).beta(), 1.0 / 3.0);
}

TEST(MapParams, RejectsBadParameters) {
  EXPECT_THROW(MapParams(0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(MapParams(1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(MapParams(0.5, 0.5, 1.0), DomainError);
  EXPECT_THROW(MapParams(0.5, 1.0, 0.99), DomainError);
}

TEST(EvaluateMap, BranchEndpoints) {
  for (auto [c, p0, p1] : {std::tuple{0.5, 1.0, 1.0}, {0.3, 2.0, 1.0}, {0.7, 1.5, 3.0}}) {
    MapParams m(c, p0, p1);
    EXPECT_EQ(evaluate_map(m, 0.0), 0.0);
    EXPECT_NEAR(evaluate_map(m, c), 1.0, 1e-14);
    EXPECT_NEAR(evaluate_map(m, std::nextafter(c, 1.0)), 0.0, 1e-12);
    EXPECT_EQ(evaluate_map(m, 1.0), 1.0);
  }
  MapParams m(0.5, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_map(m, 0.25), 0.375);
}

TEST(EvaluateMap, StrictlyIncreasingOnEachBranch) {
  MapParams m(0.4, 1.7, 1.0);
  for (int side = 0; side < 2; ++side) {
    double lo = side == 0 ? 0.0 : m.c(), hi = side == 0 ? m.c() : 1.0;
    double prev = -1.0;
    for (int i = 1; i <= 1000; ++i) {
      double x = lo + (hi - lo) * i / 1001.0;
      double y = evaluate_map(m, x);
      EXPECT_GT(y, prev);
      prev = y;
    }
  }
}

TEST(EvaluateMap, DerivativeAtLeastOneAndOneAtFixedPoints) {
  MapParams m(0.5, 2.0, 1.0);
  for (int i = 0; i <= 200; ++i) {
    double x = i / 200.0;
    EXPECT_GE(map_derivative(m, x), 1.0 - 1e-12) << x;
  }
  // one-sided finite differences approach 1 monotonically
  double prev0 = 1e9, prev1 = 1e9;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    double d0 = std::abs(evaluate_map(m, h) / h - 1.0);
    double d1 = std::abs((1.0 - evaluate_map(m, 1.0 - h)) / h - 1.0);
    EXPECT_LT(d0, prev0);
    EXPECT_LT(d1, prev1);
    prev0 = d0;
    prev1 = d1;
  }
  EXPECT_LT(prev0, 1e-3);
  EXPECT_LT(prev1, 1e-3);
}

TEST(InverseBranch, Examples) {
  MapParams m(0.5, 1.0, 1.0);
  EXPECT_NEAR(inverse_branch(m, Branch::left, 1.0), 0.5, 1e-14);
  EXPECT_NEAR(inverse_branch(m, Branch::left, 0.375), 0.25, 1e-14);
  EXPECT_NEAR(inverse_branch(m, Branch::left, 0.5), (std::sqrt(5.0) - 1.0) / 4.0, 1e-14);
}

TEST(InverseBranch, ResidualAndMonotone) {
  MapParams m(0.35, 1.3, 2.5);
  for (Branch b : {Branch::left, Branch::right}) {
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      double y = i / 1000.0;
      double x = inverse_branch(m, b, y);
      double tx = b == Branch::left ? evaluate_map(m, x) : right_branch(m, x);
      EXPECT_LE(std::abs(tx - y), tol_root) << y;
      EXPECT_GE(x, prev);
      prev = x;
      if (b == Branch::left) {
        EXPECT_LE(x, m.c());
      } else {
        EXPECT_GE(x, m.c());
      }
    }
  }
}

TEST(IterateTable, RecurrenceAndShape) {
  MapParams m(0.5, 2.0, 1.0);
  auto t = iterate_table(m, 2000);
  EXPECT_EQ(t.u[0], 1.0);
  EXPECT_EQ(t.v[0], 1.0);
  EXPECT_EQ(t.U[0], 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    EXPECT_LT(t.u[k + 1], t.u[k]);
    EXPECT_LT(t.v[k + 1], t.v[k]);
    EXPECT_LE(std::abs(evaluate_map(m, t.u[k + 1]) - t.u[k]), tol_root);
    EXPECT_LE(std::abs((1.0 - right_branch(m, 1.0 - t.v[k + 1])) - t.v[k]), tol_root);
    EXPECT_GT(t.U[k + 1], t.U[k]);
  }
  EXPECT_THROW(iterate_table(m, 0), DomainError);
}

TEST(IterateTable, Asymptotics) {
  auto sym = iterate_table(MapParams(0.5, 1.0, 1.0), 1000000);
  double r = 2.0 * sym.V[1000000] / std::log(1e6);
  EXPECT_GT(r, 0.75);
  EXPECT_LT(r, 1.25);

  auto q = iterate_table(MapParams(0.5, 2.0, 1.0), 1000000);
  double target = 2.0 * std::sqrt(0.5 / 4.0) * std::sqrt(1e6);
  EXPECT_NEAR(q.U[1000000] / target, 1.0, 0.10);
}

TEST(IterateTable, CsvColumns) {
  auto t = iterate_table(MapParams(0.5, 1.0, 1.0), 3);
  std::ostringstream os;
  t.write_csv(os);
  std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "k,u_k,v_k,U_k,V_k");
  EXPECT_NE(s.find("\n0,1,1,1,1\n"), std::string::npos);
}

TEST(ComparePartialSums, IdentityIsOne) {
  auto f = FixedPointFunction::power_rule(1.0, 2.0, 0.25);
  auto r = compare_partial_sums(f, f, 0.25, 1000);
  for (double v : r) EXPECT_EQ(v, 1.0);
}

TEST(ComparePartialSums, QuadraticAndCubicPairs) {
  auto f = FixedPointFunction::power_rule(1.0, 2.0, 0.25);
  auto g = FixedPointFunction::power_rule(2.0, 2.0, 0.25);
  auto r = compare_partial_sums(f, g, 0.25, 1000000);
  EXPECT_GE(r.back(), 0.45);
  EXPECT_LE(r.back(), 0.55);

  auto f3 = FixedPointFunction::power_rule(1.0, 3.0, 0.25);
  auto g3 = FixedPointFunction::power_rule(8.0, 3.0, 0.25);
  auto r3 = compare_partial_sums(f3, g3, 0.25, 1000000);
  EXPECT_NEAR(r3.back(), 1.0 / (2.0 * std::sqrt(2.0)), 0.1 / (2.0 * std::sqrt(2.0)));
}

TEST(ComparePartialSums, OneSidedBoundStaysBounded) {
  // x - f(x) = x^2 <= (x - g(x)) / 2 for g = x - 2x^2: the ratio stays O(1)
  auto f = FixedPointFunction::power_rule(1.0, 2.0, 0.25);
  auto g = FixedPointFunction::power_rule(2.0, 2.0, 0.25);
  auto r = compare_partial_sums(f, g, 0.25, 1000000);
  double mx = *std::max_element(r.begin(), r.end());
  EXPECT_LE(mx, 1.0);
}

TEST(FixedPointFunction, Validation) {
  EXPECT_THROW(FixedPointFunction([](double x) { return x; }, 0.5), DomainError);
  EXPECT_THROW(FixedPointFunction([](double x) { return x / 2 + 0.1; }, 0.5), DomainError);
  EXPECT_THROW(FixedPointFunction::power_rule(1.0, 2.0, 2.0), DomainError);
  auto br = FixedPointFunction::from_branch(MapParams(0.5, 1.0, 1.0), Branch::left);
  EXPECT_NEAR(br(1.0), 0.5, 1e-14);
}
