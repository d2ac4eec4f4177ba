#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "lamegap/errors.hpp"
#include "lamegap/quadrature.hpp"

namespace lamegap {
namespace {

TEST(Measures, LowDimensions) {
  EXPECT_DOUBLE_EQ(sphere_measure(2), 2.0);
  EXPECT_NEAR(sphere_measure(3), 2 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(sphere_measure(4), 4 * std::numbers::pi, 1e-13);
  EXPECT_DOUBLE_EQ(ball_measure(2), 2.0);
  EXPECT_NEAR(ball_measure(3), std::numbers::pi, 1e-14);
}

TEST(GapIntegral, ClosedForms) {
  const double eps = 1e-4, s = std::sqrt(eps), at = std::atan(1 / s);
  EXPECT_NEAR(gap_integral(0, 2, 2, eps, 1.0), 312.159, 1e-3);
  EXPECT_NEAR(gap_integral(0, 2, 2, eps, 1.0), 2 / s * at, 1e-8 * 312.0);
  EXPECT_NEAR(gap_integral(1, 2, 2, eps, 1.0), std::log1p(1 / eps), 1e-10);
  EXPECT_NEAR(gap_integral(2, 2, 2, eps, 1.0), 2 - 2 * s * at, 1e-10);
  EXPECT_NEAR(gap_integral(2, 2, 2, eps, 1.0), 1.96878, 1e-5);
}

TEST(GapIntegral, RejectsBadInput) {
  EXPECT_THROW(gap_integral(0, 1, 2, 1e-3, 1.0), InvalidArgument);
  EXPECT_THROW(gap_integral(0, 2, 2, 1.5, 1.0), InvalidArgument);
  EXPECT_THROW(gap_integral(-1, 2, 2, 1e-3, 1.0), InvalidArgument);
}

TEST(RateEquivalence, SpecBranches) {
  const std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  const auto log_branch = verify_rate_equivalence(1, 2, 2, eps);
  EXPECT_TRUE(log_branch.pass);
  EXPECT_LT(log_branch.spread, 1.1);
  const auto power_branch = verify_rate_equivalence(0, 2, 2, eps);
  EXPECT_LT(power_branch.spread, 1.1);
  EXPECT_NEAR(power_branch.rows.back().ratio, std::numbers::pi, 1e-2);
  const auto one_branch = verify_rate_equivalence(3, 2, 2, eps);
  EXPECT_LT(one_branch.spread, 1.5);
  EXPECT_THROW(verify_rate_equivalence(0, 2, 2, std::vector<double>{1e-2, 1e-3}),
               InvalidArgument);
}

TEST(FlatContact, Examples) {
  const double eps = 1e-4;
  const double v = flat_contact_integral(0, 2, 2, eps, 0.1, 1.0);
  // |B'_r| / eps = 2000 plus the tail 2 arctan(0.9 / sqrt(eps)) / sqrt(eps).
  EXPECT_NEAR(v, 2000.0 + 2.0 * std::atan(0.9 / 1e-2) / 1e-2, 1e-6 * v);
  EXPECT_NEAR(flat_contact_integral(0, 2, 2, eps, 1e-9, 1.0), gap_integral(0, 2, 2, eps, 1.0),
              1e-6 * v);
  const double tiny = 1e-9;
  EXPECT_NEAR(flat_contact_integral(0, 2, 2, tiny, 0.1, 1.0) * tiny, 0.2, 1e-3);
  EXPECT_NEAR(gap_integral(0, 2, 2, eps, 1.0, ContactSet::disk(0.1)), v, 1e-12 * v);
}

}  // namespace
}  // namespace lamegap
