#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "lamegap/auxiliary.hpp"
#include "lamegap/errors.hpp"

namespace lamegap {
namespace {

const GapProfile& p2() {
  static const GapProfile p = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  return p;
}

TEST(VBar, Examples) {
  EXPECT_NEAR(vbar(Vec2(0.0, 0.005), p2(), 0.01), 0.5, 1e-14);
  EXPECT_EQ(vbar(Vec2(0.1, 0.0), p2(), 0.01), 0.0);
  EXPECT_NEAR(vbar(Vec2(0.1, 0.02), p2(), 0.01), 1.0, 1e-14);
  EXPECT_THROW(vbar(Vec2(0.0, 0.5), p2(), 0.01), InvalidArgument);
  EXPECT_THROW(vbar(Vec2(1.0, 0.0), p2(), 0.01), InvalidArgument);
}

TEST(GradVBar, Examples) {
  EXPECT_NEAR(grad_vbar(Vec2(0.0, 0.005), p2(), 0.01).y(), 100.0, 1e-10);
  EXPECT_NEAR(grad_vbar(Vec2(0.1, 0.005), p2(), 0.01).y(), 50.0, 1e-10);
  const GapProfile disk = build_gap_profile(2, ContactSet::disk(0.1), ProfileVariant::PurePower);
  EXPECT_EQ(grad_vbar(Vec2(0.05, 0.005), disk, 0.01).x(), 0.0);
}

TEST(Cutoff, Ramp) {
  EXPECT_EQ(cutoff(0.1, 0.2), 1.0);
  EXPECT_EQ(cutoff(0.3, 0.2), 1.0);
  EXPECT_EQ(cutoff(0.4, 0.2), 0.0);
  EXPECT_NEAR(cutoff(0.35, 0.2), 0.5, 1e-14);
}

TEST(LiftingFields, Examples) {
  const double eps = 0.01;
  const Vec2 x(0.05, 0.004);
  const double v = vbar(x, p2(), eps);
  EXPECT_TRUE(make_u_tilde_alpha(0, p2(), eps).evaluate(x).isApprox(Vec2(v, 0.0)));
  EXPECT_TRUE(make_u_tilde_alpha(2, p2(), eps).evaluate(x).isApprox(Vec2(x.y() * v, -x.x() * v)));
  const VectorField phi = [](const Vec2& y) { return Vec2(y.x() * y.x(), 0.0); };
  const Vec2 u0 = make_u_tilde_0(0, phi, p2(), eps).evaluate(Vec2(0.1, 0.0));
  EXPECT_NEAR(u0.x(), 0.01, 1e-14);
  EXPECT_EQ(u0.y(), 0.0);
  std::ostringstream csv;
  const Vec2 pts[] = {Vec2(0.0, 0.005), Vec2(0.1, 0.01)};
  write_field_csv(make_vbar(p2(), eps), pts, csv);
  EXPECT_NE(csv.str().find("x,y,f1,f2"), std::string::npos);
}

TEST(GradientEnvelope, Examples) {
  const double eps = 1e-4;
  const auto one = [](const Vec2&) { return 1.0; };
  EXPECT_NEAR(theorem21_bound(0.0, one, 1.0, p2(), eps, 1.0), 1.0 / std::sqrt(eps) + 1.0, 1e-9);
  const auto vanish = [](const Vec2&) { return 0.0; };
  EXPECT_DOUBLE_EQ(theorem21_bound(0.0, vanish, 2.0, p2(), eps, 3.0), 6.0);
  // Large m at fixed d < 1: (eps + d^m)^(1/m) tends to max(d, eps^(1/m)).
  const GapProfile p12 = build_gap_profile(12, ContactSet::point(), ProfileVariant::PurePower,
                                           std::nullopt, 0.3);
  const double b = theorem21_bound(0.5, one, 0.0, p12, 1e-12, 1.0);
  EXPECT_TRUE(std::isfinite(b));
  EXPECT_NEAR(b, 2.0, 1e-2);
}

}  // namespace
}  // namespace lamegap
