#include <cmath>
#include <tuple>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lamegap/errors.hpp"
#include "lamegap/rates.hpp"

namespace lamegap {
namespace {

TEST(Rational, Normalizes) {
  EXPECT_EQ(Rational(2, -4), Rational(-1, 2));
  EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
  EXPECT_TRUE(Rational(-1, 2) < Rational(1, 3));
  EXPECT_EQ(Rational(3, 6).str(), "1/2");
}

TEST(Rho, Branches) {
  EXPECT_NEAR(rho(0, 2, 2, 1e-4), 100.0, 1e-9);
  EXPECT_NEAR(rho(0, 3, 2, std::exp(-10.0)), 10.0, 1e-12);
  EXPECT_EQ(rho(2, 4, 2, 0.3), 1.0);
  EXPECT_EQ(rho(0, 2, 2).kind(), RateFunction::Kind::Power);
  EXPECT_EQ(rho(1, 2, 2).kind(), RateFunction::Kind::Log);
  EXPECT_EQ(rho(2, 2, 2).kind(), RateFunction::Kind::One);
  EXPECT_EQ(rho(0, 2, 5).exponent(), Rational(-4, 5));
}

TEST(Rho, RejectsEpsOutsideUnitInterval) {
  EXPECT_THROW(rho(0, 2, 2, 0.0), InvalidArgument);
  EXPECT_THROW(rho(0, 2, 2, 1.0), InvalidArgument);
}

TEST(RhoAB, Examples) {
  const double eps = 1e-4;
  EXPECT_NEAR(rho_AB(Parity::A1, 2, 2, 2).a(eps), 0.01, 1e-12);
  EXPECT_NEAR(rho_AB(Parity::A2, 1, 2, 2).b(eps), 1.0, 1e-12);
  const RhoAB a3 = rho_AB(Parity::A3, 3, 2, 3);
  EXPECT_NEAR(a3.a(eps), 1.0 / rho(0, 2, 3, eps), 1e-12);
  EXPECT_NEAR(a3.b(eps), 1.0 / rho(2, 2, 3, eps), 1e-12);
}

TEST(RhoOffdiag, Examples) {
  EXPECT_NEAR(rho_offdiag(1e-4, 0.0, 2, 2), std::log(1e4), 1e-12);
  EXPECT_NEAR(rho_offdiag(1e-4, 0.0, 3, 2), 1.0, 1e-12);
  EXPECT_NEAR(rho_offdiag(1e-4, 0.2, 2, 2), 20.0 + std::log(1e4), 1e-9);
}

TEST(UpperBounds, ZeroDatumAndFarField) {
  const GapProfile p = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  const double x[] = {0.0};
  EXPECT_EQ(upper_bound_thm11(x, p, 0, 0, 0, 0, 1e-3, 1.0), 0.0);
  // Point contact, n = m = 2: first term is Q_I sqrt(eps) / (eps + d^2).
  const double eps = 1e-4;
  EXPECT_NEAR(upper_bound_thm11(x, p, 1.0, 0, 0, 0, eps, 1.0), std::sqrt(eps) / eps, 1e-6);
  const double far1 = upper_bound_cor15(0.2, Parity::A1, 2, 1.0, 1.0, 2, 2, 1e-6, 1.0);
  const double far2 = upper_bound_cor15(0.2, Parity::A1, 2, 1.0, 1.0, 2, 2, 1e-9, 1.0);
  EXPECT_LT(far2 / far1, 1.1);
  const double at0 = upper_bound_cor15(0.0, Parity::A1, 2, 1.0, 1.0, 2, 2, 1e-4, 1.0);
  EXPECT_GT(at0, 1e-2 * 100.0);  // of order eps^(-1/2)
  EXPECT_THROW(upper_bound_simplified(0.0, 1, 1.0, 1.0, 2, 3, 1e-3, 1.0), HypothesisViolation);
  EXPECT_GT(upper_bound_simplified(0.0, 3, 1.0, 1.0, 2, 5, 1e-3, 1.0), 0.0);
}

TEST(BoundaryData, ParityClasses) {
  EXPECT_EQ(BoundaryData::phi_three(2).parity(), Parity::A1);
  EXPECT_EQ(BoundaryData::phi_two().parity(), Parity::A2);
  EXPECT_EQ(BoundaryData::phi_tilde_one(2).parity(), Parity::A2);
  EXPECT_EQ(BoundaryData::phi_tilde_three(1).parity(), Parity::A3);
  EXPECT_EQ(BoundaryData::generic().parity(), Parity::None);
  for (Parity p : {Parity::A1, Parity::A2, Parity::A3, Parity::None}) {
    EXPECT_EQ(BoundaryData::custom(p, 2).parity(), p);
  }
  EXPECT_LE(BoundaryData::phi_one(2, 0.5).growth_margin(0.5), 1e-15);
}

TEST(BoundaryData, PresetNamesRoundTrip) {
  for (Preset p : {Preset::PhiOne, Preset::PhiTwo, Preset::PhiThree, Preset::PhiFour,
                   Preset::PhiFive, Preset::PhiTildeOne, Preset::PhiTildeTwo,
                   Preset::PhiTildeThree, Preset::CustomParity, Preset::ContactOrder,
                   Preset::Rigid, Preset::Zero, Preset::Generic}) {
    EXPECT_EQ(parse_preset(to_string(p)), p);
  }
  EXPECT_THROW(parse_preset("phi_six"), InvalidArgument);
  EXPECT_EQ(parse_parity(to_string(Parity::A3)), Parity::A3);
}

TEST(LocusTable, Examples) {
  EXPECT_EQ(locus_table(Parity::A1, 2, 2, 1), LocusKind::ShortestLine);
  EXPECT_EQ(locus_table(Parity::A2, 2, 4, 1), LocusKind::CylinderSurface);
  EXPECT_EQ(locus_table(Parity::A1, 2, 4, 3), LocusKind::CylinderSurface);
}

// Every cell of the parity remark tables for n = 2, m in 1..6, k in 1..5.
TEST(LocusTable, CellByCell) {
  const int n = 2;
  for (int m = 1; m <= 6; ++m) {
    for (int k = 1; k <= 5; ++k) {
      LocusKind a1;
      if (m < n || (m == n && k == 1)) a1 = LocusKind::ShortestLine;
      else if (m == n || k < m - n + 1) a1 = LocusKind::Both;
      else a1 = LocusKind::CylinderSurface;
      EXPECT_EQ(locus_table(Parity::A1, n, m, k), a1) << "A1 m=" << m << " k=" << k;
      const LocusKind odd =
          m < n ? LocusKind::ShortestLine : (m == n ? LocusKind::Both : LocusKind::CylinderSurface);
      EXPECT_EQ(locus_table(Parity::A2, n, m, k), odd) << "A2 m=" << m << " k=" << k;
      EXPECT_EQ(locus_table(Parity::A3, n, m, k), odd) << "A3 m=" << m << " k=" << k;
    }
  }
}

TEST(LowerBound, Examples) {
  const LowerBound phi2 = lower_bound(Preset::PhiTwo, 2, 2, 1, 1.0);
  EXPECT_EQ(phi2.locus, Locus::ShortestLine);
  EXPECT_NEAR(phi2.rate(1e-4), std::log(1e4) / 1e-2, 1e-9);
  const LowerBound t3 = lower_bound(Preset::PhiTildeThree, 2, 4, 1, 1.0);
  EXPECT_EQ(t3.locus, Locus::CylinderSurface);
  EXPECT_EQ(t3.rate.exponent(), Rational(-3, 4));
  EXPECT_EQ(t3.rate.log_power(), 0);
  const RateFunction s = shortest_line_rate(2, 3, 2);
  EXPECT_EQ(s.exponent(), Rational(-1, 3));
  EXPECT_EQ(s.log_power(), 1);
}

TEST(LowerBound, HypothesesAreNamed) {
  using P = Preset;
  const std::tuple<P, int, int> bad[] = {
      {P::PhiOne, 3, 2},       // needs 2 <= k < m - n + 1
      {P::PhiTwo, 2, 2},       // needs k = 1
      {P::PhiThree, 3, 2},     // needs m = n
      {P::PhiFour, 3, 1},      // needs n - 1 <= m < n
      {P::PhiFive, 2, 1},      // needs m < n - 1
      {P::PhiTildeOne, 2, 1},  // needs m > n
      {P::PhiTildeTwo, 4, 1},  // needs k = m - n
      {P::PhiTildeThree, 4, 2} // needs k < m - n or k = 1 with m = n + 1
  };
  for (const auto& [p, m, k] : bad) {
    try {
      lower_bound(p, 2, m, k, 1.0);
      ADD_FAILURE() << to_string(p) << " m=" << m << " k=" << k;
    } catch (const HypothesisViolation& e) {
      EXPECT_FALSE(e.condition().empty());
    }
  }
  EXPECT_NO_THROW(lower_bound(Preset::PhiOne, 2, 4, 2, 1.0));
  EXPECT_NO_THROW(lower_bound(Preset::PhiTildeOne, 2, 4, 3, 1.0));
  EXPECT_NO_THROW(lower_bound(Preset::PhiTildeTwo, 2, 4, 2, 1.0));
}

TEST(Classify, GeometryMismatchThrows) {
  const GapProfile tilted = build_gap_profile(2, ContactSet::point(), ProfileVariant::Tilted);
  const GapProfile disk = build_gap_profile(2, ContactSet::disk(0.05), ProfileVariant::PurePower);
  EXPECT_THROW(classify(BoundaryData::phi_one(2), tilted), HypothesisViolation);
  EXPECT_THROW(classify(BoundaryData::phi_three(2), disk), HypothesisViolation);
  const GapProfile pure = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  EXPECT_THROW(classify(BoundaryData::phi_two(), pure), HypothesisViolation);
}

TEST(Classify, Predictions) {
  const GapProfile p4 = build_gap_profile(4, ContactSet::point(), ProfileVariant::PurePower);
  const Prediction t3 = classify(BoundaryData::phi_tilde_three(1), p4);
  EXPECT_EQ(t3.locus, LocusKind::CylinderSurface);
  ASSERT_TRUE(t3.lower.has_value());
  EXPECT_EQ(t3.lower->locus, Locus::CylinderSurface);

  const GapProfile t2 = build_gap_profile(2, ContactSet::point(), ProfileVariant::Tilted);
  const Prediction phi2 = classify(BoundaryData::phi_two(), t2);
  EXPECT_EQ(phi2.parity, Parity::None);
  ASSERT_TRUE(phi2.lower.has_value());
  EXPECT_EQ(phi2.locus, LocusKind::ShortestLine);

  // Outside the hypotheses the regime says why the lower bound is missing.
  const GapProfile p3 = build_gap_profile(3, ContactSet::point(), ProfileVariant::PurePower);
  const Prediction phi1 = classify(BoundaryData::phi_one(2), p3);
  EXPECT_FALSE(phi1.lower.has_value());
  EXPECT_NE(phi1.regime.find("lower bound unavailable"), std::string::npos);

  const auto j = nlohmann::json::parse(prediction_to_json(t3));
  EXPECT_EQ(j["schema"], "lamegap.prediction/1");
  EXPECT_EQ(j["locus"], "cylinder_surface");
}

TEST(Classify, UndeterminedTies) {
  const GapProfile p3 = build_gap_profile(3, ContactSet::point(), ProfileVariant::PurePower);
  EXPECT_EQ(classify(BoundaryData::phi_tilde_one(1), p3).locus, LocusKind::Undetermined);
  const GapProfile p5 = build_gap_profile(5, ContactSet::point(), ProfileVariant::PurePower);
  EXPECT_EQ(classify(BoundaryData::phi_tilde_three(3), p5).locus, LocusKind::Undetermined);
}

}  // namespace
}  // namespace lamegap
