#include <array>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "lamegap/errors.hpp"
#include "lamegap/geometry.hpp"

namespace lamegap {
namespace {

TEST(GapProfile, PurePowerSeparation) {
  const GapProfile p = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  EXPECT_DOUBLE_EQ(p.separation(0.1), 0.01);
  EXPECT_DOUBLE_EQ(p.separation(-0.1), 0.01);
  EXPECT_DOUBLE_EQ(p.separation(0.0), 0.0);
}

TEST(GapProfile, TiltedSeparation) {
  const GapProfile p = build_gap_profile(4, ContactSet::point(), ProfileVariant::Tilted);
  EXPECT_NEAR(p.separation(0.1), 1.1e-4, 1e-18);
  EXPECT_NEAR(p.separation(-0.1), 0.9e-4, 1e-18);
  EXPECT_FALSE(p.even_separation());
}

TEST(GapProfile, DiskVanishesOnContactSet) {
  const GapProfile p = build_gap_profile(3, ContactSet::disk(0.1), ProfileVariant::PurePower);
  EXPECT_EQ(p.separation(0.05), 0.0);
  EXPECT_NEAR(p.separation(0.15), std::pow(0.05, 3), 1e-15);
  EXPECT_DOUBLE_EQ(p.contact_measure(), 0.2);
}

TEST(GapProfile, RejectsInvalidInput) {
  EXPECT_THROW(build_gap_profile(1, ContactSet::point(), ProfileVariant::PurePower),
               InvalidArgument);
  EXPECT_THROW(build_gap_profile(2, ContactSet::disk(0.3), ProfileVariant::PurePower,
                                 std::nullopt, 0.2),
               InvalidArgument);
  EXPECT_THROW(build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower,
                                 HConstants{2.0, 1.0, 1.0, 1.0}),
               InvalidArgument);
}

TEST(DistToSigma, PointAndDisk) {
  const GapProfile point = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  const GapProfile disk = build_gap_profile(2, ContactSet::disk(0.1), ProfileVariant::PurePower);
  const std::array<double, 1> origin{0.0}, far{0.3}, inside{0.05}, neg{-0.3};
  EXPECT_EQ(dist_to_sigma(origin, point), 0.0);
  EXPECT_DOUBLE_EQ(dist_to_sigma(far, point), 0.3);
  EXPECT_NEAR(dist_to_sigma(far, disk), 0.2, 1e-15);
  EXPECT_NEAR(dist_to_sigma(neg, disk), 0.2, 1e-15);
  EXPECT_EQ(dist_to_sigma(inside, disk), 0.0);
}

TEST(GapThickness, Examples) {
  const GapProfile p2 = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  EXPECT_DOUBLE_EQ(gap_thickness(0.0, p2, 0.01), 0.01);
  EXPECT_NEAR(gap_thickness(0.1, p2, 0.01), 0.02, 1e-15);
  const GapProfile t4 = build_gap_profile(4, ContactSet::point(), ProfileVariant::Tilted);
  EXPECT_NEAR(gap_thickness(0.1, t4, 1e-3), 1.11e-3, 1e-15);
}

TEST(HConditions, PurePowerPassesAll) {
  const HReport r =
      verify_H_conditions(build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower));
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(r[i].pass) << r[i].name;
  EXPECT_TRUE(r.admissible());
}

TEST(HConditions, TiltedFailsOnlyH5) {
  const HReport r =
      verify_H_conditions(build_gap_profile(4, ContactSet::point(), ProfileVariant::Tilted));
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(r[i].pass) << r[i].name;
  EXPECT_FALSE(r[4].pass);
  EXPECT_TRUE(r.admissible());
}

TEST(HConditions, UndersizedKappa3FailsH3) {
  const GapProfile good = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  HConstants k = good.kappa();
  k.kappa3 *= 0.5;
  const HReport r = verify_H_conditions(good.with_kappa(k));
  EXPECT_FALSE(r[2].pass);
  EXPECT_LT(r[2].margin, 0.0);
  EXPECT_FALSE(r.admissible());
}

class MeshTest : public ::testing::Test {
 protected:
  static Mesh make(double eps, int q_v = 4) {
    const GapProfile p = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
    return generate_mesh(DomainSpec{2, 2.0, 1.0, eps}, p, GradingParams{q_v, 0.25, 0.1});
  }
};

TEST_F(MeshTest, LayersAndSpacingAtContact) {
  const Mesh coarse = make(1e-2, 2);
  EXPECT_GE(coarse.grading.layers, 2);
  const Mesh fine = make(1e-4);
  EXPECT_LE(1e-4 / fine.grading.layers, 5e-5);
  // Horizontal spacing follows eps^(1/m) = 1e-2 scaled by g_h.
  EXPECT_GT(fine.grading.center_spacing, 1e-4);
  EXPECT_LE(fine.grading.center_spacing, 1e-2);
}

TEST_F(MeshTest, CellsPositivelyOriented) {
  const Mesh mesh = make(1e-3);
  ASSERT_GT(mesh.num_cells(), 0u);
  ASSERT_EQ(mesh.regions.size(), mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) ASSERT_GT(mesh.signed_area(c), 0.0);
  bool has_outer = false, has_inclusion = false;
  for (const auto& e : mesh.boundary_edges) {
    has_outer |= e.tag == BoundaryTag::Outer;
    has_inclusion |= e.tag == BoundaryTag::Inclusion;
  }
  EXPECT_TRUE(has_outer);
  EXPECT_TRUE(has_inclusion);
}

TEST_F(MeshTest, BudgetIsEnforced) {
  EXPECT_THROW(make(1e-8), BudgetExceeded);
}

TEST_F(MeshTest, TextExportIsDeterministic) {
  std::ostringstream a, b;
  write_mesh_text(make(1e-2), a);
  write_mesh_text(make(1e-2), b);
  EXPECT_FALSE(a.str().empty());
  EXPECT_EQ(a.str(), b.str());
}

TEST(GapDomain, GraphsMatchProfileOnPatch) {
  const GapProfile p = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  const GapDomain d(DomainSpec{2, 2.0, 1.0, 1e-3}, p);
  EXPECT_NEAR(d.outer_graph(0.1), 0.0, 1e-15);
  EXPECT_NEAR(d.gap_thickness(0.1), 1e-3 + 0.01, 1e-12);
  EXPECT_TRUE(d.in_omega(Vec2(0.0, 5e-4)));
  EXPECT_FALSE(d.in_omega(Vec2(0.0, 1.0)));
}

}  // namespace
}  // namespace lamegap
