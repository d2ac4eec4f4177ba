#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lamegap/errors.hpp"
#include "lamegap/fem.hpp"

namespace lamegap {
namespace {

std::shared_ptr<const Mesh> small_mesh(double eps = 1e-2) {
  const GapProfile p = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  return std::make_shared<const Mesh>(
      generate_mesh(DomainSpec{2, 2.0, 1.0, eps}, p, GradingParams{2, 0.5, 0.3}));
}

TEST(LameTensor, Examples) {
  const ElasticConstants c{1.0, 1.0};
  const Eigen::MatrixXd id = Eigen::Matrix2d::Identity();
  const Eigen::MatrixXd s = lame_tensor_apply(id, c);
  EXPECT_TRUE(s.isApprox(4.0 * id));
  EXPECT_DOUBLE_EQ((s.array() * id.array()).sum(), 8.0);
  EXPECT_TRUE(lame_tensor_apply(Eigen::Matrix2d::Zero(), c).isZero());
  Eigen::Matrix2d dev;
  dev << 1.0, 0.5, 0.5, -1.0;
  EXPECT_TRUE(lame_tensor_apply(dev, {7.3, 0.6}).isApprox(1.2 * dev));
}

TEST(LameTensor, RejectsNonSymmetric) {
  Eigen::Matrix2d x;
  x << 0.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(lame_tensor_apply(x, {}), InvalidArgument);
}

TEST(LameTensor, EllipticitySandwich) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 5.0);
  for (int draw = 0; draw < 5; ++draw) {
    const ElasticConstants c{pos(rng) - 0.5 * 0.05, pos(rng)};
    const double lo = std::min(2 * c.mu, 2 * c.lambda + 2 * c.mu);
    const double hi = std::max(2 * c.mu, 2 * c.lambda + 2 * c.mu);
    for (int i = 0; i < 1000; ++i) {
      Eigen::Matrix2d xi;
      xi << u(rng), u(rng), 0.0, u(rng);
      xi(1, 0) = xi(0, 1);
      const double q = (lame_tensor_apply(xi, c).array() * xi.array()).sum();
      const double n2 = xi.squaredNorm();
      ASSERT_GE(q, lo * n2 * (1 - 1e-12));
      ASSERT_LE(q, hi * n2 * (1 + 1e-12));
    }
  }
}

TEST(Fem, PatchTestReproducesAffineData) {
  auto mesh = small_mesh();
  const VectorField affine = [](const Vec2& x) {
    return Vec2(0.3 + 1.2 * x.x() - 0.7 * x.y(), -0.1 + 0.4 * x.x() + 0.9 * x.y());
  };
  const DisplacementField u = assemble_solve(mesh, {}, affine, affine);
  for (std::size_t i = 0; i < u.space->num_nodes(); ++i) {
    const Vec2 g = affine(u.space->nodes()[i]);
    ASSERT_NEAR(u.dofs[2 * i], g.x(), 1e-8);
    ASSERT_NEAR(u.dofs[2 * i + 1], g.y(), 1e-8);
  }
  const Mat2 e = u.strain(Vec2(0.0, 0.005));
  EXPECT_NEAR(e(0, 0), 1.2, 1e-8);
  EXPECT_NEAR(e(0, 1), -0.15, 1e-8);
  EXPECT_NEAR(e(1, 1), 0.9, 1e-8);
}

TEST(Fem, ZeroDataGivesZeroField) {
  auto mesh = small_mesh();
  const VectorField zero = [](const Vec2&) { return Vec2::Zero(); };
  const DisplacementField u = assemble_solve(mesh, {}, zero, zero);
  EXPECT_EQ(u.dofs.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Fem, StrainOfSimpleFields) {
  auto mesh = small_mesh();
  auto space = std::make_shared<const FeSpace>(mesh, 2, CellSelection::Omega);
  const Vec2 x(0.05, 0.004);
  const auto rot = interpolate(space, [](const Vec2& p) { return Vec2(p.y(), -p.x()); });
  EXPECT_LT(rot.strain(x).norm(), 1e-12);
  const auto stretch = interpolate(space, [](const Vec2& p) { return Vec2(p.x(), 0.0); });
  EXPECT_TRUE(stretch.strain(x).isApprox(Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix()));
  const auto constant = interpolate(space, [](const Vec2&) { return Vec2(2.0, -1.0); });
  EXPECT_LT(constant.strain(x).norm(), 1e-12);
}

TEST(Fem, EnergyInnerSymmetricAndRigidKernel) {
  auto mesh = small_mesh();
  auto space = std::make_shared<const FeSpace>(mesh, 2, CellSelection::Omega);
  const ElasticConstants c{2.0, 0.7};
  const auto rot = interpolate(space, [](const Vec2& p) { return Vec2(p.y(), -p.x()); });
  EXPECT_NEAR(energy_inner(rot, rot, c), 0.0, 1e-12);
  const auto a = interpolate(space, [](const Vec2& p) { return Vec2(p.x() * p.y(), p.x()); });
  const auto b = interpolate(space, [](const Vec2& p) { return Vec2(std::sin(p.x()), p.y() * p.y()); });
  const double ab = energy_inner(a, b, c), ba = energy_inner(b, a, c);
  EXPECT_NEAR(ab, ba, 1e-12 * std::abs(ab));
  EXPECT_GT(energy_inner(a, a, c), 0.0);
}

TEST(Fem, AuxiliarySolveHasPositiveEnergyAndExactTrace) {
  auto mesh = small_mesh();
  const VectorField e1 = [](const Vec2&) { return Vec2(1.0, 0.0); };
  const VectorField zero = [](const Vec2&) { return Vec2::Zero(); };
  const DisplacementField u = assemble_solve(mesh, {}, e1, zero);
  EXPECT_GT(energy_inner(u, u, {}), 0.0);
  for (std::size_t i = 0; i < u.space->num_nodes(); ++i) {
    if (u.space->node_tag(i) == static_cast<int>(BoundaryTag::Inclusion)) {
      ASSERT_DOUBLE_EQ(u.dofs[2 * i], 1.0);
    } else if (u.space->node_tag(i) == static_cast<int>(BoundaryTag::Outer)) {
      ASSERT_DOUBLE_EQ(u.dofs[2 * i], 0.0);
    }
  }
  EXPECT_LT(u.residual, 1e-10);
}

TEST(Fem, CgMatchesDirect) {
  auto mesh = small_mesh();
  const VectorField e1 = [](const Vec2&) { return Vec2(1.0, 0.0); };
  const VectorField zero = [](const Vec2&) { return Vec2::Zero(); };
  SolverOptions cg;
  cg.linear_solver = LinearSolverKind::ConjugateGradient;
  cg.tol = 1e-12;
  const DisplacementField a = assemble_solve(mesh, {}, e1, zero);
  const DisplacementField b = assemble_solve(mesh, {}, e1, zero, cg);
  EXPECT_LT((a.dofs - b.dofs).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Fem, GradientProbeOfRigidRotation) {
  auto mesh = small_mesh();
  auto space = std::make_shared<const FeSpace>(mesh, 2, CellSelection::Omega);
  const GapDomain domain(DomainSpec{2, 2.0, 1.0, 1e-2},
                         build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower));
  const auto rot = interpolate(space, [](const Vec2& p) { return Vec2(p.y(), -p.x()); });
  for (Locus l : {Locus::ShortestLine, Locus::CylinderSurface}) {
    const auto pts = probe_points(domain, l);
    EXPECT_EQ(pts.size(), 17u);
    EXPECT_NEAR(gradient_probe(rot, pts), std::sqrt(2.0), 1e-10);
  }
  const auto zero = interpolate(space, [](const Vec2&) { return Vec2::Zero(); });
  EXPECT_EQ(gradient_probe(zero, probe_points(domain, Locus::ShortestLine)), 0.0);
  std::ostringstream csv;
  write_probe_csv(rot, probe_points(domain, Locus::ShortestLine), csv);
  EXPECT_NE(csv.str().find("du1_dx1"), std::string::npos);
}

TEST(Fem, HighContrastRigidDatum) {
  auto mesh = small_mesh();
  const VectorField e1 = [](const Vec2&) { return Vec2(1.0, 0.0); };
  const DisplacementField u = solve_high_contrast(mesh, {}, ContrastParams{1.0, 1.0, 1e6}, e1);
  EXPECT_LT((u.value(Vec2(0.0, 0.005)) - Vec2(1.0, 0.0)).norm(), 1e-6);
  EXPECT_LT((u.value(Vec2(0.0, 1.0)) - Vec2(1.0, 0.0)).norm(), 1e-6);
}

}  // namespace
}  // namespace lamegap
