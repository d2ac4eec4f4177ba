#include <cmath>
#include <memory>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lamegap/decomposition.hpp"
#include "lamegap/errors.hpp"

namespace lamegap {
namespace {

std::shared_ptr<const Mesh> small_mesh(double eps = 1e-2) {
  const GapProfile p = build_gap_profile(2, ContactSet::point(), ProfileVariant::PurePower);
  return std::make_shared<const Mesh>(
      generate_mesh(DomainSpec{2, 2.0, 1.0, eps}, p, GradingParams{2, 0.5, 0.3}));
}

TEST(RigidBasis, PlaneAndSpaceCounts) {
  const RigidBasis b2 = rigid_basis(2);
  EXPECT_EQ(b2.size(), 3);
  const Vec2 x(0.3, -0.2);
  EXPECT_EQ(b2.evaluate2(0, x), Vec2(1, 0));
  EXPECT_EQ(b2.evaluate2(1, x), Vec2(0, 1));
  EXPECT_EQ(b2.evaluate2(2, x), Vec2(-0.2, -0.3));
  const RigidBasis b3 = rigid_basis(3);
  EXPECT_EQ(b3.size(), 6);
  for (int a = 0; a < b3.size(); ++a) {
    const Eigen::MatrixXd j = b3.jacobian(a);
    EXPECT_TRUE((j + j.transpose()).isZero()) << a;
  }
}

class DecomposerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { dec_ = new Decomposer(small_mesh(), {}); }
  static void TearDownTestSuite() {
    delete dec_;
    dec_ = nullptr;
  }
  static Decomposer* dec_;
};
Decomposer* DecomposerTest::dec_ = nullptr;

TEST_F(DecomposerTest, GramSymmetricPositive) {
  const Eigen::MatrixXd& a = dec_->gram();
  EXPECT_LE((a - a.transpose()).norm(), 1e-10 * a.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST_F(DecomposerTest, ZeroDatum) {
  const auto r = dec_->decompose([](const Vec2&) { return Vec2::Zero(); });
  EXPECT_EQ(r.q.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(r.coeffs.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(r.u_rec.dofs.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST_F(DecomposerTest, RigidDataAreReproduced) {
  const RigidBasis basis = rigid_basis(2);
  for (int alpha = 0; alpha < 3; ++alpha) {
    const auto r = dec_->decompose([&](const Vec2& x) { return basis.evaluate2(alpha, x); });
    for (int b = 0; b < 3; ++b) EXPECT_NEAR(r.coeffs[b], b == alpha ? 1.0 : 0.0, 1e-8);
    const auto& nodes = r.u_rec.space->nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Vec2 psi = basis.evaluate2(alpha, nodes[i]);
      ASSERT_NEAR(r.u_rec.dofs[2 * i], psi.x(), 1e-6);
      ASSERT_NEAR(r.u_rec.dofs[2 * i + 1], psi.y(), 1e-6);
    }
  }
}

TEST_F(DecomposerTest, LinearInTheDatum) {
  const VectorField f = [](const Vec2& x) { return Vec2(x.x() * x.x(), x.x()); };
  const VectorField g = [](const Vec2& x) { return Vec2(2.5 * x.x() * x.x(), 2.5 * x.x()); };
  const auto a = dec_->decompose(f), b = dec_->decompose(g);
  EXPECT_TRUE(b.q.isApprox(2.5 * a.q, 1e-10));
  EXPECT_TRUE(b.coeffs.isApprox(2.5 * a.coeffs, 1e-10));
  EXPECT_LT(a.coeff_residual, 1e-10);
  // The trace on the inclusion is the rigid motion sum C^a psi_a.
  const RigidBasis basis = rigid_basis(2);
  const auto& nodes = a.u_rec.space->nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (a.u_rec.space->node_tag(i) != static_cast<int>(BoundaryTag::Inclusion)) continue;
    Vec2 rigid = Vec2::Zero();
    for (int al = 0; al < 3; ++al) rigid += a.coeffs[al] * basis.evaluate2(al, nodes[i]);
    ASSERT_NEAR(a.u_rec.dofs[2 * i], rigid.x(), 1e-10);
    ASSERT_NEAR(a.u_rec.dofs[2 * i + 1], rigid.y(), 1e-10);
  }
}

TEST(Coefficients, ZeroRhsAndSpdFloor) {
  const Eigen::Matrix2d a = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  const auto s = solve_coefficients(a, Eigen::Vector2d::Zero());
  EXPECT_TRUE(s.coeffs.isZero());
  Eigen::Matrix2d singular;
  singular << 1.0, 1.0, 1.0, 1.0;
  try {
    solve_coefficients(singular, Eigen::Vector2d(1.0, 0.0));
    FAIL() << "expected SpdFloorError";
  } catch (const SpdFloorError& e) {
    EXPECT_LT(e.smallest_eigenvalue(), 1e-12);
  }
}

TEST(QSequence, ZeroAndConverging) {
  const std::vector<double> eps{1e-2, 1e-3, 1e-4};
  const std::vector<Eigen::VectorXd> zero(3, Eigen::VectorXd::Zero(3));
  const auto z = analyze_q_sequence(eps, zero);
  EXPECT_TRUE(z.converging);
  EXPECT_TRUE(z.q_star.isZero());
  std::vector<Eigen::VectorXd> q;
  for (double e : eps) q.push_back(Eigen::VectorXd::Constant(3, 1.0 + std::sqrt(e)));
  const auto c = analyze_q_sequence(eps, q);
  EXPECT_TRUE(c.converging);
  EXPECT_NEAR(c.decay_slope, 0.5, 1e-2);
  std::vector<Eigen::VectorXd> bad{q[0], q[2], q[0]};
  EXPECT_FALSE(analyze_q_sequence(eps, bad).converging);
  EXPECT_THROW(analyze_q_sequence(std::vector<double>{1e-2, 1e-3}, zero), InvalidArgument);
}

TEST_F(DecomposerTest, ResultRecordJson) {
  const auto r = dec_->decompose([](const Vec2& x) { return Vec2(x.x(), 0.0); });
  const auto j = nlohmann::json::parse(
      result_to_json(r, ResultRecordMeta{1e-2, 2, 1, "generic", {{"shortest_line", 1.5}}}));
  EXPECT_EQ(j["schema"], kResultSchema);
  EXPECT_EQ(j["gram"].size(), 3u);
  EXPECT_EQ(j["Q"].size(), 3u);
  EXPECT_EQ(j["C"].size(), 3u);
}

}  // namespace
}  // namespace lamegap
