#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "lamegap/geometry.hpp"

namespace lamegap {

using Mat2 = Eigen::Matrix2d;
using VectorField = std::function<Vec2(const Vec2&)>;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Isotropic Lame constants. delta0 > 0 additionally enforces
/// delta0 <= mu and n*lambda + 2*mu <= 1/delta0.
struct ElasticConstants {
  double lambda = 1.0;
  double mu = 1.0;
  double delta0 = 0.0;

  void validate(int n = 2) const;
};

/// Inclusion constants (lambda1, mu1) scaled by `contrast`.
struct ContrastParams {
  double lambda1 = 1.0;
  double mu1 = 1.0;
  double contrast = 1.0;

  ElasticConstants scaled() const { return {contrast * lambda1, contrast * mu1, 0.0}; }
};

/// C xi = lambda tr(xi) I + 2 mu xi for a symmetric n x n matrix.
Eigen::MatrixXd lame_tensor_apply(const Eigen::MatrixXd& xi, const ElasticConstants& c);

enum class LinearSolverKind { Direct, ConjugateGradient };

struct SolverOptions {
  int order = 2;
  int quad_degree = 4;
  LinearSolverKind linear_solver = LinearSolverKind::Direct;
  double tol = 1e-10;
};

/// Quadrature on the reference triangle: barycentric points, weights summing to 1.
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};
TriangleRule triangle_rule(int degree);

enum class CellSelection { Omega, Whole };

/// Lagrange P1/P2 space on the cells of a mesh. With CellSelection::Omega only
/// the matrix cells are active and both boundaries are Dirichlet; with Whole
/// the inclusion is meshed too and only dD is Dirichlet.
class FeSpace {
 public:
  FeSpace(std::shared_ptr<const Mesh> mesh, int order, CellSelection selection);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int order() const { return order_; }
  CellSelection selection() const { return selection_; }
  int nodes_per_cell() const { return order_ == 2 ? 6 : 3; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_dofs() const { return 2 * nodes_.size(); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  /// 0 for interior nodes, else the BoundaryTag value of the carrying edge.
  int node_tag(std::size_t node) const { return node_tags_[node]; }
  bool is_dirichlet(std::size_t node) const { return dirichlet_[node] != 0; }

  /// Mesh cell ids that carry elements of this space, ascending.
  const std::vector<int>& active_cells() const { return active_; }
  /// Local node ids (v0, v1, v2, m01, m12, m20) of a mesh cell; nullopt if inactive.
  std::optional<std::array<int, 6>> cell_nodes(int mesh_cell) const;

  /// Active mesh cells whose closure contains x (within round-off).
  std::vector<int> cells_containing(const Vec2& x) const;

 private:
  void build_locator();

  std::shared_ptr<const Mesh> mesh_;
  int order_;
  CellSelection selection_;
  std::vector<Vec2> nodes_;
  std::vector<int> node_tags_;
  std::vector<char> dirichlet_;
  std::vector<int> active_;
  std::vector<int> cell_slot_;  // mesh cell -> row in cell_dofs_ or -1
  std::vector<std::array<int, 6>> cell_dofs_;
  // Bucket grid over the bounding box for point location.
  Vec2 lo_, hi_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Finite element displacement, dofs interleaved (u1, u2) per node.
struct DisplacementField {
  std::shared_ptr<const FeSpace> space;
  Eigen::VectorXd dofs;
  double residual = 0.0;  // relative residual of the linear solve that produced it

  Vec2 value(const Vec2& x) const;
  /// Jacobian (du_i/dx_j), averaged over the active cells containing x.
  Mat2 gradient(const Vec2& x) const;
  /// Symmetric part of the gradient.
  Mat2 strain(const Vec2& x) const;
};

/// Nodal interpolant of a closed-form field.
DisplacementField interpolate(std::shared_ptr<const FeSpace> space, const VectorField& f);

/// Linear combination sum_i w_i u_i over fields on one space.
DisplacementField combine(std::span<const double> weights,
                          std::span<const DisplacementField* const> fields);

/// Stiffness operator with Dirichlet nodes eliminated and factorized once;
/// every solve reuses the factorization.
class DirichletSolver {
 public:
  /// `inclusion` is the material of inclusion cells (used only by Whole spaces).
  DirichletSolver(std::shared_ptr<const FeSpace> space, const ElasticConstants& matrix,
                  const ElasticConstants& inclusion, const SolverOptions& options);
  DirichletSolver(std::shared_ptr<const FeSpace> space, const ElasticConstants& matrix,
                  const SolverOptions& options)
      : DirichletSolver(std::move(space), matrix, matrix, options) {}
  ~DirichletSolver();
  DirichletSolver(const DirichletSolver&) = delete;
  DirichletSolver& operator=(const DirichletSolver&) = delete;

  /// Minimizer of the energy with u = g(x, tag) on Dirichlet nodes.
  DisplacementField solve(const std::function<Vec2(const Vec2&, BoundaryTag)>& g) const;
  /// Convenience: `on_inclusion` on dD1 (Omega spaces only) and `on_outer` on dD.
  DisplacementField solve(const VectorField& on_inclusion, const VectorField& on_outer) const;

  const SparseMatrix& stiffness() const { return stiffness_; }
  const std::shared_ptr<const FeSpace>& space() const { return space_; }
  const std::string& method() const { return method_; }

 private:
  struct Factorization;
  std::shared_ptr<const FeSpace> space_;
  SolverOptions options_;
  SparseMatrix stiffness_;
  SparseMatrix k_ff_;
  SparseMatrix k_fb_;
  std::vector<int> free_index_;   // dof -> free slot or -1
  std::vector<int> fixed_index_;  // dof -> fixed slot or -1
  std::unique_ptr<Factorization> fact_;
  std::string method_;
};

/// Assembled global stiffness with a per-cell material choice.
SparseMatrix assemble_stiffness(const FeSpace& space, const ElasticConstants& matrix,
                                const ElasticConstants& inclusion, int quad_degree);

/// Galerkin solve on Omega with `on_inclusion` on dD1 and `on_outer` on dD.
DisplacementField assemble_solve(std::shared_ptr<const Mesh> mesh, const ElasticConstants& c,
                                 const VectorField& on_inclusion, const VectorField& on_outer,
                                 const SolverOptions& options = {});

/// Integral over Omega of (C e(u), e(v)). Fields may live on different spaces
/// over the same mesh; every Omega cell must be active in both.
double energy_inner(const DisplacementField& u, const DisplacementField& v,
                    const ElasticConstants& c, int quad_degree = 4);

/// Two-phase solve on the whole of D: matrix constants in Omega, scaled
/// inclusion constants in D1, phi on dD.
DisplacementField solve_high_contrast(std::shared_ptr<const Mesh> mesh, const ElasticConstants& c,
                                      const ContrastParams& contrast, const VectorField& phi,
                                      const SolverOptions& options = {});

/// H1(Omega) norm of u, and of u - v for fields on the same mesh.
double h1_norm_omega(const DisplacementField& u, int quad_degree = 4);
double h1_difference_omega(const DisplacementField& u, const DisplacementField& v,
                           int quad_degree = 4);

enum class Locus { ShortestLine, CylinderSurface };
std::string to_string(Locus locus);

/// Interior probe points of a locus: 17 by default, equally spaced across the gap
/// on the vertical line x1 = 0 (ShortestLine) or x1 = r + eps^(1/m) (CylinderSurface).
std::vector<Vec2> probe_points(const GapDomain& domain, Locus locus, int count = 17);

/// Max over the points of the Frobenius norm of grad u. Throws if a point is off the mesh.
double gradient_probe(const DisplacementField& u, std::span<const Vec2> points);

/// CSV rows x,y,u1,u2,du1_dx1,du1_dx2,du2_dx1,du2_dx2 at the given points.
void write_probe_csv(const DisplacementField& u, std::span<const Vec2> points, std::ostream& out);

}  // namespace lamegap
