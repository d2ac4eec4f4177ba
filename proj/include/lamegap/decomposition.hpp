#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lamegap/fem.hpp"

namespace lamegap {

/// Rigid displacements: translations e_1..e_n, then rotations
/// x_k e_j - x_j e_k for j < k in lexicographic order.
class RigidBasis {
 public:
  explicit RigidBasis(int n);

  int dim() const { return n_; }
  int size() const { return n_ * (n_ + 1) / 2; }
  /// psi_alpha(x) for alpha in [0, size()).
  Eigen::VectorXd evaluate(int alpha, std::span<const double> x) const;
  /// Constant Jacobian of psi_alpha.
  Eigen::MatrixXd jacobian(int alpha) const;
  Vec2 evaluate2(int alpha, const Vec2& x) const;

 private:
  int n_;
  std::vector<std::pair<int, int>> rotations_;
};

RigidBasis rigid_basis(int n);

struct DecompositionResult {
  std::vector<DisplacementField> u_alpha;
  DisplacementField u0;
  Eigen::MatrixXd gram;
  Eigen::VectorXd q;
  Eigen::VectorXd coeffs;
  DisplacementField u_rec;
  double min_eigenvalue = 0.0;
  double spd_margin = 0.0;       // min eigenvalue over trace/dim
  double coeff_residual = 0.0;   // |a C - Q| / |Q|
  double q_translation = 0.0;    // max |Q_beta| over translations
  double q_rotation = 0.0;       // max |Q_beta| over rotations
  std::vector<double> solve_residuals;
};

/// Smallest admissible eigenvalue of the Gram matrix relative to trace/dim.
inline constexpr double kSpdFloor = 1e-12;

/// Solver of the free boundary problem on one mesh. The stiffness on Omega is
/// factorized once; the auxiliary fields u_alpha are computed at construction
/// and shared by every datum.
class Decomposer {
 public:
  Decomposer(std::shared_ptr<const Mesh> mesh, const ElasticConstants& c,
             const SolverOptions& options = {});

  const std::shared_ptr<const FeSpace>& space() const { return space_; }
  const std::vector<DisplacementField>& u_alpha() const { return u_alpha_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const ElasticConstants& constants() const { return constants_; }

  /// Auxiliary solve: psi_alpha on dD1 and 0 on dD.
  DisplacementField solve_auxiliary(int alpha) const;
  /// Data solve: 0 on dD1 and phi on dD.
  DisplacementField solve_data(const VectorField& phi) const;
  /// Full decomposition of the datum phi.
  DecompositionResult decompose(const VectorField& phi) const;

 private:
  std::shared_ptr<const FeSpace> space_;
  ElasticConstants constants_;
  SolverOptions options_;
  std::unique_ptr<DirichletSolver> solver_;
  RigidBasis basis_;
  std::vector<DisplacementField> u_alpha_;
  Eigen::MatrixXd gram_;
};

/// a_{ab} = int (C e(u_a), e(u_b)) and Q_b = -int (C e(u0), e(u_b)) over Omega.
void gram_and_q(std::span<const DisplacementField> u_alpha, const DisplacementField& u0,
                const ElasticConstants& c, Eigen::MatrixXd& gram, Eigen::VectorXd& q,
                int quad_degree = 4);

struct CoefficientSolve {
  Eigen::VectorXd coeffs;
  double min_eigenvalue = 0.0;
  double spd_margin = 0.0;
  double residual = 0.0;
};

/// Solves a C = Q after checking the SPD floor; throws SpdFloorError otherwise.
CoefficientSolve solve_coefficients(const Eigen::MatrixXd& gram, const Eigen::VectorXd& q);

/// u0 + sum_a C^a u_a.
DisplacementField reconstruct(std::span<const DisplacementField> u_alpha,
                              const DisplacementField& u0, const Eigen::VectorXd& coeffs);

struct QStarReport {
  Eigen::VectorXd q_star;                   // Q at the smallest eps
  std::vector<Eigen::VectorXd> differences; // |Q(eps_i) - Q(eps_{i+1})| per component
  std::vector<double> difference_norms;     // max-norm of each difference
  double decay_slope = 0.0;                 // fitted slope of log(diff) vs log(eps)
  bool converging = false;                  // difference norms strictly decrease
};

/// Convergence analysis of Q along a decreasing eps list (at least 3 entries).
QStarReport analyze_q_sequence(std::span<const double> eps,
                               std::span<const Eigen::VectorXd> q_values);

/// JSON record {schema, eps, m, k, preset, gram, Q, C, spd_margin, probe_gradients, residuals}.
struct ResultRecordMeta {
  double eps = 0.0;
  int m = 0;
  int k = 0;
  std::string preset;
  std::vector<std::pair<std::string, double>> probe_gradients;
};
inline constexpr const char* kResultSchema = "lamegap.decomposition/1";
std::string result_to_json(const DecompositionResult& r, const ResultRecordMeta& meta);

}  // namespace lamegap
