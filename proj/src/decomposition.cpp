#include "lamegap/decomposition.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lamegap/errors.hpp"

namespace lamegap {

RigidBasis::RigidBasis(int n) : n_(n) {
  if (n < 2) throw InvalidArgument("rigid basis needs n >= 2");
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) rotations_.emplace_back(j, k);
  }
}

Eigen::VectorXd RigidBasis::evaluate(int alpha, std::span<const double> x) const {
  if (alpha < 0 || alpha >= size()) throw InvalidArgument("rigid basis index out of range");
  if (static_cast<int>(x.size()) != n_) throw InvalidArgument("point dimension mismatch");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_);
  if (alpha < n_) {
    v[alpha] = 1.0;
  } else {
    const auto [j, k] = rotations_[static_cast<std::size_t>(alpha - n_)];
    v[j] = x[static_cast<std::size_t>(k)];
    v[k] = -x[static_cast<std::size_t>(j)];
  }
  return v;
}

Eigen::MatrixXd RigidBasis::jacobian(int alpha) const {
  if (alpha < 0 || alpha >= size()) throw InvalidArgument("rigid basis index out of range");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_, n_);
  if (alpha >= n_) {
    const auto [j, k] = rotations_[static_cast<std::size_t>(alpha - n_)];
    g(j, k) = 1.0;
    g(k, j) = -1.0;
  }
  return g;
}

Vec2 RigidBasis::evaluate2(int alpha, const Vec2& x) const {
  const double xs[2] = {x.x(), x.y()};
  const Eigen::VectorXd v = evaluate(alpha, xs);
  return {v[0], v[1]};
}

RigidBasis rigid_basis(int n) { return RigidBasis(n); }

// ---------------------------------------------------------------------------

void gram_and_q(std::span<const DisplacementField> u_alpha, const DisplacementField& u0,
                const ElasticConstants& c, Eigen::MatrixXd& gram, Eigen::VectorXd& q,
                int quad_degree) {
  const auto n = static_cast<Eigen::Index>(u_alpha.size());
  gram.resize(n, n);
  q.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      gram(a, b) = energy_inner(u_alpha[a], u_alpha[b], c, quad_degree);
      gram(b, a) = gram(a, b);
    }
    q[a] = -energy_inner(u0, u_alpha[a], c, quad_degree);
  }
}

CoefficientSolve solve_coefficients(const Eigen::MatrixXd& gram, const Eigen::VectorXd& q) {
  if (gram.rows() != gram.cols() || gram.rows() != q.size()) {
    throw InvalidArgument("Gram matrix and Q vector sizes disagree");
  }
  CoefficientSolve out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double scale = gram.trace() / static_cast<double>(gram.rows());
  out.spd_margin = scale > 0.0 ? out.min_eigenvalue / scale : 0.0;
  if (!(scale > 0.0) || out.min_eigenvalue < kSpdFloor * scale) {
    throw SpdFloorError("Gram matrix below the SPD floor: smallest eigenvalue " +
                            std::to_string(out.min_eigenvalue) + ", trace/dim " +
                            std::to_string(scale) + " (mesh likely under-resolved)",
                        out.min_eigenvalue);
  }
  out.coeffs = gram.ldlt().solve(q);
  const double qn = q.norm();
  out.residual = qn > 0.0 ? (gram * out.coeffs - q).norm() / qn : 0.0;
  return out;
}

DisplacementField reconstruct(std::span<const DisplacementField> u_alpha,
                              const DisplacementField& u0, const Eigen::VectorXd& coeffs) {
  if (static_cast<Eigen::Index>(u_alpha.size()) != coeffs.size()) {
    throw InvalidArgument("one coefficient per auxiliary field required");
  }
  DisplacementField out = u0;
  for (std::size_t a = 0; a < u_alpha.size(); ++a) {
    if (u_alpha[a].space != u0.space) throw InvalidArgument("reconstruct: fields on different spaces");
    out.dofs += coeffs[static_cast<Eigen::Index>(a)] * u_alpha[a].dofs;
    out.residual = std::max(out.residual, u_alpha[a].residual);
  }
  return out;
}

// ---------------------------------------------------------------------------

Decomposer::Decomposer(std::shared_ptr<const Mesh> mesh, const ElasticConstants& c,
                       const SolverOptions& options)
    : constants_(c), options_(options), basis_(2) {
  space_ = std::make_shared<const FeSpace>(std::move(mesh), options.order, CellSelection::Omega);
  solver_ = std::make_unique<DirichletSolver>(space_, c, options);
  for (int a = 0; a < basis_.size(); ++a) u_alpha_.push_back(solve_auxiliary(a));
  const SparseMatrix& k = solver_->stiffness();
  const auto n = static_cast<Eigen::Index>(u_alpha_.size());
  gram_.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::VectorXd ka = k * u_alpha_[static_cast<std::size_t>(a)].dofs;
    for (Eigen::Index b = 0; b < n; ++b) gram_(a, b) = u_alpha_[static_cast<std::size_t>(b)].dofs.dot(ka);
  }
  gram_ = 0.5 * (gram_ + gram_.transpose()).eval();
}

DisplacementField Decomposer::solve_auxiliary(int alpha) const {
  const RigidBasis& psi = basis_;
  return solver_->solve([&](const Vec2& x) { return psi.evaluate2(alpha, x); },
                        [](const Vec2&) { return Vec2(0.0, 0.0); });
}

DisplacementField Decomposer::solve_data(const VectorField& phi) const {
  return solver_->solve([](const Vec2&) { return Vec2(0.0, 0.0); }, phi);
}

DecompositionResult Decomposer::decompose(const VectorField& phi) const {
  DecompositionResult r;
  r.u_alpha = u_alpha_;
  r.u0 = solve_data(phi);
  r.gram = gram_;
  const SparseMatrix& k = solver_->stiffness();
  const Eigen::VectorXd k0 = k * r.u0.dofs;
  r.q.resize(gram_.rows());
  for (Eigen::Index b = 0; b < gram_.rows(); ++b) {
    r.q[b] = -u_alpha_[static_cast<std::size_t>(b)].dofs.dot(k0);
  }
  const auto cs = solve_coefficients(r.gram, r.q);
  r.coeffs = cs.coeffs;
  r.min_eigenvalue = cs.min_eigenvalue;
  r.spd_margin = cs.spd_margin;
  r.coeff_residual = cs.residual;
  r.u_rec = reconstruct(r.u_alpha, r.u0, r.coeffs);
  const int n = basis_.dim();
  for (Eigen::Index b = 0; b < r.q.size(); ++b) {
    double& slot = b < n ? r.q_translation : r.q_rotation;
    slot = std::max(slot, std::abs(r.q[b]));
  }
  for (const auto& u : r.u_alpha) r.solve_residuals.push_back(u.residual);
  r.solve_residuals.push_back(r.u0.residual);
  return r;
}

// ---------------------------------------------------------------------------

QStarReport analyze_q_sequence(std::span<const double> eps,
                               std::span<const Eigen::VectorXd> q_values) {
  if (eps.size() < 3) throw InvalidArgument("Q* estimation needs at least 3 eps values");
  if (eps.size() != q_values.size()) throw InvalidArgument("one Q vector per eps required");
  for (std::size_t i = 1; i < eps.size(); ++i) {
    if (!(eps[i] < eps[i - 1])) throw InvalidArgument("eps list must be strictly decreasing");
  }
  QStarReport rep;
  rep.q_star = q_values.back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  bool all_zero = true;
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
    Eigen::VectorXd d = (q_values[i] - q_values[i + 1]).cwiseAbs();
    const double norm = d.size() ? d.maxCoeff() : 0.0;
    rep.differences.push_back(d);
    rep.difference_norms.push_back(norm);
    if (norm > 0.0) {
      all_zero = false;
      const double x = std::log(eps[i + 1]), y = std::log(norm);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++count;
    }
  }
  if (count >= 2) {
    const double den = count * sxx - sx * sx;
    rep.decay_slope = den != 0.0 ? (count * sxy - sx * sy) / den : 0.0;
  }
  if (all_zero) {
    rep.converging = true;
  } else {
    rep.converging = true;
    for (std::size_t i = 1; i < rep.difference_norms.size(); ++i) {
      if (!(rep.difference_norms[i] < rep.difference_norms[i - 1])) rep.converging = false;
    }
  }
  return rep;
}

std::string result_to_json(const DecompositionResult& r, const ResultRecordMeta& meta) {
  nlohmann::ordered_json j;
  j["schema"] = kResultSchema;
  j["eps"] = meta.eps;
  j["m"] = meta.m;
  j["k"] = meta.k;
  j["preset"] = meta.preset;
  nlohmann::ordered_json gram = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < r.gram.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < r.gram.cols(); ++k) row.push_back(r.gram(i, k));
    gram.push_back(row);
  }
  j["gram"] = gram;
  j["Q"] = std::vector<double>(r.q.data(), r.q.data() + r.q.size());
  j["C"] = std::vector<double>(r.coeffs.data(), r.coeffs.data() + r.coeffs.size());
  j["spd_margin"] = r.spd_margin;
  nlohmann::ordered_json probes = nlohmann::ordered_json::object();
  for (const auto& [name, value] : meta.probe_gradients) probes[name] = value;
  j["probe_gradients"] = probes;
  j["residuals"] = {{"coefficients", r.coeff_residual}, {"solves", r.solve_residuals}};
  return j.dump(2);
}

}  // namespace lamegap
