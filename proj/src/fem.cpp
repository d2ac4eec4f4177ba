#include "lamegap/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include "lamegap/errors.hpp"

namespace lamegap {

void ElasticConstants::validate(int n) const {
  if (!(mu > 0.0)) throw InvalidArgument("shear modulus mu must be positive");
  if (!(n * lambda + 2.0 * mu > 0.0)) throw InvalidArgument("n*lambda + 2*mu must be positive");
  if (delta0 > 0.0 && (delta0 > mu || n * lambda + 2.0 * mu > 1.0 / delta0)) {
    throw InvalidArgument("constants violate the ellipticity margin delta0");
  }
}

Eigen::MatrixXd lame_tensor_apply(const Eigen::MatrixXd& xi, const ElasticConstants& c) {
  if (xi.rows() != xi.cols()) throw InvalidArgument("strain must be square");
  const double scale = std::max(1.0, xi.cwiseAbs().maxCoeff());
  if ((xi - xi.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("lame_tensor_apply expects a symmetric matrix");
  }
  Eigen::MatrixXd out = 2.0 * c.mu * xi;
  out.diagonal().array() += c.lambda * xi.trace();
  return out;
}

TriangleRule triangle_rule(int degree) {
  TriangleRule r;
  auto sym3 = [&](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({b, a, a});
    r.points.push_back({a, b, a});
    r.points.push_back({a, a, b});
    for (int i = 0; i < 3; ++i) r.weights.push_back(w);
  };
  if (degree <= 1) {
    r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
    r.weights.push_back(1.0);
  } else if (degree == 2) {
    sym3(1.0 / 6.0, 1.0 / 3.0);
  } else if (degree <= 4) {
    sym3(0.445948490915965, 0.223381589678011);
    sym3(0.091576213509771, 0.109951743655322);
  } else if (degree == 5) {
    r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
    r.weights.push_back(0.225);
    sym3(0.470142064105115, 0.132394152788506);
    sym3(0.101286507323456, 0.125939180544827);
  } else {
    throw InvalidArgument("triangle quadrature implemented up to degree 5");
  }
  return r;
}

namespace {

struct CellGeometry {
  Vec2 p0;
  Eigen::Matrix2d jinv;        // maps x - p0 to (L1, L2)
  std::array<Vec2, 3> grad_l;  // gradients of barycentric coordinates
  double area = 0.0;
};

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  const auto& t = mesh.cells[static_cast<std::size_t>(cell)];
  CellGeometry g;
  g.p0 = mesh.vertices[t[0]];
  Eigen::Matrix2d j;
  j.col(0) = mesh.vertices[t[1]] - g.p0;
  j.col(1) = mesh.vertices[t[2]] - g.p0;
  g.area = 0.5 * j.determinant();
  g.jinv = j.inverse();
  g.grad_l[1] = g.jinv.row(0).transpose();
  g.grad_l[2] = g.jinv.row(1).transpose();
  g.grad_l[0] = -(g.grad_l[1] + g.grad_l[2]);
  return g;
}

std::array<double, 3> barycentric(const CellGeometry& g, const Vec2& x) {
  const Vec2 l = g.jinv * (x - g.p0);
  return {1.0 - l[0] - l[1], l[0], l[1]};
}

// Shape values and gradients at barycentric point l.
void shape(int order, const CellGeometry& g, const std::array<double, 3>& l,
           std::array<double, 6>& n, std::array<Vec2, 6>& dn) {
  if (order == 1) {
    for (int i = 0; i < 3; ++i) {
      n[i] = l[i];
      dn[i] = g.grad_l[i];
    }
    return;
  }
  for (int i = 0; i < 3; ++i) {
    n[i] = l[i] * (2.0 * l[i] - 1.0);
    dn[i] = (4.0 * l[i] - 1.0) * g.grad_l[i];
  }
  for (int e = 0; e < 3; ++e) {
    const int a = e, b = (e + 1) % 3;
    n[3 + e] = 4.0 * l[a] * l[b];
    dn[3 + e] = 4.0 * (l[b] * g.grad_l[a] + l[a] * g.grad_l[b]);
  }
}

Eigen::Matrix3d voigt(const ElasticConstants& c) {
  Eigen::Matrix3d d;
  d << c.lambda + 2 * c.mu, c.lambda, 0, c.lambda, c.lambda + 2 * c.mu, 0, 0, 0, c.mu;
  return d;
}

bool omega_cell(const Mesh& m, int cell) {
  return m.regions[static_cast<std::size_t>(cell)] != Region::Inclusion;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeSpace

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, int order, CellSelection selection)
    : mesh_(std::move(mesh)), order_(order), selection_(selection) {
  if (!mesh_) throw InvalidArgument("FeSpace needs a mesh");
  if (order_ != 1 && order_ != 2) throw InvalidArgument("element order must be 1 or 2");
  const Mesh& m = *mesh_;
  const int nc = static_cast<int>(m.num_cells());
  cell_slot_.assign(static_cast<std::size_t>(nc), -1);
  for (int c = 0; c < nc; ++c) {
    if (selection_ == CellSelection::Whole || omega_cell(m, c)) {
      cell_slot_[static_cast<std::size_t>(c)] = static_cast<int>(active_.size());
      active_.push_back(c);
    }
  }
  // Vertex nodes in ascending vertex order, then edge midpoints in cell order.
  std::vector<int> vnode(m.num_vertices(), -1);
  for (int c : active_) {
    for (int v : m.cells[static_cast<std::size_t>(c)]) vnode[static_cast<std::size_t>(v)] = 0;
  }
  for (std::size_t v = 0; v < vnode.size(); ++v) {
    if (vnode[v] == 0) {
      vnode[v] = static_cast<int>(nodes_.size());
      nodes_.push_back(m.vertices[v]);
    }
  }
  std::map<std::pair<int, int>, int> edge_node;
  cell_dofs_.reserve(active_.size());
  for (int c : active_) {
    const auto& t = m.cells[static_cast<std::size_t>(c)];
    std::array<int, 6> ids{-1, -1, -1, -1, -1, -1};
    for (int i = 0; i < 3; ++i) ids[i] = vnode[static_cast<std::size_t>(t[i])];
    if (order_ == 2) {
      for (int e = 0; e < 3; ++e) {
        const int a = t[e], b = t[(e + 1) % 3];
        const auto key = std::minmax(a, b);
        auto [it, fresh] = edge_node.try_emplace({key.first, key.second}, 0);
        if (fresh) {
          it->second = static_cast<int>(nodes_.size());
          nodes_.push_back(0.5 * (m.vertices[a] + m.vertices[b]));
        }
        ids[3 + e] = it->second;
      }
    }
    cell_dofs_.push_back(ids);
  }
  node_tags_.assign(nodes_.size(), 0);
  dirichlet_.assign(nodes_.size(), 0);
  for (const auto& e : m.boundary_edges) {
    const int tag = static_cast<int>(e.tag);
    const bool fixed = e.tag == BoundaryTag::Outer || selection_ == CellSelection::Omega;
    std::vector<int> carried;
    for (int v : e.v) {
      const int id = vnode[static_cast<std::size_t>(v)];
      if (id >= 0) carried.push_back(id);
    }
    if (order_ == 2) {
      const auto key = std::minmax(e.v[0], e.v[1]);
      auto it = edge_node.find({key.first, key.second});
      if (it != edge_node.end()) carried.push_back(it->second);
    }
    for (int id : carried) {
      node_tags_[static_cast<std::size_t>(id)] = tag;
      if (fixed) dirichlet_[static_cast<std::size_t>(id)] = 1;
    }
  }
  build_locator();
}

std::optional<std::array<int, 6>> FeSpace::cell_nodes(int mesh_cell) const {
  if (mesh_cell < 0 || mesh_cell >= static_cast<int>(cell_slot_.size())) return std::nullopt;
  const int slot = cell_slot_[static_cast<std::size_t>(mesh_cell)];
  if (slot < 0) return std::nullopt;
  return cell_dofs_[static_cast<std::size_t>(slot)];
}

void FeSpace::build_locator() {
  const Mesh& m = *mesh_;
  lo_ = Vec2::Constant(std::numeric_limits<double>::infinity());
  hi_ = -lo_;
  for (int c : active_) {
    for (int v : m.cells[static_cast<std::size_t>(c)]) {
      lo_ = lo_.cwiseMin(m.vertices[static_cast<std::size_t>(v)]);
      hi_ = hi_.cwiseMax(m.vertices[static_cast<std::size_t>(v)]);
    }
  }
  const int side = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(active_.size())) / 2),
                              1, 256);
  nx_ = ny_ = side;
  buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  const Vec2 span = (hi_ - lo_).cwiseMax(1e-300);
  auto index = [&](double v, double lo, double w, int n) {
    return std::clamp(static_cast<int>((v - lo) / w * n), 0, n - 1);
  };
  for (int c : active_) {
    Vec2 a = Vec2::Constant(std::numeric_limits<double>::infinity()), b = -a;
    for (int v : m.cells[static_cast<std::size_t>(c)]) {
      a = a.cwiseMin(m.vertices[static_cast<std::size_t>(v)]);
      b = b.cwiseMax(m.vertices[static_cast<std::size_t>(v)]);
    }
    const int i0 = index(a.x(), lo_.x(), span.x(), nx_), i1 = index(b.x(), lo_.x(), span.x(), nx_);
    const int j0 = index(a.y(), lo_.y(), span.y(), ny_), j1 = index(b.y(), lo_.y(), span.y(), ny_);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(c);
    }
  }
}

std::vector<int> FeSpace::cells_containing(const Vec2& x) const {
  std::vector<int> out;
  const Vec2 span = (hi_ - lo_).cwiseMax(1e-300);
  const double slack = 1e-12 * span.maxCoeff();
  if (x.x() < lo_.x() - slack || x.y() < lo_.y() - slack || x.x() > hi_.x() + slack ||
      x.y() > hi_.y() + slack) {
    return out;
  }
  const int i = std::clamp(static_cast<int>((x.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((x.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
  for (int c : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
    const auto g = cell_geometry(*mesh_, c);
    const auto l = barycentric(g, x);
    if (l[0] >= -1e-9 && l[1] >= -1e-9 && l[2] >= -1e-9) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DisplacementField

namespace {

void local_dofs(const DisplacementField& u, const std::array<int, 6>& ids, int np,
                Eigen::Matrix<double, 12, 1>& out) {
  out.setZero();
  for (int a = 0; a < np; ++a) {
    out[2 * a] = u.dofs[2 * ids[a]];
    out[2 * a + 1] = u.dofs[2 * ids[a] + 1];
  }
}

void eval_in_cell(const DisplacementField& u, int cell, const Vec2& x, Vec2& val, Mat2& grad) {
  const FeSpace& sp = *u.space;
  const auto ids = *sp.cell_nodes(cell);
  const auto g = cell_geometry(sp.mesh(), cell);
  const auto l = barycentric(g, x);
  std::array<double, 6> n{};
  std::array<Vec2, 6> dn{};
  shape(sp.order(), g, l, n, dn);
  val.setZero();
  grad.setZero();
  for (int a = 0; a < sp.nodes_per_cell(); ++a) {
    const Vec2 ua(u.dofs[2 * ids[a]], u.dofs[2 * ids[a] + 1]);
    val += n[a] * ua;
    grad += ua * dn[a].transpose();
  }
}

}  // namespace

Vec2 DisplacementField::value(const Vec2& x) const {
  const auto cells = space->cells_containing(x);
  if (cells.empty()) throw InvalidArgument("evaluation point lies outside the mesh");
  Vec2 acc = Vec2::Zero(), v;
  Mat2 g;
  for (int c : cells) {
    eval_in_cell(*this, c, x, v, g);
    acc += v;
  }
  return acc / static_cast<double>(cells.size());
}

Mat2 DisplacementField::gradient(const Vec2& x) const {
  const auto cells = space->cells_containing(x);
  if (cells.empty()) throw InvalidArgument("evaluation point lies outside the mesh");
  Mat2 acc = Mat2::Zero(), g;
  Vec2 v;
  for (int c : cells) {
    eval_in_cell(*this, c, x, v, g);
    acc += g;
  }
  return acc / static_cast<double>(cells.size());
}

Mat2 DisplacementField::strain(const Vec2& x) const {
  const Mat2 g = gradient(x);
  return 0.5 * (g + g.transpose());
}

DisplacementField interpolate(std::shared_ptr<const FeSpace> space, const VectorField& f) {
  DisplacementField u;
  u.dofs.resize(static_cast<Eigen::Index>(space->num_dofs()));
  for (std::size_t i = 0; i < space->num_nodes(); ++i) {
    const Vec2 v = f(space->nodes()[i]);
    u.dofs[2 * i] = v.x();
    u.dofs[2 * i + 1] = v.y();
  }
  u.space = std::move(space);
  return u;
}

DisplacementField combine(std::span<const double> weights,
                          std::span<const DisplacementField* const> fields) {
  if (weights.size() != fields.size() || fields.empty()) {
    throw InvalidArgument("combine needs one weight per field");
  }
  DisplacementField out;
  out.space = fields[0]->space;
  out.dofs = Eigen::VectorXd::Zero(fields[0]->dofs.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i]->space != out.space) throw InvalidArgument("combine: fields on different spaces");
    out.dofs += weights[i] * fields[i]->dofs;
    out.residual = std::max(out.residual, fields[i]->residual);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly and solves

SparseMatrix assemble_stiffness(const FeSpace& space, const ElasticConstants& matrix,
                                const ElasticConstants& inclusion, int quad_degree) {
  const Mesh& m = space.mesh();
  const auto rule = triangle_rule(quad_degree);
  const int np = space.nodes_per_cell();
  const int nd = 2 * np;
  const Eigen::Matrix3d d_matrix = voigt(matrix);
  const Eigen::Matrix3d d_inclusion = voigt(inclusion);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(space.active_cells().size() * static_cast<std::size_t>(nd * nd));
  Eigen::Matrix<double, 3, 12> b;
  Eigen::Matrix<double, 12, 12> ke;
  std::array<double, 6> n{};
  std::array<Vec2, 6> dn{};
  for (int c : space.active_cells()) {
    const auto g = cell_geometry(m, c);
    const auto ids = *space.cell_nodes(c);
    const Eigen::Matrix3d& d = omega_cell(m, c) ? d_matrix : d_inclusion;
    ke.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape(space.order(), g, rule.points[q], n, dn);
      b.setZero();
      for (int a = 0; a < np; ++a) {
        b(0, 2 * a) = dn[a].x();
        b(1, 2 * a + 1) = dn[a].y();
        b(2, 2 * a) = dn[a].y();
        b(2, 2 * a + 1) = dn[a].x();
      }
      ke.noalias() += (rule.weights[q] * g.area) * b.transpose() * d * b;
    }
    for (int i = 0; i < nd; ++i) {
      const int gi = 2 * ids[i / 2] + i % 2;
      for (int j = 0; j < nd; ++j) {
        trip.emplace_back(gi, 2 * ids[j / 2] + j % 2, ke(i, j));
      }
    }
  }
  const auto ndof = static_cast<Eigen::Index>(space.num_dofs());
  SparseMatrix k(ndof, ndof);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

struct DirichletSolver::Factorization {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  bool use_cg = false;
};

DirichletSolver::~DirichletSolver() = default;

DirichletSolver::DirichletSolver(std::shared_ptr<const FeSpace> space,
                                 const ElasticConstants& matrix, const ElasticConstants& inclusion,
                                 const SolverOptions& options)
    : space_(std::move(space)), options_(options) {
  matrix.validate();
  inclusion.validate();
  if (!(options_.tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  stiffness_ = assemble_stiffness(*space_, matrix, inclusion, options_.quad_degree);
  const std::size_t ndof = space_->num_dofs();
  free_index_.assign(ndof, -1);
  fixed_index_.assign(ndof, -1);
  int nf = 0, nb = 0, fixed_nodes = 0;
  for (std::size_t i = 0; i < space_->num_nodes(); ++i) {
    const bool fixed = space_->is_dirichlet(i);
    fixed_nodes += fixed ? 1 : 0;
    for (int c = 0; c < 2; ++c) {
      (fixed ? fixed_index_ : free_index_)[2 * i + static_cast<std::size_t>(c)] =
          fixed ? nb++ : nf++;
    }
  }
  if (fixed_nodes < 2) {
    throw SolverError("singular stiffness: Dirichlet data does not pin the rigid motions");
  }
  std::vector<Eigen::Triplet<double>> tff, tfb;
  for (int col = 0; col < stiffness_.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(stiffness_, col); it; ++it) {
      const int fr = free_index_[static_cast<std::size_t>(it.row())];
      if (fr < 0) continue;
      const int fc = free_index_[static_cast<std::size_t>(col)];
      if (fc >= 0) {
        tff.emplace_back(fr, fc, it.value());
      } else {
        tfb.emplace_back(fr, fixed_index_[static_cast<std::size_t>(col)], it.value());
      }
    }
  }
  k_ff_.resize(nf, nf);
  k_ff_.setFromTriplets(tff.begin(), tff.end());
  k_fb_.resize(nf, nb);
  k_fb_.setFromTriplets(tfb.begin(), tfb.end());

  fact_ = std::make_unique<Factorization>();
  if (nf == 0) {
    method_ = "none";
    return;
  }
  if (options_.linear_solver == LinearSolverKind::Direct) {
    fact_->ldlt.compute(k_ff_);
    bool ok = fact_->ldlt.info() == Eigen::Success;
    if (ok) {
      const auto& dv = fact_->ldlt.vectorD();
      ok = dv.minCoeff() > 0.0;
    }
    if (ok) {
      method_ = "ldlt";
      return;
    }
  }
  fact_->use_cg = true;
  fact_->cg.setTolerance(options_.tol);
  fact_->cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * static_cast<Eigen::Index>(nf)));
  fact_->cg.compute(k_ff_);
  if (fact_->cg.info() != Eigen::Success) throw SolverError("stiffness preconditioner setup failed");
  method_ = "cg";
}

DisplacementField DirichletSolver::solve(
    const std::function<Vec2(const Vec2&, BoundaryTag)>& g) const {
  const FeSpace& sp = *space_;
  Eigen::VectorXd ub = Eigen::VectorXd::Zero(k_fb_.cols());
  for (std::size_t i = 0; i < sp.num_nodes(); ++i) {
    if (!sp.is_dirichlet(i)) continue;
    const Vec2 v = g(sp.nodes()[i], static_cast<BoundaryTag>(sp.node_tag(i)));
    ub[fixed_index_[2 * i]] = v.x();
    ub[fixed_index_[2 * i + 1]] = v.y();
  }
  Eigen::VectorXd uf = Eigen::VectorXd::Zero(k_ff_.rows());
  double rel = 0.0;
  if (k_ff_.rows() > 0) {
    const Eigen::VectorXd rhs = -(k_fb_ * ub);
    const double bnorm = rhs.norm();
    if (bnorm > 0.0) {
      if (fact_->use_cg) {
        uf = fact_->cg.solve(rhs);
        if (fact_->cg.info() != Eigen::Success) {
          throw SolverError("conjugate gradient did not converge (error " +
                            std::to_string(fact_->cg.error()) + ")");
        }
      } else {
        uf = fact_->ldlt.solve(rhs);
      }
      Eigen::VectorXd r = rhs - k_ff_ * uf;
      rel = r.norm() / bnorm;
      for (int it = 0; it < 4 && rel > options_.tol && !fact_->use_cg; ++it) {
        uf += fact_->ldlt.solve(r);
        r = rhs - k_ff_ * uf;
        rel = r.norm() / bnorm;
      }
      if (!std::isfinite(rel)) throw SolverError("linear solve produced non-finite values");
    }
  }
  DisplacementField u;
  u.space = space_;
  u.residual = rel;
  u.dofs.resize(static_cast<Eigen::Index>(sp.num_dofs()));
  for (std::size_t d = 0; d < sp.num_dofs(); ++d) {
    u.dofs[static_cast<Eigen::Index>(d)] =
        free_index_[d] >= 0 ? uf[free_index_[d]] : ub[fixed_index_[d]];
  }
  return u;
}

DisplacementField DirichletSolver::solve(const VectorField& on_inclusion,
                                         const VectorField& on_outer) const {
  return solve([&](const Vec2& x, BoundaryTag tag) {
    return tag == BoundaryTag::Outer ? on_outer(x) : on_inclusion(x);
  });
}

DisplacementField assemble_solve(std::shared_ptr<const Mesh> mesh, const ElasticConstants& c,
                                 const VectorField& on_inclusion, const VectorField& on_outer,
                                 const SolverOptions& options) {
  auto space = std::make_shared<const FeSpace>(std::move(mesh), options.order, CellSelection::Omega);
  DirichletSolver solver(space, c, options);
  return solver.solve(on_inclusion, on_outer);
}

DisplacementField solve_high_contrast(std::shared_ptr<const Mesh> mesh, const ElasticConstants& c,
                                      const ContrastParams& contrast, const VectorField& phi,
                                      const SolverOptions& options) {
  if (!(contrast.contrast >= 1.0)) throw InvalidArgument("contrast multiplier must be >= 1");
  auto space = std::make_shared<const FeSpace>(std::move(mesh), options.order, CellSelection::Whole);
  DirichletSolver solver(space, c, contrast.scaled(), options);
  return solver.solve([&](const Vec2& x, BoundaryTag) { return phi(x); });
}

// ---------------------------------------------------------------------------
// Norms and bilinear forms over Omega

namespace {

template <typename Visit>
void for_omega_cells(const DisplacementField& u, const DisplacementField& v, Visit&& visit) {
  if (!u.space || !v.space) throw InvalidArgument("field without a space");
  if (u.space->mesh_ptr() != v.space->mesh_ptr()) {
    throw InvalidArgument("fields live on different meshes");
  }
  if (u.space->order() != v.space->order()) throw InvalidArgument("fields differ in order");
  const Mesh& m = u.space->mesh();
  for (int c = 0; c < static_cast<int>(m.num_cells()); ++c) {
    if (!omega_cell(m, c)) continue;
    auto iu = u.space->cell_nodes(c);
    auto iv = v.space->cell_nodes(c);
    if (!iu || !iv) throw InvalidArgument("Omega cell missing from a field's space");
    visit(c, *iu, *iv);
  }
}

}  // namespace

double energy_inner(const DisplacementField& u, const DisplacementField& v,
                    const ElasticConstants& c, int quad_degree) {
  const auto rule = triangle_rule(quad_degree);
  const Eigen::Matrix3d d = voigt(c);
  const int np = u.space->nodes_per_cell();
  const int order = u.space->order();
  double total = 0.0;
  Eigen::Matrix<double, 12, 1> lu, lv;
  Eigen::Matrix<double, 3, 12> b;
  std::array<double, 6> n{};
  std::array<Vec2, 6> dn{};
  for_omega_cells(u, v, [&](int cell, const std::array<int, 6>& iu, const std::array<int, 6>& iv) {
    const auto g = cell_geometry(u.space->mesh(), cell);
    local_dofs(u, iu, np, lu);
    local_dofs(v, iv, np, lv);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape(order, g, rule.points[q], n, dn);
      b.setZero();
      for (int a = 0; a < np; ++a) {
        b(0, 2 * a) = dn[a].x();
        b(1, 2 * a + 1) = dn[a].y();
        b(2, 2 * a) = dn[a].y();
        b(2, 2 * a + 1) = dn[a].x();
      }
      total += rule.weights[q] * g.area * (b * lu).dot(d * (b * lv));
    }
  });
  return total;
}

namespace {

double h1_impl(const DisplacementField& u, const DisplacementField* v, int quad_degree) {
  const auto rule = triangle_rule(quad_degree);
  const int np = u.space->nodes_per_cell();
  const int order = u.space->order();
  double total = 0.0;
  Eigen::Matrix<double, 12, 1> lu, lv;
  std::array<double, 6> n{};
  std::array<Vec2, 6> dn{};
  const DisplacementField& other = v ? *v : u;
  for_omega_cells(u, other, [&](int cell, const std::array<int, 6>& iu,
                                const std::array<int, 6>& iv) {
    const auto g = cell_geometry(u.space->mesh(), cell);
    local_dofs(u, iu, np, lu);
    if (v) {
      local_dofs(*v, iv, np, lv);
      lu -= lv;
    }
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      shape(order, g, rule.points[q], n, dn);
      Vec2 val = Vec2::Zero();
      Mat2 grad = Mat2::Zero();
      for (int a = 0; a < np; ++a) {
        const Vec2 ua(lu[2 * a], lu[2 * a + 1]);
        val += n[a] * ua;
        grad += ua * dn[a].transpose();
      }
      total += rule.weights[q] * g.area * (val.squaredNorm() + grad.squaredNorm());
    }
  });
  return std::sqrt(total);
}

}  // namespace

double h1_norm_omega(const DisplacementField& u, int quad_degree) {
  return h1_impl(u, nullptr, quad_degree);
}

double h1_difference_omega(const DisplacementField& u, const DisplacementField& v,
                           int quad_degree) {
  return h1_impl(u, &v, quad_degree);
}

// ---------------------------------------------------------------------------
// Probes

std::string to_string(Locus locus) {
  return locus == Locus::ShortestLine ? "shortest_line" : "cylinder_surface";
}

std::vector<Vec2> probe_points(const GapDomain& domain, Locus locus, int count) {
  if (count < 1) throw InvalidArgument("probe count must be positive");
  const GapProfile& p = domain.profile();
  double x1 = 0.0;
  if (locus == Locus::CylinderSurface) {
    x1 = std::pow(domain.eps(), 1.0 / p.m());
    if (!p.sigma().is_point()) x1 += p.sigma().radius;
  }
  const double bottom = domain.outer_graph(x1);
  const double top = domain.inclusion_graph(x1);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    pts.emplace_back(x1, bottom + (top - bottom) * i / (count + 1));
  }
  return pts;
}

double gradient_probe(const DisplacementField& u, std::span<const Vec2> points) {
  double best = 0.0;
  for (const Vec2& x : points) {
    if (u.space->cells_containing(x).empty()) {
      std::ostringstream os;
      os << "probe point (" << x.x() << ", " << x.y() << ") lies outside the mesh";
      throw InvalidArgument(os.str());
    }
    best = std::max(best, u.gradient(x).norm());
  }
  return best;
}

void write_probe_csv(const DisplacementField& u, std::span<const Vec2> points, std::ostream& out) {
  out.precision(12);
  out << "x1,x2,u1,u2,du1_dx1,du1_dx2,du2_dx1,du2_dx2\n";
  for (const Vec2& x : points) {
    const Vec2 v = u.value(x);
    const Mat2 g = u.gradient(x);
    out << x.x() << ',' << x.y() << ',' << v.x() << ',' << v.y() << ',' << g(0, 0) << ','
        << g(0, 1) << ',' << g(1, 0) << ',' << g(1, 1) << '\n';
  }
}

}  // namespace lamegap
