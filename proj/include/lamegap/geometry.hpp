#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lamegap {

using Vec2 = Eigen::Vector2d;

/// Contact set Sigma' of the limiting configuration: a single point or a flat disk.
struct ContactSet {
  enum class Kind { Point, Disk };
  Kind kind = Kind::Point;
  double radius = 0.0;

  static ContactSet point() { return {}; }
  static ContactSet disk(double r) { return {Kind::Disk, r}; }
  bool is_point() const { return kind == Kind::Point; }
};

/// Closed-form gap families. PurePower: h1 - h = a d^m. Tilted: h1 - h = a (1 + x1) d^m.
enum class ProfileVariant { PurePower, Tilted };

/// Constants kappa1..kappa4 of the admissibility conditions on h, h1.
struct HConstants {
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double kappa3 = 1.0;
  double kappa4 = 1.0;
};

/// The narrow-gap geometry near the contact set. The matrix side is flat
/// (h = 0) on the patch |x'| < 2R; the inclusion side is h1 = h + separation.
/// Points x' live in R^{n-1}.
class GapProfile {
 public:
  GapProfile(int m, ContactSet sigma, ProfileVariant variant, HConstants kappa,
             double patch_radius, double amplitude, int dim);

  int m() const { return m_; }
  int dim() const { return dim_; }
  const ContactSet& sigma() const { return sigma_; }
  ProfileVariant variant() const { return variant_; }
  const HConstants& kappa() const { return kappa_; }
  double patch_radius() const { return patch_radius_; }
  double amplitude() const { return amplitude_; }

  double distance(std::span<const double> xp) const;
  double separation(std::span<const double> xp) const;
  double lower(std::span<const double>) const { return 0.0; }
  double upper(std::span<const double> xp) const { return separation(xp); }
  /// Gradient of h1 with respect to x'; h has zero gradient on the patch.
  void upper_gradient(std::span<const double> xp, std::span<double> grad) const;

  // One-dimensional conveniences for the plane problem.
  double distance(double x1) const;
  double separation(double x1) const;
  double upper_derivative(double x1) const;

  /// h1 - h is even in every coordinate of x'.
  bool even_separation() const { return variant_ == ProfileVariant::PurePower; }
  /// (n-1)-dimensional measure of Sigma'.
  double contact_measure() const;

  GapProfile with_kappa(HConstants kappa) const;

 private:
  int m_;
  ContactSet sigma_;
  ProfileVariant variant_;
  HConstants kappa_;
  double patch_radius_;
  double amplitude_;
  int dim_;
};

/// Constants that the closed-form family provably satisfies on B'_{2R}.
HConstants admissible_constants(int m, ContactSet sigma, ProfileVariant variant,
                                double patch_radius, double amplitude = 1.0,
                                int dim = 2);

/// Validated constructor. Throws InvalidArgument for m < 2, kappa1 > kappa2,
/// or Disk(r) with r >= R.
GapProfile build_gap_profile(int m, ContactSet sigma, ProfileVariant variant,
                             std::optional<HConstants> kappa = std::nullopt,
                             double patch_radius = 0.2, double amplitude = 1.0,
                             int dim = 2);

double dist_to_sigma(std::span<const double> xp, const GapProfile& profile);
double gap_thickness(std::span<const double> xp, const GapProfile& profile, double eps);
double gap_thickness(double x1, const GapProfile& profile, double eps);

struct HCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // worst sampled margin; negative means violated
};

struct HReport {
  std::array<HCheck, 5> checks;
  /// H1-H4 all pass (H5 is an extra symmetry hypothesis).
  bool admissible() const;
  const HCheck& operator[](int i) const { return checks.at(static_cast<std::size_t>(i)); }
};

/// Sample-based check of H1-H5. Failures are report entries, never exceptions.
HReport verify_H_conditions(const GapProfile& profile, int sample_count = 400);

/// Placement of the plane domain D (flattened disk) and inclusion D1 = D1* + (0, eps).
struct DomainSpec {
  int n = 2;
  double outer_radius = 2.0;
  double inclusion_radius = 1.0;
  double eps = 1e-2;
};

/// Plane geometry of D, D1 and Omega = D \ closure(D1). Boundaries are star-shaped
/// curves about their centres; angles phi are measured from the downward
/// direction, increasing towards +x1.
class GapDomain {
 public:
  GapDomain(DomainSpec spec, GapProfile profile);

  const DomainSpec& spec() const { return spec_; }
  const GapProfile& profile() const { return profile_; }
  double eps() const { return spec_.eps; }

  Vec2 inclusion_center() const { return {0.0, spec_.inclusion_radius + spec_.eps}; }
  Vec2 outer_center() const { return {0.0, spec_.outer_radius}; }

  /// Lower boundary of D (graph x2 = b(x1)) for |x1| <= 3R; equals h on |x1| <= 2R.
  double outer_graph(double x1) const;
  /// Lower boundary of D1 (graph x2 = eps + b1(x1)) for |x1| <= 3R.
  double inclusion_graph(double x1) const;
  double gap_thickness(double x1) const { return inclusion_graph(x1) - outer_graph(x1); }

  Vec2 inclusion_boundary(double phi) const;
  Vec2 outer_boundary(double phi) const;
  bool inside_outer(const Vec2& x) const;
  bool inside_inclusion(const Vec2& x) const;
  bool in_omega(const Vec2& x) const { return inside_outer(x) && !inside_inclusion(x); }
  /// First point where the ray from an interior point leaves D.
  Vec2 exit_point(const Vec2& from, const Vec2& dir) const;

  double distance_to_outer(const Vec2& x) const;
  double distance_to_inclusion(const Vec2& x) const;

  /// Half-width of the blend zone end, 3R.
  double blend_end() const { return 3.0 * profile_.patch_radius(); }

 private:
  double inclusion_lower(double x1) const;  // unshifted b1
  double graph_radius(const Vec2& center, double radius, double phi, bool inclusion) const;
  void build_polylines();

  DomainSpec spec_;
  GapProfile profile_;
  std::vector<Vec2> outer_poly_;
  std::vector<Vec2> inclusion_poly_;
};

enum class BoundaryTag : std::uint8_t { Outer = 1, Inclusion = 2 };
enum class Region : std::uint8_t { Gap = 0, Bulk = 1, Inclusion = 2 };

struct BoundaryEdge {
  std::array<int, 2> v;
  BoundaryTag tag;
};

struct GradingParams {
  int q_v = 4;
  double g_h = 0.5;
  double bulk_size = -1.0;  // <= 0 selects R_D / 20
  int order = 2;
  double eps_floor = 1e-6;
  std::size_t max_vertices = 4'000'000;
};

/// What the generator actually did; kept with the mesh for diagnostics.
struct GradingRecord {
  int q_v = 0;
  double g_h = 0.0;
  double bulk_size = 0.0;
  int layers = 0;           // element layers across every fibre of Omega
  int inclusion_rings = 0;
  int fibers = 0;
  double eps = 0.0;
  double center_spacing = 0.0;  // horizontal spacing at x' = 0
};

/// Triangulation of D with Omega and D1 both meshed and conforming on the interface.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<Region> regions;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<double> fiber_parameter;  // per vertex: 1 on the inclusion side, 0 on dD
  GradingRecord grading;
  int order = 2;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_cells() const { return cells.size(); }
  double signed_area(std::size_t cell) const;
};

Mesh generate_mesh(const GapDomain& domain, const GradingParams& grading);
Mesh generate_mesh(const DomainSpec& spec, const GapProfile& profile,
                   const GradingParams& grading);

/// Plain-text dump: vertex table, cell table with region and order, tag table.
void write_mesh_text(const Mesh& mesh, std::ostream& out);

}  // namespace lamegap
