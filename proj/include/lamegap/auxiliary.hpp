#pragma once

#include <functional>
#include <iosfwd>
#include <span>

#include "lamegap/fem.hpp"
#include "lamegap/geometry.hpp"

namespace lamegap {

/// v(x) = (x2 - h(x1)) / delta(x1) with delta = eps + h1 - h, on the slab
/// |x1| < 2R, h <= x2 <= eps + h1. Throws InvalidArgument outside it.
double vbar(const Vec2& x, const GapProfile& profile, double eps);
Vec2 grad_vbar(const Vec2& x, const GapProfile& profile, double eps);

/// Cutoff equal to 1 for |x'| <= 1.5R and 0 for |x'| >= 2R, quintic in between.
double cutoff(double x_norm, double patch_radius);

/// Closed-form lifting fields used as analytic comparators.
struct AuxiliaryField {
  enum class Kind { VBar, UTildeAlpha, UTilde0 };

  Kind kind = Kind::VBar;
  int index = 0;  // alpha (0-based) for UTildeAlpha, component l (0-based) for UTilde0
  const GapProfile* profile = nullptr;
  double eps = 0.0;
  VectorField datum;  // phi, UTilde0 only

  /// VBar returns (v, 0). Outside the slab the affine fibre profile is clamped,
  /// which keeps the traces right on both graphs of the patch.
  Vec2 evaluate(const Vec2& x) const;
};

AuxiliaryField make_vbar(const GapProfile& profile, double eps);
AuxiliaryField make_u_tilde_alpha(int alpha, const GapProfile& profile, double eps);
AuxiliaryField make_u_tilde_0(int l, VectorField phi, const GapProfile& profile, double eps);

/// C |psi(x1, eps + h1(x1))| / (eps + d^m)^(1/m) + C norm.
double theorem21_bound(double x1, const std::function<double(const Vec2&)>& component,
                       double component_norm, const GapProfile& profile, double eps,
                       double c = 10.0);

/// Rows x,y,f1,f2 of a field along a point list.
void write_field_csv(const AuxiliaryField& f, std::span<const Vec2> points, std::ostream& out);

}  // namespace lamegap
