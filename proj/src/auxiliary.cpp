#include "lamegap/auxiliary.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "lamegap/decomposition.hpp"
#include "lamegap/errors.hpp"

namespace lamegap {

namespace {

double ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

void check_slab(const Vec2& x, const GapProfile& profile, double eps) {
  if (profile.dim() != 2) throw InvalidArgument("auxiliary fields are implemented for n = 2");
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  const double top = eps + profile.separation(x.x());
  const double tol = 1e-12 * (1.0 + top);
  if (!(std::abs(x.x()) < 2.0 * profile.patch_radius()) || x.y() < -tol || x.y() > top + tol) {
    throw InvalidArgument("point outside the gap slab");
  }
}

// Fibre parameter with x1 and x2 clamped into the slab.
double clamped_vbar(const Vec2& x, const GapProfile& profile, double eps) {
  const double lim = 2.0 * profile.patch_radius() * (1.0 - 1e-12);
  const double x1 = std::clamp(x.x(), -lim, lim);
  const double delta = eps + profile.separation(x1);
  return std::clamp(x.y() / delta, 0.0, 1.0);
}

}  // namespace

double vbar(const Vec2& x, const GapProfile& profile, double eps) {
  check_slab(x, profile, eps);
  return std::clamp(x.y() / (eps + profile.separation(x.x())), 0.0, 1.0);
}

Vec2 grad_vbar(const Vec2& x, const GapProfile& profile, double eps) {
  check_slab(x, profile, eps);
  const double delta = eps + profile.separation(x.x());
  return {-x.y() * profile.upper_derivative(x.x()) / (delta * delta), 1.0 / delta};
}

double cutoff(double x_norm, double patch_radius) {
  return ramp((2.0 * patch_radius - x_norm) / (0.5 * patch_radius));
}

Vec2 AuxiliaryField::evaluate(const Vec2& x) const {
  if (!profile) throw InvalidArgument("auxiliary field without a profile");
  const double v = clamped_vbar(x, *profile, eps);
  switch (kind) {
    case Kind::VBar:
      return {v, 0.0};
    case Kind::UTildeAlpha:
      return v * RigidBasis(2).evaluate2(index, x);
    case Kind::UTilde0: {
      if (!datum) throw InvalidArgument("UTilde0 needs a boundary datum");
      const double rho = cutoff(std::abs(x.x()), profile->patch_radius());
      // h = 0 on the patch, so the vertical pullback evaluates phi at (x1, 0).
      const double lifted = rho * datum({x.x(), 0.0})[index] + (1.0 - rho) * datum(x)[index];
      Vec2 out(0.0, 0.0);
      out[index] = lifted * (1.0 - v);
      return out;
    }
  }
  return {0.0, 0.0};
}

AuxiliaryField make_vbar(const GapProfile& profile, double eps) {
  return {AuxiliaryField::Kind::VBar, 0, &profile, eps, {}};
}

AuxiliaryField make_u_tilde_alpha(int alpha, const GapProfile& profile, double eps) {
  if (alpha < 0 || alpha > 2) throw InvalidArgument("alpha must be 0, 1 or 2");
  return {AuxiliaryField::Kind::UTildeAlpha, alpha, &profile, eps, {}};
}

AuxiliaryField make_u_tilde_0(int l, VectorField phi, const GapProfile& profile, double eps) {
  if (l < 0 || l > 1) throw InvalidArgument("component must be 0 or 1");
  return {AuxiliaryField::Kind::UTilde0, l, &profile, eps, std::move(phi)};
}

double theorem21_bound(double x1, const std::function<double(const Vec2&)>& component,
                       double component_norm, const GapProfile& profile, double eps, double c) {
  const double top = eps + profile.separation(x1);
  const double d = profile.distance(x1);
  const int m = profile.m();
  const double scale = std::pow(eps + std::pow(d, m), 1.0 / m);
  return c * std::abs(component({x1, top})) / scale + c * component_norm;
}

void write_field_csv(const AuxiliaryField& f, std::span<const Vec2> points, std::ostream& out) {
  out << "x,y,f1,f2\n";
  out.precision(12);
  for (const Vec2& p : points) {
    const Vec2 v = f.evaluate(p);
    out << p.x() << ',' << p.y() << ',' << v.x() << ',' << v.y() << '\n';
  }
}

}  // namespace lamegap
