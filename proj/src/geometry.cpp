#include "lamegap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "lamegap/errors.hpp"

namespace lamegap {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

// C2 quintic ramp: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

// Deterministic sample points of the patch ball of radius `radius` in R^dim.
std::vector<std::vector<double>> sample_ball(int dim, double radius, int count,
                                             unsigned seed) {
  std::vector<std::vector<double>> pts;
  pts.reserve(static_cast<std::size_t>(count));
  if (dim == 1) {
    for (int i = 0; i < count; ++i) {
      double t = -1.0 + 2.0 * (i + 0.5) / count;
      pts.push_back({t * radius});
    }
    pts.push_back({0.0});
    return pts;
  }
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    std::vector<double> p(static_cast<std::size_t>(dim));
    double s = 0.0;
    for (auto& c : p) {
      c = gauss(rng);
      s += c * c;
    }
    double r = radius * std::pow(unif(rng), 1.0 / dim) / std::sqrt(s);
    for (auto& c : p) c *= r;
    pts.push_back(std::move(p));
  }
  pts.push_back(std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  return pts;
}

// Frobenius norm of the Hessian of the separation by central differences of the
// analytic gradient.
double hessian_norm(const GapProfile& p, std::span<const double> xp) {
  const int d = static_cast<int>(xp.size());
  const double step = 1e-6 * std::max(1.0, p.patch_radius());
  std::vector<double> xa(xp.begin(), xp.end()), xb(xp.begin(), xp.end());
  std::vector<double> ga(static_cast<std::size_t>(d)), gb(static_cast<std::size_t>(d));
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    xa[j] += step;
    xb[j] -= step;
    p.upper_gradient(xa, ga);
    p.upper_gradient(xb, gb);
    for (int i = 0; i < d; ++i) {
      double hij = (ga[i] - gb[i]) / (2.0 * step);
      s += hij * hij;
    }
    xa[j] = xp[j];
    xb[j] = xp[j];
  }
  return std::sqrt(s);
}

double c2_norm_estimate(const GapProfile& p, int count) {
  const int d = p.dim() - 1;
  auto pts = sample_ball(d, 2.0 * p.patch_radius(), count, 4242u);
  double sup0 = 0.0, sup1 = 0.0, sup2 = 0.0;
  std::vector<double> g(static_cast<std::size_t>(d));
  for (const auto& x : pts) {
    sup0 = std::max(sup0, std::abs(p.separation(x)));
    p.upper_gradient(x, g);
    sup1 = std::max(sup1, norm(g));
    sup2 = std::max(sup2, hessian_norm(p, x));
  }
  return sup0 + sup1 + sup2;
}

}  // namespace

// ---------------------------------------------------------------------------
// GapProfile

GapProfile::GapProfile(int m, ContactSet sigma, ProfileVariant variant, HConstants kappa,
                       double patch_radius, double amplitude, int dim)
    : m_(m),
      sigma_(sigma),
      variant_(variant),
      kappa_(kappa),
      patch_radius_(patch_radius),
      amplitude_(amplitude),
      dim_(dim) {}

double GapProfile::distance(std::span<const double> xp) const {
  double r = norm(xp);
  if (sigma_.is_point()) return r;
  return std::max(r - sigma_.radius, 0.0);
}

double GapProfile::separation(std::span<const double> xp) const {
  double d = distance(xp);
  double base = amplitude_ * std::pow(d, m_);
  if (variant_ == ProfileVariant::Tilted) base *= (1.0 + xp[0]);
  return base;
}

void GapProfile::upper_gradient(std::span<const double> xp, std::span<double> grad) const {
  const double r = norm(xp);
  const double d = distance(xp);
  std::fill(grad.begin(), grad.end(), 0.0);
  if (d <= 0.0 || r <= 0.0) return;
  const double radial = amplitude_ * m_ * std::pow(d, m_ - 1);
  const double tilt = variant_ == ProfileVariant::Tilted ? 1.0 + xp[0] : 1.0;
  for (std::size_t j = 0; j < xp.size(); ++j) grad[j] = tilt * radial * xp[j] / r;
  if (variant_ == ProfileVariant::Tilted) grad[0] += amplitude_ * std::pow(d, m_);
}

double GapProfile::distance(double x1) const { return distance(std::span<const double>(&x1, 1)); }
double GapProfile::separation(double x1) const {
  return separation(std::span<const double>(&x1, 1));
}
double GapProfile::upper_derivative(double x1) const {
  double g = 0.0;
  upper_gradient(std::span<const double>(&x1, 1), std::span<double>(&g, 1));
  return g;
}

double GapProfile::contact_measure() const {
  if (sigma_.is_point()) return 0.0;
  const double k = dim_ - 1;  // dimension of x'
  return std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0) *
         std::pow(sigma_.radius, k);
}

GapProfile GapProfile::with_kappa(HConstants kappa) const {
  GapProfile copy = *this;
  copy.kappa_ = kappa;
  return copy;
}

HConstants admissible_constants(int m, ContactSet sigma, ProfileVariant variant,
                                double patch_radius, double amplitude, int dim) {
  HConstants k;
  const double two_r = 2.0 * patch_radius;
  if (variant == ProfileVariant::PurePower) {
    k.kappa1 = amplitude;
    k.kappa2 = amplitude;
    k.kappa3 = amplitude * m;
  } else {
    k.kappa1 = amplitude * (1.0 - two_r);
    k.kappa2 = amplitude * (1.0 + two_r);
    k.kappa3 = amplitude * (two_r + (1.0 + two_r) * m);
  }
  GapProfile probe(m, sigma, variant, k, patch_radius, amplitude, dim);
  k.kappa4 = 1.05 * c2_norm_estimate(probe, 400) + 1e-12;
  return k;
}

GapProfile build_gap_profile(int m, ContactSet sigma, ProfileVariant variant,
                             std::optional<HConstants> kappa, double patch_radius,
                             double amplitude, int dim) {
  if (m < 2) throw InvalidArgument("convexity order m must be >= 2, got " + std::to_string(m));
  if (dim < 2) throw InvalidArgument("dimension n must be >= 2");
  if (!(patch_radius > 0.0)) throw InvalidArgument("patch radius R must be positive");
  if (!(amplitude > 0.0)) throw InvalidArgument("profile amplitude must be positive");
  if (!sigma.is_point() && !(sigma.radius > 0.0 && sigma.radius < patch_radius)) {
    throw InvalidArgument("contact disk radius must satisfy 0 < r < R");
  }
  if (variant == ProfileVariant::Tilted && 2.0 * patch_radius >= 1.0) {
    throw InvalidArgument("tilted profile requires 2R < 1 so that 1 + x1 > 0 on the patch");
  }
  HConstants k = kappa.value_or(admissible_constants(m, sigma, variant, patch_radius, amplitude, dim));
  if (k.kappa1 > k.kappa2) throw InvalidArgument("kappa1 must not exceed kappa2");
  if (k.kappa1 <= 0.0 || k.kappa3 <= 0.0 || k.kappa4 <= 0.0) {
    throw InvalidArgument("kappa constants must be positive");
  }
  return GapProfile(m, sigma, variant, k, patch_radius, amplitude, dim);
}

double dist_to_sigma(std::span<const double> xp, const GapProfile& profile) {
  return profile.distance(xp);
}

double gap_thickness(std::span<const double> xp, const GapProfile& profile, double eps) {
  return eps + profile.separation(xp) - profile.lower(xp);
}

double gap_thickness(double x1, const GapProfile& profile, double eps) {
  return gap_thickness(std::span<const double>(&x1, 1), profile, eps);
}

// ---------------------------------------------------------------------------
// H-condition report

bool HReport::admissible() const {
  return checks[0].pass && checks[1].pass && checks[2].pass && checks[3].pass;
}

HReport verify_H_conditions(const GapProfile& profile, int sample_count) {
  if (sample_count < 100) throw InvalidArgument("verify_H_conditions needs at least 100 samples");
  const int d = profile.dim() - 1;
  const int m = profile.m();
  const auto& kap = profile.kappa();
  const double R = profile.patch_radius();
  const auto pts = sample_ball(d, 2.0 * R, sample_count, 1234u);
  std::vector<double> g(static_cast<std::size_t>(d));

  HReport rep;
  rep.checks[0].name = "H1";
  rep.checks[1].name = "H2";
  rep.checks[2].name = "H3";
  rep.checks[3].name = "H4";
  rep.checks[4].name = "H5";

  // H1: h1 = h = 0 on Sigma'.
  {
    double worst = 0.0;
    if (profile.sigma().is_point()) {
      std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
      worst = std::abs(profile.separation(origin));
    } else {
      for (const auto& x : sample_ball(d, profile.sigma().radius, sample_count, 99u)) {
        worst = std::max(worst, std::abs(profile.separation(x)));
      }
    }
    rep.checks[0].margin = -worst;
    rep.checks[0].pass = worst <= 1e-14;
  }
  // H2 and H3 on B'_{2R} minus closure(Sigma').
  {
    double m2 = std::numeric_limits<double>::infinity();
    double m3 = std::numeric_limits<double>::infinity();
    for (const auto& x : pts) {
      const double dist = profile.distance(x);
      profile.upper_gradient(x, g);
      const double gn = norm(g);
      if (dist <= 1e-12) {
        m3 = std::min(m3, -gn);
        continue;
      }
      const double ratio = profile.separation(x) / std::pow(dist, m);
      m2 = std::min({m2, ratio - kap.kappa1, kap.kappa2 - ratio});
      m3 = std::min(m3, kap.kappa3 - gn / std::pow(dist, m - 1));
    }
    rep.checks[1].margin = m2;
    rep.checks[1].pass = m2 >= -1e-12 * std::max(1.0, kap.kappa2);
    rep.checks[2].margin = m3;
    rep.checks[2].pass = m3 >= -1e-12 * std::max(1.0, kap.kappa3);
  }
  // H4: C2 norm bound (Hoelder seminorm not sampled).
  {
    const double c2 = c2_norm_estimate(profile, sample_count);
    rep.checks[3].margin = kap.kappa4 - c2;
    rep.checks[3].pass = c2 <= kap.kappa4;
  }
  // H5: evenness in each coordinate on |x'| < R.
  {
    double worst = 0.0;
    for (const auto& x : sample_ball(d, R, sample_count, 77u)) {
      const double base = profile.separation(x);
      for (int j = 0; j < d; ++j) {
        auto y = x;
        y[static_cast<std::size_t>(j)] = -y[static_cast<std::size_t>(j)];
        worst = std::max(worst, std::abs(base - profile.separation(y)));
      }
    }
    rep.checks[4].margin = -worst;
    rep.checks[4].pass = worst <= 1e-14;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// GapDomain

GapDomain::GapDomain(DomainSpec spec, GapProfile profile)
    : spec_(spec), profile_(std::move(profile)) {
  if (spec_.n != 2) throw InvalidArgument("plane numerics require n = 2");
  if (profile_.dim() != 2) throw InvalidArgument("profile dimension must match n = 2");
  if (!(spec_.eps > 0.0)) throw InvalidArgument("gap width eps must be positive");
  const double r3 = blend_end();
  if (!(r3 < spec_.inclusion_radius && spec_.inclusion_radius < spec_.outer_radius)) {
    throw InvalidArgument("geometry requires 3R < inclusion radius < outer radius");
  }
  if (2.0 * spec_.inclusion_radius + spec_.eps >= 2.0 * spec_.outer_radius) {
    throw InvalidArgument("inclusion does not fit inside D");
  }
  // The gap must stay open on the graph zone and D1 must sit inside D.
  for (int i = 0; i <= 400; ++i) {
    const double x = -r3 + 2.0 * r3 * i / 400.0;
    if (inclusion_lower(x) >= spec_.inclusion_radius) {
      throw InvalidArgument("profile too large for the inclusion radius");
    }
    if (!(gap_thickness(x) > 0.0)) throw InvalidArgument("gap closes on the graph zone");
  }
  build_polylines();
  for (const auto& p : inclusion_poly_) {
    if (!inside_outer(p) && p.y() > spec_.eps * 0.5 + 1e-12) {
      throw InvalidArgument("inclusion boundary leaves the matrix domain D");
    }
  }
}

double GapDomain::outer_graph(double x1) const {
  const double R = profile_.patch_radius();
  const double rd = spec_.outer_radius;
  const double w = smooth_step((std::abs(x1) - 2.0 * R) / R);
  if (w == 0.0) return profile_.lower(std::span<const double>(&x1, 1));
  return w * (rd - std::sqrt(rd * rd - x1 * x1));
}

double GapDomain::inclusion_lower(double x1) const {
  const double R = profile_.patch_radius();
  const double r1 = spec_.inclusion_radius;
  const double w = smooth_step((std::abs(x1) - 2.0 * R) / R);
  const double graph = profile_.separation(x1);
  if (w == 0.0) return graph;
  return (1.0 - w) * graph + w * (r1 - std::sqrt(r1 * r1 - x1 * x1));
}

double GapDomain::inclusion_graph(double x1) const { return spec_.eps + inclusion_lower(x1); }

double GapDomain::graph_radius(const Vec2& center, double radius, double phi,
                               bool inclusion) const {
  // Solve center + rho (sin phi, -cos phi) on the lower graph by bisection.
  const double c = std::cos(phi), s = std::sin(phi);
  auto graph = [&](double x) { return inclusion ? inclusion_graph(x) : outer_graph(x); };
  auto f = [&](double rho) { return center.y() - rho * c - graph(rho * s); };
  double lo = 0.0, hi = radius / c;
  while (f(hi) > 0.0) hi *= 1.5;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {
double wrap_angle(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  phi = std::fmod(phi + std::numbers::pi, two_pi);
  if (phi < 0.0) phi += two_pi;
  return phi - std::numbers::pi;
}
}  // namespace

Vec2 GapDomain::inclusion_boundary(double phi) const {
  phi = wrap_angle(phi);
  const Vec2 c = inclusion_center();
  const double r1 = spec_.inclusion_radius;
  if (std::abs(phi) < std::asin(blend_end() / r1)) {
    if (phi == 0.0) return {0.0, inclusion_graph(0.0)};
    const double rho = graph_radius(c, r1, phi, true);
    const double x = rho * std::sin(phi);
    return {x, inclusion_graph(x)};
  }
  return c + r1 * Vec2(std::sin(phi), -std::cos(phi));
}

Vec2 GapDomain::outer_boundary(double phi) const {
  phi = wrap_angle(phi);
  const Vec2 c = outer_center();
  const double rd = spec_.outer_radius;
  if (std::abs(phi) < std::asin(blend_end() / rd)) {
    if (phi == 0.0) return {0.0, outer_graph(0.0)};
    const double rho = graph_radius(c, rd, phi, false);
    const double x = rho * std::sin(phi);
    return {x, outer_graph(x)};
  }
  return c + rd * Vec2(std::sin(phi), -std::cos(phi));
}

bool GapDomain::inside_outer(const Vec2& x) const {
  const Vec2 v = x - outer_center();
  const double phi = std::atan2(v.x(), -v.y());
  return v.norm() < (outer_boundary(phi) - outer_center()).norm();
}

bool GapDomain::inside_inclusion(const Vec2& x) const {
  const Vec2 v = x - inclusion_center();
  const double phi = std::atan2(v.x(), -v.y());
  return v.norm() < (inclusion_boundary(phi) - inclusion_center()).norm();
}

Vec2 GapDomain::exit_point(const Vec2& from, const Vec2& dir) const {
  if (dir.x() == 0.0 && dir.y() < 0.0 && std::abs(from.x()) <= blend_end()) {
    return {from.x(), outer_graph(from.x())};
  }
  const Vec2 u = dir.normalized();
  double lo = 0.0;
  double hi = 4.0 * spec_.outer_radius + (from - outer_center()).norm();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside_outer(from + mid * u) ? lo : hi) = mid;
  }
  const Vec2 hit = from + 0.5 * (lo + hi) * u;
  const Vec2 v = hit - outer_center();
  return outer_boundary(std::atan2(v.x(), -v.y()));
}

void GapDomain::build_polylines() {
  constexpr int kSamples = 4096;
  outer_poly_.clear();
  inclusion_poly_.clear();
  outer_poly_.reserve(kSamples);
  inclusion_poly_.reserve(kSamples);
  // Denser sampling near the bottom where the gap lives.
  for (int i = 0; i < kSamples; ++i) {
    const double t = -1.0 + 2.0 * i / kSamples;
    const double phi = std::numbers::pi * t * t * t;
    outer_poly_.push_back(outer_boundary(phi));
    inclusion_poly_.push_back(inclusion_boundary(phi));
  }
}

namespace {
double polyline_distance(const std::vector<Vec2>& poly, const Vec2& x) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (a + t * ab - x).norm());
  }
  return best;
}
}  // namespace

double GapDomain::distance_to_outer(const Vec2& x) const {
  return polyline_distance(outer_poly_, x);
}
double GapDomain::distance_to_inclusion(const Vec2& x) const {
  return polyline_distance(inclusion_poly_, x);
}

// ---------------------------------------------------------------------------
// Mesh

double Mesh::signed_area(std::size_t cell) const {
  const auto& c = cells[cell];
  const Vec2 e1 = vertices[c[1]] - vertices[c[0]];
  const Vec2 e2 = vertices[c[2]] - vertices[c[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

namespace {

// Anchor angles on the right half (phi in [0, pi]) following the target spacing.
std::vector<double> place_anchors(const GapDomain& dom, double sign, double bulk, double g_h) {
  const GapProfile& prof = dom.profile();
  const double floor_spacing = g_h * std::pow(dom.eps(), 1.0 / prof.m());
  const double cy = dom.inclusion_center().y();
  auto spacing = [&](const Vec2& p) {
    if (p.y() >= cy) return bulk;
    return std::min(bulk, std::max(g_h * prof.distance(p.x()), floor_spacing));
  };
  // Cumulative cell count N(phi) by adaptive marching.
  std::vector<double> phis{0.0};
  std::vector<double> counts{0.0};
  double phi = 0.0;
  double step = 1e-3 * std::min(1.0, floor_spacing);
  Vec2 p = dom.inclusion_boundary(0.0);
  const double target = 0.1;
  while (phi < std::numbers::pi) {
    double trial = std::min(step, std::numbers::pi - phi);
    Vec2 q = dom.inclusion_boundary(sign * (phi + trial));
    Vec2 mid = dom.inclusion_boundary(sign * (phi + 0.5 * trial));
    double dn = ((mid - p).norm() + (q - mid).norm()) / spacing(mid);
    if (dn > 2.0 * target && trial > 1e-14) {
      step = 0.5 * trial;
      continue;
    }
    phi += trial;
    p = q;
    phis.push_back(phi);
    counts.push_back(counts.back() + dn);
    if (dn < 0.5 * target) step = 2.0 * trial;
  }
  const double total = counts.back();
  const int cells = std::max(4, static_cast<int>(std::lround(total)));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cells) + 1);
  std::size_t k = 0;
  for (int i = 0; i <= cells; ++i) {
    const double want = total * i / cells;
    while (k + 1 < counts.size() && counts[k + 1] < want) ++k;
    if (i == cells) {
      out.push_back(std::numbers::pi);
      break;
    }
    if (i == 0) {
      out.push_back(0.0);
      continue;
    }
    const double c0 = counts[k], c1 = counts[std::min(k + 1, counts.size() - 1)];
    const double t = c1 > c0 ? (want - c0) / (c1 - c0) : 0.0;
    out.push_back(phis[k] + t * (phis[std::min(k + 1, phis.size() - 1)] - phis[k]));
  }
  return out;
}

}  // namespace

Mesh generate_mesh(const GapDomain& dom, const GradingParams& grading) {
  const double eps = dom.eps();
  if (eps < grading.eps_floor) {
    throw BudgetExceeded("eps below the configured floor " + std::to_string(grading.eps_floor));
  }
  if (grading.q_v < 2) throw InvalidArgument("vertical grading q_v must be >= 2");
  if (!(grading.g_h > 0.0 && grading.g_h <= 1.0)) {
    throw InvalidArgument("horizontal grading factor must lie in (0, 1]");
  }
  if (grading.order != 1 && grading.order != 2) throw InvalidArgument("order must be 1 or 2");
  const auto& spec = dom.spec();
  const GapProfile& prof = dom.profile();
  const double R = prof.patch_radius();
  const double bulk = grading.bulk_size > 0.0 ? grading.bulk_size : spec.outer_radius / 20.0;
  const Vec2 c1 = dom.inclusion_center();

  // Anchor angles around the inclusion, counter-clockwise from the bottom.
  const auto right = place_anchors(dom, 1.0, bulk, grading.g_h);
  std::vector<double> left;
  if (prof.even_separation()) {
    left = right;
  } else {
    left = place_anchors(dom, -1.0, bulk, grading.g_h);
  }
  std::vector<Vec2> anchors;
  const int n_right = static_cast<int>(right.size()) - 1;  // cells on the right half
  for (double phi : right) anchors.push_back(dom.inclusion_boundary(phi));
  for (int i = static_cast<int>(left.size()) - 2; i >= 1; --i) {
    Vec2 p = prof.even_separation() ? Vec2(-anchors[static_cast<std::size_t>(i)].x(),
                                           anchors[static_cast<std::size_t>(i)].y())
                                    : dom.inclusion_boundary(-left[static_cast<std::size_t>(i)]);
    anchors.push_back(p);
  }
  const int nfib = static_cast<int>(anchors.size());

  // Fibre end points on dD.
  std::vector<Vec2> ends(static_cast<std::size_t>(nfib));
  double longest = 0.0;
  for (int j = 0; j < nfib; ++j) {
    const Vec2& p = anchors[static_cast<std::size_t>(j)];
    const double ax = std::abs(p.x());
    const bool lower = p.y() < c1.y();
    Vec2 dir;
    if (lower && ax <= 2.0 * R) {
      dir = Vec2(0.0, -1.0);
    } else {
      const Vec2 radial = (p - c1).normalized();
      const double w = lower ? smooth_step((ax - 2.0 * R) / R) : 1.0;
      dir = ((1.0 - w) * Vec2(0.0, -1.0) + w * radial).normalized();
    }
    const Vec2 q = dom.exit_point(p, dir);
    ends[static_cast<std::size_t>(j)] = q;
    longest = std::max(longest, (q - p).norm());
  }
  if (prof.even_separation()) {
    for (int j = n_right + 1; j < nfib; ++j) {
      const Vec2& src = ends[static_cast<std::size_t>(nfib - j)];
      ends[static_cast<std::size_t>(j)] = Vec2(-src.x(), src.y());
    }
  }

  const int layers = std::max(grading.q_v, static_cast<int>(std::ceil(longest / bulk)));
  const int rings = std::max(2, static_cast<int>(std::ceil(spec.inclusion_radius / bulk)));
  const std::size_t est_vertices = static_cast<std::size_t>(nfib) *
                                       static_cast<std::size_t>(layers + rings) +
                                   1;
  const std::size_t est_nodes = grading.order == 2 ? 4 * est_vertices : est_vertices;
  if (est_nodes > grading.max_vertices) {
    throw BudgetExceeded("mesh would need about " + std::to_string(est_nodes) +
                         " nodes, above the budget of " + std::to_string(grading.max_vertices));
  }

  Mesh mesh;
  mesh.order = grading.order;
  auto vid = [&](int j, int i) { return j * (layers + 1) + i; };
  mesh.vertices.reserve(est_vertices);
  for (int j = 0; j < nfib; ++j) {
    const Vec2& p = anchors[static_cast<std::size_t>(j)];
    const Vec2& q = ends[static_cast<std::size_t>(j)];
    for (int i = 0; i <= layers; ++i) {
      const double s = static_cast<double>(i) / layers;
      Vec2 x = i == layers ? q : Vec2(p + s * (q - p));
      mesh.vertices.push_back(x);
      mesh.fiber_parameter.push_back(1.0 - s);
    }
  }
  // Inclusion interior rings l = 1..rings-1 and the centre.
  const int ring_base = static_cast<int>(mesh.vertices.size());
  auto rid = [&](int j, int l) {
    if (l == rings) return vid(j, 0);
    return ring_base + j * (rings - 1) + (l - 1);
  };
  for (int j = 0; j < nfib; ++j) {
    const Vec2& p = anchors[static_cast<std::size_t>(j)];
    for (int l = 1; l < rings; ++l) {
      mesh.vertices.push_back(c1 + (static_cast<double>(l) / rings) * (p - c1));
      mesh.fiber_parameter.push_back(1.0);
    }
  }
  const int center = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back(c1);
  mesh.fiber_parameter.push_back(1.0);

  auto add_quad = [&](int a, int b, int c, int d, bool right_side, Region reg) {
    if (right_side) {
      mesh.cells.push_back({a, d, b});
      mesh.cells.push_back({b, d, c});
    } else {
      mesh.cells.push_back({a, d, c});
      mesh.cells.push_back({a, c, b});
    }
    mesh.regions.push_back(reg);
    mesh.regions.push_back(reg);
  };

  for (int j = 0; j < nfib; ++j) {
    const int jn = (j + 1) % nfib;
    const bool right_side = j < n_right;
    const Vec2& pa = anchors[static_cast<std::size_t>(j)];
    const Vec2& pb = anchors[static_cast<std::size_t>(jn)];
    const bool gap = pa.y() < c1.y() && pb.y() < c1.y() && std::abs(pa.x()) <= 2.0 * R &&
                     std::abs(pb.x()) <= 2.0 * R;
    for (int i = 0; i < layers; ++i) {
      add_quad(vid(j, i), vid(jn, i), vid(jn, i + 1), vid(j, i + 1), right_side,
               gap ? Region::Gap : Region::Bulk);
    }
    // Inclusion: ring l -> l+1 moves outward, same local frame as Omega.
    for (int l = 1; l < rings; ++l) {
      add_quad(rid(j, l), rid(jn, l), rid(jn, l + 1), rid(j, l + 1), right_side,
               Region::Inclusion);
    }
    mesh.cells.push_back({center, rid(j, 1), rid(jn, 1)});
    mesh.regions.push_back(Region::Inclusion);
    mesh.boundary_edges.push_back({{vid(j, layers), vid(jn, layers)}, BoundaryTag::Outer});
    mesh.boundary_edges.push_back({{vid(j, 0), vid(jn, 0)}, BoundaryTag::Inclusion});
  }

  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& t = mesh.cells[c];
    double emax = 0.0;
    for (int k = 0; k < 3; ++k) {
      emax = std::max(emax, (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).norm());
    }
    const double area = mesh.signed_area(c);
    if (!(area > 1e-13 * emax * emax)) {
      const Vec2 g = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
      std::ostringstream os;
      os << "degenerate or inverted cell " << c << " near (" << g.x() << ", " << g.y()
         << "), area " << area;
      throw MeshQualityError(os.str(), g.x(), g.y());
    }
  }

  auto& rec = mesh.grading;
  rec.q_v = grading.q_v;
  rec.g_h = grading.g_h;
  rec.bulk_size = bulk;
  rec.layers = layers;
  rec.inclusion_rings = rings;
  rec.fibers = nfib;
  rec.eps = eps;
  rec.center_spacing = anchors.size() > 1 ? std::abs(anchors[1].x() - anchors[0].x()) : 0.0;
  return mesh;
}

Mesh generate_mesh(const DomainSpec& spec, const GapProfile& profile,
                   const GradingParams& grading) {
  return generate_mesh(GapDomain(spec, profile), grading);
}

void write_mesh_text(const Mesh& mesh, std::ostream& out) {
  out.precision(17);
  out << "# lamegap mesh v1\n";
  out << "vertices " << mesh.vertices.size() << "\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    out << i << ' ' << mesh.vertices[i].x() << ' ' << mesh.vertices[i].y() << '\n';
  }
  out << "cells " << mesh.cells.size() << " order " << mesh.order << "\n";
  for (std::size_t i = 0; i < mesh.cells.size(); ++i) {
    const auto& c = mesh.cells[i];
    const char* reg = mesh.regions[i] == Region::Gap    ? "gap"
                      : mesh.regions[i] == Region::Bulk ? "bulk"
                                                        : "inclusion";
    out << i << ' ' << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << reg << '\n';
  }
  out << "boundary_edges " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges) {
    out << e.v[0] << ' ' << e.v[1] << ' '
        << (e.tag == BoundaryTag::Outer ? "outer" : "inclusion") << '\n';
  }
}

}  // namespace lamegap
