#include "lamegap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lamegap/errors.hpp"
#include "lamegap/rates.hpp"

namespace lamegap {

namespace {

constexpr double kRelTol = 1e-8;

void check_args(int k, int m, int n, double eps) {
  if (k < 0 || m < 2 || n < 2) throw InvalidArgument("gap integral needs k >= 0, m >= 2, n >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("gap integral needs 0 < eps < 1");
}

// Breakpoints on [0, L]: a geometric ladder by factors of 2 on both sides of s.
std::vector<double> panels(double s, double L) {
  std::vector<double> b{0.0};
  if (s >= L) {
    for (int j = 12; j >= 1; --j) b.push_back(L * std::ldexp(1.0, -j));
  } else {
    for (int j = 12; j >= 1; --j) b.push_back(s * std::ldexp(1.0, -j));
    for (double t = s; t < L; t *= 2.0) b.push_back(t);
  }
  b.push_back(L);
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

// Two Kronrod orders over the same panels; their difference is the error
// estimate (the built-in per-panel estimate is far too pessimistic here).
template <class F>
double integrate_panels(F f, double scale, double L) {
  using boost::math::quadrature::gauss_kronrod;
  const auto b = panels(scale, L);
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    lo += gauss_kronrod<double, 31>::integrate(f, b[i], b[i + 1], 5, 1e-11);
    hi += gauss_kronrod<double, 61>::integrate(f, b[i], b[i + 1], 5, 1e-11);
  }
  const double err = std::abs(hi - lo);
  if (!std::isfinite(hi) || err > kRelTol * std::abs(hi)) {
    throw Error("gap integral quadrature did not converge (difference " + std::to_string(err) +
                ")");
  }
  return hi;
}

}  // namespace

double sphere_measure(int n) {
  const double a = 0.5 * (n - 1);
  return 2.0 * std::pow(std::numbers::pi, a) / std::tgamma(a);
}

double ball_measure(int n) {
  const double a = 0.5 * (n - 1);
  return std::pow(std::numbers::pi, a) / std::tgamma(a + 1.0);
}

double gap_integral(int k, int m, int n, double eps, double R, ContactSet sigma) {
  check_args(k, m, n, eps);
  if (!(R > 0.0)) throw InvalidArgument("gap integral needs R > 0");
  if (!sigma.is_point()) return flat_contact_integral(k, m, n, eps, sigma.radius, R);
  const int p = n - 2 + k;
  auto f = [=](double r) { return std::pow(r, p) / (eps + std::pow(r, m)); };
  return sphere_measure(n) * integrate_panels(f, std::pow(eps, 1.0 / m), R);
}

double flat_contact_integral(int k, int m, int n, double eps, double r, double R) {
  check_args(k, m, n, eps);
  if (!(r > 0.0 && r < R)) throw InvalidArgument("flat contact integral needs 0 < r < R");
  auto f = [=](double s) {
    return std::pow(r + s, n - 2) * std::pow(s, k) / (eps + std::pow(s, m));
  };
  const double inner = k == 0 ? ball_measure(n) * std::pow(r, n - 1) / eps : 0.0;
  return inner + sphere_measure(n) * integrate_panels(f, std::pow(eps, 1.0 / m), R - r);
}

RatioReport verify_rate_equivalence(int k, int m, int n, std::span<const double> eps_list,
                                    double R, double spread_factor) {
  if (eps_list.empty()) throw InvalidArgument("empty eps list");
  const auto [lo, hi] = std::minmax_element(eps_list.begin(), eps_list.end());
  if (std::log10(*hi / *lo) < 3.0 - 1e-9) throw InvalidArgument("eps list must span 3 decades");
  RatioReport rep;
  rep.k = k;
  rep.m = m;
  rep.n = n;
  rep.spread_factor = spread_factor;
  const RateFunction rate = rho(k, n, m);
  double rmin = INFINITY, rmax = 0.0;
  for (double eps : eps_list) {
    RatioRow row;
    row.eps = eps;
    row.integral = gap_integral(k, m, n, eps, R);
    row.rate = rate(eps);
    row.ratio = row.integral / row.rate;
    rmin = std::min(rmin, row.ratio);
    rmax = std::max(rmax, row.ratio);
    rep.rows.push_back(row);
  }
  rep.spread = rmax / rmin;
  rep.pass = std::isfinite(rep.spread) && rep.spread < spread_factor;
  return rep;
}

}  // namespace lamegap
