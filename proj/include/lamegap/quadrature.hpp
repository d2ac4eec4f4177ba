#pragma once

#include <span>
#include <vector>

#include "lamegap/geometry.hpp"

namespace lamegap {

/// Surface measure of the unit (n-2)-sphere: 2, 2 pi, 4 pi for n = 2, 3, 4.
double sphere_measure(int n);
/// Volume of the (n-1)-dimensional unit ball.
double ball_measure(int n);

/// Integral over B'_R of |x'|^k / (eps + |x'|^m), reduced to a radial integral and
/// evaluated with Gauss-Kronrod panels graded about r = eps^(1/m). A Disk contact
/// set delegates to flat_contact_integral with d(x') = |x'| - r outside the disk.
/// Throws Error when the estimated relative error exceeds 1e-8.
double gap_integral(int k, int m, int n, double eps, double R, ContactSet sigma = ContactSet::point());

/// Integral over B'_R of d^k / (eps + d^m) with d the distance to the disk B'_r:
/// the disk contributes |B'_r| / eps when k = 0 (and nothing for k > 0) plus
/// c_n int_0^{R-r} (r+s)^(n-2) s^k / (eps + s^m) ds.
double flat_contact_integral(int k, int m, int n, double eps, double r, double R);

struct RatioRow {
  double eps = 0.0;
  double integral = 0.0;
  double rate = 0.0;
  double ratio = 0.0;
};

struct RatioReport {
  int k = 0, m = 0, n = 0;
  std::vector<RatioRow> rows;
  double spread = 0.0;  // max ratio / min ratio
  double spread_factor = 3.0;
  bool pass = false;
};

/// Ratio of gap_integral to rho_k over an eps list spanning at least 3 decades.
RatioReport verify_rate_equivalence(int k, int m, int n, std::span<const double> eps_list,
                                    double R = 1.0, double spread_factor = 3.0);

}  // namespace lamegap
