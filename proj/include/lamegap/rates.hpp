#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

#include "lamegap/fem.hpp"
#include "lamegap/geometry.hpp"

namespace lamegap {

/// Exact rational number with positive denominator in lowest terms.
struct Rational {
  long num = 0;
  long den = 1;

  Rational() = default;
  Rational(long n, long d = 1);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator-(Rational a) { return {-a.num, a.den}; }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }
};

/// coefficient * eps^exponent * |ln eps|^log_power.
class RateFunction {
 public:
  enum class Kind { Power, Log, One };

  RateFunction() = default;
  RateFunction(Rational exponent, int log_power, double coefficient = 1.0);
  static RateFunction power(Rational exponent) { return {exponent, 0}; }
  static RateFunction log() { return {Rational(0), 1}; }
  static RateFunction one() { return {Rational(0), 0}; }

  const Rational& exponent() const { return exponent_; }
  int log_power() const { return log_power_; }
  double coefficient() const { return coefficient_; }
  /// Power when the eps exponent is nonzero, Log when only the log factor is, else One.
  Kind kind() const;
  bool log_corrected() const { return log_power_ != 0; }

  /// Throws InvalidArgument unless 0 < eps < 1.
  double operator()(double eps) const;
  std::string str() const;

  friend RateFunction operator*(const RateFunction& a, const RateFunction& b);
  friend RateFunction operator/(const RateFunction& a, const RateFunction& b);
  friend RateFunction operator*(double s, const RateFunction& a);
  friend bool operator==(const RateFunction&, const RateFunction&) = default;

 private:
  Rational exponent_{0};
  int log_power_ = 0;
  double coefficient_ = 1.0;
};

/// rho_i(n, m; eps): eps^((n+i-1)/m - 1) if m > n+i-1, |ln eps| if m = n+i-1, else 1.
RateFunction rho(int i, int n, int m);
double rho(int i, int n, int m, double eps);

enum class Parity { A1, A2, A3, None };
std::string to_string(Parity p);
Parity parse_parity(const std::string& s);

struct RhoAB {
  RateFunction a;
  RateFunction b;
};
/// rho_A = rho_k/rho_0 under A1 else 1/rho_0; rho_B = rho_{k+1}/rho_2 under A2 else 1/rho_2.
RhoAB rho_AB(Parity parity, int k, int n, int m);

/// Off-diagonal Gram scale: n = 2 gives |S| eps^(-1/m) + |ln eps|; n >= 3 adds
/// |S|^((n-2)/(n-1)) |ln eps| + 1 in place of the bare log.
double rho_offdiag(double eps, double sigma_area, int n, int m);

/// Four-term envelope at a gap point x' (contact set and n taken from the profile).
double upper_bound_thm11(std::span<const double> xp, const GapProfile& profile, double q_i,
                         double q_ii, double phi_trace, double phi_norm, double eps, double c);

/// Point-contact envelope under a parity class, as a function of |x'|.
double upper_bound_cor15(double x_norm, Parity parity, int k, double eta, double phi_norm, int n,
                         int m, double eps, double c);

/// Simplified envelope valid for k >= m - n and m > n + 1.
double upper_bound_simplified(double x_norm, int k, double eta, double phi_norm, int n, int m,
                              double eps, double c);

// ---------------------------------------------------------------------------
// Boundary data

enum class Preset {
  PhiOne,
  PhiTwo,
  PhiThree,
  PhiFour,
  PhiFive,
  PhiTildeOne,
  PhiTildeTwo,
  PhiTildeThree,
  CustomParity,
  ContactOrder,  // eta (sgn(x1) d^k, d^k) with d the distance to a flat contact disk
  Rigid,
  Zero,
  Generic,       // smooth datum without symmetry, phi(0) = 0
};
std::string to_string(Preset p);
Preset parse_preset(const std::string& s);

/// Dirichlet datum on dD in closed form (plane case; components depend on x1, Generic on x2 too).
struct BoundaryData {
  Preset preset = Preset::Zero;
  int k = 1;
  double eta = 1.0;
  Parity custom_parity = Parity::None;  // CustomParity only
  int alpha = 0;                        // Rigid only, 0-based
  double contact_radius = 0.0;          // ContactOrder only

  static BoundaryData phi_one(int k, double eta = 1.0) { return {Preset::PhiOne, k, eta}; }
  static BoundaryData phi_two() { return {Preset::PhiTwo, 1, 1.0}; }
  static BoundaryData phi_three(int k, double eta = 1.0) { return {Preset::PhiThree, k, eta}; }
  static BoundaryData phi_tilde_one(int k, double eta = 1.0) { return {Preset::PhiTildeOne, k, eta}; }
  static BoundaryData phi_tilde_two(int k, double eta = 1.0) { return {Preset::PhiTildeTwo, k, eta}; }
  static BoundaryData phi_tilde_three(int k, double eta = 1.0) {
    return {Preset::PhiTildeThree, k, eta};
  }
  static BoundaryData custom(Parity p, int k, double eta = 1.0) {
    return {Preset::CustomParity, k, eta, p};
  }
  static BoundaryData contact_order(int k, double radius, double eta = 1.0) {
    return {Preset::ContactOrder, k, eta, Parity::None, 0, radius};
  }
  static BoundaryData rigid(int alpha) { return {Preset::Rigid, 0, 1.0, Parity::None, alpha}; }
  static BoundaryData zero() { return {Preset::Zero, 0, 0.0}; }
  static BoundaryData generic() { return {Preset::Generic, 1, 1.0}; }

  Vec2 evaluate(const Vec2& x) const;
  VectorField field() const;
  /// Parity class of the components on the bottom graph.
  Parity parity() const;
  std::string name() const { return to_string(preset); }
  /// Max over sampled |x1| <= radius of max_i |phi^i| - eta |x1|^k (non-positive when the growth holds).
  double growth_margin(double radius, int samples = 200) const;
};

// ---------------------------------------------------------------------------
// Classification

enum class LocusKind { ShortestLine, CylinderSurface, Both, Undetermined };
std::string to_string(LocusKind l);

/// Locus where the point-contact envelope peaks, by parity class.
LocusKind locus_table(Parity parity, int n, int m, int k);

struct LowerBound {
  Locus locus = Locus::ShortestLine;
  RateFunction rate;  // includes eta; the bound is rate(eps) / C
  double value(double eps, double c) const { return rate(eps) / c; }
};

/// Lower-bound rate of a preset; throws HypothesisViolation naming the failed condition.
LowerBound lower_bound(Preset preset, int n, int m, int k, double eta);

/// eta rho_k / (eps rho_0): the shortest-line rate without hypothesis checks.
RateFunction shortest_line_rate(int n, int m, int k, double eta = 1.0);

struct Prediction {
  LocusKind locus = LocusKind::Undetermined;
  Parity parity = Parity::None;
  std::string regime;
  std::optional<LowerBound> lower;
  int n = 2, m = 2, k = 1;
  double eta = 1.0;

  /// Point-contact envelope at |x'| for the fitted constant C.
  double upper(double x_norm, double eps, double c, double phi_norm) const {
    return upper_bound_cor15(x_norm, parity, k, eta, phi_norm, n, m, eps, c);
  }
};

/// Throws HypothesisViolation when the preset needs a geometry the profile does not have.
Prediction classify(const BoundaryData& data, const GapProfile& profile, int n = 2);
std::string prediction_to_json(const Prediction& p);

}  // namespace lamegap
