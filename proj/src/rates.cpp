#include "lamegap/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lamegap/errors.hpp"

namespace lamegap {

Rational::Rational(long n, long d) {
  if (d == 0) throw InvalidArgument("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const long g = std::gcd(n, d);
  num = g ? n / g : 0;
  den = g ? d / g : 1;
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }

// ---------------------------------------------------------------------------

RateFunction::RateFunction(Rational exponent, int log_power, double coefficient)
    : exponent_(exponent), log_power_(log_power), coefficient_(coefficient) {}

RateFunction::Kind RateFunction::kind() const {
  if (exponent_.num != 0) return Kind::Power;
  return log_power_ != 0 ? Kind::Log : Kind::One;
}

double RateFunction::operator()(double eps) const {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("rate evaluated outside 0 < eps < 1");
  double v = coefficient_;
  if (exponent_.num != 0) v *= std::pow(eps, exponent_.value());
  if (log_power_ != 0) v *= std::pow(-std::log(eps), log_power_);
  return v;
}

std::string RateFunction::str() const {
  std::ostringstream os;
  bool any = false;
  if (coefficient_ != 1.0) {
    os << coefficient_;
    any = true;
  }
  if (log_power_ != 0) {
    if (any) os << "*";
    os << "|ln eps|";
    if (log_power_ != 1) os << "^" << log_power_;
    any = true;
  }
  if (exponent_.num != 0) {
    if (any) os << "*";
    os << "eps^(" << exponent_.str() << ")";
    any = true;
  }
  if (!any) os << "1";
  return os.str();
}

RateFunction operator*(const RateFunction& a, const RateFunction& b) {
  return {a.exponent_ + b.exponent_, a.log_power_ + b.log_power_, a.coefficient_ * b.coefficient_};
}

RateFunction operator/(const RateFunction& a, const RateFunction& b) {
  return {a.exponent_ - b.exponent_, a.log_power_ - b.log_power_, a.coefficient_ / b.coefficient_};
}

RateFunction operator*(double s, const RateFunction& a) {
  return {a.exponent_, a.log_power_, s * a.coefficient_};
}

// ---------------------------------------------------------------------------

RateFunction rho(int i, int n, int m) {
  if (n < 2 || m < 2 || i < 0) throw InvalidArgument("rho needs n >= 2, m >= 2, i >= 0");
  const int top = n + i - 1;
  if (m > top) return RateFunction::power(Rational(top, m) - Rational(1));
  if (m == top) return RateFunction::log();
  return RateFunction::one();
}

double rho(int i, int n, int m, double eps) { return rho(i, n, m)(eps); }

std::string to_string(Parity p) {
  switch (p) {
    case Parity::A1: return "A1";
    case Parity::A2: return "A2";
    case Parity::A3: return "A3";
    case Parity::None: return "None";
  }
  return "None";
}

Parity parse_parity(const std::string& s) {
  if (s == "A1") return Parity::A1;
  if (s == "A2") return Parity::A2;
  if (s == "A3") return Parity::A3;
  if (s == "None" || s == "none") return Parity::None;
  throw InvalidArgument("unknown parity class '" + s + "'");
}

RhoAB rho_AB(Parity parity, int k, int n, int m) {
  const RateFunction one = RateFunction::one();
  RhoAB r;
  r.a = parity == Parity::A1 ? rho(k, n, m) / rho(0, n, m) : one / rho(0, n, m);
  r.b = parity == Parity::A2 ? rho(k + 1, n, m) / rho(2, n, m) : one / rho(2, n, m);
  return r;
}

double rho_offdiag(double eps, double sigma_area, int n, int m) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("rho_offdiag needs 0 < eps < 1");
  if (n < 2 || m < 2) throw InvalidArgument("rho_offdiag needs n >= 2, m >= 2");
  const double le = -std::log(eps);
  const double flat = sigma_area * std::pow(eps, -1.0 / m);
  if (n == 2) return flat + le;
  return flat + std::pow(sigma_area, (n - 2.0) / (n - 1.0)) * le + 1.0;
}

double upper_bound_thm11(std::span<const double> xp, const GapProfile& profile, double q_i,
                         double q_ii, double phi_trace, double phi_norm, double eps, double c) {
  const int n = profile.dim();
  const int m = profile.m();
  const double d = profile.distance(xp);
  double xn = 0.0;
  for (double v : xp) xn += v * v;
  xn = std::sqrt(xn);
  const double s = profile.contact_measure();
  const double den = eps + std::pow(d, m);
  const double t1 = std::abs(q_i) / den * eps / (s + eps * rho(0, n, m, eps));
  const double t2 = std::abs(phi_trace) / den;
  const double t3 = std::abs(q_ii) / den * (eps + xn) * eps /
                    (std::pow(s, (n + 1.0) / (n - 1.0)) + eps * rho(2, n, m, eps));
  return c * (t1 + t2 + t3 + phi_norm);
}

double upper_bound_cor15(double x_norm, Parity parity, int k, double eta, double phi_norm, int n,
                         int m, double eps, double c) {
  const RhoAB ab = rho_AB(parity, k, n, m);
  const double den = eps + std::pow(x_norm, m);
  const double bracket = eta * ab.a(eps) + phi_norm / rho(0, n, m, eps) +
                         x_norm * (eta * ab.b(eps) + phi_norm / rho(2, n, m, eps));
  return c / den * bracket + eta * std::pow(x_norm, k) / den + c * phi_norm;
}

double upper_bound_simplified(double x_norm, int k, double eta, double phi_norm, int n, int m,
                              double eps, double c) {
  if (!(k >= m - n && m > n + 1)) {
    throw HypothesisViolation("k >= m-n, m > n+1",
                              "simplified envelope needs k >= m - n and m > n + 1");
  }
  return c * ((eta + phi_norm) / std::pow(eps, static_cast<double>(n) / m) +
              std::pow(x_norm, k) / (eps + std::pow(x_norm, m)));
}

// ---------------------------------------------------------------------------

namespace {

struct PresetName {
  Preset preset;
  const char* name;
};

constexpr PresetName kPresetNames[] = {
    {Preset::PhiOne, "phi_one"},
    {Preset::PhiTwo, "phi_two"},
    {Preset::PhiThree, "phi_three"},
    {Preset::PhiFour, "phi_four"},
    {Preset::PhiFive, "phi_five"},
    {Preset::PhiTildeOne, "phi_tilde_one"},
    {Preset::PhiTildeTwo, "phi_tilde_two"},
    {Preset::PhiTildeThree, "phi_tilde_three"},
    {Preset::CustomParity, "custom"},
    {Preset::ContactOrder, "contact_order"},
    {Preset::Rigid, "rigid"},
    {Preset::Zero, "zero"},
    {Preset::Generic, "generic"},
};

double even_power(double x, int k) { return std::pow(std::abs(x), k); }
double odd_power(double x, int k) {
  return k == 0 ? (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0)) : x * std::pow(std::abs(x), k - 1);
}

}  // namespace

std::string to_string(Preset p) {
  for (const auto& e : kPresetNames) {
    if (e.preset == p) return e.name;
  }
  return "unknown";
}

Preset parse_preset(const std::string& s) {
  for (const auto& e : kPresetNames) {
    if (s == e.name) return e.preset;
  }
  throw InvalidArgument("unknown boundary data preset '" + s + "'");
}

Vec2 BoundaryData::evaluate(const Vec2& x) const {
  const double x1 = x.x();
  switch (preset) {
    case Preset::PhiOne:
    case Preset::PhiThree:
    case Preset::PhiFour:
    case Preset::PhiFive: {
      const double v = eta * even_power(x1, k);
      return {v, v};
    }
    case Preset::PhiTwo:
      return {x1, x1};
    case Preset::PhiTildeOne:
    case Preset::PhiTildeTwo: {
      const double v = eta * odd_power(x1, k);
      return {v, v};
    }
    case Preset::PhiTildeThree:
      return {eta * odd_power(x1, k), 0.0};
    case Preset::CustomParity:
      switch (custom_parity) {
        case Parity::A1: return {eta * even_power(x1, k), eta * even_power(x1, k)};
        case Parity::A2: return {eta * odd_power(x1, k), eta * odd_power(x1, k)};
        case Parity::A3: return {eta * odd_power(x1, k), 0.0};
        case Parity::None: return {eta * even_power(x1, k), eta * odd_power(x1, k)};
      }
      break;
    case Preset::ContactOrder: {
      const double d = std::max(std::abs(x1) - contact_radius, 0.0);
      const double v = eta * std::pow(d, k);
      return {x1 < 0 ? -v : v, v};
    }
    case Preset::Rigid:
      switch (alpha) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {x.y(), -x1};
        default: throw InvalidArgument("rigid mode index must be 0, 1 or 2");
      }
    case Preset::Zero:
      return {0.0, 0.0};
    case Preset::Generic:
      return {std::sin(x1) + 0.5 * x1 * x1 + 0.3 * x.y() * x.y(), x1 * std::cos(2.0 * x1) + x.y()};
  }
  return {0.0, 0.0};
}

VectorField BoundaryData::field() const {
  return [copy = *this](const Vec2& x) { return copy.evaluate(x); };
}

Parity BoundaryData::parity() const {
  // Sampled on the bottom graph x2 = 0 near the origin.
  bool even[2] = {true, true}, odd[2] = {true, true}, zero[2] = {true, true};
  for (int i = 1; i <= 64; ++i) {
    const double t = 0.3 * i / 64.0;
    const Vec2 p = evaluate({t, 0.0}), q = evaluate({-t, 0.0});
    for (int c = 0; c < 2; ++c) {
      const double tol = 1e-12 * (1.0 + std::abs(p[c]) + std::abs(q[c]));
      if (std::abs(p[c] - q[c]) > tol) even[c] = false;
      if (std::abs(p[c] + q[c]) > tol) odd[c] = false;
      if (std::abs(p[c]) > tol || std::abs(q[c]) > tol) zero[c] = false;
    }
  }
  if (even[0] && even[1]) return Parity::A1;
  if (odd[0] && zero[1] && !zero[0]) return Parity::A3;
  if (odd[0] && odd[1]) return Parity::A2;
  return Parity::None;
}

double BoundaryData::growth_margin(double radius, int samples) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    const double x1 = -radius + 2.0 * radius * i / samples;
    const Vec2 v = evaluate({x1, 0.0});
    const double bound = eta * std::pow(std::abs(x1), k);
    worst = std::max(worst, v.cwiseAbs().maxCoeff() - bound);
  }
  return worst;
}

// ---------------------------------------------------------------------------

std::string to_string(LocusKind l) {
  switch (l) {
    case LocusKind::ShortestLine: return "shortest_line";
    case LocusKind::CylinderSurface: return "cylinder_surface";
    case LocusKind::Both: return "both";
    case LocusKind::Undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

// Rows are matched top to bottom; the first row whose predicate holds wins.
struct LocusRow {
  bool (*applies)(int n, int m, int k);
  LocusKind locus;
};

constexpr LocusRow kEvenTable[] = {
    {[](int n, int m, int) { return m < n; }, LocusKind::ShortestLine},
    {[](int n, int m, int k) { return m == n && k == 1; }, LocusKind::ShortestLine},
    {[](int n, int m, int k) { return m == n && k > 1; }, LocusKind::Both},
    {[](int n, int m, int k) { return m >= n + 1 && k < m - n + 1; }, LocusKind::Both},
    {[](int n, int m, int k) { return m >= n + 1 && k >= m - n + 1; }, LocusKind::CylinderSurface},
};

constexpr LocusRow kOddTable[] = {
    {[](int n, int m, int) { return m < n; }, LocusKind::ShortestLine},
    {[](int n, int m, int) { return m == n; }, LocusKind::Both},
    {[](int n, int m, int) { return m > n; }, LocusKind::CylinderSurface},
};

template <std::size_t N>
LocusKind lookup(const LocusRow (&table)[N], int n, int m, int k) {
  for (const auto& row : table) {
    if (row.applies(n, m, k)) return row.locus;
  }
  return LocusKind::Undetermined;
}

void require(bool ok, const std::string& what, const std::string& condition) {
  if (!ok) throw HypothesisViolation(condition, what + " requires " + condition);
}

}  // namespace

LocusKind locus_table(Parity parity, int n, int m, int k) {
  if (n < 2 || m < 1 || k < 1) throw InvalidArgument("locus table needs n >= 2, m >= 1, k >= 1");
  switch (parity) {
    case Parity::A1: return lookup(kEvenTable, n, m, k);
    case Parity::A2:
    case Parity::A3: return lookup(kOddTable, n, m, k);
    case Parity::None: break;
  }
  return LocusKind::Undetermined;
}

RateFunction shortest_line_rate(int n, int m, int k, double eta) {
  return eta * (rho(k, n, m) / (rho(0, n, m) * RateFunction::power(Rational(1))));
}

LowerBound lower_bound(Preset preset, int n, int m, int k, double eta) {
  const std::string name = to_string(preset);
  switch (preset) {
    case Preset::PhiOne:
      require(m >= n + 1, name, "m >= n+1");
      require(k >= 2 && k < m - n + 1, name, "2 <= k < m-n+1");
      break;
    case Preset::PhiTwo:
      require(m >= n, name, "m >= n");
      require(k == 1, name, "k = 1");
      break;
    case Preset::PhiThree:
      require(m == n, name, "m = n");
      require(k > 1, name, "k > 1");
      break;
    case Preset::PhiFour:
      require(m >= n - 1 && m < n, name, "n-1 <= m < n");
      break;
    case Preset::PhiFive:
      require(m < n - 1, name, "m < n-1");
      break;
    case Preset::PhiTildeOne:
      require(m > n, name, "m > n");
      require(k > m - n, name, "k > m-n");
      break;
    case Preset::PhiTildeTwo:
      require(m > n + 1, name, "m > n+1");
      require(k == m - n, name, "k = m-n");
      break;
    case Preset::PhiTildeThree:
      require(m > n, name, "m > n");
      require((k == 1 && m == n + 1) || k < m - n, name, "k = 1 with m = n+1, or k < m-n");
      break;
    default:
      throw HypothesisViolation("preset in Phi family", "no lower bound is known for preset " + name);
  }
  LowerBound lb;
  switch (preset) {
    case Preset::PhiTildeOne:
    case Preset::PhiTildeTwo:
      lb.locus = Locus::CylinderSurface;
      lb.rate = eta * (rho(k + 1, n, m) / rho(2, n, m) /
                       RateFunction::power(Rational(1) - Rational(1, m)));
      break;
    case Preset::PhiTildeThree:
      lb.locus = Locus::CylinderSurface;
      lb.rate = eta * RateFunction::power(Rational(k, m) - Rational(1));
      break;
    default:
      lb.locus = Locus::ShortestLine;
      lb.rate = shortest_line_rate(n, m, k, eta);
      break;
  }
  return lb;
}

namespace {

// Geometry each preset's hypothesis is stated for.
std::optional<ProfileVariant> required_variant(Preset p) {
  switch (p) {
    case Preset::PhiOne:
    case Preset::PhiTildeTwo:
    case Preset::PhiTildeThree:
      return ProfileVariant::PurePower;
    case Preset::PhiTwo:
      return ProfileVariant::Tilted;
    default:
      return std::nullopt;
  }
}

bool is_phi_family(Preset p) {
  switch (p) {
    case Preset::PhiOne:
    case Preset::PhiTwo:
    case Preset::PhiThree:
    case Preset::PhiFour:
    case Preset::PhiFive:
    case Preset::PhiTildeOne:
    case Preset::PhiTildeTwo:
    case Preset::PhiTildeThree:
      return true;
    default:
      return false;
  }
}

}  // namespace

Prediction classify(const BoundaryData& data, const GapProfile& profile, int n) {
  if (n != profile.dim()) throw InvalidArgument("classify: n disagrees with the profile dimension");
  Prediction p;
  p.n = n;
  p.m = profile.m();
  p.k = std::max(data.k, 1);
  p.eta = data.eta;
  const int m = p.m, k = p.k;

  if (is_phi_family(data.preset)) {
    if (!profile.sigma().is_point()) {
      throw HypothesisViolation("Sigma' = {0'}",
                                "preset " + data.name() + " needs a point contact set");
    }
    if (const auto v = required_variant(data.preset); v && *v != profile.variant()) {
      throw HypothesisViolation(
          *v == ProfileVariant::PurePower ? "h1 - h = |x'|^m" : "h1 - h = (1 + x1)|x'|^m",
          "preset " + data.name() + " needs the " +
              (*v == ProfileVariant::PurePower ? "pure power" : "tilted") + " gap profile");
    }
  }

  const bool symmetric = profile.even_separation() && profile.sigma().is_point();
  p.parity = symmetric ? data.parity() : Parity::None;
  std::string tag;
  if (!symmetric) {
    tag = "no parity (H5 fails or the contact set is not a point)";
  } else if (p.parity == Parity::A1) {
    tag = (m < n || (m == n && k == 1)) ? "A1, m < n or m = n with k = 1"
          : (m >= n + 1 && k >= m - n + 1) ? "A1, m >= n+1 with k >= m-n+1"
                                           : "A1, intermediate orders";
  } else if (p.parity != Parity::None) {
    tag = to_string(p.parity) + (m < n ? ", m < n" : m == n ? ", m = n" : ", m > n");
  } else {
    tag = "no parity class";
  }
  p.locus = locus_table(p.parity, n, m, k);

  // Two-term ties where no lower bound is available.
  const bool kkt_form = data.preset == Preset::PhiTildeOne || data.preset == Preset::PhiTildeTwo ||
                        (data.preset == Preset::CustomParity && data.custom_parity == Parity::A2);
  const bool pdsq_form = data.preset == Preset::PhiTildeThree ||
                         (data.preset == Preset::CustomParity && data.custom_parity == Parity::A3);
  const bool pure = profile.variant() == ProfileVariant::PurePower && profile.sigma().is_point();
  if (pure && m > n && kkt_form && ((k == 1 && m == n + 1) || k < m - n)) {
    p.locus = LocusKind::Undetermined;
    tag += "; tie between rotation and data terms";
  } else if (pure && pdsq_form && k == m - n && m > n + 1) {
    p.locus = LocusKind::Undetermined;
    tag += "; tie between rotation and data terms";
  }

  if (is_phi_family(data.preset)) {
    try {
      p.lower = lower_bound(data.preset, n, m, data.k, data.eta);
      if (p.locus == LocusKind::Undetermined && !symmetric) {
        p.locus = p.lower->locus == Locus::ShortestLine ? LocusKind::ShortestLine
                                                        : LocusKind::CylinderSurface;
      }
    } catch (const HypothesisViolation& e) {
      tag += "; lower bound unavailable: " + e.condition();
    }
  }
  p.regime = tag;
  return p;
}

std::string prediction_to_json(const Prediction& p) {
  nlohmann::ordered_json j;
  j["schema"] = "lamegap.prediction/1";
  j["n"] = p.n;
  j["m"] = p.m;
  j["k"] = p.k;
  j["eta"] = p.eta;
  j["parity"] = to_string(p.parity);
  j["locus"] = to_string(p.locus);
  j["regime"] = p.regime;
  if (p.lower) {
    j["lower_rate"] = {{"locus", to_string(p.lower->locus)},
                       {"rate", p.lower->rate.str()},
                       {"eps_exponent", p.lower->rate.exponent().str()},
                       {"log_power", p.lower->rate.log_power()}};
  } else {
    j["lower_rate"] = nullptr;
  }
  const RhoAB ab = rho_AB(p.parity, p.k, p.n, p.m);
  j["upper_envelope"] = {{"form", "C/(eps+|x'|^m) [eta rho_A + |phi|/rho_0 + |x'| (eta rho_B + "
                                  "|phi|/rho_2)] + eta |x'|^k/(eps+|x'|^m) + C |phi|"},
                         {"rho_A", ab.a.str()},
                         {"rho_B", ab.b.str()}};
  return j.dump(2);
}

}  // namespace lamegap
