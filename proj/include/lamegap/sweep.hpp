#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lamegap/decomposition.hpp"
#include "lamegap/fem.hpp"
#include "lamegap/geometry.hpp"
#include "lamegap/rates.hpp"

namespace lamegap {

struct GeometryConfig {
  int n = 2;
  int m = 2;
  ContactSet sigma = ContactSet::point();
  ProfileVariant variant = ProfileVariant::PurePower;
  std::optional<HConstants> kappa;  // admissible constants when absent
  double amplitude = 1.0;
  double patch_radius = 0.2;        // R
  double outer_radius = 2.0;        // R_D
  double inclusion_radius = 1.0;
  double eps = 1e-2;                // used by single solves
  GradingParams grading{4, 0.25, 0.1};

  GapProfile profile() const;
  DomainSpec domain(double eps_value) const;
};

enum class FitMode { PowerFit, RateRatio };

struct FitConfig {
  FitMode mode = FitMode::RateRatio;
  double spread_factor = 3.0;
  double exponent_tol = 0.1;
  /// Explicit prediction; otherwise the lower rate attached by classify is used.
  std::optional<Locus> locus;
  std::optional<RateFunction> predicted;
};

struct ExperimentConfig {
  std::string name = "experiment";
  GeometryConfig geometry;
  SolverOptions solver;
  ElasticConstants material;
  BoundaryData data = BoundaryData::zero();
  std::vector<double> eps_list{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  std::vector<double> slow_eps{1e-5};  // appended in slow mode
  std::vector<Locus> probes{Locus::ShortestLine, Locus::CylinderSurface};
  int probe_count = 17;
  FitConfig fit;

  /// Parses the JSON config format; unknown keys are rejected.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string to_json() const;
  /// Throws InvalidArgument or HypothesisViolation on inconsistent settings.
  void validate() const;
  std::vector<double> sweep_eps(bool slow) const;
};

/// The locus and rate the sweep is fitted against, if any.
std::optional<std::pair<Locus, RateFunction>> predicted_rate(const ExperimentConfig& config);

/// One mesh, one decomposition, gradient probes at every configured locus.
struct SolveOutcome {
  std::shared_ptr<const Mesh> mesh;
  std::unique_ptr<GapDomain> domain;
  DecompositionResult result;
  std::vector<std::pair<Locus, double>> probes;
};
SolveOutcome solve_single(const ExperimentConfig& config, double eps);

struct SweepRecord {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  std::vector<std::pair<Locus, double>> probes;
  Eigen::VectorXd coeffs;
  Eigen::VectorXd q;
  Eigen::MatrixXd gram;
  double spd_margin = 0.0;
  double min_eigenvalue = 0.0;
  double coeff_residual = 0.0;
  double max_solve_residual = 0.0;
  std::size_t nodes = 0;
  double wall_seconds = 0.0;  // diagnostics only, never written to reports

  std::optional<double> probe(Locus l) const;
};

/// Runs every eps concurrently on up to `workers` threads. Records come back in
/// eps-list order; a failing eps is recorded, and only an all-failed sweep throws.
std::vector<SweepRecord> run_sweep(const ExperimentConfig& config, int workers = 1,
                                   bool slow = false);

struct FitResult {
  FitMode mode = FitMode::RateRatio;
  Locus locus = Locus::ShortestLine;
  double slope = 0.0;               // least-squares slope of log value vs log eps
  double predicted_exponent = 0.0;
  double spread = 0.0;              // max/min of value / predicted
  double constant = 0.0;            // geometric mean of value / predicted
  bool pass = false;
};

/// Least-squares slope of log(values) against log(eps).
double log_log_slope(std::span<const double> eps, std::span<const double> values);

FitResult fit_rate(std::span<const double> eps, std::span<const double> values,
                   const RateFunction& predicted, FitMode mode, double spread_factor = 3.0,
                   double exponent_tol = 0.1);

/// Fits the successful records at the predicted locus; empty without a prediction.
std::vector<FitResult> fit_records(const ExperimentConfig& config,
                                   std::span<const SweepRecord> records);

enum class ReportFormat { Csv, Json };
ReportFormat parse_format(const std::string& s);

inline constexpr const char* kSweepSchema = "lamegap.sweep/1";
void emit_report(const ExperimentConfig& config, std::span<const SweepRecord> records,
                 std::span<const FitResult> fits, ReportFormat format, std::ostream& out);

/// Q convergence along the successful records of a sweep (eps decreasing).
QStarReport q_star_estimate(std::span<const SweepRecord> records);

}  // namespace lamegap
