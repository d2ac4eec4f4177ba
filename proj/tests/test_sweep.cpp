#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lamegap/acceptance.hpp"
#include "lamegap/errors.hpp"
#include "lamegap/sweep.hpp"

namespace lamegap {
namespace {

ExperimentConfig small_config(BoundaryData data) {
  ExperimentConfig c;
  c.name = "unit";
  c.data = data;
  c.geometry.grading = GradingParams{2, 0.5, 0.3};
  c.eps_list = {1e-2, 1e-3, 1e-4};
  return c;
}

std::vector<double> eps_grid() { return {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}; }

TEST(FitRate, SyntheticPower) {
  const auto eps = eps_grid();
  std::vector<double> v;
  for (double e : eps) v.push_back(3.0 * std::pow(e, -0.5));
  const auto r = fit_rate(eps, v, RateFunction::power(Rational(-1, 2)), FitMode::PowerFit);
  EXPECT_NEAR(r.slope, -0.5, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(FitRate, SyntheticLogCorrected) {
  const auto eps = eps_grid();
  const RateFunction rate = RateFunction::log() * RateFunction::power(Rational(-1, 2));
  std::vector<double> v;
  for (double e : eps) v.push_back(2.0 * rate(e));
  const auto r = fit_rate(eps, v, rate, FitMode::PowerFit);
  EXPECT_EQ(r.mode, FitMode::RateRatio);
  EXPECT_NEAR(r.spread, 1.0, 1e-12);
  EXPECT_NEAR(r.constant, 2.0, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(FitRate, SyntheticMismatch) {
  const auto eps = eps_grid();
  std::vector<double> v;
  for (double e : eps) v.push_back(std::pow(e, -0.75));
  const auto r = fit_rate(eps, v, RateFunction::power(Rational(-1, 2)), FitMode::PowerFit);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.slope, -0.75, 1e-12);
  std::vector<double> bad = v;
  bad[1] = std::nan("");
  EXPECT_THROW(fit_rate(eps, bad, RateFunction::one(), FitMode::RateRatio), InvalidArgument);
}

TEST(Config, RoundTripAndRejection) {
  const ExperimentConfig c = builtin_config("flat_contact");
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(ExperimentConfig::from_json(R"({"nmae": "typo"})"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"geometry": {"m": "two"}})"), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_json("{"), InvalidArgument);
  ExperimentConfig unsorted = c;
  unsorted.eps_list = {1e-3, 1e-2};
  EXPECT_THROW(unsorted.validate(), InvalidArgument);
  ExperimentConfig space = c;
  space.geometry.n = 3;
  EXPECT_THROW(space.validate(), InvalidArgument);
  for (const auto& name : builtin_config_names()) EXPECT_NO_THROW(builtin_config(name).validate());
  EXPECT_THROW(builtin_config("nope"), InvalidArgument);
}

TEST(Sweep, ZeroDatum) {
  const auto recs = run_sweep(small_config(BoundaryData::zero()), 2);
  ASSERT_EQ(recs.size(), 3u);
  for (const auto& r : recs) {
    ASSERT_TRUE(r.ok) << r.error;
    EXPECT_EQ(r.coeffs.lpNorm<Eigen::Infinity>(), 0.0);
    for (const auto& [locus, g] : r.probes) EXPECT_EQ(g, 0.0);
  }
}

TEST(Sweep, TranslationDatumHasNoGradient) {
  const auto recs = run_sweep(small_config(BoundaryData::rigid(0)), 2);
  for (const auto& r : recs) {
    ASSERT_TRUE(r.ok) << r.error;
    EXPECT_NEAR(r.coeffs[0], 1.0, 1e-8);
    for (const auto& [locus, g] : r.probes) EXPECT_LT(g, 1e-6);
  }
}

TEST(Sweep, TiltedLinearDataGrowsAtShortestLine) {
  ExperimentConfig c = small_config(BoundaryData::phi_two());
  c.geometry.variant = ProfileVariant::Tilted;
  c.geometry.grading = GradingParams{4, 0.25, 0.1};
  const auto recs = run_sweep(c, 3);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    EXPECT_GT(*recs[i].probe(Locus::ShortestLine), *recs[i - 1].probe(Locus::ShortestLine));
  }
}

TEST(Sweep, FailuresAreIsolated) {
  ExperimentConfig c = small_config(BoundaryData::generic());
  c.geometry.grading.eps_floor = 5e-4;
  const auto recs = run_sweep(c, 2);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_TRUE(recs[0].ok);
  EXPECT_TRUE(recs[1].ok);
  EXPECT_FALSE(recs[2].ok);
  EXPECT_FALSE(recs[2].error.empty());
  c.geometry.grading.eps_floor = 0.5;
  EXPECT_THROW(run_sweep(c, 2), Error);
}

TEST(Report, CsvIsDeterministicAcrossWorkerCounts) {
  const ExperimentConfig c = small_config(BoundaryData::generic());
  std::ostringstream a, b;
  emit_report(c, run_sweep(c, 1), {}, ReportFormat::Csv, a);
  emit_report(c, run_sweep(c, 3), {}, ReportFormat::Csv, b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header.rfind("eps,locus,grad,C_1,C_2,C_3,Q_1,Q_2,Q_3,spd_margin,predicted,ratio", 0), 0u);
  int rows = 0;
  for (std::string line; std::getline(lines, line);) rows += line.empty() ? 0 : 1;
  EXPECT_EQ(rows, 3 * 2);  // three eps values, two probe loci
}

TEST(Report, JsonCarriesSchema) {
  const ExperimentConfig c = small_config(BoundaryData::zero());
  const auto recs = run_sweep(c, 1);
  std::ostringstream out;
  emit_report(c, recs, fit_records(c, recs), ReportFormat::Json, out);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j["schema"], kSweepSchema);
  EXPECT_EQ(parse_format("json"), ReportFormat::Json);
  EXPECT_THROW(parse_format("xml"), InvalidArgument);
}

}  // namespace
}  // namespace lamegap
