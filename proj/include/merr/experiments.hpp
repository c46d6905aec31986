#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "merr/config.hpp"
#include "merr/embedding.hpp"
#include "merr/outer_kernel.hpp"
#include "merr/point_bag.hpp"
#include "merr/synthetic.hpp"
#include "merr/theory.hpp"

namespace merr {

std::string version_string();

enum class TheoryCase { wellspecified, misspecified };
enum class LambdaRule { theorem, cv, fixed };

/// An (l, a) sweep over a synthetic problem.
///
/// Keys: meta.{dim,mean_law,lo,hi,tau,component_sigma},
/// functional.{kind,output_dim,noise_sigma,clip_bound,matrix_seed},
/// base.{family,bandwidth}, outer.{family,theta}, h, theory.{case,b,c,s},
/// l_grid, a_values, lambda.{rule,value,scale,folds}, trials, n_test, N_test,
/// seed, embedding.method, report.wall_time.
struct RateConfig {
  synthetic::MetaDistributionSpec meta;
  synthetic::LabelFunctional functional;
  BaseKernelSpec base;
  OuterKernelSpec outer;
  double h = 1.0;
  TheoryCase theory_case = TheoryCase::wellspecified;
  double b = 2.0;
  double c = 2.0;
  double s = 1.0;
  std::vector<std::int64_t> l_grid;
  std::vector<double> a_values;
  LambdaRule lambda_rule = LambdaRule::theorem;
  double lambda_value = 0.1;  // used by the fixed rule
  double lambda_scale = 1.0;  // theorem rule: lambda = scale * l^exponent
  int cv_folds = 5;
  int trials = 1;
  std::int64_t n_test = 50;
  std::int64_t N_test = 0;  // 0 means 10 N
  std::uint64_t seed = 0;
  EmbeddingMethod embedding = EmbeddingMethod::automatic;
  bool record_wall_time = true;
  std::uint64_t config_hash = 0;
};

RateConfig rate_config_from(const Config& cfg);
void validate(const RateConfig& cfg);

/// Bag-size exponent fed to the schedule: a itself in the well-specified
/// case, 2a in the misspecified one (N = l^(2a/h) log l).
double schedule_exponent(const RateConfig& cfg, double a);
theory::RateExponents theoretical_exponents(const RateConfig& cfg, double a);

struct RateRow {
  std::int64_t l = 0;
  double a = 0.0;
  int trial = 0;
  std::int64_t N = 0;
  double lambda = 0.0;
  double excess_risk = 0.0;
  double wall_time_ms = 0.0;
  std::string status = "ok";
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

/// OLS of log(risk) on log(l). Needs at least three points, all positive.
SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points);

struct RateSummary {
  double a = 0.0;
  theory::RateExponents theory;
  /// (l, mean excess risk over successful trials), l ascending.
  std::vector<std::pair<double, double>> curve;
  bool fitted = false;
  SlopeFit fit;
};

struct RateReport {
  std::vector<RateRow> rows;  // sorted by (l, a, trial)
  std::vector<RateSummary> summaries;
};

/// Runs every (l, a, trial) cell on a pool of `threads` workers. The training
/// and test draws of a cell depend only on (seed, l, trial), so every a sees
/// the same problems. A throwing cell becomes a row with a failure status.
RateReport run_rate_experiment(const RateConfig& cfg, int threads = 1);

/// Comment line `# merr <version> config_hash=<hex> seed=<seed>` then the
/// header `l,a,trial,N,lambda,excess_risk,wall_time_ms,status`.
void write_rate_csv(std::ostream& out, const RateReport& report, const RateConfig& cfg);
void write_rate_summary_csv(std::ostream& out, const RateReport& report, const RateConfig& cfg);

/// Keys: meta.{dim,component_sigma}, base.{family,bandwidth} (gaussian only),
/// concentration.{N_grid,alpha,trials}, seed.
struct ConcentrationConfig {
  int dim = 1;
  double component_sigma = 1.0;
  double bandwidth = 1.0;
  std::vector<std::int64_t> N_grid;
  double alpha = 3.0;
  int trials = 500;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

ConcentrationConfig concentration_config_from(const Config& cfg);

struct ConcentrationRow {
  std::int64_t N = 0;
  double alpha = 0.0;
  double radius = 0.0;
  double exceed_freq = 0.0;
  double bound = 0.0;  // e^-alpha
  double mean_dist = 0.0;
};

/// For each N, draws `trials` bags from N(0, sigma^2 I) and compares the
/// exact RKHS distance to the population embedding with the concentration
/// radius.
std::vector<ConcentrationRow> run_concentration_experiment(const ConcentrationConfig& cfg, int threads = 1);
void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationRow>& rows,
                             const ConcentrationConfig& cfg);

}  // namespace merr
