#include "merr/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <omp.h>

#include "merr/error.hpp"
#include "merr/io.hpp"
#include "merr/regressor.hpp"
#include "merr/rng.hpp"

#ifndef MERR_VERSION
#define MERR_VERSION "0.0.0"
#endif

namespace merr {

std::string version_string() { return MERR_VERSION; }

namespace {

TheoryCase parse_theory_case(const std::string& name) {
  if (name == "wellspecified") return TheoryCase::wellspecified;
  if (name == "misspecified") return TheoryCase::misspecified;
  throw InvalidArgument("unknown theory.case '" + name + "'");
}

LambdaRule parse_lambda_rule(const std::string& name) {
  if (name == "theorem") return LambdaRule::theorem;
  if (name == "cv") return LambdaRule::cv;
  if (name == "fixed") return LambdaRule::fixed;
  throw InvalidArgument("unknown lambda.rule '" + name + "'");
}

synthetic::MetaDistributionSpec meta_from(const Config& cfg) {
  synthetic::MetaDistributionSpec meta;
  meta.dim = static_cast<int>(cfg.integer_or("meta.dim", meta.dim));
  meta.mean_law = synthetic::parse_mean_law(cfg.get_or("meta.mean_law", "uniform_box"));
  meta.lo = cfg.real_or("meta.lo", meta.lo);
  meta.hi = cfg.real_or("meta.hi", meta.hi);
  meta.tau = cfg.real_or("meta.tau", meta.tau);
  meta.component_sigma = cfg.real_or("meta.component_sigma", meta.component_sigma);
  return meta;
}

int checked_threads(int threads) {
  if (threads < 1) throw InvalidArgument("thread count must be at least 1");
  return threads;
}

std::string sanitize(std::string text) {
  for (char& ch : text)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return "failed: " + text;
}

double cell_lambda(const RateConfig& cfg, double a, std::int64_t l, const LabeledDataset& train) {
  switch (cfg.lambda_rule) {
    case LambdaRule::fixed:
      return cfg.lambda_value;
    case LambdaRule::theorem:
      return cfg.lambda_scale * std::pow(static_cast<double>(l), theoretical_exponents(cfg, a).lambda);
    case LambdaRule::cv: {
      const FitOptions options{cfg.embedding};
      const Embedder embedder(cfg.base, train.bags(), cfg.embedding);
      const auto grid = default_lambda_grid(outer_gram(cfg.outer, embedder.geometry()));
      const auto key = derive_key(cfg.seed, StreamKind::cell, {static_cast<std::uint64_t>(l), 2});
      return cross_validate(train, cfg.base, cfg.outer, grid, cfg.cv_folds, key, options).best_lambda;
    }
  }
  return 0.0;
}

void run_cell(const RateConfig& cfg, RateRow& row) {
  const auto start = std::chrono::steady_clock::now();
  const auto l_key = static_cast<std::uint64_t>(row.l);
  const auto t_key = static_cast<std::uint64_t>(row.trial);
  const std::uint64_t train_key = derive_key(cfg.seed, StreamKind::cell, {l_key, t_key, 0});
  const std::uint64_t test_key = derive_key(cfg.seed, StreamKind::cell, {l_key, t_key, 1});
  try {
    row.N = theory::bag_size_schedule(row.l, schedule_exponent(cfg, row.a), cfg.h);
    const auto train = synthetic::make_dataset(cfg.meta, cfg.functional, row.l, row.N, train_key);
    row.lambda = cell_lambda(cfg, row.a, row.l, train.data);
    const TrainedModel model = fit(train.data, cfg.base, cfg.outer, row.lambda, FitOptions{cfg.embedding});

    const std::int64_t n_test_points = cfg.N_test > 0 ? cfg.N_test : 10 * row.N;
    const auto means = synthetic::sample_meta(cfg.meta, cfg.n_test, test_key);
    Eigen::MatrixXd pred(cfg.n_test, model.output_dim());
    Eigen::MatrixXd bayes(cfg.n_test, model.output_dim());
    // One test bag at a time keeps memory bounded by a single bag.
    for (std::int64_t t = 0; t < cfg.n_test; ++t) {
      const auto& m = means[static_cast<std::size_t>(t)];
      const PointBag bag = synthetic::sample_bag(m, cfg.meta.component_sigma, n_test_points, test_key, t);
      pred.row(t) = predict(model, std::span<const PointBag>(&bag, 1)).row(0);
      bayes.row(t) = synthetic::true_regression_value(cfg.functional, m, cfg.meta.component_sigma).transpose();
    }
    const double noise = cfg.functional.noise_sigma;
    row.excess_risk = excess_risk_estimate(pred, bayes, noise * noise);
    if (!std::isfinite(row.excess_risk)) throw NumericError("non-finite excess risk");
    row.status = "ok";
  } catch (const std::exception& e) {
    row.excess_risk = std::numeric_limits<double>::quiet_NaN();
    row.status = sanitize(e.what());
  }
  const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
  row.wall_time_ms = cfg.record_wall_time ? elapsed.count() : 0.0;
}

std::string header_line(std::uint64_t hash, std::uint64_t seed) {
  return "# merr " + version_string() + " config_hash=" + hex64(hash) + " seed=" + std::to_string(seed) + "\n";
}

}  // namespace

RateConfig rate_config_from(const Config& cfg) {
  RateConfig rc;
  rc.meta = meta_from(cfg);
  rc.functional.kind = synthetic::parse_label_kind(cfg.get_or("functional.kind", "mean_norm_sq"));
  rc.functional.output_dim = static_cast<int>(cfg.integer_or("functional.output_dim", 1));
  rc.functional.noise_sigma = cfg.real_or("functional.noise_sigma", 0.0);
  rc.functional.clip_bound = cfg.real_or("functional.clip_bound", std::numeric_limits<double>::infinity());
  rc.functional.matrix_seed = static_cast<std::uint64_t>(cfg.integer_or("functional.matrix_seed", 0));
  rc.base.family = parse_base_family(cfg.get_or("base.family", "gaussian"));
  rc.base.bandwidth = cfg.real_or("base.bandwidth", 1.0);
  rc.outer.family = parse_outer_family(cfg.get_or("outer.family", "linear"));
  rc.outer.theta = cfg.real_or("outer.theta", 1.0);
  validate(rc.outer);
  rc.h = holder_exponent(rc.outer);
  if (cfg.has("h") && std::abs(cfg.real("h") - rc.h) > 1e-12)
    throw InvalidArgument("config h = " + cfg.get("h") + " does not match the outer kernel's exponent " +
                          format_real(rc.h));
  rc.theory_case = parse_theory_case(cfg.get_or("theory.case", "wellspecified"));
  rc.b = cfg.real_or("theory.b", rc.b);
  rc.c = cfg.real_or("theory.c", rc.c);
  rc.s = cfg.real_or("theory.s", rc.s);
  rc.l_grid = cfg.integers("l_grid");
  rc.a_values = cfg.reals("a_values");
  rc.lambda_rule = parse_lambda_rule(cfg.get_or("lambda.rule", "theorem"));
  rc.lambda_value = cfg.real_or("lambda.value", rc.lambda_value);
  rc.lambda_scale = cfg.real_or("lambda.scale", rc.lambda_scale);
  rc.cv_folds = static_cast<int>(cfg.integer_or("lambda.folds", rc.cv_folds));
  rc.trials = static_cast<int>(cfg.integer_or("trials", 1));
  rc.n_test = cfg.integer_or("n_test", rc.n_test);
  rc.N_test = cfg.integer_or("N_test", 0);
  rc.seed = static_cast<std::uint64_t>(cfg.integer_or("seed", 0));
  rc.embedding = parse_embedding_method(cfg.get_or("embedding.method", "automatic"));
  rc.record_wall_time = cfg.flag_or("report.wall_time", true);
  rc.config_hash = cfg.hash();
  validate(rc);
  return rc;
}

void validate(const RateConfig& cfg) {
  synthetic::validate(cfg.meta);
  synthetic::validate(cfg.functional, cfg.meta);
  validate(cfg.base);
  validate(cfg.outer);
  if (std::abs(cfg.h - holder_exponent(cfg.outer)) > 1e-12)
    throw InvalidArgument("h does not match the outer kernel's Hoelder exponent");
  if (cfg.l_grid.empty() || cfg.a_values.empty()) throw InvalidArgument("l_grid and a_values must be nonempty");
  for (auto l : cfg.l_grid)
    if (l < 2) throw InvalidArgument("every l in l_grid must be at least 2");
  for (double a : cfg.a_values)
    if (!(a > 0.0)) throw InvalidArgument("every a must be positive");
  if (cfg.trials < 1) throw InvalidArgument("trials must be at least 1");
  if (cfg.n_test < 1) throw InvalidArgument("n_test must be at least 1");
  if (cfg.N_test < 0) throw InvalidArgument("N_test must be nonnegative");
  if (cfg.lambda_rule == LambdaRule::fixed && !(cfg.lambda_value > 0.0))
    throw InvalidArgument("lambda.value must be positive");
  if (!(cfg.lambda_scale > 0.0)) throw InvalidArgument("lambda.scale must be positive");
  if (cfg.lambda_rule == LambdaRule::cv && cfg.cv_folds < 2) throw InvalidArgument("lambda.folds must be >= 2");
  (void)theoretical_exponents(cfg, cfg.a_values.front());
}

double schedule_exponent(const RateConfig& cfg, double a) {
  return cfg.theory_case == TheoryCase::wellspecified ? a : 2.0 * a;
}

theory::RateExponents theoretical_exponents(const RateConfig& cfg, double a) {
  return cfg.theory_case == TheoryCase::wellspecified ? theory::rate_exponent_wellspecified(a, cfg.b, cfg.c)
                                                      : theory::rate_exponent_misspecified(a, cfg.s);
}

SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw InvalidArgument("slope fit needs at least three points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [l, r] : points) {
    if (!(l > 0.0) || !(r > 0.0)) throw InvalidArgument("slope fit needs positive values");
    mx += std::log(l);
    my += std::log(r);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [l, r] : points) {
    const double dx = std::log(l) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(r) - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("slope fit needs at least two distinct l");
  SlopeFit out;
  out.slope = sxy / sxx;
  double ssr = 0.0;
  for (const auto& [l, r] : points) {
    const double resid = std::log(r) - my - out.slope * (std::log(l) - mx);
    ssr += resid * resid;
  }
  out.stderr_ = std::sqrt(ssr / (n - 2.0) / sxx);
  return out;
}

RateReport run_rate_experiment(const RateConfig& cfg, int threads) {
  validate(cfg);
  checked_threads(threads);
  RateReport report;
  auto ls = cfg.l_grid;
  auto as = cfg.a_values;
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  std::sort(as.begin(), as.end());
  as.erase(std::unique(as.begin(), as.end()), as.end());
  for (auto l : ls)
    for (double a : as)
      for (int t = 0; t < cfg.trials; ++t) {
        RateRow row;
        row.l = l;
        row.a = a;
        row.trial = t;
        report.rows.push_back(row);
      }

  // Largest cells first so the pool does not end on one long straggler.
  std::vector<std::size_t> order(report.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto cost = [&](const RateRow& r) {
    return static_cast<double>(r.l) * std::pow(static_cast<double>(r.l), schedule_exponent(cfg, r.a) / cfg.h);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return cost(report.rows[x]) > cost(report.rows[y]); });

  const auto cells = static_cast<std::int64_t>(order.size());
  const int outer_threads = static_cast<int>(std::min<std::int64_t>(threads, cells));
  const int saved_max = omp_get_max_threads();
  const int saved_levels = omp_get_max_active_levels();
  omp_set_max_active_levels(1);
  if (outer_threads == 1) omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(outer_threads)
  for (std::int64_t i = 0; i < cells; ++i) run_cell(cfg, report.rows[order[static_cast<std::size_t>(i)]]);
  omp_set_num_threads(saved_max);
  omp_set_max_active_levels(saved_levels);

  for (double a : as) {
    RateSummary summary;
    summary.a = a;
    summary.theory = theoretical_exponents(cfg, a);
    for (auto l : ls) {
      double sum = 0.0;
      int ok = 0;
      for (const auto& row : report.rows)
        if (row.l == l && row.a == a && row.status == "ok") {
          sum += row.excess_risk;
          ++ok;
        }
      if (ok > 0) summary.curve.emplace_back(static_cast<double>(l), sum / ok);
    }
    const bool positive = std::all_of(summary.curve.begin(), summary.curve.end(),
                                      [](const auto& p) { return p.second > 0.0; });
    if (summary.curve.size() >= 3 && positive) {
      summary.fit = fit_loglog_slope(summary.curve);
      summary.fitted = true;
    }
    report.summaries.push_back(std::move(summary));
  }
  return report;
}

void write_rate_csv(std::ostream& out, const RateReport& report, const RateConfig& cfg) {
  out << header_line(cfg.config_hash, cfg.seed);
  out << "l,a,trial,N,lambda,excess_risk,wall_time_ms,status\n";
  for (const auto& r : report.rows) {
    out << r.l << ',' << format_real(r.a) << ',' << r.trial << ',' << r.N << ',' << format_real(r.lambda) << ','
        << format_real(r.excess_risk) << ',' << format_real(r.wall_time_ms) << ',' << r.status << '\n';
  }
}

void write_rate_summary_csv(std::ostream& out, const RateReport& report, const RateConfig& cfg) {
  out << header_line(cfg.config_hash, cfg.seed);
  out << "a,slope,slope_stderr,theory_risk_exponent,theory_lambda_exponent,points\n";
  for (const auto& s : report.summaries) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << format_real(s.a) << ',' << format_real(s.fitted ? s.fit.slope : nan) << ','
        << format_real(s.fitted ? s.fit.stderr_ : nan) << ',' << format_real(s.theory.risk) << ','
        << format_real(s.theory.lambda) << ',' << s.curve.size() << '\n';
  }
}

ConcentrationConfig concentration_config_from(const Config& cfg) {
  ConcentrationConfig cc;
  cc.dim = static_cast<int>(cfg.integer_or("meta.dim", cc.dim));
  cc.component_sigma = cfg.real_or("meta.component_sigma", cc.component_sigma);
  if (parse_base_family(cfg.get_or("base.family", "gaussian")) != BaseFamily::gaussian)
    throw InvalidArgument("the concentration experiment needs a gaussian base kernel");
  cc.bandwidth = cfg.real_or("base.bandwidth", cc.bandwidth);
  cc.N_grid = cfg.integers("concentration.N_grid");
  cc.alpha = cfg.real_or("concentration.alpha", cc.alpha);
  cc.trials = static_cast<int>(cfg.integer_or("concentration.trials", cc.trials));
  cc.seed = static_cast<std::uint64_t>(cfg.integer_or("seed", 0));
  cc.config_hash = cfg.hash();
  return cc;
}

std::vector<ConcentrationRow> run_concentration_experiment(const ConcentrationConfig& cfg, int threads) {
  checked_threads(threads);
  if (cfg.dim < 1) throw InvalidArgument("meta.dim must be at least 1");
  if (!(cfg.component_sigma > 0.0) || !(cfg.bandwidth > 0.0)) throw InvalidArgument("scales must be positive");
  if (cfg.N_grid.empty()) throw InvalidArgument("concentration.N_grid must be nonempty");
  if (cfg.trials < 1) throw InvalidArgument("concentration.trials must be at least 1");
  if (!(cfg.alpha > 0.0)) throw InvalidArgument("concentration.alpha must be positive");

  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(cfg.dim);
  std::vector<ConcentrationRow> rows;
  for (auto N : cfg.N_grid) {
    if (N < 1) throw InvalidArgument("every N must be at least 1");
    ConcentrationRow row;
    row.N = N;
    row.alpha = cfg.alpha;
    row.radius = concentration_radius(BaseKernelSpec::bound(), N, cfg.alpha);
    row.bound = std::exp(-cfg.alpha);
    std::vector<double> dist(static_cast<std::size_t>(cfg.trials));
    const std::uint64_t key = derive_key(cfg.seed, StreamKind::cell, {static_cast<std::uint64_t>(N)});
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int t = 0; t < cfg.trials; ++t) {
      const PointBag bag = synthetic::sample_bag(origin, cfg.component_sigma, N, key, t);
      dist[static_cast<std::size_t>(t)] =
          std::sqrt(synthetic::population_sq_dist(cfg.bandwidth, cfg.component_sigma, origin, bag));
    }
    int exceed = 0;
    double total = 0.0;
    for (double d : dist) {
      if (d > row.radius) ++exceed;
      total += d;
    }
    row.exceed_freq = static_cast<double>(exceed) / cfg.trials;
    row.mean_dist = total / cfg.trials;
    rows.push_back(row);
  }
  return rows;
}

void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationRow>& rows,
                             const ConcentrationConfig& cfg) {
  out << header_line(cfg.config_hash, cfg.seed);
  out << "N,alpha,radius,exceed_freq,bound,mean_dist\n";
  for (const auto& r : rows)
    out << r.N << ',' << format_real(r.alpha) << ',' << format_real(r.radius) << ',' << format_real(r.exceed_freq)
        << ',' << format_real(r.bound) << ',' << format_real(r.mean_dist) << '\n';
}

}  // namespace merr
