#include "merr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "merr/config.hpp"
#include "merr/error.hpp"
#include "merr/experiments.hpp"
#include "merr/io.hpp"
#include "merr/regressor.hpp"
#include "merr/synthetic.hpp"
#include "merr/theory.hpp"

namespace merr {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct KernelOptions {
  std::string base = "gaussian";
  std::optional<double> bandwidth;
  std::string outer = "linear";
  double theta = 1.0;
  std::string embedding = "exact";
};

void add_kernel_options(CLI::App* cmd, KernelOptions& k) {
  cmd->add_option("--base", k.base, "Base kernel family: gaussian, laplacian, cauchy")->capture_default_str();
  cmd->add_option("--bandwidth", k.bandwidth, "Base kernel bandwidth (default: median heuristic)");
  cmd->add_option("--outer", k.outer, "Outer kernel family (see `kernels`)")->capture_default_str();
  cmd->add_option("--theta", k.theta, "Outer kernel parameter")->capture_default_str();
  cmd->add_option("--embedding", k.embedding, "Embedding method: exact, taylor, automatic")->capture_default_str();
}

BaseKernelSpec resolve_base(const KernelOptions& k, const std::vector<PointBag>& bags, std::uint64_t seed) {
  BaseKernelSpec spec;
  spec.family = parse_base_family(k.base);
  spec.bandwidth = k.bandwidth ? *k.bandwidth : median_heuristic_bandwidth(bags, 10000, seed);
  validate(spec);
  return spec;
}

OuterKernelSpec resolve_outer(const KernelOptions& k) {
  OuterKernelSpec spec{parse_outer_family(k.outer), k.theta};
  validate(spec);
  return spec;
}

std::vector<std::string> label_header(Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index j = 0; j < d; ++j) h.push_back("y_" + std::to_string(j + 1));
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("write failed: " + path.string());
}

void print_kernels(std::ostream& out) {
  out << "outer_family,theta_range,holder_exponent,formula\n"
      << "linear,none,1,<mu_a;mu_b>\n"
      << "gaussian_K,theta>0,1,exp(-D^2/(2 theta^2))\n"
      << "exponential_K,theta>0,1/2,exp(-D/(2 theta^2))\n"
      << "cauchy_K,theta>0,1,1/(1+D^2/theta^2)\n"
      << "tstudent_K,0<theta<=2,theta/2,1/(1+D^theta)\n"
      << "invmultiquadric_K,theta>0,1,1/sqrt(D^2+theta^2)\n"
      << "\nbase_family,formula\n"
      << "gaussian,exp(-|u-v|_2^2/(2 sigma^2))\n"
      << "laplacian,exp(-|u-v|_1/sigma)\n"
      << "cauchy,1/(1+|u-v|_2^2/sigma^2)\n"
      << "\nD denotes the RKHS distance |mu_a - mu_b| between embeddings.\n";
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-embedding ridge regression for distribution regression", "merr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (default: OpenMP default)");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model on a manifest of bag files");
  std::string fit_manifest, fit_out, fit_predictions;
  double fit_lambda = 0.0, label_bound = kInf;
  KernelOptions fit_k;
  fit_cmd->add_option("--manifest", fit_manifest, "Manifest CSV: bag_path,y_1,...")->required();
  fit_cmd->add_option("--lambda", fit_lambda, "Regularization strength")->required();
  fit_cmd->add_option("--out", fit_out, "Model file to write")->required();
  fit_cmd->add_option("--predictions", fit_predictions, "Also write in-sample predictions here");
  fit_cmd->add_option("--label-bound", label_bound, "Reject labels with norm above this");
  add_kernel_options(fit_cmd, fit_k);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict labels of bags with a saved model");
  std::string predict_model, predict_manifest, predict_out;
  std::vector<std::string> predict_bags;
  predict_cmd->add_option("--model", predict_model, "Model file written by `fit`")->required();
  auto* pm = predict_cmd->add_option("--manifest", predict_manifest, "Manifest of bags to predict");
  auto* pb = predict_cmd->add_option("--bags", predict_bags, "Bag CSV files to predict");
  pm->excludes(pb);
  predict_cmd->add_option("--out", predict_out, "Predictions CSV to write")->required();

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "Choose lambda by bag-level K-fold cross-validation");
  std::string cv_manifest, cv_out;
  int cv_folds = 5;
  std::vector<double> cv_grid;
  KernelOptions cv_k;
  cv_cmd->add_option("--manifest", cv_manifest, "Manifest CSV")->required();
  cv_cmd->add_option("--folds", cv_folds, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--grid", cv_grid, "Lambda values (default: 20 log-spaced, scaled by the Gram trace)")
      ->delimiter(',');
  cv_cmd->add_option("--out", cv_out, "Write the lambda,risk curve here");
  add_kernel_options(cv_cmd, cv_k);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic two-stage dataset");
  std::string synth_dir;
  std::int64_t synth_l = 32, synth_N = 100;
  synthetic::MetaDistributionSpec meta;
  synthetic::LabelFunctional functional;
  std::string mean_law = "uniform_box", label_kind = "mean_norm_sq";
  synth_cmd->add_option("--out-dir", synth_dir, "Directory for bags/, manifest.csv and bayes.csv")->required();
  synth_cmd->add_option("--l", synth_l, "Number of bags")->capture_default_str();
  synth_cmd->add_option("--N", synth_N, "Points per bag")->capture_default_str();
  synth_cmd->add_option("--dim", meta.dim, "Point dimension")->capture_default_str();
  synth_cmd->add_option("--mean-law", mean_law, "uniform_box or gaussian")->capture_default_str();
  synth_cmd->add_option("--lo", meta.lo, "Lower corner of the mean box")->capture_default_str();
  synth_cmd->add_option("--hi", meta.hi, "Upper corner of the mean box")->capture_default_str();
  synth_cmd->add_option("--tau", meta.tau, "Std of gaussian means")->capture_default_str();
  synth_cmd->add_option("--sigma", meta.component_sigma, "Within-bag std")->capture_default_str();
  synth_cmd->add_option("--functional", label_kind, "mean_norm_sq, gaussian_entropy, linear_of_mean")
      ->capture_default_str();
  synth_cmd->add_option("--output-dim", functional.output_dim, "Label dimension")->capture_default_str();
  synth_cmd->add_option("--noise", functional.noise_sigma, "Label noise std")->capture_default_str();
  synth_cmd->add_option("--clip", functional.clip_bound, "Label bound C");
  synth_cmd->add_option("--matrix-seed", functional.matrix_seed, "Seed of the linear_of_mean matrix");

  // rates
  auto* rates_cmd = app.add_subcommand("rates", "Run an (l, a) learning-rate sweep");
  std::string rates_config, rates_out, rates_summary;
  bool no_wall_time = false;
  rates_cmd->add_option("--config", rates_config, "Experiment config file")->required();
  rates_cmd->add_option("--out", rates_out, "Per-cell CSV report")->required();
  rates_cmd->add_option("--summary", rates_summary, "Per-a slope summary CSV");
  rates_cmd->add_flag("--no-wall-time", no_wall_time, "Write 0 in wall_time_ms for byte-stable reports");

  // concentration
  auto* conc_cmd = app.add_subcommand("concentration", "Check the embedding concentration radius");
  std::string conc_config, conc_out;
  conc_cmd->add_option("--config", conc_config, "Experiment config file")->required();
  conc_cmd->add_option("--out", conc_out, "CSV report")->required();

  // theory
  auto* theory_cmd = app.add_subcommand("theory", "Evaluate excess-risk bounds, conditions and rate exponents");
  theory::BoundInputs in;
  theory::PriorParams prior;
  std::string theory_case = "wellspecified";
  double a_exp = 1.0, s = 1.0, T_opnorm = 1.0, T_tilde_norm = 1.0, f_Ts_norm = 1.0;
  std::optional<double> sigma_bern;
  theory_cmd->add_option("--case", theory_case, "wellspecified or misspecified")->capture_default_str();
  theory_cmd->add_option("--Bk", in.B_k, "Base kernel bound")->capture_default_str();
  theory_cmd->add_option("--BK", in.B_K, "Outer kernel bound")->capture_default_str();
  theory_cmd->add_option("--L", in.L, "Hoelder constant")->capture_default_str();
  theory_cmd->add_option("--holder", in.h, "Hoelder exponent")->capture_default_str();
  theory_cmd->add_option("--C", in.C, "Label bound")->capture_default_str();
  theory_cmd->add_option("--l", in.l, "Number of bags")->capture_default_str();
  theory_cmd->add_option("--N", in.N, "Points per bag")->capture_default_str();
  theory_cmd->add_option("--lambda", in.lambda, "Regularization")->capture_default_str();
  theory_cmd->add_option("--eta", in.eta, "Confidence level")->capture_default_str();
  theory_cmd->add_option("--delta", in.delta, "Concentration slack")->capture_default_str();
  theory_cmd->add_option("--f-norm", in.f_rho_norm_H, "RKHS norm of the regression function")
      ->capture_default_str();
  theory_cmd->add_option("--b", prior.b, "Eigenvalue decay")->capture_default_str();
  theory_cmd->add_option("--c", prior.c, "Smoothness")->capture_default_str();
  theory_cmd->add_option("--R", prior.R, "Range-space radius")->capture_default_str();
  theory_cmd->add_option("--alpha", prior.alpha, "Lower eigenvalue envelope")->capture_default_str();
  theory_cmd->add_option("--beta", prior.beta, "Upper eigenvalue envelope")->capture_default_str();
  theory_cmd->add_option("--s", s, "Range-space exponent (misspecified)")->capture_default_str();
  theory_cmd->add_option("--T-norm", T_opnorm, "Operator norm of the covariance operator")->capture_default_str();
  theory_cmd->add_option("--T-tilde-norm", T_tilde_norm, "Norm of the L2 integral operator")->capture_default_str();
  theory_cmd->add_option("--f-Ts-norm", f_Ts_norm, "Norm of the range-space preimage")->capture_default_str();
  theory_cmd->add_option("--sigma", sigma_bern, "Bernstein scale (default: BK)");
  theory_cmd->add_option("--a", a_exp, "Bag-size exponent for the rate exponents")->capture_default_str();

  // kernels
  auto* kernels_cmd = app.add_subcommand("kernels", "List kernel families and Hoelder exponents");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (threads < 0) {
    err << "error: --threads must be positive\n";
    return 1;
  }
  const int pool = threads > 0 ? threads : omp_get_max_threads();
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*kernels_cmd) {
      print_kernels(out);
    } else if (*fit_cmd) {
      const Manifest manifest = read_manifest(fit_manifest);
      const LabeledDataset data = load_dataset(fit_manifest, label_bound);
      const BaseKernelSpec base = resolve_base(fit_k, data.bags(), seed);
      const OuterKernelSpec outer = resolve_outer(fit_k);
      const TrainedModel model =
          fit(data, base, outer, fit_lambda, FitOptions{parse_embedding_method(fit_k.embedding)});
      save_model(fit_out, model, manifest.bag_paths);
      if (!fit_predictions.empty())
        write_matrix_csv(fit_predictions, predict(model, data.bags()), label_header(model.output_dim()));
      out << "bags=" << model.size() << "\n"
          << "base.bandwidth=" << format_real(base.bandwidth) << "\n"
          << "lambda=" << format_real(model.lambda()) << "\n"
          << "jitter=" << format_real(model.jitter_used()) << "\n"
          << "embedding=" << to_string(model.embedder().method()) << "\n"
          << "train_risk=" << format_real(empirical_risk(model, data)) << "\n"
          << "dual_residual=" << format_real(dual_residual(model, data.labels())) << "\n";
    } else if (*predict_cmd) {
      const TrainedModel model = load_model(predict_model);
      std::vector<PointBag> bags;
      Eigen::MatrixXd labels;
      if (!predict_manifest.empty()) {
        const Manifest m = read_manifest(predict_manifest);
        for (const auto& p : m.bag_paths) bags.push_back(read_bag_csv(p));
        labels = m.labels;
      } else {
        for (const auto& p : predict_bags) bags.push_back(read_bag_csv(p));
      }
      if (bags.empty()) throw InvalidArgument("predict: give --manifest or --bags");
      const Eigen::MatrixXd pred = predict(model, bags);
      write_matrix_csv(predict_out, pred, label_header(pred.cols()));
      out << "predicted=" << pred.rows() << "\n";
      if (labels.rows() == pred.rows() && labels.cols() == pred.cols())
        out << "risk=" << format_real((pred - labels).rowwise().squaredNorm().mean()) << "\n";
    } else if (*cv_cmd) {
      const LabeledDataset data = load_dataset(cv_manifest);
      const BaseKernelSpec base = resolve_base(cv_k, data.bags(), seed);
      const OuterKernelSpec outer = resolve_outer(cv_k);
      const FitOptions options{parse_embedding_method(cv_k.embedding)};
      if (cv_grid.empty()) {
        const Embedder embedder(base, data.bags(), options.embedding);
        cv_grid = default_lambda_grid(outer_gram(outer, embedder.geometry()));
      }
      const auto result = cross_validate(data, base, outer, cv_grid, cv_folds, seed, options);
      out << "base.bandwidth=" << format_real(base.bandwidth) << "\n"
          << "best_lambda=" << format_real(result.best_lambda) << "\n";
      if (!cv_out.empty()) {
        Eigen::MatrixXd curve(static_cast<Eigen::Index>(result.curve.size()), 2);
        for (std::size_t i = 0; i < result.curve.size(); ++i) {
          curve(static_cast<Eigen::Index>(i), 0) = result.curve[i].first;
          curve(static_cast<Eigen::Index>(i), 1) = result.curve[i].second;
        }
        write_matrix_csv(cv_out, curve, {"lambda", "mean_risk"});
      }
    } else if (*synth_cmd) {
      meta.mean_law = synthetic::parse_mean_law(mean_law);
      functional.kind = synthetic::parse_label_kind(label_kind);
      const auto ds = synthetic::make_dataset(meta, functional, synth_l, synth_N, seed);
      const fs::path dir(synth_dir);
      fs::create_directories(dir / "bags");
      std::vector<std::string> rel;
      for (std::size_t i = 0; i < ds.data.bags().size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "bag_%05zu.csv", i);
        rel.push_back(std::string("bags/") + name);
        write_bag_csv(dir / rel.back(), ds.data.bags()[i]);
      }
      write_manifest(dir / "manifest.csv", rel, ds.data.labels());
      write_matrix_csv(dir / "bayes.csv", ds.bayes, label_header(ds.bayes.cols()));
      out << "bags=" << rel.size() << "\nmanifest=" << (dir / "manifest.csv").string() << "\n";
    } else if (*rates_cmd) {
      Config cfg = Config::load(rates_config);
      if (app.get_option("--seed")->count() > 0) cfg.set("seed", std::to_string(seed));
      if (no_wall_time) cfg.set("report.wall_time", "false");
      const RateConfig rc = rate_config_from(cfg);
      const RateReport report = run_rate_experiment(rc, pool);
      std::ostringstream csv;
      write_rate_csv(csv, report, rc);
      write_text(rates_out, csv.str());
      if (!rates_summary.empty()) {
        std::ostringstream sum;
        write_rate_summary_csv(sum, report, rc);
        write_text(rates_summary, sum.str());
      }
      std::size_t failed = 0;
      for (const auto& r : report.rows) failed += r.status != "ok";
      out << "cells=" << report.rows.size() << "\nfailed=" << failed << "\n";
      for (const auto& s : report.summaries) {
        out << "a=" << format_real(s.a) << " theory_risk_exponent=" << format_real(s.theory.risk);
        if (s.fitted) out << " slope=" << format_real(s.fit.slope) << " stderr=" << format_real(s.fit.stderr_);
        out << "\n";
      }
    } else if (*conc_cmd) {
      Config cfg = Config::load(conc_config);
      if (app.get_option("--seed")->count() > 0) cfg.set("seed", std::to_string(seed));
      const ConcentrationConfig cc = concentration_config_from(cfg);
      const auto rows = run_concentration_experiment(cc, pool);
      std::ostringstream csv;
      write_concentration_csv(csv, rows, cc);
      write_text(conc_out, csv.str());
      out << csv.str();
    } else if (*theory_cmd) {
      theory::validate(in);
      const auto pbc = theory::pbc_quantities(prior, in.lambda);
      out << "case=" << theory_case << "\n";
      if (theory_case == "wellspecified") {
        const auto terms = theory::wellspecified_terms(in, pbc.A, pbc.B, pbc.Ndim);
        out << "bound=" << format_real(terms.total()) << "\n"
            << "term.two_stage=" << format_real(terms.two_stage) << "\n"
            << "term.residual=" << format_real(terms.residual) << "\n"
            << "term.S1=" << format_real(terms.S1) << "\n"
            << "term.S2=" << format_real(terms.S2) << "\n"
            << "f_z_norm_sq_bound=" << format_real(terms.f_z_norm_sq) << "\n";
        const auto rate = theory::rate_exponent_wellspecified(a_exp, prior.b, prior.c);
        out << "saturation_threshold=" << format_real(theory::saturation_threshold_wellspecified(prior.b, prior.c))
            << "\n"
            << "risk_exponent=" << format_real(rate.risk) << "\n"
            << "lambda_exponent=" << format_real(rate.lambda) << "\n";
      } else if (theory_case == "misspecified") {
        const double sig = sigma_bern ? *sigma_bern : in.B_K;
        const double D = theory::approximation_term_b(in.lambda, s, T_tilde_norm, f_Ts_norm);
        const double weight = std::max(1.0, std::pow(T_tilde_norm, s)) * f_Ts_norm;
        const auto terms = theory::misspecified_terms(in, weight, D, sig);
        out << "bound=" << format_real(theory::misspecified_bound(in, s, T_tilde_norm, f_Ts_norm, sig)) << "\n"
            << "sqrt_bound=" << format_real(terms.sqrt_total()) << "\n"
            << "term.sampling=" << format_real(terms.sampling) << "\n"
            << "term.concentration=" << format_real(terms.concentration) << "\n"
            << "term.approximation=" << format_real(terms.approximation) << "\n";
        const auto rate = theory::rate_exponent_misspecified(a_exp, s);
        const auto cmp = theory::reference_rate_comparison(s);
        out << "saturation_threshold=" << format_real(theory::saturation_threshold_misspecified(s)) << "\n"
            << "risk_exponent=" << format_real(rate.risk) << "\n"
            << "lambda_exponent=" << format_real(rate.lambda) << "\n"
            << "one_stage_reference_exponent=" << format_real(cmp.one_stage) << "\n";
      } else {
        throw CLI::ValidationError("--case", "expected wellspecified or misspecified");
      }
      out << "effective_dimension_bound=" << format_real(pbc.Ndim) << "\n"
          << "min_bag_size=" << format_real(theory::min_bag_size(in)) << "\n"
          << "\ncondition,satisfied,margin\n";
      for (const auto& c : theory::check_conditions(in, pbc.Ndim, T_opnorm))
        out << c.name << ',' << (c.satisfied ? "true" : "false") << ',' << format_real(c.margin) << "\n";
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace merr
