// Acceptance gate: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line each. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <omp.h>

#include <Eigen/Dense>

#include "merr/config.hpp"
#include "merr/embedding.hpp"
#include "merr/experiments.hpp"
#include "merr/regressor.hpp"
#include "merr/synthetic.hpp"
#include "merr/theory.hpp"
#include "support.hpp"
#include "theory_oracles.hpp"

using namespace merr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome set_kernel_oracle() {
  std::mt19937_64 gen(1001);
  std::uniform_int_distribution<int> l_dist(1, 5), n_dist(1, 10), d_dist(1, 3);
  const char* families[] = {"gaussian", "laplacian", "cauchy"};
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int l = l_dist(gen), d = d_dist(gen);
    std::vector<PointBag> bags;
    for (int i = 0; i < l; ++i) bags.push_back(test::random_bag(gen, n_dist(gen), d, 0.5 * i));
    const char* fam = families[inst % 3];
    const double bw = 0.5 + 0.05 * inst;
    const auto tiled = embedding_gram(BaseKernelSpec{parse_base_family(fam), bw}, bags);
    worst = std::max(worst, (tiled.inner() - test::oracle_set_gram(fam, bw, bags)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max |tiled - quadruple loop| = " + fmt("%.3g", worst) + " over 50 instances"};
}

Outcome population_kernel() {
  // d=1, sigma = sigma_k = 1: <mu_i, mu_j> = sqrt(1/3) exp(-(m_i - m_j)^2 / 6).
  std::mt19937_64 gen(1002);
  std::uniform_real_distribution<double> mean(-2.0, 2.0);
  std::vector<Eigen::VectorXd> means;
  for (int i = 0; i < 40; ++i) means.push_back(Eigen::VectorXd::Constant(1, mean(gen)));
  const auto bags = synthetic::sample_bags(means, 1.0, 10000, 77);
  const Embedder embedder(BaseKernelSpec{BaseFamily::gaussian, 1.0}, bags, EmbeddingMethod::taylor);
  double worst = 0.0;
  for (int p = 0; p < 20; ++p) {
    const double dm = means[static_cast<std::size_t>(p)](0) - means[static_cast<std::size_t>(p + 20)](0);
    const double closed = std::sqrt(1.0 / 3.0) * std::exp(-dm * dm / 6.0);
    worst = std::max(worst, std::abs(embedder.geometry().inner(p, p + 20) - closed));
  }
  return {worst <= 0.02, "max |empirical - closed form| = " + fmt("%.4f", worst) + " on 20 pairs at N=10^4"};
}

Outcome solver() {
  std::mt19937_64 gen(1003);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> l_dist(1, 8);
  std::uniform_real_distribution<double> log_lam(-8.0, 1.0);
  const BaseKernelSpec base{BaseFamily::gaussian, 1.0};
  double worst_inv = 0.0, worst_interp = 0.0, worst_obj = -1e300;
  int interp_cases = 0;
  for (int fit_no = 0; fit_no < 100; ++fit_no) {
    const int l = l_dist(gen);
    auto bags = test::random_bags(gen, l, 6, 2);
    Eigen::MatrixXd Y(l, 2);
    for (int i = 0; i < l; ++i) Y.row(i) << normal(gen), normal(gen);
    const LabeledDataset ds(bags, Y);
    const OuterKernelSpec outer{fit_no % 2 ? OuterFamily::gaussian : OuterFamily::linear, 1.0};
    const double lambda = std::pow(10.0, log_lam(gen));
    const auto model = fit(ds, base, outer, lambda);
    const Eigen::MatrixXd K = model.gram();
    const Eigen::MatrixXd oracle = (K + l * lambda * Eigen::MatrixXd::Identity(l, l)).inverse() * Y;
    worst_inv = std::max(worst_inv, (model.duals() - oracle).norm() / oracle.norm());
    const double obj = l * lambda * (model.duals().transpose() * K * model.duals()).trace() - Y.squaredNorm();
    worst_obj = std::max(worst_obj, obj / Y.squaredNorm());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    if (eig.eigenvalues().minCoeff() >= 1e-6) {
      const auto tiny = fit(ds, base, outer, 1e-10);
      worst_interp = std::max(worst_interp, (predict(tiny, bags) - Y).cwiseAbs().maxCoeff() / Y.cwiseAbs().maxCoeff());
      ++interp_cases;
    }
  }
  const bool pass = worst_inv <= 1e-10 && worst_interp <= 1e-4 && worst_obj <= 1e-12 && interp_cases > 0;
  return {pass, "dual rel err " + fmt("%.3g", worst_inv) + ", interpolation residual/max|Y| " +
                    fmt("%.3g", worst_interp) + " (" + std::to_string(interp_cases) +
                    " full-rank cases), max (l lambda a'Ka - |Y|^2)/|Y|^2 = " + fmt("%.3g", worst_obj)};
}

Outcome vector_outputs() {
  std::mt19937_64 gen(1004);
  std::normal_distribution<double> normal(0.0, 1.0);
  const BaseKernelSpec base{BaseFamily::laplacian, 1.2};
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int l = 3 + inst % 8;
    auto bags = test::random_bags(gen, l, 7, 2);
    Eigen::MatrixXd Y(l, 3);
    for (int i = 0; i < l; ++i) Y.row(i) << normal(gen), normal(gen), normal(gen);
    const OuterKernelSpec outer{inst % 2 ? OuterFamily::cauchy : OuterFamily::linear, 0.8};
    const auto joint = fit(LabeledDataset(bags, Y), base, outer, 1e-3);
    const auto test_bags = test::random_bags(gen, 4, 7, 2);
    const auto jp = predict(joint, test_bags);
    for (int j = 0; j < 3; ++j) {
      const auto single = fit(LabeledDataset(bags, Y.col(j)), base, outer, 1e-3);
      worst = std::max(worst, (single.duals().col(0) - joint.duals().col(j)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (predict(single, test_bags).col(0) - jp.col(j)).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-12, "max |joint - columnwise| = " + fmt("%.3g", worst) + " over 20 instances"};
}

Outcome rate_formulas() {
  const auto w = theory::rate_exponent_wellspecified(6.0 / 5.0, 2.0, 2.0);
  const auto m = theory::rate_exponent_misspecified(2.0 / 3.0, 1.0);
  const double exact_err = std::max({std::abs(w.risk + 0.8), std::abs(w.lambda + 0.4), std::abs(m.risk + 2.0 / 3.0),
                                     std::abs(m.lambda + 1.0 / 3.0)});
  std::mt19937_64 gen(1005);
  std::uniform_real_distribution<double> bd(1.01, 10.0), cd(1.001, 2.0), sd(0.001, 1.0);
  double jump = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double b = bd(gen), c = cd(gen), s = sd(gen);
    const double tw = b * (c + 1.0) / (b * c + 1.0), tm = (s + 1.0) / (s + 2.0);
    const auto below = theory::rate_exponent_wellspecified(tw, b, c);
    const auto above = theory::rate_exponent_wellspecified(std::nextafter(tw, 1e9), b, c);
    const auto mb = theory::rate_exponent_misspecified(tm, s);
    const auto ma = theory::rate_exponent_misspecified(std::nextafter(tm, 1e9), s);
    jump = std::max({jump, std::abs(below.risk - above.risk), std::abs(below.lambda - above.lambda),
                     std::abs(mb.risk - ma.risk), std::abs(mb.lambda - ma.lambda)});
  }
  return {exact_err <= 1e-15 && jump <= 1e-12, "worst deviation from (-4/5,-2/5),(-2/3,-1/3) = " +
                                                   fmt("%.3g", exact_err) + ", max threshold jump = " +
                                                   fmt("%.3g", jump)};
}

Outcome saturation(int threads) {
  const RateConfig rc = rate_config_from(Config::load(fs::path(MERR_SOURCE_DIR) / "configs" / "saturation.cfg"));
  const double t = theory::saturation_threshold_wellspecified(rc.b, rc.c);
  const auto report = run_rate_experiment(rc, threads);
  auto summary_for = [&](double a) -> const RateSummary* {
    for (const auto& s : report.summaries)
      if (std::abs(s.a - a) < 1e-12) return &s;
    return nullptr;
  };
  const auto* at = summary_for(t);
  const auto* above = summary_for(t + 0.4);
  const auto* half = summary_for(t / 2.0);
  const bool grid_ok = rc.l_grid == std::vector<std::int64_t>{32, 64, 128, 256} && rc.trials == 10 &&
                       rc.functional.noise_sigma == 0.1 && rc.h == 1.0;
  if (!at || !above || !half || !grid_ok || at->curve.size() != 4 || above->curve.size() != 4 ||
      half->curve.size() != 4 || !at->fitted)
    return {false, "configs/saturation.cfg does not cover the required grid, or cells failed"};
  double max_gap = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    max_gap = std::max(max_gap, std::abs(above->curve[i].second - at->curve[i].second) / at->curve[i].second);
  const double worse = half->curve.back().second / at->curve.back().second - 1.0;
  const bool i_ok = at->fit.slope <= -0.3 && at->fit.stderr_ < 0.15;
  const bool ii_ok = max_gap < 0.25;
  const bool iii_ok = worse >= 0.25;
  return {i_ok && ii_ok && iii_ok,
          "(i) slope " + fmt("%.3f", at->fit.slope) + " +- " + fmt("%.3f", at->fit.stderr_) + (i_ok ? " ok" : " FAIL") +
              "; (ii) max gap a+0.4 vs a* " + fmt("%.1f%%", 100.0 * max_gap) + (ii_ok ? " ok" : " FAIL") +
              "; (iii) a*/2 worse by " + fmt("%.1f%%", 100.0 * worse) + " at l=256" + (iii_ok ? " ok" : " FAIL")};
}

Outcome concentration(int threads) {
  const auto cc = concentration_config_from(Config::load(fs::path(MERR_SOURCE_DIR) / "configs" / "concentration.cfg"));
  if (cc.N_grid != std::vector<std::int64_t>{25, 100, 400} || cc.trials != 500 || cc.alpha != 3.0)
    return {false, "configs/concentration.cfg does not match the required grid"};
  const auto rows = run_concentration_experiment(cc, threads);
  bool pass = true;
  std::string detail = "exceedance";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pass &= rows[i].exceed_freq <= 3.0 * std::exp(-3.0);
    if (i > 0) pass &= rows[i].exceed_freq <= rows[i - 1].exceed_freq;
    detail += " N=" + std::to_string(rows[i].N) + ":" + fmt("%.3f", rows[i].exceed_freq);
  }
  return {pass, detail + " (limit " + fmt("%.4f", 3.0 * std::exp(-3.0)) + ", nonincreasing)"};
}

Outcome bound_evaluators() {
  std::mt19937_64 gen(1008);
  std::uniform_real_distribution<double> unif(0.1, 2.0), sdist(0.05, 1.5);
  double worst = 0.0;
  bool decreasing = true;
  for (int i = 0; i < 20; ++i) {
    auto [in, prior] = test::oracle::random_inputs(gen);
    const double s = sdist(gen), Tn = unif(gen), fn = unif(gen);
    worst = std::max(worst, test::rel_err(theory::wellspecified_bound(in, prior),
                                          test::oracle::wellspecified_display(in, prior)));
    const double root = test::oracle::misspecified_display_b(in, s, Tn, fn, in.B_K);
    worst = std::max(worst, test::rel_err(theory::misspecified_bound(in, s, Tn, fn, in.B_K), root * root));
    double pw = INFINITY, pm = INFINITY;
    for (std::int64_t N = 1; N <= 100000000; N *= 10) {
      in.N = N;
      const double w = theory::wellspecified_bound(in, prior), m = theory::misspecified_bound(in, s, Tn, fn, in.B_K);
      decreasing &= w < pw && m < pm;
      pw = w;
      pm = m;
    }
  }
  return {worst <= 1e-9 && decreasing,
          "max rel err vs second transcription " + fmt("%.3g", worst) + (decreasing ? ", strictly decreasing in N" : ", NOT decreasing in N")};
}

Outcome effective_dimension() {
  std::mt19937_64 gen(1009);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  bool bounded = true;
  for (int l = 1; l <= 16; ++l) {
    Eigen::MatrixXd X(l, 4);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < 4; ++j) X(i, j) = normal(gen);
    const Eigen::MatrixXd K = X * X.transpose() / 4.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    for (double lambda : {1e-5, 1e-3, 0.1, 10.0}) {
      double want = 0.0;
      for (int n = 0; n < l; ++n) {
        const double ev = std::max(0.0, eig.eigenvalues()(n));
        want += ev / (ev + l * lambda);
      }
      const double got = theory::empirical_effective_dimension(K, lambda, l);
      worst = std::max(worst, std::abs(got - want));
      bounded &= got >= 0.0 && got <= l;
    }
  }
  bool dominated = true;
  for (double b : {1.2, 2.0, 4.0})
    for (double beta : {1.0, 3.0, 10.0})
      for (int l : {10, 100, 400})
        for (double scale : {1.0, static_cast<double>(l)}) {
          // scale = l gives Gram eigenvalues whose operator counterpart K/l has lambda_n = beta/n^b.
          Eigen::MatrixXd K = Eigen::MatrixXd::Zero(l, l);
          for (int n = 1; n <= l; ++n) K(n - 1, n - 1) = scale * beta / std::pow(n, b);
          for (double lambda : {1e-6, 1e-3, 0.1, 1.0}) {
            const double bound = theory::pbc_quantities(theory::PriorParams{b, 2.0, 1.0, beta, beta}, lambda).Ndim;
            dominated &= bound >= theory::empirical_effective_dimension(K, lambda, l);
          }
        }
  return {worst <= 1e-10 && bounded && dominated, "max |proxy - eigen oracle| = " + fmt("%.3g", worst) +
                                                      (bounded ? ", within [0,l]" : ", OUT OF [0,l]") +
                                                      (dominated ? ", prior bound dominates" : ", prior bound VIOLATED")};
}

Outcome reproducibility() {
  const fs::path cli = MERR_CLI_PATH;
  const fs::path cfg = fs::path(MERR_SOURCE_DIR) / "configs" / "reproducibility.cfg";
  const fs::path dir = fs::temp_directory_path() / "merr_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](int threads) {
    const fs::path out = dir / ("threads" + std::to_string(threads) + ".csv");
    const std::string cmd = "\"" + cli.string() + "\" --seed 4242 --threads " + std::to_string(threads) +
                            " rates --config \"" + cfg.string() + "\" --out \"" + out.string() +
                            "\" --no-wall-time > /dev/null";
    const int rc = std::system(cmd.c_str());
    std::ifstream in(out, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return std::make_pair(rc, ss.str());
  };
  const auto [rc1, a] = run(1);
  const auto [rc8, b] = run(8);
  const bool pass = rc1 == 0 && rc8 == 0 && !a.empty() && a == b;
  return {pass, pass ? "byte-identical reports (" + std::to_string(a.size()) + " bytes)"
                     : "reports differ or the CLI failed"};
}

}  // namespace

int main() {
  const int threads = omp_get_max_threads();
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // runtime budget; 0 when the criterion states none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "set-kernel oracle", 1.0, set_kernel_oracle},
      {2, "closed-form population kernel", 10.0, population_kernel},
      {3, "solver correctness", 0.0, solver},
      {4, "vector-output decoupling", 0.0, vector_outputs},
      {5, "rate exponent formulas", 0.0, rate_formulas},
      {6, "saturation experiment", 600.0, [&] { return saturation(threads); }},
      {7, "concentration", 120.0, [&] { return concentration(threads); }},
      {8, "bound evaluators", 0.0, bound_evaluators},
      {9, "effective dimension", 0.0, effective_dimension},
      {10, "reproducibility", 0.0, reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = fmt("%.2f s", secs);
    if (c.limit_s > 0.0) {
      timing += " (budget " + fmt("%.0f s", c.limit_s) + ")";
      pass &= secs < c.limit_s;
    }
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << " " << c.name << ": " << o.detail << "; "
              << timing << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
