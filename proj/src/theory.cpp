#include "merr/theory.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "merr/error.hpp"

namespace merr::theory {

namespace {

double finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite intermediate");
  return v;
}

double concentration_factor(const BoundInputs& in) {
  return 1.0 + std::sqrt(std::log(static_cast<double>(in.l)) + in.delta);
}

}  // namespace

double BoundInputs::M() const { return 2.0 * (C + f_rho_norm_H * std::sqrt(B_K)); }

double BoundInputs::C_eta() const {
  const double lg = std::log(6.0 / eta);
  return 32.0 * lg * lg;
}

double BoundInputs::C_eta_misspecified() const { return std::log(6.0 / eta); }

void validate(const PriorParams& p) {
  if (!(p.b > 1.0)) throw InvalidArgument("prior: b must exceed 1");
  if (!(p.c > 1.0 && p.c <= 2.0)) throw InvalidArgument("prior: c must lie in (1,2]");
  if (!(p.R > 0.0 && p.alpha > 0.0 && p.beta > 0.0)) throw InvalidArgument("prior: R, alpha, beta must be positive");
}

void validate(const BoundInputs& in) {
  if (!(in.h > 0.0 && in.h <= 1.0)) throw InvalidArgument("bound inputs: h must lie in (0,1]");
  if (!(in.eta > 0.0 && in.eta < 1.0)) throw InvalidArgument("bound inputs: eta must lie in (0,1)");
  if (!(in.delta > 0.0)) throw InvalidArgument("bound inputs: delta must be positive");
  if (!(in.lambda > 0.0)) throw InvalidArgument("bound inputs: lambda must be positive");
  if (in.l < 1 || in.N < 1) throw InvalidArgument("bound inputs: l and N must be >= 1");
  if (!(in.B_k > 0.0 && in.B_K > 0.0)) throw InvalidArgument("bound inputs: kernel bounds must be positive");
  if (!(in.L >= 0.0 && in.C >= 0.0 && in.f_rho_norm_H >= 0.0))
    throw InvalidArgument("bound inputs: L, C and ||f_rho|| must be nonnegative");
}

PbcQuantities pbc_quantities(const PriorParams& prior, double lambda) {
  validate(prior);
  if (!(lambda > 0.0)) throw InvalidArgument("pbc_quantities: lambda must be positive");
  return {prior.R * std::pow(lambda, prior.c), prior.R * std::pow(lambda, prior.c - 1.0),
          prior.beta * prior.b / (prior.b - 1.0) * std::pow(lambda, -1.0 / prior.b)};
}

WellSpecifiedTerms wellspecified_terms(const BoundInputs& in, double A, double B, double Ndim) {
  validate(in);
  const double lam = in.lambda;
  const double l = static_cast<double>(in.l);
  const double N = static_cast<double>(in.N);
  const double M2 = in.M() * in.M();
  const double Sigma2 = in.Sigma() * in.Sigma();
  const double c_eta = in.C_eta();

  const double variance_part = M2 * in.B_K / (l * l * lam) + Sigma2 * Ndim / l;
  const double bias_part = 4.0 * in.B_K * in.B_K * B / (l * l) + in.B_K * A / l;

  WellSpecifiedTerms t;
  t.f_z_norm_sq = (c_eta / 32.0) * (64.0 / lam * variance_part + 24.0 / (lam * lam) * bias_part) + B +
                  in.f_rho_norm_H * in.f_rho_norm_H;
  t.two_stage = 4.0 * in.L * in.L * std::pow(concentration_factor(in), 2.0 * in.h) * std::pow(2.0 * in.B_k, in.h) /
                (lam * std::pow(N, in.h)) * (in.C * in.C + 4.0 * in.B_K * t.f_z_norm_sq);
  t.residual = A;
  t.S1 = c_eta * (in.B_K * M2 / (l * l * lam) + Sigma2 * Ndim / l);
  t.S2 = c_eta * (in.B_K * in.B_K * B / (l * l * lam) + in.B_K * A / (4.0 * l * lam));
  finite(t.total(), "wellspecified bound");
  return t;
}

double wellspecified_bound_general(const BoundInputs& in, double A, double B, double Ndim) {
  return wellspecified_terms(in, A, B, Ndim).total();
}

double wellspecified_bound(const BoundInputs& in, const PriorParams& prior) {
  const PbcQuantities q = pbc_quantities(prior, in.lambda);
  return wellspecified_bound_general(in, q.A, q.B, q.Ndim);
}

MisspecifiedTerms misspecified_terms(const BoundInputs& in, double weight, double D, double sigma) {
  validate(in);
  if (!(weight >= 0.0 && D >= 0.0 && sigma >= 0.0))
    throw InvalidArgument("misspecified bound: weight, D and sigma must be nonnegative");
  const double lam = in.lambda;
  const double l = static_cast<double>(in.l);
  const double N = static_cast<double>(in.N);
  const double sqrt_BK = std::sqrt(in.B_K);

  MisspecifiedTerms t;
  t.sampling = 2.0 * in.L * in.C * std::pow(concentration_factor(in), in.h) * std::pow(2.0 * in.B_k, in.h / 2.0) /
               (std::sqrt(lam) * std::pow(N, in.h / 2.0)) * (1.0 + 2.0 * sqrt_BK / std::sqrt(lam));
  t.concentration = 2.0 * in.C_eta_misspecified() / std::sqrt(lam) *
                    ((2.0 * in.C * sqrt_BK / l + in.C * sqrt_BK / std::sqrt(l)) +
                     (2.0 * in.B_K / l + sigma / std::sqrt(l)) / lam * std::sqrt(weight * lam * D));
  t.approximation = D;
  finite(t.sqrt_total(), "misspecified bound");
  return t;
}

double approximation_term_b(double lambda, double s, double T_tilde_norm, double f_rho_Ts_norm) {
  if (!(lambda > 0.0 && s > 0.0)) throw InvalidArgument("D_b: lambda and s must be positive");
  if (!(T_tilde_norm >= 0.0 && f_rho_Ts_norm >= 0.0)) throw InvalidArgument("D_b: norms must be nonnegative");
  return std::max(1.0, std::pow(T_tilde_norm, s - 1.0)) * std::pow(lambda, std::min(1.0, s)) * f_rho_Ts_norm;
}

double approximation_term_a(double lambda, double residual_norm, double T_opnorm, double q_norm) {
  if (!(lambda > 0.0)) throw InvalidArgument("D_a: lambda must be positive");
  return residual_norm + std::max(1.0, T_opnorm) * std::sqrt(lambda) * q_norm;
}

double misspecified_bound_general(const BoundInputs& in, double f_rho_L2_norm, double D_a, double sigma) {
  const double root = misspecified_terms(in, f_rho_L2_norm, D_a, sigma).sqrt_total();
  return root * root;
}

double misspecified_bound(const BoundInputs& in, double s, double T_tilde_norm, double f_rho_Ts_norm,
                          double sigma_bern) {
  const double D = approximation_term_b(in.lambda, s, T_tilde_norm, f_rho_Ts_norm);
  const double weight = std::max(1.0, std::pow(T_tilde_norm, s)) * f_rho_Ts_norm;
  const double root = misspecified_terms(in, weight, D, sigma_bern).sqrt_total();
  return root * root;
}

std::int64_t bag_size_schedule(std::int64_t l, double a, double h) {
  if (l < 2) throw InvalidArgument("bag_size_schedule: l must be >= 2");
  if (!(a > 0.0)) throw InvalidArgument("bag_size_schedule: a must be positive");
  if (!(h > 0.0 && h <= 1.0)) throw InvalidArgument("bag_size_schedule: h must lie in (0,1]");
  const double ld = static_cast<double>(l);
  const double n = std::ceil(std::pow(ld, a / h) * std::log(ld));
  if (!(n < 9.0e15)) throw InvalidArgument("bag_size_schedule: bag size overflows");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
}

double saturation_threshold_wellspecified(double b, double c) { return b * (c + 1.0) / (b * c + 1.0); }

double saturation_threshold_misspecified(double s) { return (s + 1.0) / (s + 2.0); }

RateExponents rate_exponent_wellspecified(double a, double b, double c) {
  if (!(a > 0.0)) throw InvalidArgument("rate exponent: a must be positive");
  validate(PriorParams{b, c, 1.0, 1.0, 1.0});
  if (a <= saturation_threshold_wellspecified(b, c)) return {-a * c / (c + 1.0), -a / (c + 1.0)};
  return {-b * c / (b * c + 1.0), -b / (b * c + 1.0)};
}

RateExponents rate_exponent_misspecified(double a, double s) {
  if (!(a > 0.0)) throw InvalidArgument("rate exponent: a must be positive");
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("rate exponent: s must lie in (0,1]");
  if (a <= saturation_threshold_misspecified(s)) return {-2.0 * s * a / (s + 1.0), -a / (s + 1.0)};
  return {-2.0 * s / (s + 2.0), -1.0 / (s + 2.0)};
}

RateComparison reference_rate_comparison(double s) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("rate comparison: s must lie in (0,1]");
  return {-2.0 * s / (s + 2.0), -2.0 * s / (2.0 * s + 1.0)};
}

double min_bag_size(const BoundInputs& in) {
  validate(in);
  const double f = concentration_factor(in);
  return f * f * std::pow(2.0, (in.h + 6.0) / in.h) * in.B_k * std::pow(in.B_K, 1.0 / in.h) *
         std::pow(in.L, 2.0 / in.h) / std::pow(in.lambda, 2.0 / in.h);
}

std::vector<ConditionCheck> check_conditions(const BoundInputs& in, double Ndim, double T_opnorm) {
  std::vector<ConditionCheck> out;
  const double l = static_cast<double>(in.l);
  auto add = [&out](std::string name, double margin) {
    out.push_back({std::move(name), margin >= 0.0, margin});
  };
  add("l_ge_2CetaBK_Ndim_over_lambda", l - 2.0 * in.C_eta() * in.B_K * Ndim / in.lambda);
  add("lambda_le_T_opnorm", T_opnorm - in.lambda);
  add("N_ge_min_bag_size", static_cast<double>(in.N) - min_bag_size(in));
  const double m = 12.0 * in.B_K * in.C_eta_misspecified() / in.lambda;
  add("l_ge_misspecified_threshold", l - m * m);
  return out;
}

double empirical_effective_dimension(const Eigen::MatrixXd& outer_gram, double lambda, std::int64_t l) {
  if (!(lambda > 0.0)) throw InvalidArgument("effective dimension: lambda must be positive");
  if (l < 1) throw InvalidArgument("effective dimension: l must be >= 1");
  if (outer_gram.rows() != outer_gram.cols()) throw InvalidArgument("effective dimension: gram must be square");
  Eigen::MatrixXd reg = outer_gram;
  reg.diagonal().array() += static_cast<double>(l) * lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success) throw NumericError("effective dimension: factorization failed");
  // Tr[(K + l lambda I)^-1 K] equals Tr[K (K + l lambda I)^-1].
  return finite(llt.solve(outer_gram).trace(), "effective dimension");
}

}  // namespace merr::theory
