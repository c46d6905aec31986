#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace merr::theory {

/// Parameters of the P(b,c) prior class: eigenvalue decay b, smoothness c,
/// range-space radius R and eigenvalue envelope alpha <= n^b lambda_n <= beta.
struct PriorParams {
  double b = 2.0;
  double c = 2.0;
  double R = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
};

void validate(const PriorParams& prior);

/// Constants and sample sizes entering the finite-sample bounds.
struct BoundInputs {
  double B_k = 1.0;           // sup k(u,u)
  double B_K = 1.0;           // sup K(mu,mu)
  double L = 1.0;             // Hoelder constant of the outer feature map
  double h = 1.0;             // Hoelder exponent, in (0,1]
  double C = 1.0;             // label bound
  std::int64_t l = 1;         // number of bags
  std::int64_t N = 1;         // points per bag
  double lambda = 1.0;
  double eta = 0.1;           // confidence, in (0,1)
  double delta = 1.0;         // embedding concentration slack
  double f_rho_norm_H = 0.0;  // ||f_rho||_H (well-specified case)

  double M() const;
  double Sigma() const { return M() / 2.0; }
  /// 32 log^2(6/eta): the well-specified C_eta.
  double C_eta() const;
  /// log(6/eta): the misspecified theorem reuses the name C_eta for this.
  double C_eta_misspecified() const;
};

void validate(const BoundInputs& in);

struct PbcQuantities {
  double A = 0.0;     // residual upper bound R lambda^c
  double B = 0.0;     // reconstruction-error bound R lambda^(c-1)
  double Ndim = 0.0;  // effective-dimension bound beta b/(b-1) lambda^(-1/b)
};

PbcQuantities pbc_quantities(const PriorParams& prior, double lambda);

/// Term-by-term pieces of the well-specified excess-risk bound
/// 5 [ (S_-1 + S_0) + A + S_1 + S_2 ].
struct WellSpecifiedTerms {
  double f_z_norm_sq = 0.0;  // bound on ||f_z^lambda||_H^2
  double two_stage = 0.0;    // S_-1 + S_0 (bag sampling)
  double residual = 0.0;     // A(lambda)
  double S1 = 0.0;
  double S2 = 0.0;
  double total() const { return 5.0 * (two_stage + residual + S1 + S2); }
};

/// Generic form: A, B and the effective dimension supplied directly.
WellSpecifiedTerms wellspecified_terms(const BoundInputs& in, double A, double B, double Ndim);
double wellspecified_bound_general(const BoundInputs& in, double A, double B, double Ndim);
/// The bound specialized to rho in P(b,c).
double wellspecified_bound(const BoundInputs& in, const PriorParams& prior);

/// Pieces of the misspecified bound on sqrt(excess risk).
struct MisspecifiedTerms {
  double sampling = 0.0;       // bag-size term, decays like N^(-h/2)
  double concentration = 0.0;  // 2 C_eta / sqrt(lambda) { ... }
  double approximation = 0.0;  // D(lambda)
  double sqrt_total() const { return sampling + concentration + approximation; }
};

/// `weight * lambda * D` sits under the square root of the concentration term;
/// weight = ||f_rho||_rho for the general statement, max(1,||T~||^s) ||T~^-s f_rho||
/// under the range-space assumption.
MisspecifiedTerms misspecified_terms(const BoundInputs& in, double weight, double D, double sigma);

/// D_b(lambda, s) = max(1, ||T~||^(s-1)) lambda^min(1,s) ||T~^-s f_rho||.
double approximation_term_b(double lambda, double s, double T_tilde_norm, double f_rho_Ts_norm);
/// D_a(lambda, q) = ||f_rho - S_K^* q|| + max(1, ||T||) sqrt(lambda) ||q||.
double approximation_term_a(double lambda, double residual_norm, double T_opnorm, double q_norm);

/// Squared bound for general q in H.
double misspecified_bound_general(const BoundInputs& in, double f_rho_L2_norm, double D_a, double sigma);
/// Squared bound under f_rho in Im(T~^s). `sigma_bern` defaults to B_K.
double misspecified_bound(const BoundInputs& in, double s, double T_tilde_norm, double f_rho_Ts_norm,
                          double sigma_bern);

/// ceil(l^(a/h) ln l), at least 1.
std::int64_t bag_size_schedule(std::int64_t l, double a, double h);

struct RateExponents {
  double risk = 0.0;    // excess risk = O(l^risk)
  double lambda = 0.0;  // lambda = l^lambda
};

double saturation_threshold_wellspecified(double b, double c);
double saturation_threshold_misspecified(double s);

RateExponents rate_exponent_wellspecified(double a, double b, double c);
RateExponents rate_exponent_misspecified(double a, double s);

struct RateComparison {
  double two_stage = 0.0;  // -2s/(s+2)
  double one_stage = 0.0;  // -2s/(2s+1)
};

RateComparison reference_rate_comparison(double s);

struct ConditionCheck {
  std::string name;
  bool satisfied = false;
  double margin = 0.0;  // >= 0 exactly when satisfied
};

/// Smallest N allowed by the bag-size precondition.
double min_bag_size(const BoundInputs& in);

/// Reports every precondition of the two finite-sample theorems; never throws
/// on a violated condition.
std::vector<ConditionCheck> check_conditions(const BoundInputs& in, double Ndim, double T_opnorm);

/// Tr[K (K + l lambda I)^-1], the empirical proxy of the effective dimension.
double empirical_effective_dimension(const Eigen::MatrixXd& outer_gram, double lambda, std::int64_t l);

}  // namespace merr::theory
