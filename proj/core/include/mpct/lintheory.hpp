#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpct/numerics.hpp"

namespace mpct {

/// Deep linear chain x(t+1) = W(t) x(t) with whitened-data quadratic loss
/// 0.5*|W(T-1)...W(0) - Phi|_F^2.
struct LinearChain {
  std::size_t depth = 0;  // T
  std::vector<Matrix> weights;
  Matrix phi;
  double perturbation_bound = 0.0;  // c of the I + W~/T construction, 0 if free-form
};

/// W(t2-1)...W(t1); the empty range gives the identity.
Matrix partial_product(const LinearChain& chain, std::size_t t1, std::size_t t2);

/// Closed-form horizon gradient for W(t): with s = min(t+h, T),
///   (W_{t+1}^{s})^T (W_0^{s} - Phi) (W_0^{t})^T.
Matrix closed_form_gradient(const LinearChain& chain, std::size_t t, std::size_t h);

/// Chain with W(t) = I + W~(t)/T, Gaussian W~ rescaled to spectral norm at
/// most (exactly, when exceeded) c; Phi is an independent Gaussian matrix.
LinearChain make_theorem_chain(std::size_t n, std::size_t depth, double c, SeededRng& rng);

struct ScalingRow {
  double alpha = 0.0;
  double mean_one_minus_cos2 = 0.0;
  double stderr_one_minus_cos2 = 0.0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // log-log fit of mean(1-cos^2) against (1-alpha)
  std::vector<std::uint64_t> seeds;
};

/// Samples Theorem-style chains per seed, measures cos(theta_h) at
/// h = floor(alpha*T) from the closed forms, and fits the log-log slope of
/// the seed-averaged 1-cos^2 against 1-alpha. alpha == 1 rows are recorded
/// (exactly zero) but excluded from the fit.
ScalingReport scaling_experiment(std::size_t n, std::size_t depth, double c,
                                 const std::vector<std::uint64_t>& seeds,
                                 const std::vector<double>& alphas);

/// CSV `alpha,mean_one_minus_cos2,stderr` plus a footer `slope=<value>`.
std::string scaling_report_to_csv(const ScalingReport& report);

struct LemmaBoundsReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::vector<std::string> failures;
};

/// Numerical check of the product-norm and tail-product bounds on a chain
/// built by the I + W~/T construction: over sampled index pairs,
///   sigma_min(W_{t1}^{t2}) >= (1-c/T)^k,  |W_{t1}^{t2}|_2 <= (1+c/T)^k
/// with k the factor count, and |I - W_{t}^{T}|_2 <= e^{(T-t)c/T} - 1.
LemmaBoundsReport lemma_bounds_check(const LinearChain& chain, std::size_t samples,
                                     SeededRng& rng);

}  // namespace mpct
