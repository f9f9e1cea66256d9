#include "mpct/lintheory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mpct {

Matrix partial_product(const LinearChain& chain, std::size_t t1, std::size_t t2) {
  if (t1 > t2 || t2 > chain.depth)
    throw std::out_of_range("partial_product: need 0 <= t1 <= t2 <= T");
  const std::size_t n = chain.phi.rows ? chain.phi.rows : chain.weights.front().rows;
  Matrix p = Matrix::identity(n);
  for (std::size_t t = t1; t < t2; ++t) p = matmul(chain.weights[t], p);
  return p;
}

Matrix closed_form_gradient(const LinearChain& chain, std::size_t t, std::size_t h) {
  if (t >= chain.depth) throw std::out_of_range("closed_form_gradient: block index");
  if (h < 1 || h > chain.depth) throw std::out_of_range("closed_form_gradient: horizon");
  const std::size_t s = std::min(t + h, chain.depth);
  const Matrix dl = partial_product(chain, 0, s) - chain.phi;  // dL/dW^s
  return matmul(matmul(transpose(partial_product(chain, t + 1, s)), dl),
                transpose(partial_product(chain, 0, t)));
}

LinearChain make_theorem_chain(std::size_t n, std::size_t depth, double c, SeededRng& rng) {
  LinearChain chain;
  chain.depth = depth;
  chain.perturbation_bound = c;
  const double std = 1.0 / std::sqrt(static_cast<double>(n));
  // One perturbation direction per chain: independent per-layer draws would
  // random-walk-cancel in the products W_t^T (norm ~ sqrt(T-t)/T instead of
  // (T-t)/T), hiding the cubic angle decay the norm bounds describe. A shared
  // direction makes the per-layer norms add coherently, which is the regime
  // the bounds are tight in.
  Matrix w_tilde = gaussian_matrix(n, n, std, rng);
  const double norm = spectral_norm(w_tilde);
  if (norm > c) w_tilde = (c / norm) * w_tilde;  // keep the direction, clamp the norm
  const double inv_t = 1.0 / static_cast<double>(depth);
  for (std::size_t t = 0; t < depth; ++t) {
    Matrix w = Matrix::identity(n);
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] += inv_t * w_tilde.data[i];
    chain.weights.push_back(std::move(w));
  }
  chain.phi = gaussian_matrix(n, n, std, rng);
  return chain;
}

namespace {

std::vector<double> concat_gradients(const LinearChain& chain, std::size_t h) {
  std::vector<double> out;
  for (std::size_t t = 0; t < chain.depth; ++t) {
    const Matrix g = closed_form_gradient(chain, t, h);
    out.insert(out.end(), g.data.begin(), g.data.end());
  }
  return out;
}

}  // namespace

ScalingReport scaling_experiment(std::size_t n, std::size_t depth, double c,
                                 const std::vector<std::uint64_t>& seeds,
                                 const std::vector<double>& alphas) {
  for (double a : alphas)
    if (!(a > 0.0) || a > 1.0)
      throw std::invalid_argument("scaling_experiment: alphas must lie in (0,1]");
  ScalingReport report;
  report.seeds = seeds;
  std::vector<std::vector<double>> per_alpha(alphas.size());
  for (std::uint64_t seed : seeds) {
    SeededRng rng(seed);
    const LinearChain chain = make_theorem_chain(n, depth, c, rng);
    const std::vector<double> g_full = concat_gradients(chain, depth);
    if (l2_norm(g_full) == 0.0)
      throw std::invalid_argument("scaling_experiment: degenerate chain, zero gradient");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      const std::size_t h = std::max<std::size_t>(
          1, static_cast<std::size_t>(alphas[i] * static_cast<double>(depth)));
      if (h == depth) {
        per_alpha[i].push_back(0.0);  // g_h is g_T itself
        continue;
      }
      const double cos_theta = cosine_similarity(concat_gradients(chain, h), g_full);
      per_alpha[i].push_back(1.0 - cos_theta * cos_theta);
    }
  }
  std::vector<double> log_x, log_y;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    ScalingRow row;
    row.alpha = alphas[i];
    double mean = 0.0;
    for (double v : per_alpha[i]) mean += v;
    mean /= static_cast<double>(per_alpha[i].size());
    double var = 0.0;
    for (double v : per_alpha[i]) var += (v - mean) * (v - mean);
    if (per_alpha[i].size() > 1) var /= static_cast<double>(per_alpha[i].size() - 1);
    row.mean_one_minus_cos2 = mean;
    row.stderr_one_minus_cos2 = std::sqrt(var / static_cast<double>(per_alpha[i].size()));
    report.rows.push_back(row);
    if (alphas[i] < 1.0 && mean > 0.0) {
      log_x.push_back(std::log(1.0 - alphas[i]));
      log_y.push_back(std::log(mean));
    }
  }
  if (log_x.size() >= 2) {
    const PolyModel fit = polyfit(log_x, log_y, 1);
    report.slope = fit.coefficients[1];
  }
  return report;
}

std::string scaling_report_to_csv(const ScalingReport& report) {
  std::string out = "alpha,mean_one_minus_cos2,stderr\n";
  char buf[160];
  for (const ScalingRow& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.alpha, r.mean_one_minus_cos2,
                  r.stderr_one_minus_cos2);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "slope=%.17g\n", report.slope);
  out += buf;
  return out;
}

LemmaBoundsReport lemma_bounds_check(const LinearChain& chain, std::size_t samples,
                                     SeededRng& rng) {
  LemmaBoundsReport report;
  const double c = chain.perturbation_bound;
  const double t_real = static_cast<double>(chain.depth);
  // Power iteration resolves the extreme singular values to ~1e-10; allow
  // that much slack in the comparisons.
  const double tol = 1e-9;
  char buf[192];
  for (std::size_t i = 0; i < samples; ++i) {
    std::size_t t1 = static_cast<std::size_t>(rng.uniform(0.0, t_real + 1.0));
    std::size_t t2 = static_cast<std::size_t>(rng.uniform(0.0, t_real + 1.0));
    t1 = std::min(t1, chain.depth);
    t2 = std::min(t2, chain.depth);
    if (t1 > t2) std::swap(t1, t2);
    const Matrix p = partial_product(chain, t1, t2);
    const double k = static_cast<double>(t2 - t1);
    const double lower = std::pow(1.0 - c / t_real, k);
    const double upper = std::pow(1.0 + c / t_real, k);
    const double smin = min_singular_value(p);
    const double smax = spectral_norm(p);
    ++report.checked;
    if (smin < lower - tol || smax > upper + tol) {
      ++report.violations;
      std::snprintf(buf, sizeof(buf),
                    "product bound violated: t1=%zu t2=%zu smin=%.6g lower=%.6g smax=%.6g upper=%.6g",
                    t1, t2, smin, lower, smax, upper);
      report.failures.push_back(buf);
    }
    // Tail product: |I - W_t^T|_2 <= e^{(T-t)c/T} - 1.
    const std::size_t tail_start = std::min(
        chain.depth, static_cast<std::size_t>(rng.uniform(0.0, t_real + 1.0)));
    const Matrix tail = partial_product(chain, tail_start, chain.depth) -
                        Matrix::identity(chain.weights.front().rows);
    const double tail_norm = spectral_norm(tail);
    const double tail_bound =
        std::exp(static_cast<double>(chain.depth - tail_start) * c / t_real) - 1.0;
    ++report.checked;
    if (tail_norm > tail_bound + tol) {
      ++report.violations;
      std::snprintf(buf, sizeof(buf), "tail bound violated: t=%zu norm=%.6g bound=%.6g",
                    tail_start, tail_norm, tail_bound);
      report.failures.push_back(buf);
    }
  }
  return report;
}

}  // namespace mpct
