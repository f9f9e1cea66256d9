#include "mpct/numerics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mpct {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("matrix add: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("matrix sub: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Matrix operator*(double s, const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data) v *= s;
  return out;
}

double frobenius_norm(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data) acc += v * v;
  return std::sqrt(acc);
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine_similarity: zero-norm input");
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

std::vector<double> lu_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows;
  if (a.cols != n || b.size() != n) throw std::invalid_argument("lu_solve: shape mismatch");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (best == 0.0) throw std::invalid_argument("lu_solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
    x[ii] = s / a(ii, ii);
  }
  return x;
}

PolyModel polyfit(std::span<const double> xs, std::span<const double> ys, std::size_t degree) {
  const std::size_t n = xs.size();
  if (ys.size() != n) throw std::invalid_argument("polyfit: xs/ys length mismatch");
  if (n < degree + 1) throw std::invalid_argument("polyfit: need at least degree+1 points");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (xs[i] == xs[j]) throw std::invalid_argument("polyfit: duplicate abscissa");

  // Normal equations (V^T V) c = V^T y; degrees here stay <= 3 so the
  // conditioning is benign.
  const std::size_t m = degree + 1;
  Matrix ata(m, m);
  std::vector<double> aty(m, 0.0);
  std::vector<double> powers(2 * m - 1);
  for (std::size_t i = 0; i < n; ++i) {
    powers[0] = 1.0;
    for (std::size_t p = 1; p < powers.size(); ++p) powers[p] = powers[p - 1] * xs[i];
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) ata(r, c) += powers[r + c];
      aty[r] += powers[r] * ys[i];
    }
  }
  PolyModel model;
  model.degree = degree;
  model.coefficients = lu_solve(std::move(ata), std::move(aty));
  return model;
}

double polyeval(const PolyModel& model, double x) {
  double acc = 0.0;
  for (std::size_t i = model.coefficients.size(); i-- > 0;)
    acc = acc * x + model.coefficients[i];
  return acc;
}

double SeededRng::uniform01() {
  return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace

SeededRng SeededRng::child(std::uint64_t index) const {
  return SeededRng(splitmix64(seed_ ^ splitmix64(index + 1)));
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double std, SeededRng& rng) {
  if (!(std > 0.0)) throw std::invalid_argument("gaussian_matrix: std must be positive");
  Matrix m(rows, cols);
  for (double& v : m.data) v = std * rng.normal();
  return m;
}

namespace {
constexpr double kPowerTol = 1e-10;
constexpr int kPowerMaxIter = 10000;

Matrix gram(const Matrix& m) { return matmul(transpose(m), m); }

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double largest_eig(const Matrix& s) {
  const std::size_t n = s.rows;
  std::vector<double> v(n);
  // Fixed deterministic start vector with components in every direction.
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1.0 / static_cast<double>(i + 2);
  double lambda = 0.0;
  for (int it = 0; it < kPowerMaxIter; ++it) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w[i] += s(i, j) * v[j];
    const double nw = l2_norm(w);
    if (nw == 0.0) return 0.0;
    for (double& x : w) x /= nw;
    double next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double si = 0.0;
      for (std::size_t j = 0; j < n; ++j) si += s(i, j) * w[j];
      next += w[i] * si;
    }
    if (std::abs(next - lambda) <= kPowerTol * std::max(1.0, std::abs(next))) return next;
    lambda = next;
    v = std::move(w);
  }
  return lambda;
}
}  // namespace

double spectral_norm(const Matrix& m) {
  return std::sqrt(std::max(0.0, largest_eig(gram(m))));
}

double min_singular_value(const Matrix& m) {
  // Inverse power iteration: repeatedly solve (A^T A) w = v.
  const Matrix s = gram(m);
  const std::size_t n = s.rows;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1.0 / static_cast<double>(i + 2);
  double inv_lambda = 0.0;
  for (int it = 0; it < kPowerMaxIter; ++it) {
    std::vector<double> w;
    try {
      w = lu_solve(s, v);
    } catch (const std::invalid_argument&) {
      return 0.0;  // singular
    }
    const double nw = l2_norm(w);
    if (nw == 0.0) return 0.0;
    for (double& x : w) x /= nw;
    // Rayleigh quotient of the inverse map.
    std::vector<double> w2 = lu_solve(s, w);
    double next = 0.0;
    for (std::size_t i = 0; i < n; ++i) next += w[i] * w2[i];
    if (std::abs(next - inv_lambda) <= kPowerTol * std::max(1.0, std::abs(next)))
      return 1.0 / std::sqrt(next);
    inv_lambda = next;
    v = std::move(w);
  }
  return inv_lambda > 0.0 ? 1.0 / std::sqrt(inv_lambda) : 0.0;
}

}  // namespace mpct
