#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mpct {

/// Dense row-major matrix of doubles. All reals in this project are 64-bit.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows*cols entries, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  static Matrix identity(std::size_t n);
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);
double frobenius_norm(const Matrix& m);

/// Polynomial with coefficients in ascending power order.
struct PolyModel {
  std::size_t degree = 0;
  std::vector<double> coefficients;  // degree+1 entries
};

/// Least-squares polynomial fit via normal equations solved with a
/// partially-pivoted LU factorization. Exact interpolation when the number
/// of points equals degree+1. Throws std::invalid_argument on duplicate
/// abscissae or too few points.
PolyModel polyfit(std::span<const double> xs, std::span<const double> ys, std::size_t degree);

double polyeval(const PolyModel& model, double x);

/// a.b / (|a||b|). Throws std::invalid_argument if either norm is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);

/// Deterministic seeded generator: mt19937_64 stream with Box-Muller
/// normals. The identifier names the exact algorithm so output metadata can
/// pin reproducibility across platforms.
class SeededRng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/box-muller/v1";

  explicit SeededRng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform in (0,1), exactly ((bits>>11)+0.5) * 2^-53.
  double uniform01();
  /// Uniform in [lo,hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (spare cached).
  double normal();

  /// Child stream for parallel work: seed mixed with the child index.
  SeededRng child(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// i.i.d. N(0, std^2) entries from the seeded stream, row-major order.
/// Throws std::invalid_argument unless std > 0.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double std, SeededRng& rng);

/// Solve A x = b with partial-pivoting LU. Throws std::invalid_argument on a
/// (numerically) singular matrix.
std::vector<double> lu_solve(Matrix a, std::vector<double> b);

/// Largest singular value by power iteration on A^T A
/// (tolerance 1e-10, iteration cap 1e4).
double spectral_norm(const Matrix& m);

/// Smallest singular value by inverse power iteration on A^T A.
double min_singular_value(const Matrix& m);

}  // namespace mpct
