#ifndef PBES_NUMERICS_HPP
#define PBES_NUMERICS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "pbes/rng.hpp"

namespace pbes {

/// Dense row-major matrix without content invariants. Used for covariance
/// matrices, model weights and logit blocks; may have zero rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Appends a row; cols must match (or the matrix must be empty with cols 0).
  void append_row(std::span<const double> r);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// n×d matrix of data points, one per row. n ≥ 1, d ≥ 1, all values finite;
/// construction throws ValidationError otherwise.
class DataMatrix {
 public:
  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  const std::vector<double>& values() const { return values_; }

  /// Rows picked by index, in the given order.
  DataMatrix select(std::span<const std::size_t> indices) const;

  bool operator==(const DataMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

enum class DirectionSource { pca, random, fallback };

const char* to_string(DirectionSource source);

/// Ordered unit directions in R^dim.
///
/// For pca/fallback bases `eigenvalues[i]` is the covariance eigenvalue of the
/// direction and `rank` the numerical rank; directions past `rank` are copies
/// of earlier ones (or canonical axes when rank is 0).
struct DirectionBasis {
  std::size_t dim = 0;
  std::vector<std::vector<double>> directions;
  DirectionSource source = DirectionSource::pca;
  std::vector<double> eigenvalues;
  std::size_t rank = 0;
};

/// Eigenpairs of a symmetric matrix, eigenvalues non-increasing, eigenvectors
/// stored as rows and sign-normalized.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
  int sweeps = 0;
};

std::vector<double> mean_vector(const DataMatrix& x);

/// Population covariance (divisor n).
Matrix covariance(const DataMatrix& x);

/// Cyclic Jacobi eigensolver; stops once every off-diagonal magnitude is below
/// 1e-12 * trace. Throws NumericalError if 100 sweeps do not suffice.
SymmetricEigen jacobi_eigen(const Matrix& symmetric);

/// Flips v so its largest-magnitude component (earliest on ties) is positive.
void normalize_sign(std::span<double> v);

/// Relative eigenvalue cut-off below which a direction counts as null.
inline constexpr double kRankTolerance = 1e-10;

DirectionBasis principal_directions(const DataMatrix& x, std::size_t p);

/// Row-wise dot products with v. v must match the column count and have unit
/// norm within 1e-9.
std::vector<double> project(const DataMatrix& x, std::span<const double> v);

/// k isotropic directions: Gaussian components, normalized, sign-normalized.
DirectionBasis random_unit_directions(std::size_t d, std::size_t k, Rng& rng);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace pbes

#endif  // PBES_NUMERICS_HPP
