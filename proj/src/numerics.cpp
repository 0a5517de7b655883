#include "pbes/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pbes/errors.hpp"

namespace pbes {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("Matrix: value count " + std::to_string(values_.size()) +
                          " does not match " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
}

void Matrix::append_row(std::span<const double> r) {
  if (rows_ == 0 && cols_ == 0) cols_ = r.size();
  if (r.size() != cols_) throw ValidationError("Matrix::append_row: width mismatch");
  values_.insert(values_.end(), r.begin(), r.end());
  ++rows_;
}

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ == 0 || cols_ == 0) throw ValidationError("DataMatrix: needs at least one row and one column");
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("DataMatrix: value count " + std::to_string(values_.size()) +
                          " does not match " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("DataMatrix: non-finite value at row " + std::to_string(i / cols_) +
                            ", column " + std::to_string(i % cols_));
    }
  }
}

DataMatrix DataMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("DataMatrix: needs at least one row and one column");
  const std::size_t d = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw ValidationError("DataMatrix: ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return DataMatrix(rows.size(), d, std::move(values));
}

DataMatrix DataMatrix::select(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * cols_);
  for (std::size_t i : indices) {
    if (i >= rows_) throw ValidationError("DataMatrix::select: index out of range");
    const auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
  }
  return DataMatrix(indices.size(), cols_, std::move(values));
}

const char* to_string(DirectionSource source) {
  switch (source) {
    case DirectionSource::pca: return "pca";
    case DirectionSource::random: return "random";
    case DirectionSource::fallback: return "fallback";
  }
  return "unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> mean_vector(const DataMatrix& x) {
  std::vector<double> mu(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) mu[j] += r[j];
  }
  const double n = static_cast<double>(x.rows());
  for (double& v : mu) v /= n;
  return mu;
}

Matrix covariance(const DataMatrix& x) {
  const std::size_t d = x.cols();
  const auto mu = mean_vector(x);
  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - mu[j];
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) cov(a, b) += centered[a] * centered[b];
    }
  }
  const double n = static_cast<double>(x.rows());
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= n;
      cov(b, a) = cov(a, b);
    }
  }
  return cov;
}

void normalize_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::fabs(v[i]) > std::fabs(v[best])) best = i;
  }
  if (!v.empty() && v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric) {
  const std::size_t d = symmetric.rows();
  if (symmetric.cols() != d) throw ValidationError("jacobi_eigen: matrix is not square");
  Matrix a = symmetric;
  Matrix v(d, d);
  for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (;; ++sweep) {
    double diag = 0.0;
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      diag += std::fabs(a(i, i));
      for (std::size_t j = i + 1; j < d; ++j) off = std::max(off, std::fabs(a(i, j)));
    }
    if (off == 0.0 || off < 1e-12 * diag) break;
    if (sweep == kMaxSweeps) throw NumericalError("jacobi_eigen: no convergence after 100 sweeps");

    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out;
  out.sweeps = sweep;
  out.vectors = Matrix(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    const std::size_t col = order[r];
    out.values.push_back(a(col, col));
    for (std::size_t k = 0; k < d; ++k) out.vectors(r, k) = v(k, col);
    normalize_sign(out.vectors.row(r));
  }
  return out;
}

DirectionBasis principal_directions(const DataMatrix& x, std::size_t p) {
  if (p == 0) throw ValidationError("principal_directions: p must be at least 1");
  const std::size_t d = x.cols();
  const auto eig = jacobi_eigen(covariance(x));

  const double top = eig.values.front();
  std::size_t rank = 0;
  if (top > 0.0) {
    while (rank < d && eig.values[rank] > kRankTolerance * top) ++rank;
  }

  DirectionBasis basis;
  basis.dim = d;
  basis.rank = rank;
  basis.source = p > rank ? DirectionSource::fallback : DirectionSource::pca;
  for (std::size_t i = 0; i < p; ++i) {
    if (rank == 0) {
      std::vector<double> axis(d, 0.0);
      axis[i % d] = 1.0;
      basis.directions.push_back(std::move(axis));
      basis.eigenvalues.push_back(0.0);
    } else {
      const std::size_t src = i % rank;
      const auto r = eig.vectors.row(src);
      basis.directions.emplace_back(r.begin(), r.end());
      basis.eigenvalues.push_back(eig.values[src]);
    }
  }
  return basis;
}

std::vector<double> project(const DataMatrix& x, std::span<const double> v) {
  if (v.size() != x.cols()) {
    throw ValidationError("project: direction has " + std::to_string(v.size()) +
                          " components, data has " + std::to_string(x.cols()));
  }
  if (std::fabs(norm2(v) - 1.0) > 1e-9) throw ValidationError("project: direction is not unit length");
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = dot(x.row(i), v);
  return out;
}

DirectionBasis random_unit_directions(std::size_t d, std::size_t k, Rng& rng) {
  if (d == 0 || k == 0) throw ValidationError("random_unit_directions: d and k must be at least 1");
  DirectionBasis basis;
  basis.dim = d;
  basis.source = DirectionSource::random;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> v(d);
    double n = 0.0;
    do {
      for (double& c : v) c = rng.normal();
      n = norm2(v);
    } while (n == 0.0);
    for (double& c : v) c /= n;
    normalize_sign(v);
    basis.directions.push_back(std::move(v));
  }
  return basis;
}

}  // namespace pbes
