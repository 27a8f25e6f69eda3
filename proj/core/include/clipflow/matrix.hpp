#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace clipflow {

using Vector = std::vector<double>;

// Dense real matrix, row-major storage. The workhorse container for
// weights, gradients, Jacobians and kernel matrices.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(const Vector& entries);
  static DenseMatrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  DenseMatrix transposed() const;
  bool all_finite() const;
  double max_abs() const;
  double frobenius_norm() const;
  double trace() const;

  // Max |a_ij - a_ji|; zero for symmetric matrices.
  double max_asymmetry() const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);
Vector operator*(const DenseMatrix& a, const Vector& x);

// x^T m x. Dimensions must match.
double quadratic_form(const DenseMatrix& m, const Vector& x);

// Determinant via LU with partial pivoting. Square input only.
double determinant(const DenseMatrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

}  // namespace clipflow
