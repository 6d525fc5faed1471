#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlnc {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles. Everything in the library is two
// dimensional: node representations, weights, biases (1 x b), scalars (1 x 1).
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

  // Row-major nested initializer, handy in tests: Tensor2::from_rows({{1, 2}, {3, 4}}).
  static Tensor2 from_rows(const std::vector<std::vector<double>>& rows);
  static Tensor2 identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Tensor2& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* what);

// C = A * B
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// C = A^T * B
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
// C = A * B^T
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);

// out += alpha * x
void axpy(double alpha, const Tensor2& x, Tensor2& out);

// Copies the listed rows, in order, into a new |ids| x cols matrix.
Tensor2 gather_rows(const Tensor2& src, std::span<const std::size_t> ids);

Tensor2 transpose(const Tensor2& a);

}  // namespace mlnc
