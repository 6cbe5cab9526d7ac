#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace smin {

/// Row-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  void fill(double v);
  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Products. All three parallelize over output rows and are deterministic.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ · b
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
/// a · bᵀ
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

void add_inplace(DenseMatrix& dst, const DenseMatrix& src, double scale = 1.0);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& a, double s);

/// Per-row inner products ⟨a_n, b_n⟩.
std::vector<double> rowwise_dot(const DenseMatrix& a, const DenseMatrix& b);
/// Column sums as a 1×cols matrix.
DenseMatrix column_sums(const DenseMatrix& a);

/// Horizontal concatenation [a₀ | a₁ | …]; all blocks share a row count.
DenseMatrix hconcat(std::span<const DenseMatrix> blocks);
/// Columns [first, first + count).
DenseMatrix column_block(const DenseMatrix& a, std::size_t first, std::size_t count);
/// Vertical concatenation [top; bottom].
DenseMatrix vconcat(const DenseMatrix& top, const DenseMatrix& bottom);
DenseMatrix row_block(const DenseMatrix& a, std::size_t first, std::size_t count);

double sum_squares(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
bool all_finite(const DenseMatrix& a);

double prelu(double x, double slope) noexcept;
DenseMatrix prelu(const DenseMatrix& x, double slope);

/// Backward of y = prelu(x, slope). Returns dL/dx and accumulates dL/dslope.
DenseMatrix prelu_backward(const DenseMatrix& x, double slope, const DenseMatrix& grad_out,
                           double& grad_slope);

double sigmoid(double x) noexcept;
/// log σ(x), stable for large |x|.
double log_sigmoid(double x) noexcept;

}  // namespace smin
