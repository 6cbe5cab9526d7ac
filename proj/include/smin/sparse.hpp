#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smin/dense.hpp"

namespace smin {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-row sparse matrix in canonical form: column indices strictly
/// increasing within each row, no explicit zeros. Two matrices holding the
/// same entries therefore compare equal element for element.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  /// Builds the canonical form. Duplicate coordinates are summed and the
  /// resulting zeros dropped. Throws DimensionError on out-of-range indices.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  /// Adopts CSR arrays that are already canonical (checked).
  static SparseMatrix from_csr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                               std::vector<std::size_t> col_idx, std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_dense(const DenseMatrix& d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::size_t> row_cols(std::size_t r) const noexcept {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const noexcept {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::size_t row_nnz(std::size_t r) const noexcept { return row_ptr_[r + 1] - row_ptr_[r]; }

  /// Stored value or 0. O(log row_nnz).
  double at(std::size_t r, std::size_t c) const;
  bool contains(std::size_t r, std::size_t c) const;

  std::vector<Triplet> triplets() const;
  std::vector<double> row_sums() const;

  SparseMatrix transpose() const;
  /// Every stored entry replaced by 1.
  SparseMatrix binarized() const;
  SparseMatrix without_diagonal() const;
  /// Each row divided by its sum; rows summing to zero are left untouched.
  SparseMatrix row_normalized() const;
  bool is_symmetric() const;
  DenseMatrix to_dense() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// a · b for sparse a and dense b. Rows of the output are independent, so the
/// OpenMP split is deterministic.
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);

/// a · b for sparse operands, canonical output (Gustavson row-by-row).
SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b);

/// Element-wise sum of two same-shape sparse matrices.
SparseMatrix sparse_add(const SparseMatrix& a, const SparseMatrix& b);

}  // namespace smin
