#include "smin/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smin/error.hpp"

namespace smin {

namespace {

constexpr std::size_t kParallelRows = 256;

}  // namespace

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw DimensionError("SparseMatrix: entry (" + std::to_string(t.row) + "," +
                           std::to_string(t.col) + ") outside " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m(rows, cols);
  m.col_idx_.reserve(entries.size());
  m.values_.reserve(entries.size());
  std::vector<std::size_t> counts(rows, 0);
  for (std::size_t i = 0; i < entries.size();) {
    const std::size_t r = entries[i].row, c = entries[i].col;
    double v = 0.0;
    for (; i < entries.size() && entries[i].row == r && entries[i].col == c; ++i) v += entries[i].value;
    if (v == 0.0) continue;
    m.col_idx_.push_back(c);
    m.values_.push_back(v);
    ++counts[r];
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] = m.row_ptr_[r] + counts[r];
  return m;
}

SparseMatrix SparseMatrix::from_csr(std::size_t rows, std::size_t cols,
                                    std::vector<std::size_t> row_ptr,
                                    std::vector<std::size_t> col_idx, std::vector<double> values) {
  if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 || row_ptr.back() != col_idx.size() ||
      col_idx.size() != values.size()) {
    throw DimensionError("SparseMatrix::from_csr: inconsistent arrays");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) throw DimensionError("SparseMatrix::from_csr: row_ptr decreasing");
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      if (col_idx[p] >= cols) throw DimensionError("SparseMatrix::from_csr: column out of range");
      if (p > row_ptr[r] && col_idx[p] <= col_idx[p - 1])
        throw DimensionError("SparseMatrix::from_csr: columns not strictly increasing");
      if (values[p] == 0.0) throw DimensionError("SparseMatrix::from_csr: explicit zero");
    }
  }
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_ = std::move(row_ptr);
  m.col_idx_ = std::move(col_idx);
  m.values_ = std::move(values);
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix m(n, n);
  m.col_idx_.resize(n);
  m.values_.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.col_idx_[i] = i;
    m.row_ptr_[i + 1] = i + 1;
  }
  return m;
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& d) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
  return from_triplets(d.rows(), d.cols(), std::move(t));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) throw IndexError("SparseMatrix::at: index out of range");
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
}

bool SparseMatrix::contains(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) return false;
  auto cols = row_cols(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) out.push_back({r, col_idx_[p], values_[p]});
  return out;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> s(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s[r] += values_[p];
  return s;
}

SparseMatrix SparseMatrix::transpose() const {
  // Counting sort by column keeps rows of the result sorted.
  std::vector<std::size_t> ptr(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++ptr[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) ptr[c + 1] += ptr[c];
  std::vector<std::size_t> idx(nnz());
  std::vector<double> val(nnz());
  std::vector<std::size_t> next(ptr.begin(), ptr.end() - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const std::size_t dst = next[col_idx_[p]]++;
      idx[dst] = r;
      val[dst] = values_[p];
    }
  }
  SparseMatrix t;
  t.rows_ = cols_;
  t.cols_ = rows_;
  t.row_ptr_ = std::move(ptr);
  t.col_idx_ = std::move(idx);
  t.values_ = std::move(val);
  return t;
}

SparseMatrix SparseMatrix::binarized() const {
  SparseMatrix b = *this;
  std::fill(b.values_.begin(), b.values_.end(), 1.0);
  return b;
}

SparseMatrix SparseMatrix::without_diagonal() const {
  SparseMatrix m(rows_, cols_);
  m.col_idx_.reserve(nnz());
  m.values_.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      if (col_idx_[p] == r) continue;
      m.col_idx_.push_back(col_idx_[p]);
      m.values_.push_back(values_[p]);
    }
    m.row_ptr_[r + 1] = m.col_idx_.size();
  }
  return m;
}

SparseMatrix SparseMatrix::row_normalized() const {
  SparseMatrix m = *this;
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += values_[p];
    if (s == 0.0) continue;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) m.values_[p] = values_[p] / s;
  }
  return m;
}

bool SparseMatrix::is_symmetric() const { return rows_ == cols_ && *this == transpose(); }

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) d(r, col_idx_[p]) = values_[p];
  return d;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("spmm: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  const std::size_t n = b.cols();
  DenseMatrix out(a.rows(), n);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const auto ptr = a.row_ptr();
  const auto idx = a.col_idx();
  const auto val = a.values();
#pragma omp parallel for schedule(dynamic, 64) if (a.rows() > kParallelRows)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    double* dst = out.data() + r * n;
    for (std::size_t p = ptr[r]; p < ptr[r + 1]; ++p) {
      const double s = val[p];
      const double* src = b.data() + idx[p] * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += s * src[j];
    }
  }
  return out;
}

SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("spgemm: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  const std::size_t m = a.rows(), n = b.cols();
  std::vector<std::vector<std::size_t>> row_cols(m);
  std::vector<std::vector<double>> row_vals(m);
  const auto rows = static_cast<std::ptrdiff_t>(m);

#pragma omp parallel if (m > kParallelRows)
  {
    std::vector<double> acc(n, 0.0);
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> touched;
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      touched.clear();
      const auto ac = a.row_cols(static_cast<std::size_t>(r));
      const auto av = a.row_values(static_cast<std::size_t>(r));
      for (std::size_t p = 0; p < ac.size(); ++p) {
        const auto bc = b.row_cols(ac[p]);
        const auto bv = b.row_values(ac[p]);
        for (std::size_t q = 0; q < bc.size(); ++q) {
          const std::size_t c = bc[q];
          if (!seen[c]) {
            seen[c] = 1;
            touched.push_back(c);
          }
          acc[c] += av[p] * bv[q];
        }
      }
      std::sort(touched.begin(), touched.end());
      auto& cols = row_cols[static_cast<std::size_t>(r)];
      auto& vals = row_vals[static_cast<std::size_t>(r)];
      for (std::size_t c : touched) {
        if (acc[c] != 0.0) {
          cols.push_back(c);
          vals.push_back(acc[c]);
        }
        acc[c] = 0.0;
        seen[c] = 0;
      }
    }
  }

  std::vector<std::size_t> ptr(m + 1, 0);
  for (std::size_t r = 0; r < m; ++r) ptr[r + 1] = ptr[r] + row_cols[r].size();
  std::vector<std::size_t> idx;
  std::vector<double> val;
  idx.reserve(ptr[m]);
  val.reserve(ptr[m]);
  for (std::size_t r = 0; r < m; ++r) {
    idx.insert(idx.end(), row_cols[r].begin(), row_cols[r].end());
    val.insert(val.end(), row_vals[r].begin(), row_vals[r].end());
  }
  return SparseMatrix::from_csr(m, n, std::move(ptr), std::move(idx), std::move(val));
}

SparseMatrix sparse_add(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("sparse_add: shape mismatch");
  auto t = a.triplets();
  auto u = b.triplets();
  t.insert(t.end(), u.begin(), u.end());
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

}  // namespace smin
