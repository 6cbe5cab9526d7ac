#pragma once

// Straight-line single-threaded versions of the parallel kernels. Tests
// compare against these and the benchmark target times both.

#include <map>
#include <utility>

#include "smin/dense.hpp"
#include "smin/error.hpp"
#include "smin/sparse.hpp"

namespace smin::serial {

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("serial::matmul: inner dimensions differ");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
  return out;
}

inline DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("serial::spmm: shape mismatch");
  DenseMatrix out(a.rows(), b.cols());
  for (const auto& t : a.triplets())
    for (std::size_t j = 0; j < b.cols(); ++j) out(t.row, j) += t.value * b(t.col, j);
  return out;
}

inline SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("serial::spgemm: shape mismatch");
  std::map<std::pair<std::size_t, std::size_t>, double> acc;
  const auto bt = b.triplets();
  for (const auto& x : a.triplets())
    for (const auto& y : bt)
      if (x.col == y.row) acc[{x.row, y.col}] += x.value * y.value;
  std::vector<Triplet> t;
  for (const auto& [key, v] : acc) t.push_back({key.first, key.second, v});
  return SparseMatrix::from_triplets(a.rows(), b.cols(), std::move(t));
}

}  // namespace smin::serial
