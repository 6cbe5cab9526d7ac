#include "smin/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smin/error.hpp"

namespace smin {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 14;

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("DenseMatrix: value count " + std::to_string(values_.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
    v.insert(v.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(v));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseMatrix out(m, n);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* dst = out.data() + i * n;
    const double* src = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = src[p];
      if (s == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += s * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_at_b: row counts differ");
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  DenseMatrix out(m, n);
  const auto rows = static_cast<std::ptrdiff_t>(m);
  // Each output row owns its reduction over k, so the summation order is fixed.
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* dst = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a(p, static_cast<std::size_t>(i));
      if (s == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += s * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_a_bt: column counts differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  DenseMatrix out(m, n);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      out(static_cast<std::size_t>(i), j) = s;
    }
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_inplace(DenseMatrix& dst, const DenseMatrix& src, double scale) {
  require_same_shape(dst, src, "add_inplace");
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  add_inplace(out, b);
  return out;
}

DenseMatrix scaled(const DenseMatrix& a, double s) {
  DenseMatrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

std::vector<double> rowwise_dot(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "rowwise_dot");
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    auto br = b.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < ar.size(); ++j) s += ar[j] * br[j];
    out[i] = s;
  }
  return out;
}

DenseMatrix column_sums(const DenseMatrix& a) {
  DenseMatrix out(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += a(i, j);
  return out;
}

DenseMatrix hconcat(std::span<const DenseMatrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw DimensionError("hconcat: row counts differ");
    cols += b.cols();
  }
  DenseMatrix out(rows, cols);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(b.row(i).begin(), b.row(i).end(), out.row(i).begin() + offset);
    offset += b.cols();
  }
  return out;
}

DenseMatrix column_block(const DenseMatrix& a, std::size_t first, std::size_t count) {
  if (first + count > a.cols()) throw DimensionError("column_block: out of range");
  DenseMatrix out(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i)
    std::copy_n(a.row(i).begin() + first, count, out.row(i).begin());
  return out;
}

DenseMatrix vconcat(const DenseMatrix& top, const DenseMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw DimensionError("vconcat: column counts differ");
  std::vector<double> v(top.values().begin(), top.values().end());
  v.insert(v.end(), bottom.values().begin(), bottom.values().end());
  return DenseMatrix(top.rows() + bottom.rows(), top.cols(), std::move(v));
}

DenseMatrix row_block(const DenseMatrix& a, std::size_t first, std::size_t count) {
  if (first + count > a.rows()) throw DimensionError("row_block: out of range");
  const auto begin = a.values().begin() + static_cast<std::ptrdiff_t>(first * a.cols());
  return DenseMatrix(count, a.cols(),
                     std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * a.cols())));
}

double sum_squares(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const DenseMatrix& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

double prelu(double x, double slope) noexcept { return x >= 0.0 ? x : slope * x; }

DenseMatrix prelu(const DenseMatrix& x, double slope) {
  DenseMatrix out = x;
  for (double& v : out.values()) v = prelu(v, slope);
  return out;
}

DenseMatrix prelu_backward(const DenseMatrix& x, double slope, const DenseMatrix& grad_out,
                           double& grad_slope) {
  require_same_shape(x, grad_out, "prelu_backward");
  DenseMatrix grad_in(x.rows(), x.cols());
  auto xs = x.values();
  auto g = grad_out.values();
  auto gi = grad_in.values();
  double ds = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] >= 0.0) {
      gi[i] = g[i];
    } else {
      gi[i] = slope * g[i];
      ds += g[i] * xs[i];
    }
  }
  grad_slope += ds;
  return grad_in;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) noexcept {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace smin
