#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "smin/dense.hpp"

namespace smin {

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols) : first_moment(rows, cols), second_moment(rows, cols) {}

  DenseMatrix first_moment;
  DenseMatrix second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update applied in place.
void adam_update(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr);

/// Value-returning form of adam_update.
DenseMatrix adam_step(const DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr);

/// A parameter tensor paired with its analytic gradient, as seen by the
/// finite-difference checker. `value` is perturbed in place and restored.
struct GradTensor {
  std::string name;
  DenseMatrix* value;
  const DenseMatrix* analytic;
};

struct GradCheckEntry {
  std::string name;
  /// ‖analytic − numeric‖₂ / max(‖analytic‖₂ + ‖numeric‖₂, floor)
  double relative_error = 0.0;
  double max_abs_error = 0.0;
  double analytic_norm = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error() const;
};

/// Central-difference gradient of `loss` for every entry of every tensor,
/// compared to the supplied analytic gradients. Throws NumericError when the
/// loss turns non-finite at a perturbed point.
GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::vector<GradTensor>& tensors, double step,
                                  double norm_floor = 1e-10);

}  // namespace smin
