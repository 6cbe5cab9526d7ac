#include "smin/optim.hpp"

#include <algorithm>
#include <cmath>

#include "smin/error.hpp"

namespace smin {

void adam_update(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr) {
  if (!param.same_shape(grad) || !param.same_shape(state.first_moment) ||
      !param.same_shape(state.second_moment)) {
    throw DimensionError("adam_step: parameter, gradient and state shapes differ");
  }
  if (!(lr > 0.0)) throw DomainError("adam_step: learning rate must be positive");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto p = param.values();
  auto g = grad.values();
  auto m = state.first_moment.values();
  auto v = state.second_moment.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

DenseMatrix adam_step(const DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr) {
  DenseMatrix out = param;
  adam_update(out, grad, state, lr);
  return out;
}

double GradCheckReport::max_relative_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.relative_error);
  return m;
}

GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::vector<GradTensor>& tensors, double step,
                                  double norm_floor) {
  if (!(step > 0.0)) throw DomainError("finite_diff_check: step must be positive");
  GradCheckReport report;
  for (const auto& t : tensors) {
    if (!t.value->same_shape(*t.analytic))
      throw DimensionError("finite_diff_check: gradient shape differs for " + t.name);
    auto values = t.value->values();
    auto analytic = t.analytic->values();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = loss();
      values[i] = saved - step;
      const double minus = loss();
      values[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw NumericError("finite_diff_check: non-finite loss while perturbing " + t.name);
      const double numeric = (plus - minus) / (2.0 * step);
      const double d = analytic[i] - numeric;
      diff2 += d * d;
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
      max_abs = std::max(max_abs, std::abs(d));
    }
    const double denom = std::max(std::sqrt(a2) + std::sqrt(n2), norm_floor);
    report.entries.push_back({t.name, std::sqrt(diff2) / denom, max_abs, std::sqrt(a2)});
  }
  return report;
}

}  // namespace smin
