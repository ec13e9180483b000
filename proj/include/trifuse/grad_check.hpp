#pragma once

// Finite-difference gradient verification. Rebuilds the graph through `f` for
// every probe, so f must be deterministic in the leaf values. The five-point
// stencil with double accumulation keeps float32 forward noise out of the
// estimate; h defaults to a dyadic step so integer-valued fixtures stay exact.

#include <functional>
#include <vector>

#include "trifuse/errors.hpp"
#include "trifuse/tensor.hpp"

namespace trifuse {

struct GradCheckReport {
  double max_err = 0;      // max over elements of |analytic - fd| / max(1, |fd|)
  double worst_analytic = 0;
  double worst_fd = 0;
};

inline GradCheckReport grad_check(const std::function<TensorPtr(Tape&)>& f,
                                  const std::vector<TensorPtr>& leaves,
                                  float h = 1.f / 128.f) {
  for (const auto& leaf : leaves)
    if (!leaf->requires_grad) throw UsageError("grad_check: leaf does not take gradients");

  Tape tape;
  auto loss = f(tape);
  if (loss->rows != 1 || loss->cols != 1) throw DimensionError("grad_check: loss must be 1x1");
  for (const auto& leaf : leaves) leaf->zero_grad();
  tape.backward(loss);

  auto eval = [&](void) -> double {
    Tape fwd(false);
    return double(f(fwd)->value[0]);
  };

  GradCheckReport report;
  for (const auto& leaf : leaves) {
    for (size_t i = 0; i < leaf->numel(); ++i) {
      const float saved = leaf->value[i];
      leaf->value[i] = saved - 2 * h;
      const double f_m2 = eval();
      leaf->value[i] = saved - h;
      const double f_m1 = eval();
      leaf->value[i] = saved + h;
      const double f_p1 = eval();
      leaf->value[i] = saved + 2 * h;
      const double f_p2 = eval();
      leaf->value[i] = saved;

      const double fd = (f_m2 - 8 * f_m1 + 8 * f_p1 - f_p2) / (12.0 * double(h));
      const double analytic = leaf->has_grad() ? double(leaf->grad[i]) : 0.0;
      const double err = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
      if (err > report.max_err) {
        report.max_err = err;
        report.worst_analytic = analytic;
        report.worst_fd = fd;
      }
    }
  }
  return report;
}

}  // namespace trifuse
