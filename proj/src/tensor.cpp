#include "trifuse/tensor.hpp"

#include <cmath>

#include "trifuse/errors.hpp"

namespace trifuse {

Tensor::Tensor(int r, int c, bool track) : rows(r), cols(c), requires_grad(track) {
  if (r <= 0 || c <= 0) throw DimensionError("tensor dims must be positive");
  value.assign(numel(), 0.f);
}

TensorPtr Tensor::zeros(int rows, int cols, bool requires_grad) {
  return std::make_shared<Tensor>(rows, cols, requires_grad);
}

TensorPtr Tensor::full(int rows, int cols, float fill, bool requires_grad) {
  auto t = zeros(rows, cols, requires_grad);
  std::fill(t->value.begin(), t->value.end(), fill);
  return t;
}

TensorPtr Tensor::from(int rows, int cols, std::vector<float> data, bool requires_grad) {
  auto t = zeros(rows, cols, requires_grad);
  if (data.size() != t->numel()) throw DimensionError("data size does not match dims");
  for (float x : data)
    if (!std::isfinite(x)) throw NumericError("non-finite value in tensor data");
  t->value = std::move(data);
  return t;
}

TensorPtr Tensor::randn(Rng& rng, int rows, int cols, float stddev, bool requires_grad) {
  auto t = zeros(rows, cols, requires_grad);
  for (auto& x : t->value) x = stddev * float(rng.normal());
  return t;
}

TensorPtr Tensor::uniform(Rng& rng, int rows, int cols, float lo, float hi, bool requires_grad) {
  auto t = zeros(rows, cols, requires_grad);
  for (auto& x : t->value) x = lo + (hi - lo) * float(rng.uniform());
  return t;
}

float* Tensor::g() {
  if (grad.empty()) grad.assign(numel(), 0.f);
  return grad.data();
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.f); }

}  // namespace trifuse
