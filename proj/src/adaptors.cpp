#include "trifuse/adaptors.hpp"

#include <cmath>

#include "trifuse/errors.hpp"

namespace trifuse {

Mlp Mlp::init(Rng& rng, int d_in, int hidden, int d_out) {
  if (d_in <= 0 || hidden <= 0 || d_out <= 0) throw DimensionError("mlp needs positive widths");
  Mlp m;
  float b1 = 1.f / std::sqrt(float(d_in));
  float b2 = 1.f / std::sqrt(float(hidden));
  m.w1 = Tensor::uniform(rng, d_in, hidden, -b1, b1, /*requires_grad=*/true);
  m.b1 = Tensor::zeros(1, hidden, /*requires_grad=*/true);
  m.w2 = Tensor::uniform(rng, hidden, d_out, -b2, b2, /*requires_grad=*/true);
  m.b2 = Tensor::zeros(1, d_out, /*requires_grad=*/true);
  return m;
}

void Mlp::register_params(ParamStore& store, const std::string& prefix) const {
  store.add(prefix + ".w1", w1);
  store.add(prefix + ".b1", b1);
  store.add(prefix + ".w2", w2);
  store.add(prefix + ".b2", b2);
}

TensorPtr Mlp::forward(Tape& tape, const TensorPtr& x) const {
  TensorPtr h = tape.gelu(tape.add_bias(tape.matmul(x, w1), b1));
  return tape.add_bias(tape.matmul(h, w2), b2);
}

ItemAdaptor ItemAdaptor::init(long seed, int d_v, int hidden, int d_llm) {
  Rng rng = Rng::derive(seed, rng_tag::kAdaptorInit, 1);
  return {Mlp::init(rng, d_v, hidden, d_llm)};
}

void ItemAdaptor::register_params(ParamStore& store) const { mlp.register_params(store, "psi_i"); }

TensorPtr ItemAdaptor::forward(Tape& tape, const TensorPtr& fused) const {
  return mlp.forward(tape, fused);
}

BehaviorAdaptor BehaviorAdaptor::init(long seed, int d_g, int hidden, int d_llm) {
  Rng rng = Rng::derive(seed, rng_tag::kAdaptorInit, 2);
  return {Mlp::init(rng, d_g, hidden, d_llm)};
}

void BehaviorAdaptor::register_params(ParamStore& store) const { mlp.register_params(store, "psi_b"); }

TensorPtr BehaviorAdaptor::forward(Tape& tape, const TensorPtr& behavior_rows) const {
  return mlp.forward(tape, behavior_rows);
}

}  // namespace trifuse
