#pragma once

// Two-layer MLP adaptors that lift fused item vectors and behavior graph
// embeddings into the language model's embedding width. Behavior rows are
// recomputed from the current adaptor weights every step; item rows depend
// on the surrounding history through fusion, so they are per-occurrence.

#include "trifuse/adam.hpp"
#include "trifuse/tensor.hpp"

namespace trifuse {

struct Mlp {
  TensorPtr w1, b1, w2, b2;  // d_in x hidden, 1 x hidden, hidden x d_out, 1 x d_out

  static Mlp init(Rng& rng, int d_in, int hidden, int d_out);
  void register_params(ParamStore& store, const std::string& prefix) const;
  TensorPtr forward(Tape& tape, const TensorPtr& x) const;
};

struct ItemAdaptor {
  Mlp mlp;
  static ItemAdaptor init(long seed, int d_v, int hidden, int d_llm);
  void register_params(ParamStore& store) const;  // "psi_i.*"
  TensorPtr forward(Tape& tape, const TensorPtr& fused) const;
};

struct BehaviorAdaptor {
  Mlp mlp;
  static BehaviorAdaptor init(long seed, int d_g, int hidden, int d_llm);
  void register_params(ParamStore& store) const;  // "psi_b.*"
  TensorPtr forward(Tape& tape, const TensorPtr& behavior_rows) const;
};

}  // namespace trifuse
