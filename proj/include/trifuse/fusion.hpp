#pragma once

// History-level fusion of the three modality embeddings. Self-attention
// across the stacked per-item concat vectors, then two cross-attention
// rounds between the image and text spaces; the result lives in the image
// space, one fused row per history position. The query projection is the
// only learned parameter here.

#include "trifuse/adam.hpp"
#include "trifuse/tensor.hpp"

namespace trifuse {

struct FusionParams {
  TensorPtr w_q;  // (d_v + d_t + d_g) x d_v, no bias

  static FusionParams init(long seed, int d_concat, int d_v);
  void register_params(ParamStore& store) const;  // registered as "psi_f.w_q"
};

struct FusionInputs {
  TensorPtr v_img;  // H x d_v
  TensorPtr v_txt;  // H x d_t
  TensorPtr v_gph;  // H x d_g
};

// H x (d_v + d_t + d_g): one concat row per history position.
TensorPtr concat_modalities(Tape& tape, const FusionInputs& in);

// softmax(v v^T / sqrt(d)) v across history rows; no learned weights.
TensorPtr amsa(Tape& tape, const TensorPtr& v_m);

// Round one attends queries against image keys to mix text values; round two
// attends that against text keys to mix image values. Heads split the columns.
TensorPtr cma(Tape& tape, const TensorPtr& q, const TensorPtr& v_img, const TensorPtr& v_txt,
              int heads);

TensorPtr fuse(Tape& tape, const FusionInputs& in, const FusionParams& params, int heads);

}  // namespace trifuse
