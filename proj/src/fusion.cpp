#include "trifuse/fusion.hpp"

#include <cmath>

#include "trifuse/errors.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

FusionParams FusionParams::init(long seed, int d_concat, int d_v) {
  Rng rng = Rng::derive(seed, rng_tag::kAdaptorInit, 0);
  float bound = 1.f / std::sqrt(float(d_concat));
  FusionParams p;
  p.w_q = Tensor::uniform(rng, d_concat, d_v, -bound, bound, /*requires_grad=*/true);
  return p;
}

void FusionParams::register_params(ParamStore& store) const {
  store.add("psi_f.w_q", w_q);
}

TensorPtr concat_modalities(Tape& tape, const FusionInputs& in) {
  if (!in.v_img || !in.v_txt || !in.v_gph) throw UsageError("concat_modalities needs all three modalities");
  if (in.v_img->rows != in.v_txt->rows || in.v_img->rows != in.v_gph->rows) {
    throw DimensionError("modality row counts disagree");
  }
  return tape.concat_cols({in.v_img, in.v_txt, in.v_gph});
}

TensorPtr amsa(Tape& tape, const TensorPtr& v_m) {
  float inv_sqrt_d = 1.f / std::sqrt(float(v_m->cols));
  TensorPtr scores = tape.scale(tape.matmul_nt(v_m, v_m), inv_sqrt_d);
  return tape.matmul(tape.softmax_rows(scores), v_m);
}

TensorPtr cma(Tape& tape, const TensorPtr& q, const TensorPtr& v_img, const TensorPtr& v_txt,
              int heads) {
  int d_v = v_img->cols;
  if (q->cols != d_v || v_txt->cols != d_v) throw DimensionError("cma spaces must share a width");
  if (heads < 1 || d_v % heads != 0) throw DimensionError("heads must divide the modality width");
  int hd = d_v / heads;
  float inv_sqrt_hd = 1.f / std::sqrt(float(hd));

  std::vector<TensorPtr> outs;
  outs.reserve(size_t(heads));
  for (int h = 0; h < heads; ++h) {
    int c0 = h * hd, c1 = (h + 1) * hd;
    TensorPtr qh = heads == 1 ? q : tape.slice_cols(q, c0, c1);
    TensorPtr img_h = heads == 1 ? v_img : tape.slice_cols(v_img, c0, c1);
    TensorPtr txt_h = heads == 1 ? v_txt : tape.slice_cols(v_txt, c0, c1);

    TensorPtr attn1 = tape.softmax_rows(tape.scale(tape.matmul_nt(qh, img_h), inv_sqrt_hd));
    TensorPtr mixed_txt = tape.matmul(attn1, txt_h);
    TensorPtr attn2 = tape.softmax_rows(tape.scale(tape.matmul_nt(mixed_txt, txt_h), inv_sqrt_hd));
    outs.push_back(tape.matmul(attn2, img_h));
  }
  return heads == 1 ? outs.front() : tape.concat_cols(outs);
}

TensorPtr fuse(Tape& tape, const FusionInputs& in, const FusionParams& params, int heads) {
  TensorPtr v_m = concat_modalities(tape, in);
  TensorPtr v_amsa = amsa(tape, v_m);
  TensorPtr q = tape.matmul(v_amsa, params.w_q);
  return cma(tape, q, in.v_img, in.v_txt, heads);
}

}  // namespace trifuse
