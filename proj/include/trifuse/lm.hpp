#pragma once

// Decoder-only pre-norm transformer over the prompt vocabulary, with
// low-rank adapters on the attention q/v projections. Embedded inputs come
// from embed_prompt; positional rows are added here. Generation is greedy,
// never emits specials other than EOS, and re-runs the full forward per
// token (sequences are short enough that a cache buys nothing).

#include <optional>
#include <vector>

#include "trifuse/adam.hpp"
#include "trifuse/tensor.hpp"

namespace trifuse {

struct LmShape {
  int vocab = 0;
  int d = 64;
  int layers = 2;
  int heads = 4;
  int max_seq_len = 256;
};

struct AttnLora {
  TensorPtr a_q, b_q, a_v, b_v;  // a: d x r, b: r x d; b starts at zero
  float scale = 1.f;             // alpha / r
};

struct LmLayer {
  TensorPtr ln1_g, ln1_b;
  TensorPtr w_q, w_k, w_v, w_o;  // d x d, no biases
  TensorPtr ln2_g, ln2_b;
  TensorPtr w_fc, w_proj;  // d x 4d, 4d x d
  std::optional<AttnLora> lora;
};

struct Lm {
  LmShape shape;
  TensorPtr tok_emb;  // vocab x d
  TensorPtr pos_emb;  // max_seq_len x d
  std::vector<LmLayer> layers;
  TensorPtr ln_f_g, ln_f_b;
  TensorPtr lm_head;  // d x vocab, untied from tok_emb

  static Lm init(long seed, const LmShape& shape);
  void register_base(ParamStore& store) const;  // "base.*"
  void register_lora(ParamStore& store) const;  // "lora.*"; UsageError when not attached

  // Freezes every base tensor and adds zero-initialized low-rank adapters, so
  // the forward pass is unchanged until the adapters train.
  void attach_lora(long seed, int r, float alpha);  // UsageError when already attached
  bool lora_attached() const { return !layers.empty() && layers.front().lora.has_value(); }
  long lora_param_count() const;

  TensorPtr hidden_states(Tape& tape, const TensorPtr& embedded) const;  // len x d
  TensorPtr forward(Tape& tape, const TensorPtr& embedded) const;        // len x vocab
};

// Mean NLL of tokens[answer_start..] given full logits (teacher forcing).
TensorPtr nll_loss(Tape& tape, const TensorPtr& logits, const std::vector<int>& tokens,
                   int answer_start);
// Same loss without materializing logits outside the answer span.
TensorPtr lm_nll(Tape& tape, const Lm& lm, const TensorPtr& embedded, const std::vector<int>& tokens,
                 int answer_start);

// Greedy decoding from an embedded prompt; returns generated ids without EOS.
std::vector<int> generate(const Lm& lm, const TensorPtr& prompt_embedded, int max_new_tokens);

}  // namespace trifuse
