#pragma once

// Binds the catalog vocabulary, language model, fusion module, and the two
// adaptors into one trainable bundle, and turns a user sequence into a
// prompt loss or a generated answer. Both the trainer and the evaluator go
// through these builders so train and eval see identical graphs.

#include <vector>

#include "trifuse/adaptors.hpp"
#include "trifuse/config.hpp"
#include "trifuse/data.hpp"
#include "trifuse/encoders.hpp"
#include "trifuse/fusion.hpp"
#include "trifuse/lm.hpp"
#include "trifuse/prompt.hpp"

namespace trifuse {

struct TmfModel {
  Config cfg;
  Vocab vocab;
  Lm lm;
  FusionParams fusion;
  ItemAdaptor item_adaptor;
  BehaviorAdaptor behavior_adaptor;

  static TmfModel init(const Config& cfg, const std::vector<Item>& catalog);
  // base.*, lora.* when attached, psi_f.*, psi_i.*, psi_b.*
  void register_all(ParamStore& store) const;
};

// Modality-token rows for one prompt; tensors stay null for levels that do
// not use them.
struct ModalityTokens {
  TensorPtr items;      // |H| x d_llm, hard prompts only
  TensorPtr behaviors;  // 3 x d_llm, medium and hard prompts
};

// use_cma=false stops fusion after the query projection of the attended
// history, so item tokens carry self-attention context but no cross-modality
// mixing (the intermediate ablation rung).
ModalityTokens build_modality_tokens(Tape& tape, const TmfModel& model,
                                     const ModalityTables& tables, const UserSequence& seq,
                                     PromptLevel level, bool use_cma = true);

// Teacher-forced NLL of one rendered prompt's answer span.
TensorPtr example_loss(Tape& tape, const TmfModel& model, const ModalityTables& tables,
                       const std::vector<Item>& catalog, const UserSequence& seq,
                       PromptLevel level, long template_seed, bool use_cma = true);

// Greedy answer ids for an answer-free prompt.
std::vector<int> generate_answer(const TmfModel& model, const ModalityTables& tables,
                                 const std::vector<Item>& catalog, const UserSequence& seq,
                                 PromptLevel level, long template_seed, int max_new_tokens,
                                 bool use_cma = true);

}  // namespace trifuse
