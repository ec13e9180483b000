#pragma once

// Flat run configuration. Parsed from plain key=value files with '#' comments;
// every knob has a default so an empty file is a valid config.

#include <string>

#include "json.hpp"

namespace trifuse {

struct Config {
  // data generation
  long seed = 1;
  int items = 500;
  int users = 2000;
  int categories = 12;
  int latent_k = 8;
  int history_min = 4;
  int history_max = 16;
  float behavior_view = 0.6f;
  float behavior_cart = 0.3f;
  float behavior_purchase = 0.1f;
  float blend_image = 0.4f;
  float blend_text = 0.3f;
  float blend_graph = 0.3f;
  float agg_view = 0.5f;  // history-aggregation weight per behavior
  float agg_cart = 1.0f;
  float agg_purchase = 1.5f;
  float intent_beta = 5.0f;
  float category_spread = 0.5f;
  float eval_fraction = 0.1f;

  // encoders
  int d_v = 16;
  int d_t = 16;
  int d_g = 8;
  int graph_hops = 2;
  float encoder_sigma = 0.1f;

  // fusion
  int cma_heads = 1;
  int adaptor_hidden = 0;  // 0 selects 2 * d_llm

  // language model
  int d_llm = 64;
  int lm_layers = 2;
  int lm_heads = 4;
  int max_seq_len = 256;
  int lora_r = 4;
  float lora_alpha = 8.0f;

  // training
  int pretrain_steps = 1500;
  int train_steps = 5000;   // T
  int phase_split = -1;     // T1; -1 selects T/2
  int batch = 8;
  float lr = 1e-3f;
  float pretrain_lr = 1e-3f;
  float warmup_frac = 0.05f;
  std::string medium_prob_denom = "total";  // "total": tau/T, "phase": tau/T1

  int resolved_phase_split() const { return phase_split > 0 ? phase_split : train_steps / 2; }
  int resolved_adaptor_hidden() const { return adaptor_hidden > 0 ? adaptor_hidden : 2 * d_llm; }

  static Config load(const std::string& path);           // throws IoError / ConfigError
  static Config from_text(const std::string& text);      // throws ConfigError
  void set(const std::string& key, const std::string& value);
  void validate() const;                                  // throws ConfigError
  nlohmann::json to_json() const;
};

}  // namespace trifuse
