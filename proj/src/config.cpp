#include "trifuse/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "trifuse/errors.hpp"

namespace trifuse {
namespace {

struct FieldRef {
  enum Kind { kInt, kLong, kFloat, kString } kind;
  void* ptr;
};

// One row per knob; parsing, overrides, and report serialization all walk it.
std::vector<std::pair<std::string, FieldRef>> fields(Config& c) {
  return {
      {"seed", {FieldRef::kLong, &c.seed}},
      {"items", {FieldRef::kInt, &c.items}},
      {"users", {FieldRef::kInt, &c.users}},
      {"categories", {FieldRef::kInt, &c.categories}},
      {"latent_k", {FieldRef::kInt, &c.latent_k}},
      {"history_min", {FieldRef::kInt, &c.history_min}},
      {"history_max", {FieldRef::kInt, &c.history_max}},
      {"behavior_view", {FieldRef::kFloat, &c.behavior_view}},
      {"behavior_cart", {FieldRef::kFloat, &c.behavior_cart}},
      {"behavior_purchase", {FieldRef::kFloat, &c.behavior_purchase}},
      {"blend_image", {FieldRef::kFloat, &c.blend_image}},
      {"blend_text", {FieldRef::kFloat, &c.blend_text}},
      {"blend_graph", {FieldRef::kFloat, &c.blend_graph}},
      {"agg_view", {FieldRef::kFloat, &c.agg_view}},
      {"agg_cart", {FieldRef::kFloat, &c.agg_cart}},
      {"agg_purchase", {FieldRef::kFloat, &c.agg_purchase}},
      {"intent_beta", {FieldRef::kFloat, &c.intent_beta}},
      {"category_spread", {FieldRef::kFloat, &c.category_spread}},
      {"eval_fraction", {FieldRef::kFloat, &c.eval_fraction}},
      {"d_v", {FieldRef::kInt, &c.d_v}},
      {"d_t", {FieldRef::kInt, &c.d_t}},
      {"d_g", {FieldRef::kInt, &c.d_g}},
      {"graph_hops", {FieldRef::kInt, &c.graph_hops}},
      {"encoder_sigma", {FieldRef::kFloat, &c.encoder_sigma}},
      {"cma_heads", {FieldRef::kInt, &c.cma_heads}},
      {"adaptor_hidden", {FieldRef::kInt, &c.adaptor_hidden}},
      {"d_llm", {FieldRef::kInt, &c.d_llm}},
      {"lm_layers", {FieldRef::kInt, &c.lm_layers}},
      {"lm_heads", {FieldRef::kInt, &c.lm_heads}},
      {"max_seq_len", {FieldRef::kInt, &c.max_seq_len}},
      {"lora_r", {FieldRef::kInt, &c.lora_r}},
      {"lora_alpha", {FieldRef::kFloat, &c.lora_alpha}},
      {"pretrain_steps", {FieldRef::kInt, &c.pretrain_steps}},
      {"train_steps", {FieldRef::kInt, &c.train_steps}},
      {"phase_split", {FieldRef::kInt, &c.phase_split}},
      {"batch", {FieldRef::kInt, &c.batch}},
      {"lr", {FieldRef::kFloat, &c.lr}},
      {"pretrain_lr", {FieldRef::kFloat, &c.pretrain_lr}},
      {"warmup_frac", {FieldRef::kFloat, &c.warmup_frac}},
      {"medium_prob_denom", {FieldRef::kString, &c.medium_prob_denom}},
  };
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  for (auto& [name, ref] : fields(*this)) {
    if (name != key) continue;
    try {
      switch (ref.kind) {
        case FieldRef::kInt:
          *static_cast<int*>(ref.ptr) = std::stoi(value);
          return;
        case FieldRef::kLong:
          *static_cast<long*>(ref.ptr) = std::stol(value);
          return;
        case FieldRef::kFloat:
          *static_cast<float*>(ref.ptr) = std::stof(value);
          return;
        case FieldRef::kString:
          *static_cast<std::string*>(ref.ptr) = value;
          return;
      }
    } catch (const std::exception&) {
      throw ConfigError("bad value for " + key + ": '" + value + "'");
    }
  }
  throw ConfigError("unknown config key: " + key);
}

Config Config::from_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void Config::validate() const {
  auto bad = [](const std::string& what) { throw ConfigError(what); };
  if (items < 20) bad("items must be >= 20");
  if (users < 1) bad("users must be >= 1");
  if (categories < 1 || categories > items) bad("categories must be in [1, items]");
  if (latent_k < 4) bad("latent_k must be >= 4");
  if (history_min < 1 || history_max < history_min) bad("bad history bounds");
  if (behavior_view <= 0 || behavior_cart <= 0 || behavior_purchase <= 0)
    bad("behavior weights must be positive");
  if (eval_fraction <= 0 || eval_fraction >= 1) bad("eval_fraction must be in (0,1)");
  if (d_v != d_t) bad("d_v must equal d_t (cross-modality hops multiply across them)");
  if (d_v < latent_k) bad("d_v must be >= latent_k for an isometric projection");
  if (d_g < 1 || graph_hops < 0) bad("bad graph encoder dims");
  if (encoder_sigma < 0) bad("encoder_sigma must be >= 0");
  if (cma_heads < 1 || d_v % cma_heads != 0) bad("cma_heads must divide d_v");
  if (adaptor_hidden < 0) bad("adaptor_hidden must be 0 (auto) or positive");
  if (d_llm < 8 || lm_layers < 1) bad("bad LM dims");
  if (lm_heads < 1 || d_llm % lm_heads != 0) bad("lm_heads must divide d_llm");
  if (max_seq_len < 16) bad("max_seq_len too small");
  if (lora_r < 1 || lora_alpha <= 0) bad("bad LoRA config");
  if (pretrain_steps < 0 || train_steps < 1) bad("bad step budget");
  if (phase_split == 0 || phase_split >= train_steps) bad("phase_split must be in (0, T)");
  if (batch < 1) bad("batch must be >= 1");
  if (lr <= 0 || pretrain_lr <= 0) bad("learning rates must be positive");
  if (warmup_frac < 0 || warmup_frac > 0.5f) bad("warmup_frac must be in [0, 0.5]");
  if (medium_prob_denom != "total" && medium_prob_denom != "phase")
    bad("medium_prob_denom must be 'total' or 'phase'");
}

nlohmann::json Config::to_json() const {
  nlohmann::json j;
  auto& self = const_cast<Config&>(*this);
  for (auto& [name, ref] : fields(self)) {
    switch (ref.kind) {
      case FieldRef::kInt:
        j[name] = *static_cast<const int*>(ref.ptr);
        break;
      case FieldRef::kLong:
        j[name] = *static_cast<const long*>(ref.ptr);
        break;
      case FieldRef::kFloat:
        j[name] = *static_cast<const float*>(ref.ptr);
        break;
      case FieldRef::kString:
        j[name] = *static_cast<const std::string*>(ref.ptr);
        break;
    }
  }
  return j;
}

}  // namespace trifuse
