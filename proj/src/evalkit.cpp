#include "trifuse/evalkit.hpp"

#include <cctype>
#include <cstring>
#include <sstream>

#include "trifuse/errors.hpp"
#include "trifuse/util.hpp"

namespace trifuse {

namespace {

constexpr int kMaxAnswerTokens = 6;  // names are at most three words

bool matches(const std::string& a, const std::string& b) {
  return normalize_name(a) == normalize_name(b);
}

const Item& item_at(const std::vector<Item>& catalog, int id) {
  if (id < 0 || size_t(id) >= catalog.size()) {
    throw LookupError("item id out of range: " + std::to_string(id));
  }
  return catalog[size_t(id)];
}

}  // namespace

std::string normalize_name(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

double hitrate_at_1(const std::vector<std::string>& generations,
                    const std::vector<UserSequence>& instances, const std::vector<Item>& catalog) {
  if (generations.size() != instances.size()) {
    throw UsageError("one generation per instance required");
  }
  if (instances.empty()) throw UsageError("no instances to score");
  long hits = 0;
  for (size_t i = 0; i < instances.size(); ++i) {
    if (matches(generations[i], item_at(catalog, instances[i].target_item).name)) ++hits;
  }
  return double(hits) / double(instances.size());
}

double valid_ratio(const std::vector<std::string>& generations,
                   const std::vector<UserSequence>& instances, const std::vector<Item>& catalog) {
  if (generations.size() != instances.size()) {
    throw UsageError("one generation per instance required");
  }
  if (instances.empty()) throw UsageError("no instances to score");
  long valid = 0;
  for (size_t i = 0; i < instances.size(); ++i) {
    for (int cand : instances[i].candidates) {
      if (matches(generations[i], item_at(catalog, cand).name)) {
        ++valid;
        break;
      }
    }
  }
  return double(valid) / double(instances.size());
}

EvalResult run_eval(const TmfModel& model, const ModalityTables& tables,
                    const std::vector<Item>& catalog, const std::vector<UserSequence>& instances,
                    PromptLevel level, bool use_cma) {
  EvalResult result;
  std::vector<std::string> generations;
  generations.reserve(instances.size());
  for (const UserSequence& seq : instances) {
    std::vector<int> ids = generate_answer(model, tables, catalog, seq, level, seq.user_id,
                                           kMaxAnswerTokens, use_cma);
    std::string text = detokenize(model.vocab, ids);
    const std::string& target = item_at(catalog, seq.target_item).name;

    EvalRecord rec;
    rec.user_id = seq.user_id;
    rec.generated = text;
    rec.target = target;
    rec.hit = matches(text, target);
    for (int cand : seq.candidates) rec.valid |= matches(text, item_at(catalog, cand).name);
    result.records.push_back(std::move(rec));
    generations.push_back(std::move(text));
  }
  result.metrics.hitrate_at_1 = hitrate_at_1(generations, instances, catalog);
  result.metrics.valid_ratio = valid_ratio(generations, instances, catalog);
  result.metrics.n_instances = long(instances.size());
  if (result.metrics.hitrate_at_1 > result.metrics.valid_ratio) {
    throw IntegrityError("a hit was scored outside the candidate set");
  }
  return result;
}

void write_instance_log(const std::string& path, const std::vector<EvalRecord>& records,
                        const std::vector<UserSequence>& instances,
                        const std::vector<Item>& catalog) {
  if (records.size() != instances.size()) throw UsageError("one record per instance required");
  std::ostringstream out;
  for (size_t i = 0; i < records.size(); ++i) {
    nlohmann::json candidates = nlohmann::json::array();
    for (int cand : instances[i].candidates) candidates.push_back(item_at(catalog, cand).name);
    nlohmann::json line = {
        {"user_id", records[i].user_id},   {"generated", records[i].generated},
        {"target", records[i].target},     {"candidates", candidates},
        {"hit", records[i].hit},           {"valid", records[i].valid},
    };
    out << line.dump() << '\n';
  }
  write_file(path, out.str());
}

void AblationConfig::validate() const {
  if (use_cma && !use_item_tokens_amsa) {
    throw ConfigError("cross-modality attention consumes the attended item vectors");
  }
  if (use_item_tokens_amsa && !use_behavior_tokens) {
    throw ConfigError("item tokens only appear in prompts that already carry behavior tokens");
  }
}

PromptLevel AblationConfig::max_level() const {
  validate();
  if (!use_behavior_tokens) return PromptLevel::kEasy;
  if (!use_item_tokens_amsa) return PromptLevel::kMedium;
  return PromptLevel::kHard;
}

std::string AblationConfig::rung_name() const {
  if (!use_behavior_tokens) return "base";
  if (!use_item_tokens_amsa) return "behavior_tokens";
  if (!use_cma) return "item_tokens_amsa";
  return "full_cma";
}

std::vector<AblationConfig> ablation_ladder() {
  return {
      {false, false, false},
      {true, false, false},
      {true, true, false},
      {true, true, true},
  };
}

std::vector<AblationRow> run_ablation(const Config& cfg, const Dataset& data,
                                      const ModalityTables& tables) {
  const size_t n_train = train_count(cfg, data.users.size());
  std::vector<UserSequence> train(data.users.begin(), data.users.begin() + long(n_train));
  std::vector<UserSequence> eval(data.users.begin() + long(n_train), data.users.end());

  TmfModel warm = TmfModel::init(cfg, data.catalog);
  pretrain_base(warm, tables, data.catalog, train);
  ParamStore warm_store;
  warm.register_all(warm_store);

  std::vector<AblationRow> rows;
  for (const AblationConfig& rung : ablation_ladder()) {
    TmfModel model = TmfModel::init(cfg, data.catalog);
    ParamStore store;
    model.register_all(store);
    for (const auto& name : warm_store.names()) {
      TensorPtr src = warm_store.get(name);
      TensorPtr dst = store.get(name);
      std::memcpy(dst->v(), src->v(), src->numel() * sizeof(float));
    }
    model.lm.attach_lora(cfg.seed, cfg.lora_r, cfg.lora_alpha);
    train_curriculum(model, tables, data.catalog, train, rung.max_level(), rung.use_cma);
    EvalResult result =
        run_eval(model, tables, data.catalog, eval, rung.max_level(), rung.use_cma);
    rows.push_back({rung.rung_name(), result.metrics});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "rung,hitrate_at_1,valid_ratio,n_instances\n";
  for (const AblationRow& row : rows) {
    out << row.rung << ',' << row.metrics.hitrate_at_1 << ',' << row.metrics.valid_ratio << ','
        << row.metrics.n_instances << '\n';
  }
  return out.str();
}

nlohmann::json ablation_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const AblationRow& row : rows) {
    out.push_back({{"rung", row.rung},
                   {"hitrate_at_1", row.metrics.hitrate_at_1},
                   {"valid_ratio", row.metrics.valid_ratio},
                   {"n_instances", row.metrics.n_instances}});
  }
  return out;
}

}  // namespace trifuse
