#pragma once

// Next-item evaluation and the fusion ablation ladder. A generation scores a
// hit when it names the target item and counts as valid when it names any of
// the user's candidates; both comparisons run on normalized strings, which is
// exact under the closed vocabulary.

#include <string>
#include <vector>

#include "json.hpp"
#include "trifuse/curriculum.hpp"

namespace trifuse {

struct Metrics {
  double hitrate_at_1 = 0;
  double valid_ratio = 0;
  long n_instances = 0;
};

struct EvalRecord {
  long user_id = 0;
  std::string generated;
  std::string target;
  bool hit = false;
  bool valid = false;
};

// Case-fold, collapse whitespace runs, trim the ends.
std::string normalize_name(const std::string& s);

// Fraction of generations naming the instance's target. UsageError when the
// two lists disagree in length.
double hitrate_at_1(const std::vector<std::string>& generations,
                    const std::vector<UserSequence>& instances, const std::vector<Item>& catalog);

// Fraction naming any of the instance's candidates (the target included).
double valid_ratio(const std::vector<std::string>& generations,
                   const std::vector<UserSequence>& instances, const std::vector<Item>& catalog);

struct EvalResult {
  Metrics metrics;
  std::vector<EvalRecord> records;
};

// Greedy generation over every instance at the given prompt level. Pure with
// respect to the model; bitwise reproducible.
EvalResult run_eval(const TmfModel& model, const ModalityTables& tables,
                    const std::vector<Item>& catalog, const std::vector<UserSequence>& instances,
                    PromptLevel level, bool use_cma = true);

void write_instance_log(const std::string& path, const std::vector<EvalRecord>& records,
                        const std::vector<UserSequence>& instances,
                        const std::vector<Item>& catalog);

struct AblationConfig {
  bool use_behavior_tokens = false;
  bool use_item_tokens_amsa = false;
  bool use_cma = false;

  void validate() const;          // ConfigError: cross-modality needs the attended items
  PromptLevel max_level() const;  // deepest prompt level the flags support
  std::string rung_name() const;
};

// The four-rung ladder: base, +behavior, +attended items, full fusion.
std::vector<AblationConfig> ablation_ladder();

struct AblationRow {
  std::string rung;
  Metrics metrics;
};

// Warm-up once, then tune and evaluate each rung from that shared base with
// identical budgets, data, and candidate sets.
std::vector<AblationRow> run_ablation(const Config& cfg, const Dataset& data,
                                      const ModalityTables& tables);

std::string ablation_csv(const std::vector<AblationRow>& rows);
nlohmann::json ablation_json(const std::vector<AblationRow>& rows);

}  // namespace trifuse
