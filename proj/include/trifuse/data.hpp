#pragma once

// Synthetic shopping domain: catalog items with hidden latent attributes,
// multi-behavior user histories, the item-behavior interaction graph, and
// candidate sets for evaluation. Targets are constructed from the same
// modality embeddings the model later consumes, so an exhaustive scorer over
// all modalities recovers them by definition and partial scorers cannot.

#include <array>
#include <string>
#include <vector>

#include "trifuse/config.hpp"

namespace trifuse {

enum class Behavior { kView = 0, kCart = 1, kPurchase = 2 };
constexpr int kBehaviorCount = 3;

const char* behavior_name(Behavior b);               // "view" / "add_to_cart" / "purchase"
Behavior behavior_from_name(const std::string& name);

struct Item {
  int id = 0;
  std::string name;
  int category = 0;
  std::vector<float> latent;  // unit L2 norm, length latent_k
};

struct Interaction {
  int item = 0;
  Behavior behavior = Behavior::kView;
};

struct UserSequence {
  int user_id = 0;
  std::vector<Interaction> history;
  int target_item = -1;         // always purchased
  std::vector<int> candidates;  // 10 negatives + target, shuffled; empty until drawn
};

struct ItemBehaviorGraph {
  int n_items = 0;
  // weights[i][b] = count of (item i, behavior b) across all histories
  std::vector<std::array<long, kBehaviorCount>> weights;

  long weight(int item, Behavior b) const { return weights[size_t(item)][int(b)]; }
};

struct Dataset {
  std::vector<Item> catalog;
  std::vector<UserSequence> users;
  ItemBehaviorGraph graph;
};

std::vector<Item> gen_catalog(long seed, int n_items, int n_categories, int k, float spread);
ItemBehaviorGraph build_graph(const std::vector<UserSequence>& sequences, int n_items);
// Histories, then graph and modality tables, then blend-scored targets.
std::vector<UserSequence> gen_sequences(const Config& cfg, const std::vector<Item>& catalog);
void make_eval_instances(long seed, std::vector<UserSequence>& sequences, int n_items);
Dataset generate_dataset(const Config& cfg);

// First train_count(users) sequences train; the rest evaluate.
size_t train_count(const Config& cfg, size_t n_users);

struct ModalityTables;  // encoders.hpp

// Brute-force top-1 scorers over the full catalog: the blended score that
// defines targets, and each single-modality restriction.
struct OracleTop1 {
  int full = -1;
  int image_only = -1;
  int text_only = -1;
  int graph_only = -1;
};
OracleTop1 oracle_top1(const UserSequence& seq, const std::vector<Item>& catalog,
                       const ModalityTables& tables, const Config& cfg);

// JSONL persistence (one object per line).
void save_catalog(const std::string& path, const std::vector<Item>& catalog);
std::vector<Item> load_catalog(const std::string& path);
void save_sequences(const std::string& path, const std::vector<UserSequence>& users);
std::vector<UserSequence> load_sequences(const std::string& path);
void save_graph(const std::string& path, const ItemBehaviorGraph& graph);
ItemBehaviorGraph load_graph(const std::string& path, int n_items);

}  // namespace trifuse
