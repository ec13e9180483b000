#include "trifuse/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "trifuse/encoders.hpp"
#include "trifuse/errors.hpp"
#include "trifuse/rng.hpp"
#include "trifuse/util.hpp"

namespace trifuse {

namespace {

const char* const kAdjectives[] = {
    "amber",  "black",  "blue",   "bright", "cedar", "copper", "coral",  "crimson",
    "dusty",  "golden", "green",  "grey",   "ivory", "jade",   "maroon", "matte",
    "navy",   "olive",  "pale",   "ruby",   "silver", "teal",  "violet", "woven"};
const char* const kNouns[] = {
    "anorak", "backpack", "beanie", "blazer", "blouse",  "boots",    "cap",     "cardigan",
    "coat",   "dress",    "gloves", "hoodie", "jacket",  "jeans",    "jumper",  "kettle",
    "lamp",   "mug",      "parka",  "sandals", "scarf",  "sneakers", "sweater", "vest"};
constexpr int kAdjCount = int(sizeof(kAdjectives) / sizeof(kAdjectives[0]));
constexpr int kNounCount = int(sizeof(kNouns) / sizeof(kNouns[0]));
constexpr int kMaxSuffix = 99;

void normalize_in_place(std::vector<float>& v) {
  double norm2 = 0.0;
  for (float x : v) norm2 += double(x) * x;
  if (norm2 < 1e-24) throw NumericError("cannot normalize a near-zero vector");
  float inv = float(1.0 / std::sqrt(norm2));
  for (float& x : v) x *= inv;
}

double cosine(const float* a, const float* b, int d) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < d; ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na < 1e-24 || nb < 1e-24) return 0.0;
  return dot / std::sqrt(na * nb);
}

float behavior_agg_weight(const Config& cfg, Behavior b) {
  switch (b) {
    case Behavior::kView: return cfg.agg_view;
    case Behavior::kCart: return cfg.agg_cart;
    case Behavior::kPurchase: return cfg.agg_purchase;
  }
  throw UsageError("unknown behavior");
}

// Behavior-weighted mean of history rows in one modality's embedding space.
std::vector<float> history_mean(const UserSequence& seq, const float* table, int d,
                                const Config& cfg) {
  std::vector<float> mean(static_cast<size_t>(d), 0.f);
  double total = 0.0;
  for (const Interaction& it : seq.history) {
    float w = behavior_agg_weight(cfg, it.behavior);
    const float* row = table + size_t(it.item) * d;
    for (int c = 0; c < d; ++c) mean[size_t(c)] += w * row[c];
    total += w;
  }
  if (total <= 0.0) throw IntegrityError("history has no positive behavior weight");
  for (float& x : mean) x = float(x / total);
  return mean;
}

}  // namespace

const char* behavior_name(Behavior b) {
  switch (b) {
    case Behavior::kView: return "view";
    case Behavior::kCart: return "add_to_cart";
    case Behavior::kPurchase: return "purchase";
  }
  throw UsageError("unknown behavior");
}

Behavior behavior_from_name(const std::string& name) {
  for (int b = 0; b < kBehaviorCount; ++b) {
    if (name == behavior_name(Behavior(b))) return Behavior(b);
  }
  throw LookupError("unknown behavior name: " + name);
}

std::vector<Item> gen_catalog(long seed, int n_items, int n_categories, int k, float spread) {
  if (n_items <= 0 || n_categories <= 0 || k <= 0) throw UsageError("gen_catalog needs positive sizes");
  constexpr long kPairCount = long(kAdjCount) * kNounCount;
  if (long(n_items) > kPairCount * kMaxSuffix) {
    throw CapacityError("catalog size exceeds the name space (" +
                        std::to_string(kPairCount * kMaxSuffix) + " names)");
  }

  Rng rng = Rng::derive(seed, rng_tag::kCatalog, 0);

  std::vector<std::vector<float>> centroids(static_cast<size_t>(n_categories));
  for (auto& c : centroids) {
    c.resize(size_t(k));
    for (float& v : c) v = float(rng.normal());
    normalize_in_place(c);
  }

  // Unique names: every adjective+noun pair once in shuffled order, then the
  // same cycle again with a numeric suffix when the catalog outgrows it.
  std::vector<int> pair_order(static_cast<size_t>(kPairCount));
  for (long p = 0; p < kPairCount; ++p) pair_order[size_t(p)] = int(p);
  rng.shuffle(pair_order);

  std::vector<Item> catalog(static_cast<size_t>(n_items));
  for (int i = 0; i < n_items; ++i) {
    Item& item = catalog[size_t(i)];
    item.id = i;
    int pair = pair_order[size_t(i % kPairCount)];
    int round = i / int(kPairCount);
    item.name = std::string(kAdjectives[pair / kNounCount]) + " " + kNouns[pair % kNounCount];
    if (round > 0) item.name += " " + std::to_string(round + 1);
    item.category = i % n_categories;
    item.latent = centroids[size_t(item.category)];
    for (float& v : item.latent) v += spread * float(rng.normal());
    normalize_in_place(item.latent);
  }
  return catalog;
}

ItemBehaviorGraph build_graph(const std::vector<UserSequence>& sequences, int n_items) {
  ItemBehaviorGraph g;
  g.n_items = n_items;
  g.weights.assign(size_t(n_items), {0, 0, 0});
  for (const UserSequence& seq : sequences) {
    for (const Interaction& it : seq.history) {
      if (it.item < 0 || it.item >= n_items) throw IntegrityError("history references unknown item");
      ++g.weights[size_t(it.item)][int(it.behavior)];
    }
  }
  return g;
}

OracleTop1 oracle_top1(const UserSequence& seq, const std::vector<Item>& catalog,
                       const ModalityTables& tables, const Config& cfg) {
  if (seq.history.empty()) throw UsageError("oracle_top1 needs a non-empty history");
  auto h_img = history_mean(seq, tables.image.data(), tables.d_v, cfg);
  auto h_txt = history_mean(seq, tables.text.data(), tables.d_t, cfg);
  auto h_gph = history_mean(seq, tables.graph_items.data(), tables.d_g, cfg);

  std::set<int> seen;
  for (const Interaction& it : seq.history) seen.insert(it.item);

  OracleTop1 best;
  double best_full = 0.0, best_img = 0.0, best_txt = 0.0, best_gph = 0.0;
  for (const Item& item : catalog) {
    if (seen.count(item.id)) continue;
    double s_img = cosine(tables.image_row(item.id), h_img.data(), tables.d_v);
    double s_txt = cosine(tables.text_row(item.id), h_txt.data(), tables.d_t);
    double s_gph = cosine(tables.graph_row(item.id), h_gph.data(), tables.d_g);
    double s_full = cfg.blend_image * s_img + cfg.blend_text * s_txt + cfg.blend_graph * s_gph;
    if (best.full < 0 || s_full > best_full) { best_full = s_full; best.full = item.id; }
    if (best.image_only < 0 || s_img > best_img) { best_img = s_img; best.image_only = item.id; }
    if (best.text_only < 0 || s_txt > best_txt) { best_txt = s_txt; best.text_only = item.id; }
    if (best.graph_only < 0 || s_gph > best_gph) { best_gph = s_gph; best.graph_only = item.id; }
  }
  if (best.full < 0) throw CapacityError("history covers the whole catalog; no target candidates left");
  return best;
}

std::vector<UserSequence> gen_sequences(const Config& cfg, const std::vector<Item>& catalog) {
  const int n_items = int(catalog.size());
  const int k = cfg.latent_k;
  double w_view = cfg.behavior_view, w_cart = cfg.behavior_cart, w_buy = cfg.behavior_purchase;
  double w_total = w_view + w_cart + w_buy;

  std::vector<UserSequence> users(static_cast<size_t>(cfg.users));
  std::vector<double> logits(static_cast<size_t>(n_items));
  for (int u = 0; u < cfg.users; ++u) {
    UserSequence& seq = users[size_t(u)];
    seq.user_id = u;
    Rng rng = Rng::derive(cfg.seed, rng_tag::kUserSeq, u);

    std::vector<float> intent(static_cast<size_t>(k));
    for (float& v : intent) v = float(rng.normal());
    normalize_in_place(intent);

    double max_logit = -1e300;
    for (int i = 0; i < n_items; ++i) {
      double dot = 0.0;
      for (int c = 0; c < k; ++c) dot += double(catalog[size_t(i)].latent[size_t(c)]) * intent[size_t(c)];
      logits[size_t(i)] = cfg.intent_beta * dot;
      max_logit = std::max(max_logit, logits[size_t(i)]);
    }
    double total = 0.0;
    for (double& l : logits) total += (l = std::exp(l - max_logit));

    int len = cfg.history_min + rng.uniform_int(cfg.history_max - cfg.history_min + 1);
    seq.history.resize(size_t(len));
    for (Interaction& it : seq.history) {
      double pick = rng.uniform() * total;
      double acc = 0.0;
      it.item = n_items - 1;
      for (int i = 0; i < n_items; ++i) {
        acc += logits[size_t(i)];
        if (pick < acc) { it.item = i; break; }
      }
      double b = rng.uniform() * w_total;
      it.behavior = b < w_view ? Behavior::kView : (b < w_view + w_cart ? Behavior::kCart : Behavior::kPurchase);
    }
  }

  // Targets need the interaction graph and the encoder tables, both of which
  // depend on every history, so they are assigned in a second pass.
  ItemBehaviorGraph graph = build_graph(users, n_items);
  ModalityTables tables = build_tables(cfg, catalog, graph);
  for (UserSequence& seq : users) {
    seq.target_item = oracle_top1(seq, catalog, tables, cfg).full;
  }
  return users;
}

void make_eval_instances(long seed, std::vector<UserSequence>& sequences, int n_items) {
  constexpr int kNegatives = 10;
  for (UserSequence& seq : sequences) {
    std::set<int> excluded;
    for (const Interaction& it : seq.history) excluded.insert(it.item);
    excluded.insert(seq.target_item);
    if (n_items < int(excluded.size()) + kNegatives) {
      throw CapacityError("catalog too small for 10 negatives outside the history");
    }
    Rng rng = Rng::derive(seed, rng_tag::kEvalNegatives, seq.user_id);
    std::set<int> negatives;
    while (int(negatives.size()) < kNegatives) {
      int c = rng.uniform_int(n_items);
      if (!excluded.count(c) && !negatives.count(c)) negatives.insert(c);
    }
    seq.candidates.assign(negatives.begin(), negatives.end());
    seq.candidates.push_back(seq.target_item);
    rng.shuffle(seq.candidates);
  }
}

Dataset generate_dataset(const Config& cfg) {
  cfg.validate();
  Dataset ds;
  ds.catalog = gen_catalog(cfg.seed, cfg.items, cfg.categories, cfg.latent_k, cfg.category_spread);
  ds.users = gen_sequences(cfg, ds.catalog);
  ds.graph = build_graph(ds.users, cfg.items);
  make_eval_instances(cfg.seed, ds.users, cfg.items);
  return ds;
}

size_t train_count(const Config& cfg, size_t n_users) {
  size_t eval_n = size_t(double(n_users) * cfg.eval_fraction);
  eval_n = std::max<size_t>(1, std::min(eval_n, n_users - 1));
  return n_users - eval_n;
}

void save_catalog(const std::string& path, const std::vector<Item>& catalog) {
  std::ostringstream out;
  for (const Item& item : catalog) {
    nlohmann::json j = {{"item_id", item.id}, {"name", item.name}, {"category", item.category},
                        {"latent", item.latent}};
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

std::vector<Item> load_catalog(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<Item> catalog;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Item item;
    item.id = j.at("item_id").get<int>();
    item.name = j.at("name").get<std::string>();
    item.category = j.at("category").get<int>();
    item.latent = j.at("latent").get<std::vector<float>>();
    catalog.push_back(std::move(item));
  }
  for (size_t i = 0; i < catalog.size(); ++i) {
    if (catalog[i].id != int(i)) throw IntegrityError("catalog item ids must be dense and ordered");
  }
  return catalog;
}

void save_sequences(const std::string& path, const std::vector<UserSequence>& users) {
  std::ostringstream out;
  for (const UserSequence& seq : users) {
    nlohmann::json hist = nlohmann::json::array();
    for (const Interaction& it : seq.history) {
      hist.push_back({it.item, behavior_name(it.behavior)});
    }
    nlohmann::json j = {{"user_id", seq.user_id}, {"history", hist},
                        {"target_item_id", seq.target_item}, {"candidates", seq.candidates}};
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

std::vector<UserSequence> load_sequences(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<UserSequence> users;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    UserSequence seq;
    seq.user_id = j.at("user_id").get<int>();
    for (const auto& h : j.at("history")) {
      seq.history.push_back({h.at(0).get<int>(), behavior_from_name(h.at(1).get<std::string>())});
    }
    seq.target_item = j.at("target_item_id").get<int>();
    seq.candidates = j.at("candidates").get<std::vector<int>>();
    users.push_back(std::move(seq));
  }
  return users;
}

void save_graph(const std::string& path, const ItemBehaviorGraph& graph) {
  std::ostringstream out;
  for (int i = 0; i < graph.n_items; ++i) {
    for (int b = 0; b < kBehaviorCount; ++b) {
      long w = graph.weights[size_t(i)][b];
      if (w == 0) continue;
      nlohmann::json j = {{"item_id", i}, {"behavior", behavior_name(Behavior(b))}, {"weight", w}};
      out << j.dump() << "\n";
    }
  }
  write_file(path, out.str());
}

ItemBehaviorGraph load_graph(const std::string& path, int n_items) {
  ItemBehaviorGraph g;
  g.n_items = n_items;
  g.weights.assign(size_t(n_items), {0, 0, 0});
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    int item = j.at("item_id").get<int>();
    if (item < 0 || item >= n_items) throw IntegrityError("graph edge references unknown item");
    g.weights[size_t(item)][int(behavior_from_name(j.at("behavior").get<std::string>()))] =
        j.at("weight").get<long>();
  }
  return g;
}

}  // namespace trifuse
