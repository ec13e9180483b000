#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "doctest.h"
#include "trifuse/data.hpp"
#include "trifuse/encoders.hpp"
#include "trifuse/errors.hpp"

using namespace trifuse;

namespace {

int word_count(const std::string& name) {
  std::istringstream in(name);
  std::string w;
  int n = 0;
  while (in >> w) ++n;
  return n;
}

double latent_cosine(const Item& a, const Item& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.latent.size(); ++i) {
    dot += double(a.latent[i]) * b.latent[i];
    na += double(a.latent[i]) * a.latent[i];
    nb += double(b.latent[i]) * b.latent[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("catalog names are unique, short, and deterministic") {
  auto catalog = gen_catalog(42, 500, 12, 8, 0.5f);
  REQUIRE(catalog.size() == 500);

  std::set<std::string> names;
  for (const Item& item : catalog) {
    CHECK(names.insert(item.name).second);
    CHECK(word_count(item.name) <= 4);
    CHECK(item.category >= 0);
    CHECK(item.category < 12);
    double norm2 = 0.0;
    for (float v : item.latent) norm2 += double(v) * v;
    CHECK(std::abs(norm2 - 1.0) < 1e-5);
  }

  auto again = gen_catalog(42, 500, 12, 8, 0.5f);
  for (size_t i = 0; i < catalog.size(); ++i) {
    CHECK(catalog[i].name == again[i].name);
    CHECK(catalog[i].latent == again[i].latent);
  }
  auto other = gen_catalog(43, 500, 12, 8, 0.5f);
  int same_names = 0;
  for (size_t i = 0; i < catalog.size(); ++i) same_names += catalog[i].name == other[i].name;
  CHECK(same_names < 50);
}

TEST_CASE("catalog past the pair space gets numeric suffixes and stays unique") {
  auto catalog = gen_catalog(1, 600, 12, 8, 0.5f);
  std::set<std::string> names;
  int suffixed = 0;
  for (const Item& item : catalog) {
    CHECK(names.insert(item.name).second);
    suffixed += word_count(item.name) == 3;
  }
  CHECK(suffixed == 600 - 24 * 24);
  CHECK_THROWS_AS(gen_catalog(1, 24 * 24 * 99 + 1, 12, 8, 0.5f), CapacityError);
}

TEST_CASE("items cluster around their category centroid") {
  auto catalog = gen_catalog(9, 240, 12, 8, 0.5f);
  double within = 0.0, cross = 0.0;
  int n_within = 0, n_cross = 0;
  for (size_t a = 0; a < catalog.size(); ++a) {
    for (size_t b = a + 1; b < catalog.size(); b += 7) {
      double c = latent_cosine(catalog[a], catalog[b]);
      if (catalog[a].category == catalog[b].category) { within += c; ++n_within; }
      else { cross += c; ++n_cross; }
    }
  }
  within /= n_within;
  cross /= n_cross;
  std::printf("category cosine: within %.4f cross %.4f\n", within, cross);
  CHECK(within > cross + 0.15);
}

TEST_CASE("histories stay within bounds with the configured behavior mix") {
  Config cfg;
  cfg.seed = 3;
  cfg.items = 100;
  cfg.users = 400;
  cfg.categories = 8;
  auto catalog = gen_catalog(cfg.seed, cfg.items, cfg.categories, cfg.latent_k, cfg.category_spread);
  auto users = gen_sequences(cfg, catalog);
  REQUIRE(users.size() == 400);

  long counts[kBehaviorCount] = {0, 0, 0};
  long total = 0;
  for (const UserSequence& seq : users) {
    CHECK(int(seq.history.size()) >= cfg.history_min);
    CHECK(int(seq.history.size()) <= cfg.history_max);
    bool target_in_history = false;
    for (const Interaction& it : seq.history) {
      CHECK(it.item >= 0);
      CHECK(it.item < cfg.items);
      ++counts[int(it.behavior)];
      ++total;
      target_in_history |= it.item == seq.target_item;
    }
    CHECK(!target_in_history);
    CHECK(seq.target_item >= 0);
    CHECK(seq.target_item < cfg.items);
  }
  // iid draws: each frequency should sit within 4 standard errors of its weight
  double expected[] = {0.6, 0.3, 0.1};
  for (int b = 0; b < kBehaviorCount; ++b) {
    double freq = double(counts[b]) / double(total);
    double se = std::sqrt(expected[b] * (1 - expected[b]) / double(total));
    CHECK(std::abs(freq - expected[b]) < 4 * se);
  }

  auto again = gen_sequences(cfg, catalog);
  for (size_t u = 0; u < users.size(); ++u) {
    CHECK(users[u].target_item == again[u].target_item);
    REQUIRE(users[u].history.size() == again[u].history.size());
    for (size_t t = 0; t < users[u].history.size(); ++t) {
      CHECK(users[u].history[t].item == again[u].history[t].item);
      CHECK(users[u].history[t].behavior == again[u].history[t].behavior);
    }
  }
}

TEST_CASE("users with aligned intents shop in overlapping categories") {
  Config cfg;
  cfg.seed = 21;
  cfg.items = 120;
  cfg.users = 200;
  cfg.categories = 6;
  auto catalog = gen_catalog(cfg.seed, cfg.items, cfg.categories, cfg.latent_k, cfg.category_spread);
  auto users = gen_sequences(cfg, catalog);

  // Concentration: a focused intent should not spread uniformly over categories.
  double top_share = 0.0;
  for (const UserSequence& seq : users) {
    std::vector<int> per_cat(6, 0);
    for (const Interaction& it : seq.history) ++per_cat[size_t(catalog[size_t(it.item)].category)];
    top_share += double(*std::max_element(per_cat.begin(), per_cat.end())) / double(seq.history.size());
  }
  top_share /= double(users.size());
  std::printf("mean share of the modal category per history: %.3f\n", top_share);
  CHECK(top_share > 0.45);  // uniform over 6 categories would hover near 0.26
}

TEST_CASE("graph counts every history interaction including repeats") {
  UserSequence a;
  a.user_id = 0;
  a.history = {{1, Behavior::kView}, {1, Behavior::kView}, {2, Behavior::kCart}, {0, Behavior::kPurchase}};
  UserSequence b;
  b.user_id = 1;
  b.history = {{1, Behavior::kCart}, {2, Behavior::kCart}};

  auto g = build_graph({a, b}, 4);
  CHECK(g.weight(1, Behavior::kView) == 2);
  CHECK(g.weight(1, Behavior::kCart) == 1);
  CHECK(g.weight(2, Behavior::kCart) == 2);
  CHECK(g.weight(0, Behavior::kPurchase) == 1);
  CHECK(g.weight(3, Behavior::kView) == 0);
  CHECK(g.weight(0, Behavior::kView) == 0);

  UserSequence bad;
  bad.history = {{9, Behavior::kView}};
  CHECK_THROWS_AS(build_graph({bad}, 4), IntegrityError);
}

TEST_CASE("candidate sets hold ten fresh negatives plus the target") {
  Config cfg;
  cfg.seed = 5;
  cfg.items = 80;
  cfg.users = 60;
  cfg.categories = 8;
  auto ds = generate_dataset(cfg);

  for (const UserSequence& seq : ds.users) {
    REQUIRE(seq.candidates.size() == 11);
    std::set<int> unique(seq.candidates.begin(), seq.candidates.end());
    CHECK(unique.size() == 11);
    CHECK(unique.count(seq.target_item) == 1);
    for (const Interaction& it : seq.history) CHECK(unique.count(it.item) == 0);
  }

  auto ds2 = generate_dataset(cfg);
  for (size_t u = 0; u < ds.users.size(); ++u) CHECK(ds.users[u].candidates == ds2.users[u].candidates);

  // Shuffled: the target should not always sit at the tail.
  int at_tail = 0;
  for (const UserSequence& seq : ds.users) at_tail += seq.candidates.back() == seq.target_item;
  CHECK(at_tail < int(ds.users.size()) / 2);

  UserSequence cramped;
  cramped.user_id = 0;
  for (int i = 0; i < 12; ++i) cramped.history.push_back({i, Behavior::kView});
  cramped.target_item = 12;
  std::vector<UserSequence> one = {cramped};
  CHECK_THROWS_AS(make_eval_instances(5, one, 20), CapacityError);
}

TEST_CASE("dataset files round-trip") {
  Config cfg;
  cfg.seed = 13;
  cfg.items = 40;
  cfg.users = 25;
  cfg.categories = 4;
  auto ds = generate_dataset(cfg);

  save_catalog("/tmp/trifuse_test_catalog.jsonl", ds.catalog);
  auto catalog = load_catalog("/tmp/trifuse_test_catalog.jsonl");
  REQUIRE(catalog.size() == ds.catalog.size());
  for (size_t i = 0; i < catalog.size(); ++i) {
    CHECK(catalog[i].name == ds.catalog[i].name);
    CHECK(catalog[i].category == ds.catalog[i].category);
    CHECK(catalog[i].latent == ds.catalog[i].latent);
  }

  save_sequences("/tmp/trifuse_test_users.jsonl", ds.users);
  auto users = load_sequences("/tmp/trifuse_test_users.jsonl");
  REQUIRE(users.size() == ds.users.size());
  for (size_t u = 0; u < users.size(); ++u) {
    CHECK(users[u].user_id == ds.users[u].user_id);
    CHECK(users[u].target_item == ds.users[u].target_item);
    CHECK(users[u].candidates == ds.users[u].candidates);
    REQUIRE(users[u].history.size() == ds.users[u].history.size());
    for (size_t t = 0; t < users[u].history.size(); ++t) {
      CHECK(users[u].history[t].item == ds.users[u].history[t].item);
      CHECK(int(users[u].history[t].behavior) == int(ds.users[u].history[t].behavior));
    }
  }

  save_graph("/tmp/trifuse_test_graph.jsonl", ds.graph);
  auto graph = load_graph("/tmp/trifuse_test_graph.jsonl", cfg.items);
  CHECK(graph.weights == ds.graph.weights);

  CHECK(train_count(cfg, 25) == 23);
  Config big;
  CHECK(train_count(big, 2000) == 1800);
}

// The load-bearing design check: targets must be recoverable from the
// blended modality score but not from any single modality alone.
TEST_CASE("targets need all three modalities") {
  Config cfg;
  cfg.seed = 1;
  cfg.items = 500;
  cfg.users = 400;
  auto catalog = gen_catalog(cfg.seed, cfg.items, cfg.categories, cfg.latent_k, cfg.category_spread);
  auto users = gen_sequences(cfg, catalog);
  auto graph = build_graph(users, cfg.items);
  auto tables = build_tables(cfg, catalog, graph);

  int n = 0, hit_full = 0, hit_img = 0, hit_txt = 0, hit_gph = 0;
  for (const UserSequence& seq : users) {
    OracleTop1 top = oracle_top1(seq, catalog, tables, cfg);
    ++n;
    hit_full += top.full == seq.target_item;
    hit_img += top.image_only == seq.target_item;
    hit_txt += top.text_only == seq.target_item;
    hit_gph += top.graph_only == seq.target_item;
  }
  double full = double(hit_full) / n, img = double(hit_img) / n;
  double txt = double(hit_txt) / n, gph = double(hit_gph) / n;
  std::printf("oracle top-1: full %.3f image %.3f text %.3f graph %.3f over %d users\n", full, img,
              txt, gph, n);

  CHECK(full >= 0.95);
  CHECK(img <= 0.70);
  CHECK(txt <= 0.70);
  CHECK(gph <= 0.70);
  CHECK(full - img >= 0.20);
  CHECK(full - txt >= 0.20);
  CHECK(full - gph >= 0.20);
}
