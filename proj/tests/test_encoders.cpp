#include <cmath>
#include <cstdio>
#include <numeric>

#include "doctest.h"
#include "trifuse/encoders.hpp"
#include "trifuse/errors.hpp"
#include "trifuse/util.hpp"

using namespace trifuse;

namespace {

double dot(const float* a, const float* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += double(a[i]) * b[i];
  return s;
}

double cosine(const float* a, const float* b, int n) {
  return dot(a, b, n) / std::sqrt(dot(a, a, n) * dot(b, b, n));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Config small_config() {
  Config cfg;
  cfg.seed = 7;
  cfg.items = 60;
  cfg.users = 40;
  cfg.categories = 6;
  return cfg;
}

}  // namespace

TEST_CASE("orthonormal_columns produces an isometry") {
  Rng rng = Rng::derive(11, rng_tag::kEncoderImage, 0);
  const int d = 16, k = 8;
  auto p = orthonormal_columns(rng, d, k);

  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      double g = 0.0;
      for (int r = 0; r < d; ++r) g += double(p[size_t(r) * k + a]) * p[size_t(r) * k + b];
      CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) < 1e-5);
    }
  }

  Rng vec_rng = Rng::derive(12, rng_tag::kEncoderImage, 1);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<float> x(k), y(d, 0.f);
    for (float& v : x) v = vec_rng.normal();
    for (int r = 0; r < d; ++r) {
      for (int j = 0; j < k; ++j) y[size_t(r)] += p[size_t(r) * k + j] * x[size_t(j)];
    }
    CHECK(std::abs(dot(y.data(), y.data(), d) - dot(x.data(), x.data(), k)) < 1e-4);
  }

  Rng again = Rng::derive(11, rng_tag::kEncoderImage, 0);
  CHECK(orthonormal_columns(again, d, k) == p);
  CHECK_THROWS_AS(orthonormal_columns(rng, 4, 8), DimensionError);
}

TEST_CASE("project_latents with a padded identity and zero noise copies the latent") {
  std::vector<Item> catalog(3);
  Rng rng = Rng::derive(3, rng_tag::kCatalog, 0);
  for (int i = 0; i < 3; ++i) {
    catalog[size_t(i)].id = i;
    catalog[size_t(i)].latent.resize(4);
    for (float& v : catalog[size_t(i)].latent) v = rng.normal();
  }
  const int d_out = 6, k = 4;
  std::vector<float> proj(size_t(d_out) * k, 0.f);
  for (int j = 0; j < k; ++j) proj[size_t(j) * k + j] = 1.f;  // top 4x4 block is identity

  auto rows = project_latents(catalog, proj, d_out, 0.f, 3, rng_tag::kEncoderImage);
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < k; ++c) CHECK(rows[size_t(i) * d_out + c] == catalog[size_t(i)].latent[size_t(c)]);
    CHECK(rows[size_t(i) * d_out + 4] == 0.f);
    CHECK(rows[size_t(i) * d_out + 5] == 0.f);
  }
}

TEST_CASE("noise is seeded per item id, not per catalog position") {
  auto catalog = gen_catalog(5, 40, 4, 8, 0.5f);
  Rng prng = Rng::derive(5, rng_tag::kEncoderImage, 0);
  auto proj = orthonormal_columns(prng, 16, 8);
  auto rows = project_latents(catalog, proj, 16, 0.1f, 5, rng_tag::kEncoderImage);

  std::vector<Item> reversed(catalog.rbegin(), catalog.rend());
  auto rows2 = project_latents(reversed, proj, 16, 0.1f, 5, rng_tag::kEncoderImage);
  CHECK(rows == rows2);
}

TEST_CASE("image and text cosines track latent cosines") {
  Config cfg = small_config();
  cfg.items = 120;
  auto catalog = gen_catalog(cfg.seed, cfg.items, cfg.categories, cfg.latent_k, cfg.category_spread);
  ItemBehaviorGraph empty_graph;
  empty_graph.n_items = cfg.items;
  empty_graph.weights.assign(size_t(cfg.items), {0, 0, 0});
  auto tables = build_tables(cfg, catalog, empty_graph);

  Rng pair_rng = Rng::derive(99, rng_tag::kEncoderImage, 0);
  std::vector<double> lat, img, txt;
  for (int p = 0; p < 600; ++p) {
    int a = pair_rng.uniform_int(cfg.items);
    int b = pair_rng.uniform_int(cfg.items);
    if (a == b) continue;
    lat.push_back(cosine(catalog[size_t(a)].latent.data(), catalog[size_t(b)].latent.data(), cfg.latent_k));
    img.push_back(cosine(tables.image_row(a), tables.image_row(b), cfg.d_v));
    txt.push_back(cosine(tables.text_row(a), tables.text_row(b), cfg.d_t));
  }
  REQUIRE(lat.size() >= 500);
  double r_img = pearson(lat, img);
  double r_txt = pearson(lat, txt);
  std::printf("cosine correlation vs latent: image %.4f text %.4f over %zu pairs\n", r_img, r_txt,
              lat.size());
  CHECK(r_img >= 0.8);
  CHECK(r_txt >= 0.8);

  // Independent projections: the two modalities must not be clones.
  double max_abs_diff = 0.0;
  for (size_t i = 0; i < img.size(); ++i) max_abs_diff = std::max(max_abs_diff, std::abs(img[i] - txt[i]));
  CHECK(max_abs_diff > 1e-3);
}

TEST_CASE("propagation with zero hops returns the input") {
  ItemBehaviorGraph g;
  g.n_items = 2;
  g.weights = {{1, 0, 2}, {0, 3, 0}};
  std::vector<float> x0(size_t(5) * 3);
  for (size_t i = 0; i < x0.size(); ++i) x0[i] = float(i) * 0.25f;
  CHECK(propagate(g, x0, 3, 0) == x0);
}

TEST_CASE("one item linked to one behavior swaps rows in a single hop") {
  ItemBehaviorGraph g;
  g.n_items = 1;
  g.weights = {{1, 0, 0}};  // item 0 <-> view with weight 1
  // Nodes: item0, view, cart, purchase.
  std::vector<float> x0 = {1.f, 2.f,   10.f, 20.f,   -3.f, 4.f,   5.f, -6.f};
  auto x1 = propagate(g, x0, 2, 1);
  CHECK(x1[0] == 10.f);  // item took the view row
  CHECK(x1[1] == 20.f);
  CHECK(x1[2] == 1.f);  // view took the item row
  CHECK(x1[3] == 2.f);
  CHECK(x1[4] == -3.f);  // isolated behaviors keep their rows
  CHECK(x1[5] == 4.f);
  CHECK(x1[6] == 5.f);
  CHECK(x1[7] == -6.f);
}

TEST_CASE("two hops pull co-behavior items together") {
  // Items 0 and 1 interact through views only; item 2 through carts only.
  ItemBehaviorGraph g;
  g.n_items = 3;
  g.weights = {{4, 0, 0}, {4, 0, 0}, {0, 4, 0}};
  const int d = 8;
  std::vector<float> x0(size_t(g.n_items + kBehaviorCount) * d);
  Rng rng = Rng::derive(17, rng_tag::kEncoderGraph, 0);
  for (float& v : x0) v = rng.normal();

  auto x2 = propagate(g, x0, d, 2);
  double same = cosine(x2.data() + 0 * d, x2.data() + 1 * d, d);
  double other = cosine(x2.data() + 0 * d, x2.data() + 2 * d, d);
  CHECK(same > 0.99);  // identical neighborhoods collapse to the same mixture
  CHECK(same > other + 0.2);
}

TEST_CASE("propagation commutes with relabeling the items") {
  ItemBehaviorGraph g;
  g.n_items = 4;
  g.weights = {{2, 1, 0}, {0, 3, 1}, {5, 0, 0}, {1, 1, 1}};
  const int d = 4;
  const int n = g.n_items + kBehaviorCount;
  std::vector<float> x0(size_t(n) * d);
  Rng rng = Rng::derive(23, rng_tag::kEncoderGraph, 0);
  for (float& v : x0) v = rng.normal();

  std::vector<int> perm = {2, 0, 3, 1};  // new index of each old item
  ItemBehaviorGraph gp;
  gp.n_items = 4;
  gp.weights.assign(4, {0, 0, 0});
  std::vector<float> x0p(x0.size());
  for (int i = 0; i < 4; ++i) {
    gp.weights[size_t(perm[size_t(i)])] = g.weights[size_t(i)];
    std::copy_n(x0.begin() + i * d, d, x0p.begin() + perm[size_t(i)] * d);
  }
  for (int b = 0; b < kBehaviorCount; ++b) {
    std::copy_n(x0.begin() + (4 + b) * d, d, x0p.begin() + (4 + b) * d);
  }

  auto out = propagate(g, x0, d, 2);
  auto outp = propagate(gp, x0p, d, 2);
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < d; ++c) {
      CHECK(out[size_t(i) * d + c] == doctest::Approx(outp[size_t(perm[size_t(i)]) * d + c]).epsilon(1e-6));
    }
  }
}

TEST_CASE("isolated items keep their initial rows through every hop") {
  ItemBehaviorGraph g;
  g.n_items = 2;
  g.weights = {{3, 1, 0}, {0, 0, 0}};  // item 1 never interacted
  const int d = 3;
  std::vector<float> x0(size_t(g.n_items + kBehaviorCount) * d);
  Rng rng = Rng::derive(29, rng_tag::kEncoderGraph, 0);
  for (float& v : x0) v = rng.normal();
  auto x2 = propagate(g, x0, d, 2);
  for (int c = 0; c < d; ++c) CHECK(x2[size_t(1) * d + c] == x0[size_t(1) * d + c]);
}

TEST_CASE("modality tables persist exactly through the manifest and blob") {
  Config cfg = small_config();
  auto catalog = gen_catalog(cfg.seed, cfg.items, cfg.categories, cfg.latent_k, cfg.category_spread);
  auto users = gen_sequences(cfg, catalog);
  auto graph = build_graph(users, cfg.items);
  auto tables = build_tables(cfg, catalog, graph);

  std::string manifest = "/tmp/trifuse_test_tables.json";
  save_tables(manifest, tables, cfg);
  auto loaded = load_tables(manifest);

  CHECK(loaded.n_items == tables.n_items);
  CHECK(loaded.d_v == tables.d_v);
  CHECK(loaded.d_t == tables.d_t);
  CHECK(loaded.d_g == tables.d_g);
  CHECK(loaded.image == tables.image);
  CHECK(loaded.text == tables.text);
  CHECK(loaded.graph_items == tables.graph_items);
  for (int b = 0; b < kBehaviorCount; ++b) {
    CHECK(loaded.graph_behaviors[size_t(b)] == tables.graph_behaviors[size_t(b)]);
  }

  // A truncated blob must be rejected, not silently zero-filled.
  std::string blob = read_file(manifest + ".f32");
  write_file(manifest + ".f32", blob.substr(0, blob.size() / 2));
  CHECK_THROWS_AS(load_tables(manifest), IntegrityError);
}

TEST_CASE("behavior rows are pairwise distinct after propagation") {
  Config cfg = small_config();
  auto catalog = gen_catalog(cfg.seed, cfg.items, cfg.categories, cfg.latent_k, cfg.category_spread);
  auto users = gen_sequences(cfg, catalog);
  auto graph = build_graph(users, cfg.items);
  auto tables = build_tables(cfg, catalog, graph);
  for (int a = 0; a < kBehaviorCount; ++a) {
    for (int b = a + 1; b < kBehaviorCount; ++b) {
      double diff = 0.0;
      for (int c = 0; c < cfg.d_g; ++c) {
        diff += std::abs(double(tables.graph_behaviors[size_t(a)][size_t(c)]) -
                         tables.graph_behaviors[size_t(b)][size_t(c)]);
      }
      CHECK(diff > 1e-4);
    }
  }
}
