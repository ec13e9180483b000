#include "trifuse/encoders.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>

#include "json.hpp"
#include "trifuse/errors.hpp"
#include "trifuse/util.hpp"

namespace trifuse {

std::vector<float> orthonormal_columns(Rng& rng, int d_out, int k) {
  if (d_out < k || k <= 0) throw DimensionError("orthonormal_columns needs d_out >= k > 0");
  // Columns stored contiguously for the orthogonalization, then transposed
  // into row-major d_out x k.
  std::vector<std::vector<double>> cols(size_t(k), std::vector<double>(size_t(d_out), 0.0));
  for (auto& col : cols) {
    for (auto& v : col) v = rng.normal();
  }
  for (int j = 0; j < k; ++j) {
    auto& cj = cols[size_t(j)];
    for (int prev = 0; prev < j; ++prev) {
      const auto& cp = cols[size_t(prev)];
      double dot = 0.0;
      for (int r = 0; r < d_out; ++r) dot += cj[size_t(r)] * cp[size_t(r)];
      for (int r = 0; r < d_out; ++r) cj[size_t(r)] -= dot * cp[size_t(r)];
    }
    double norm2 = 0.0;
    for (double v : cj) norm2 += v * v;
    if (norm2 < 1e-12) throw NumericError("orthonormal_columns hit a degenerate direction");
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : cj) v *= inv;
  }
  std::vector<float> proj(size_t(d_out) * size_t(k));
  for (int r = 0; r < d_out; ++r) {
    for (int j = 0; j < k; ++j) proj[size_t(r) * k + j] = float(cols[size_t(j)][size_t(r)]);
  }
  return proj;
}

std::vector<float> project_latents(const std::vector<Item>& catalog, const std::vector<float>& proj,
                                   int d_out, float sigma, long seed, long stream_tag) {
  if (catalog.empty()) throw UsageError("project_latents on empty catalog");
  const int k = int(catalog.front().latent.size());
  if (proj.size() != size_t(d_out) * size_t(k)) {
    throw DimensionError("projection shape does not match d_out x latent_k");
  }
  std::vector<float> rows(catalog.size() * size_t(d_out));
  for (const Item& item : catalog) {
    float* dst = rows.data() + size_t(item.id) * d_out;
    for (int r = 0; r < d_out; ++r) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += double(proj[size_t(r) * k + j]) * item.latent[size_t(j)];
      dst[r] = float(acc);
    }
    if (sigma > 0.f) {
      Rng noise = Rng::derive(seed, stream_tag, item.id);
      for (int r = 0; r < d_out; ++r) dst[r] += sigma * noise.normal();
    }
  }
  return rows;
}

std::vector<float> propagate(const ItemBehaviorGraph& graph, const std::vector<float>& x0, int d,
                             int hops) {
  const int n = graph.n_items + kBehaviorCount;
  if (x0.size() != size_t(n) * size_t(d)) throw DimensionError("propagate: x0 must be (n_items + 3) x d");
  if (hops < 0) throw UsageError("propagate: hops must be >= 0");

  std::vector<double> item_deg(size_t(graph.n_items), 0.0);
  std::array<double, kBehaviorCount> beh_deg{};
  for (int i = 0; i < graph.n_items; ++i) {
    for (int b = 0; b < kBehaviorCount; ++b) {
      double w = double(graph.weights[size_t(i)][b]);
      item_deg[size_t(i)] += w;
      beh_deg[size_t(b)] += w;
    }
  }

  std::vector<float> cur = x0;
  std::vector<float> next(x0.size());
  for (int step = 0; step < hops; ++step) {
    std::fill(next.begin(), next.end(), 0.f);
    for (int i = 0; i < graph.n_items; ++i) {
      if (item_deg[size_t(i)] == 0.0) {  // isolated: carry the row forward
        std::memcpy(next.data() + size_t(i) * d, cur.data() + size_t(i) * d, size_t(d) * sizeof(float));
        continue;
      }
      for (int b = 0; b < kBehaviorCount; ++b) {
        long w = graph.weights[size_t(i)][b];
        if (w == 0) continue;
        float coef = float(double(w) / std::sqrt(item_deg[size_t(i)] * beh_deg[size_t(b)]));
        const float* src = cur.data() + size_t(graph.n_items + b) * d;
        float* dst = next.data() + size_t(i) * d;
        for (int c = 0; c < d; ++c) dst[c] += coef * src[c];
      }
    }
    for (int b = 0; b < kBehaviorCount; ++b) {
      float* dst = next.data() + size_t(graph.n_items + b) * d;
      if (beh_deg[size_t(b)] == 0.0) {
        std::memcpy(dst, cur.data() + size_t(graph.n_items + b) * d, size_t(d) * sizeof(float));
        continue;
      }
      for (int i = 0; i < graph.n_items; ++i) {
        long w = graph.weights[size_t(i)][b];
        if (w == 0) continue;
        float coef = float(double(w) / std::sqrt(item_deg[size_t(i)] * beh_deg[size_t(b)]));
        const float* src = cur.data() + size_t(i) * d;
        for (int c = 0; c < d; ++c) dst[c] += coef * src[c];
      }
    }
    cur.swap(next);
  }
  return cur;
}

ModalityTables build_tables(const Config& cfg, const std::vector<Item>& catalog,
                            const ItemBehaviorGraph& graph) {
  if (int(catalog.size()) != graph.n_items) throw DimensionError("catalog and graph disagree on item count");
  ModalityTables t;
  t.n_items = int(catalog.size());
  t.d_v = cfg.d_v;
  t.d_t = cfg.d_t;
  t.d_g = cfg.d_g;

  Rng img_rng = Rng::derive(cfg.seed, rng_tag::kEncoderImage, 0);
  Rng txt_rng = Rng::derive(cfg.seed, rng_tag::kEncoderText, 0);
  auto p_img = orthonormal_columns(img_rng, cfg.d_v, cfg.latent_k);
  auto p_txt = orthonormal_columns(txt_rng, cfg.d_t, cfg.latent_k);
  t.image = project_latents(catalog, p_img, cfg.d_v, cfg.encoder_sigma, cfg.seed, rng_tag::kEncoderImage);
  t.text = project_latents(catalog, p_txt, cfg.d_t, cfg.encoder_sigma, cfg.seed, rng_tag::kEncoderText);

  const int n = t.n_items + kBehaviorCount;
  std::vector<float> x0(size_t(n) * size_t(cfg.d_g));
  for (int node = 0; node < n; ++node) {
    Rng r = Rng::derive(cfg.seed, rng_tag::kEncoderGraph, node);
    for (int c = 0; c < cfg.d_g; ++c) x0[size_t(node) * cfg.d_g + c] = float(r.normal());
  }
  auto propagated = propagate(graph, x0, cfg.d_g, cfg.graph_hops);
  t.graph_items.assign(propagated.begin(), propagated.begin() + size_t(t.n_items) * cfg.d_g);
  for (int b = 0; b < kBehaviorCount; ++b) {
    const float* row = propagated.data() + size_t(t.n_items + b) * cfg.d_g;
    t.graph_behaviors[size_t(b)].assign(row, row + cfg.d_g);
  }
  return t;
}

namespace {

std::string blob_path_for(const std::string& manifest_path) {
  return manifest_path + ".f32";
}

// The manifest stores only the blob's basename so directories stay
// relocatable; the blob always lives next to its manifest.
std::string blob_name_for(const std::string& manifest_path) {
  return std::filesystem::path(blob_path_for(manifest_path)).filename().string();
}

std::string resolve_blob(const std::string& manifest_path, const std::string& blob_name) {
  return (std::filesystem::path(manifest_path).parent_path() / blob_name).string();
}

void append_block(std::string& blob, const std::vector<float>& data) {
  // Little-endian f32; the build targets x86_64 so a memcpy is already that.
  size_t off = blob.size();
  blob.resize(off + data.size() * sizeof(float));
  std::memcpy(blob.data() + off, data.data(), data.size() * sizeof(float));
}

std::vector<float> read_block(const std::string& blob, size_t offset_floats, size_t count) {
  if ((offset_floats + count) * sizeof(float) > blob.size()) {
    throw IntegrityError("embedding blob shorter than manifest claims");
  }
  std::vector<float> out(count);
  std::memcpy(out.data(), blob.data() + offset_floats * sizeof(float), count * sizeof(float));
  return out;
}

}  // namespace

void save_tables(const std::string& manifest_path, const ModalityTables& t, const Config& cfg) {
  std::string blob;
  nlohmann::json blocks = nlohmann::json::array();
  size_t cursor = 0;
  auto add = [&](const std::string& name, const std::vector<float>& data, int rows, int cols) {
    blocks.push_back({{"name", name}, {"rows", rows}, {"cols", cols}, {"offset", cursor}});
    append_block(blob, data);
    cursor += data.size();
  };
  add("image", t.image, t.n_items, t.d_v);
  add("text", t.text, t.n_items, t.d_t);
  add("graph_items", t.graph_items, t.n_items, t.d_g);
  for (int b = 0; b < kBehaviorCount; ++b) {
    add(std::string("graph_behavior_") + behavior_name(Behavior(b)), t.graph_behaviors[size_t(b)], 1,
        t.d_g);
  }

  nlohmann::json manifest = {
      {"format", "f32le"},
      {"n_items", t.n_items},
      {"d_v", t.d_v},
      {"d_t", t.d_t},
      {"d_g", t.d_g},
      {"seed", cfg.seed},
      {"graph_hops", cfg.graph_hops},
      {"encoder_sigma", cfg.encoder_sigma},
      {"blocks", blocks},
      {"blob", blob_name_for(manifest_path)},
  };
  write_file(manifest_path, manifest.dump(2) + "\n");
  write_file(blob_path_for(manifest_path), blob);
}

ModalityTables load_tables(const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("bad embedding manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "f32le") throw IntegrityError("unknown embedding blob format");
  std::string blob = read_file(resolve_blob(manifest_path, manifest.at("blob").get<std::string>()));

  ModalityTables t;
  t.n_items = manifest.at("n_items").get<int>();
  t.d_v = manifest.at("d_v").get<int>();
  t.d_t = manifest.at("d_t").get<int>();
  t.d_g = manifest.at("d_g").get<int>();
  for (const auto& block : manifest.at("blocks")) {
    std::string name = block.at("name").get<std::string>();
    size_t rows = block.at("rows").get<size_t>();
    size_t cols = block.at("cols").get<size_t>();
    auto data = read_block(blob, block.at("offset").get<size_t>(), rows * cols);
    if (name == "image") {
      t.image = std::move(data);
    } else if (name == "text") {
      t.text = std::move(data);
    } else if (name == "graph_items") {
      t.graph_items = std::move(data);
    } else {
      for (int b = 0; b < kBehaviorCount; ++b) {
        if (name == std::string("graph_behavior_") + behavior_name(Behavior(b))) {
          t.graph_behaviors[size_t(b)] = std::move(data);
        }
      }
    }
  }
  if (t.image.size() != size_t(t.n_items) * t.d_v || t.text.size() != size_t(t.n_items) * t.d_t ||
      t.graph_items.size() != size_t(t.n_items) * t.d_g) {
    throw IntegrityError("embedding manifest is missing blocks");
  }
  for (const auto& beh : t.graph_behaviors) {
    if (beh.size() != size_t(t.d_g)) throw IntegrityError("embedding manifest is missing behavior rows");
  }
  return t;
}

}  // namespace trifuse
