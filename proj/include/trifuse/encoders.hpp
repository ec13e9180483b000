#pragma once

// Frozen modality encoders. Image and text embeddings are independent
// orthonormal projections of the item latent plus per-item Gaussian noise,
// so either one correlates with latent geometry without duplicating the
// other. Graph embeddings come from symmetric-normalized propagation over
// the bipartite item-behavior graph.

#include <string>
#include <vector>

#include "trifuse/data.hpp"
#include "trifuse/rng.hpp"

namespace trifuse {

struct ModalityTables {
  int n_items = 0;
  int d_v = 0;  // image
  int d_t = 0;  // text
  int d_g = 0;  // graph
  std::vector<float> image;                             // n_items x d_v
  std::vector<float> text;                              // n_items x d_t
  std::vector<float> graph_items;                       // n_items x d_g
  std::array<std::vector<float>, kBehaviorCount> graph_behaviors;  // each d_g

  const float* image_row(int i) const { return image.data() + size_t(i) * d_v; }
  const float* text_row(int i) const { return text.data() + size_t(i) * d_t; }
  const float* graph_row(int i) const { return graph_items.data() + size_t(i) * d_g; }
};

// d_out x k matrix with orthonormal columns (Gram-Schmidt on seeded
// Gaussians). Requires d_out >= k.
std::vector<float> orthonormal_columns(Rng& rng, int d_out, int k);

// rows[i] = P * latent_i + sigma * eta_i, eta seeded per (seed, tag, item id).
std::vector<float> project_latents(const std::vector<Item>& catalog, const std::vector<float>& proj,
                                   int d_out, float sigma, long seed, long stream_tag);

// K rounds of X <- D^{-1/2} A D^{-1/2} X over the bipartite graph. Node order:
// items 0..n-1, then the three behaviors. Isolated nodes keep their rows.
std::vector<float> propagate(const ItemBehaviorGraph& graph, const std::vector<float>& x0, int d,
                             int hops);

ModalityTables build_tables(const Config& cfg, const std::vector<Item>& catalog,
                            const ItemBehaviorGraph& graph);

// JSON manifest (dims, seed, hops, sigma) next to a raw little-endian f32 blob.
void save_tables(const std::string& manifest_path, const ModalityTables& tables, const Config& cfg);
ModalityTables load_tables(const std::string& manifest_path);

}  // namespace trifuse
