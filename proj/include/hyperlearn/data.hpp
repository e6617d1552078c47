#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/sptensor.hpp"

namespace hyperlearn {

struct Dataset {
  SparseTensor tensor;                    // training split
  std::vector<TensorEntry> test_entries;  // held out, disjoint from the tensor
  std::vector<IntraGraph> graphs;         // one per mode
  std::vector<std::string> names;         // one per mode

  // Graph sizes match the tensor, names cover every mode, splits disjoint.
  void validate() const;
};

// Planted CP model with kNN graphs over the ground-truth factor rows.
struct SynthSpec {
  std::vector<std::size_t> dims;
  std::size_t rank = 3;
  double noise_std = 0.0;
  double density = 1.0;        // fraction of cells observed
  std::size_t knn = 5;         // graph neighbours per node
  double test_fraction = 0.0;  // fraction of observed cells held out
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset data;
  FactorSet truth;
};

// Ground truth uniform on [0, 1); values from the CP model plus Gaussian
// noise; exactly round(density * cells) distinct observed cells. Throws if
// some index of some mode is never observed.
SyntheticData generate_synthetic(const SynthSpec& spec);

// Four-mode artwork/artist/medium/timeframe hypergraph. Every artwork has
// one artist and timeframe and one or more media, giving one binary
// hyperedge per medium. Artists carry latent styles; artwork features are a
// noisy copy of their artist's style, which is what the artwork kNN graph
// is built from. Test artworks have all their hyperedges held out.
struct AttributionSpec {
  std::size_t artworks = 600;
  std::size_t artists = 30;
  std::size_t media = 8;
  std::size_t timeframes = 10;
  std::size_t style_dim = 8;
  double feature_noise = 0.5;
  std::size_t knn = 8;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

Dataset generate_attribution(const AttributionSpec& spec);

struct MovieLensOptions {
  double split_fraction = 0.8;  // fraction of ratings kept for training
  std::uint64_t seed = 0;
  std::size_t knn = 10;
  std::size_t users = 943;
  std::size_t items = 1682;
};

// MovieLens-100k u.data (user, item, rating, timestamp; 1-based ids).
// Ratings stay real-valued in an observed-only tensor. Mode graphs are
// unweighted kNN graphs under cosine distance between mean-centred rating
// vectors of the training split.
Dataset load_movielens(const std::filesystem::path& path, const MovieLensOptions& opts = {});

// Plain-text key=value manifest:
//   tensor=<relation file>
//   graph_<m>=<graph file>     one per mode
//   names=<name_0>,<name_1>,..
//   test=<relation file>       optional held-out entries
// Relative paths resolve against the manifest's directory.
struct Manifest {
  std::filesystem::path tensor;
  std::vector<std::filesystem::path> graphs;
  std::vector<std::string> names;
  std::filesystem::path test;
};

Manifest read_manifest(const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes tensor.tsv, test.tsv, graph_<m>.tsv and manifest.txt into `dir`.
std::filesystem::path save_dataset(const std::filesystem::path& dir, const Dataset& data);

}  // namespace hyperlearn
