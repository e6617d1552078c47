#include "hyperlearn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

#include "hyperlearn/error.hpp"
#include "hyperlearn/factor.hpp"
#include "hyperlearn/io.hpp"
#include "hyperlearn/text.hpp"

namespace hyperlearn {
namespace {

IndexTuple decode(std::uint64_t id, const std::vector<std::size_t>& dims) {
  IndexTuple idx(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    idx[k] = static_cast<std::size_t>(id % dims[k]);
    id /= dims[k];
  }
  return idx;
}

// Floyd's algorithm: `count` distinct ids from [0, total), returned sorted.
std::vector<std::uint64_t> sample_distinct(std::uint64_t total, std::uint64_t count,
                                           std::mt19937_64& rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(count) * 2);
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const auto t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::ranges::sort(out);
  return out;
}

void require_every_index(const SparseTensor& x) {
  for (std::size_t m = 0; m < x.order(); ++m) {
    std::vector<bool> seen(x.dims()[m], false);
    for (std::size_t e = 0; e < x.nnz(); ++e) seen[x.index(e)[m]] = true;
    const auto it = std::ranges::find(seen, false);
    if (it != seen.end()) {
      throw InvalidArgument("density too low: index " + std::to_string(it - seen.begin()) +
                            " of mode " + std::to_string(m) + " is never observed");
    }
  }
}

std::vector<std::string> default_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t m = 0; m < k; ++m) names.push_back("mode_" + std::to_string(m));
  return names;
}

// Mean-centre every non-zero entry per row, then scale rows to unit length
// so Euclidean kNN ranks neighbours by cosine similarity.
Matrix cosine_features(Matrix ratings, const Matrix& observed) {
  for (Eigen::Index i = 0; i < ratings.rows(); ++i) {
    const double count = observed.row(i).sum();
    if (count == 0.0) continue;
    const double mean = ratings.row(i).sum() / count;
    ratings.row(i) -= mean * observed.row(i);
    const double norm = ratings.row(i).norm();
    if (norm > 0.0) ratings.row(i) /= norm;
  }
  return ratings;
}

}  // namespace

void Dataset::validate() const {
  check_graphs(tensor, graphs);
  if (names.size() != tensor.order()) {
    throw InvalidArgument("dataset needs one name per mode");
  }
  std::set<IndexTuple> held_out;
  for (const auto& t : test_entries) {
    if (t.index.size() != tensor.order()) throw InvalidArgument("test entry has wrong order");
    for (std::size_t m = 0; m < t.index.size(); ++m) {
      if (t.index[m] >= tensor.dims()[m]) throw InvalidArgument("test entry out of range");
    }
    held_out.insert(t.index);
  }
  for (std::size_t e = 0; e < tensor.nnz(); ++e) {
    const auto idx = tensor.index(e);
    if (held_out.contains(IndexTuple(idx.begin(), idx.end()))) {
      throw InvalidArgument("train and test entries overlap");
    }
  }
}

void SynthSpec::validate() const {
  if (dims.size() < 2) throw InvalidArgument("synth: need at least two modes");
  for (auto d : dims) {
    if (d == 0) throw InvalidArgument("synth: zero-sized mode");
    if (knn >= d) throw InvalidArgument("synth: knn must be smaller than every mode size");
  }
  if (rank < 1) throw InvalidArgument("synth: rank must be positive");
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("synth: density must lie in (0, 1]");
  if (!(noise_std >= 0.0)) throw InvalidArgument("synth: noise_std must be >= 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("synth: test_fraction must lie in [0, 1)");
  }
}

SyntheticData generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  SyntheticData out;
  out.truth.rank = spec.rank;
  out.truth.seed = spec.seed;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto n : spec.dims) {
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.rank));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = unif(rng);
    out.truth.factors.push_back(std::move(a));
  }

  double cells = 1.0;
  for (auto d : spec.dims) cells *= static_cast<double>(d);
  if (cells > 9.0e18) throw InvalidArgument("synth: tensor too large to address");
  const auto total = static_cast<std::uint64_t>(cells);
  const auto count = static_cast<std::uint64_t>(std::llround(spec.density * cells));
  if (count == 0) throw InvalidArgument("synth: density yields no observed cells");
  std::vector<std::uint64_t> ids = sample_distinct(total, count, rng);

  std::normal_distribution<double> noise(0.0, spec.noise_std > 0.0 ? spec.noise_std : 1.0);
  std::vector<TensorEntry> entries;
  entries.reserve(ids.size());
  for (auto id : ids) {
    IndexTuple idx = decode(id, spec.dims);
    double v = reconstruct_at(out.truth, idx);
    if (spec.noise_std > 0.0) v += noise(rng);
    entries.push_back({std::move(idx), v});
  }

  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * double(entries.size())));
  std::vector<TensorEntry> train;
  if (n_test > 0) {
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> is_test(entries.size(), false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      (is_test[e] ? out.data.test_entries : train).push_back(std::move(entries[e]));
    }
  } else {
    train = std::move(entries);
  }

  out.data.tensor = SparseTensor(spec.dims, train, true);
  require_every_index(out.data.tensor);
  for (std::size_t m = 0; m < spec.dims.size(); ++m) {
    out.data.graphs.push_back(spec.knn == 0 ? IntraGraph::edgeless(spec.dims[m])
                                            : knn_graph(out.truth.factors[m], spec.knn));
  }
  out.data.names = default_names(spec.dims.size());
  return out;
}

void AttributionSpec::validate() const {
  if (artists < 2 || artworks < artists) throw InvalidArgument("attribution: need >= 2 artists and one artwork each");
  if (media < 2 || timeframes < 2) throw InvalidArgument("attribution: need >= 2 media and timeframes");
  if (style_dim < 1) throw InvalidArgument("attribution: style_dim must be positive");
  if (knn < 1 || knn >= artworks) throw InvalidArgument("attribution: knn out of range");
  if (!(feature_noise >= 0.0)) throw InvalidArgument("attribution: feature_noise must be >= 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("attribution: test_fraction must lie in [0, 1)");
  }
}

Dataset generate_attribution(const AttributionSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  Matrix styles(static_cast<Eigen::Index>(spec.artists), static_cast<Eigen::Index>(spec.style_dim));
  for (Eigen::Index i = 0; i < styles.size(); ++i) styles.data()[i] = gauss(rng);
  std::vector<std::array<std::size_t, 2>> favourite_media(spec.artists);
  std::vector<std::size_t> active(spec.artists);
  for (std::size_t a = 0; a < spec.artists; ++a) {
    const std::size_t first = pick(spec.media);
    const std::size_t second = (first + 1 + pick(spec.media - 1)) % spec.media;
    favourite_media[a] = {first, second};
    active[a] = pick(spec.timeframes);
  }

  std::vector<std::size_t> artist_of(spec.artworks);
  for (std::size_t i = 0; i < spec.artworks; ++i) artist_of[i] = i % spec.artists;
  std::shuffle(artist_of.begin(), artist_of.end(), rng);

  Matrix features(static_cast<Eigen::Index>(spec.artworks), static_cast<Eigen::Index>(spec.style_dim));
  std::vector<std::vector<TensorEntry>> hyperedges(spec.artworks);
  for (std::size_t i = 0; i < spec.artworks; ++i) {
    const std::size_t a = artist_of[i];
    for (Eigen::Index d = 0; d < features.cols(); ++d) {
      features(static_cast<Eigen::Index>(i), d) =
          styles(static_cast<Eigen::Index>(a), d) + spec.feature_noise * gauss(rng);
    }
    const double u = unif(rng);
    const std::ptrdiff_t shift = u < 0.2 ? -1 : (u < 0.8 ? 0 : 1);
    const auto t = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(active[a]) + shift, 0, static_cast<std::ptrdiff_t>(spec.timeframes) - 1));

    std::set<std::size_t> media;
    media.insert(unif(rng) < 0.8 ? favourite_media[a][pick(2)] : pick(spec.media));
    if (unif(rng) < 0.4) media.insert(unif(rng) < 0.5 ? favourite_media[a][pick(2)] : pick(spec.media));
    for (auto m : media) hyperedges[i].push_back({{i, a, m, t}, 1.0});
  }

  std::vector<std::size_t> order(spec.artworks);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * double(spec.artworks)));
  std::vector<bool> is_test(spec.artworks, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  Dataset out;
  std::vector<TensorEntry> train;
  std::vector<Membership> media_groups;
  for (std::size_t i = 0; i < spec.artworks; ++i) {
    for (auto& h : hyperedges[i]) {
      if (is_test[i]) {
        out.test_entries.push_back(h);
      } else {
        media_groups.push_back({h.index[2], i});
        train.push_back(h);
      }
    }
  }
  const std::vector<std::size_t> dims{spec.artworks, spec.artists, spec.media, spec.timeframes};
  out.tensor = SparseTensor(dims, train, false);

  std::vector<Edge> chain;
  for (std::size_t t = 0; t + 1 < spec.timeframes; ++t) chain.push_back({t, t + 1, 1.0});
  out.graphs.push_back(knn_graph(features, spec.knn));
  out.graphs.push_back(knn_graph(styles, std::min<std::size_t>(3, spec.artists - 1)));
  out.graphs.push_back(cooccurrence_graph(media_groups, spec.media));
  out.graphs.push_back(IntraGraph::from_edges(spec.timeframes, chain));
  out.names = {"artwork", "artist", "medium", "timeframe"};
  return out;
}

Dataset load_movielens(const std::filesystem::path& path, const MovieLensOptions& opts) {
  if (!(opts.split_fraction > 0.0 && opts.split_fraction <= 1.0)) {
    throw InvalidArgument("movielens: split_fraction must lie in (0, 1]");
  }
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path.string());

  std::vector<TensorEntry> ratings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), '\t');
    if (f.size() != 4) throw ParseError(path.string(), line_no, "expected 4 tab-separated fields");
    std::uint64_t user = 0;
    std::uint64_t item = 0;
    double rating = 0.0;
    try {
      user = text::parse_uint(f[0], "user id");
      item = text::parse_uint(f[1], "item id");
      rating = text::parse_real(f[2], "rating");
      text::parse_uint(f[3], "timestamp");
    } catch (const InvalidArgument& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    if (user < 1 || user > opts.users) throw ParseError(path.string(), line_no, "user id out of range");
    if (item < 1 || item > opts.items) throw ParseError(path.string(), line_no, "item id out of range");
    ratings.push_back({{static_cast<std::size_t>(user - 1), static_cast<std::size_t>(item - 1)}, rating});
  }

  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(opts.split_fraction * double(ratings.size())));
  std::vector<bool> in_train(ratings.size(), false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  Dataset out;
  std::vector<TensorEntry> train;
  train.reserve(n_train);
  const auto users = static_cast<Eigen::Index>(opts.users);
  const auto items = static_cast<Eigen::Index>(opts.items);
  Matrix dense = Matrix::Zero(users, items);
  Matrix mask = Matrix::Zero(users, items);
  for (std::size_t e = 0; e < ratings.size(); ++e) {
    if (!in_train[e]) {
      out.test_entries.push_back(ratings[e]);
      continue;
    }
    const auto u = static_cast<Eigen::Index>(ratings[e].index[0]);
    const auto i = static_cast<Eigen::Index>(ratings[e].index[1]);
    dense(u, i) = ratings[e].value;
    mask(u, i) = 1.0;
    train.push_back(ratings[e]);
  }
  out.tensor = SparseTensor({opts.users, opts.items}, train, true);
  if (opts.knn == 0) {
    out.graphs.push_back(IntraGraph::edgeless(opts.users));
    out.graphs.push_back(IntraGraph::edgeless(opts.items));
  } else {
    out.graphs.push_back(knn_graph(cosine_features(dense, mask), opts.knn));
    const Matrix dense_t = dense.transpose();
    const Matrix mask_t = mask.transpose();
    out.graphs.push_back(knn_graph(cosine_features(dense_t, mask_t), opts.knn));
  }
  out.names = {"user", "item"};
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() ? p : base / p;
  };

  Manifest m;
  std::map<std::size_t, std::filesystem::path> graphs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(path.string(), line_no, "expected key=value");
    const auto key = text::trim(t.substr(0, eq));
    const auto value = text::trim(t.substr(eq + 1));
    if (key == "tensor") {
      m.tensor = resolve(value);
    } else if (key == "test") {
      m.test = resolve(value);
    } else if (key == "names") {
      for (auto n : text::split(value, ',')) m.names.emplace_back(text::trim(n));
    } else if (key.starts_with("graph_")) {
      std::size_t mode = 0;
      try {
        mode = text::parse_uint(key.substr(6), "graph mode");
      } catch (const InvalidArgument& e) {
        throw ParseError(path.string(), line_no, e.what());
      }
      if (!graphs.emplace(mode, resolve(value)).second) {
        throw ParseError(path.string(), line_no, "graph for mode " + std::to_string(mode) + " given twice");
      }
    } else {
      throw ParseError(path.string(), line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (m.tensor.empty()) throw InvalidArgument(path.string() + ": manifest has no tensor");
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto it = graphs.find(i);
    if (it == graphs.end()) throw InvalidArgument(path.string() + ": missing graph_" + std::to_string(i));
    m.graphs.push_back(it->second);
  }
  return m;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  Dataset d;
  d.tensor = io::load_relation(m.tensor);
  if (m.graphs.size() != d.tensor.order()) {
    throw InvalidArgument(manifest_path.string() + ": expected " + std::to_string(d.tensor.order()) +
                          " graphs, found " + std::to_string(m.graphs.size()));
  }
  for (const auto& g : m.graphs) d.graphs.push_back(io::load_graph(g));
  d.names = m.names.empty() ? default_names(d.tensor.order()) : m.names;
  if (!m.test.empty()) {
    const SparseTensor test = io::load_relation(m.test);
    if (test.dims() != d.tensor.dims()) {
      throw InvalidArgument(m.test.string() + ": dims differ from the training tensor");
    }
    d.test_entries = test.entries();
  }
  d.validate();
  return d;
}

std::filesystem::path save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  data.validate();
  std::filesystem::create_directories(dir);
  io::save_relation(dir / "tensor.tsv", data.tensor);
  io::save_relation(dir / "test.tsv",
                    SparseTensor(data.tensor.dims(), data.test_entries, data.tensor.observed_only()));
  std::string manifest = "tensor=tensor.tsv\ntest=test.tsv\n";
  for (std::size_t m = 0; m < data.graphs.size(); ++m) {
    const std::string name = "graph_" + std::to_string(m) + ".tsv";
    io::save_graph(dir / name, data.graphs[m]);
    manifest += "graph_" + std::to_string(m) + "=" + name + "\n";
  }
  manifest += "names=" + text::join(data.names, ',', [](const std::string& s) { return s; }) + "\n";
  const auto path = dir / "manifest.txt";
  io::write_text(path, manifest);
  return path;
}

}  // namespace hyperlearn
