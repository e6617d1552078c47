#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hyperlearn/data.hpp"
#include "hyperlearn/error.hpp"
#include "hyperlearn/io.hpp"

using namespace hyperlearn;
namespace fs = std::filesystem;

namespace {

const fs::path kData = HYPERLEARN_TEST_DATA;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hyperlearn_test_data_" + name);
  fs::remove_all(p);
  return p;
}

MovieLensOptions tiny_opts() {
  MovieLensOptions o;
  o.users = 4;
  o.items = 3;
  o.knn = 1;
  return o;
}

}  // namespace

TEST_CASE("synthetic 20x20x20 at density 0.1 has exactly 800 entries") {
  SynthSpec s;
  s.dims = {20, 20, 20};
  s.density = 0.1;
  s.seed = 3;
  const auto out = generate_synthetic(s);
  CHECK(out.data.tensor.nnz() == 800);
  CHECK(out.data.tensor.observed_only());
  CHECK(out.data.graphs.size() == 3);
  CHECK(out.truth.rank == 3);
  for (const auto& a : out.truth.factors) {
    CHECK(a.minCoeff() >= 0.0);
    CHECK(a.maxCoeff() < 1.0);
  }
}

TEST_CASE("noiseless synthetic values equal the planted reconstruction") {
  SynthSpec s;
  s.dims = {5, 6, 4};
  s.rank = 2;
  s.knn = 2;
  s.density = 0.5;
  const auto out = generate_synthetic(s);
  for (std::size_t e = 0; e < out.data.tensor.nnz(); ++e) {
    CHECK(out.data.tensor.value(e) == reconstruct_at(out.truth, out.data.tensor.index(e)));
  }
}

TEST_CASE("synthetic generation is deterministic per seed and splits are disjoint") {
  SynthSpec s;
  s.dims = {10, 8, 6};
  s.density = 0.4;
  s.noise_std = 0.1;
  s.test_fraction = 0.25;
  s.knn = 3;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    s.seed = seed;
    const auto a = generate_synthetic(s);
    const auto b = generate_synthetic(s);
    CHECK(a.data.tensor == b.data.tensor);
    CHECK(a.truth == b.truth);
    CHECK(a.data.test_entries.size() == b.data.test_entries.size());
    CHECK_NOTHROW(a.data.validate());
    std::set<IndexTuple> train;
    for (const auto& e : a.data.tensor.entries()) train.insert(e.index);
    for (const auto& e : a.data.test_entries) CHECK_FALSE(train.contains(e.index));
    CHECK(a.data.tensor.nnz() + a.data.test_entries.size() == 192);  // 0.4 * 480
  }
}

TEST_CASE("synthetic spec validation") {
  SynthSpec s;
  s.dims = {5, 5};
  s.knn = 2;
  s.density = 0.0;
  CHECK_THROWS_AS(generate_synthetic(s), InvalidArgument);
  s.density = 1.5;
  CHECK_THROWS_AS(generate_synthetic(s), InvalidArgument);
  s.density = 1.0;
  s.noise_std = -1.0;
  CHECK_THROWS_AS(generate_synthetic(s), InvalidArgument);
  s.noise_std = 0.0;
  s.knn = 5;
  CHECK_THROWS_AS(generate_synthetic(s), InvalidArgument);
}

TEST_CASE("too sparse a sample is rejected") {
  SynthSpec s;
  s.dims = {50, 50};
  s.knn = 2;
  s.density = 0.004;  // 10 cells cannot cover 50 rows
  CHECK_THROWS_AS(generate_synthetic(s), InvalidArgument);
}

TEST_CASE("fourth-order synthetic round-trips through relation files") {
  SynthSpec s;
  s.dims = {15, 12, 10, 8};
  s.density = 0.2;
  s.noise_std = 0.3;
  s.seed = 9;
  const auto out = generate_synthetic(s);
  std::stringstream ss;
  io::write_relation(ss, out.data.tensor);
  const auto back = io::read_relation(ss);
  CHECK(back == out.data.tensor);
}

TEST_CASE("dataset save and load reproduce tensors, graphs and names") {
  SynthSpec s;
  s.dims = {9, 7, 5};
  s.density = 0.5;
  s.noise_std = 0.2;
  s.test_fraction = 0.2;
  s.knn = 2;
  const auto out = generate_synthetic(s);
  const auto dir = scratch("roundtrip");
  const auto manifest = save_dataset(dir, out.data);
  const auto back = load_dataset(manifest);
  CHECK(back.tensor == out.data.tensor);
  CHECK(back.names == out.data.names);
  REQUIRE(back.test_entries.size() == out.data.test_entries.size());
  for (std::size_t m = 0; m < 3; ++m) CHECK(back.graphs[m].edges() == out.data.graphs[m].edges());
  fs::remove_all(dir);
}

TEST_CASE("manifest errors") {
  const auto dir = scratch("manifest");
  fs::create_directories(dir);
  std::ofstream(dir / "m1.txt") << "tensor=t.tsv\nbogus=1\n";
  CHECK_THROWS_AS(read_manifest(dir / "m1.txt"), ParseError);
  std::ofstream(dir / "m2.txt") << "graph_0=g.tsv\n";
  CHECK_THROWS_AS(read_manifest(dir / "m2.txt"), InvalidArgument);
  std::ofstream(dir / "m3.txt") << "tensor=t.tsv\ngraph_1=g.tsv\n";
  CHECK_THROWS_AS(read_manifest(dir / "m3.txt"), InvalidArgument);
  std::ofstream(dir / "m4.txt") << "# comment\ntensor=t.tsv\ngraph_0=a.tsv\ngraph_1=/abs/b.tsv\nnames=u,v\n";
  const auto m = read_manifest(dir / "m4.txt");
  CHECK(m.tensor == dir / "t.tsv");
  CHECK(m.graphs.at(1) == fs::path("/abs/b.tsv"));
  CHECK(m.names == std::vector<std::string>{"u", "v"});
  fs::remove_all(dir);
}

TEST_CASE("dataset validation catches overlap and size mismatches") {
  Dataset d;
  d.tensor = SparseTensor({2, 2}, std::vector<TensorEntry>{{{0, 0}, 1.0}}, true);
  d.graphs = {IntraGraph::edgeless(2), IntraGraph::edgeless(2)};
  d.names = {"a", "b"};
  CHECK_NOTHROW(d.validate());
  d.test_entries = {{{0, 0}, 2.0}};
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  d.test_entries = {{{1, 1}, 2.0}};
  CHECK_NOTHROW(d.validate());
  d.graphs[1] = IntraGraph::edgeless(3);
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
}

TEST_CASE("attribution generator structure") {
  AttributionSpec s;
  s.artworks = 120;
  s.artists = 10;
  s.knn = 4;
  const auto d = generate_attribution(s);
  CHECK(d.tensor.dims() == std::vector<std::size_t>{120, 10, 8, 10});
  CHECK_FALSE(d.tensor.observed_only());
  CHECK_NOTHROW(d.validate());
  std::set<std::size_t> test_artworks;
  for (const auto& e : d.test_entries) test_artworks.insert(e.index[0]);
  CHECK(test_artworks.size() == 24);
  for (std::size_t e = 0; e < d.tensor.nnz(); ++e) {
    CHECK(d.tensor.value(e) == 1.0);
    CHECK_FALSE(test_artworks.contains(d.tensor.index(e)[0]));
  }
  // Every artwork has exactly one artist across all its hyperedges.
  std::map<std::size_t, std::set<std::size_t>> artists;
  for (const auto& e : d.tensor.entries()) artists[e.index[0]].insert(e.index[1]);
  for (const auto& e : d.test_entries) artists[e.index[0]].insert(e.index[1]);
  CHECK(artists.size() == 120);
  for (const auto& [_, a] : artists) CHECK(a.size() == 1);
  const auto again = generate_attribution(s);
  CHECK(again.tensor == d.tensor);
}

TEST_CASE("movielens loader on a tiny fixture") {
  auto o = tiny_opts();
  o.split_fraction = 1.0;
  const auto d = load_movielens(kData / "ml_tiny.data", o);
  CHECK(d.tensor.dims() == std::vector<std::size_t>{4, 3});
  CHECK(d.tensor.nnz() == 8);
  CHECK(d.test_entries.empty());
  CHECK(d.tensor.observed_only());
  CHECK(d.tensor.value(0) == 5.0);
  CHECK(d.tensor.index(0)[0] == 0);

  o.split_fraction = 0.5;
  const auto a = load_movielens(kData / "ml_tiny.data", o);
  const auto b = load_movielens(kData / "ml_tiny.data", o);
  CHECK(a.tensor.nnz() == 4);
  CHECK(a.test_entries.size() == 4);
  CHECK(a.tensor == b.tensor);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("movielens loader reports the failing line") {
  try {
    load_movielens(kData / "ml_bad.data", tiny_opts());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  try {
    load_movielens(kData / "ml_range.data", tiny_opts());
    FAIL("expected a range error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_movielens(kData / "missing.data", tiny_opts()), InvalidArgument);
}

TEST_CASE("full movielens-100k file") {
  const fs::path path = MOVIELENS_100K_PATH;
  if (!fs::exists(path)) {
    MESSAGE("MovieLens-100k not found at " << path << "; skipping");
    return;
  }
  MovieLensOptions o;
  o.split_fraction = 1.0;
  o.knn = 0;
  const auto d = load_movielens(path, o);
  CHECK(d.tensor.dims() == std::vector<std::size_t>{943, 1682});
  CHECK(d.tensor.nnz() == 100000);
  CHECK(d.test_entries.empty());
}
