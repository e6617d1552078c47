#include <doctest.h>

#include <random>

#include "hyperlearn/error.hpp"
#include "hyperlearn/factor.hpp"
#include "hyperlearn/gradcheck.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/mgcnn.hpp"
#include "hyperlearn/objective.hpp"
#include "oracles.hpp"

using namespace hyperlearn;

namespace {

MGCNNConfig tiny(bool shared = true, double out_scale = 0.3) {
  MGCNNConfig c;
  c.degree = 2;
  c.channels = 2;
  c.hidden = 4;
  c.unroll = 2;
  c.shared_cell = shared;
  c.output_scale = out_scale;
  c.seed = 17;
  return c;
}

}  // namespace

TEST_CASE("make_model shapes and parameter count") {
  const auto m = make_model(3, 5, tiny(false));
  CHECK(m.filters.size() == 3);
  CHECK(m.cells.size() == 3);
  CHECK_FALSE(m.shared_cell());
  CHECK(m.filters[0].coeffs.rows() == 3);
  CHECK(m.cell_for(2).input_size() == 10);
  // filters 3 * (3 * 2); each cell 16*10 + 16*4 + 16 + 5*4 + 5
  CHECK(m.parameter_count() == 18 + 3 * (160 + 64 + 16 + 20 + 5));
  CHECK_NOTHROW(m.validate(3, 5));
  CHECK_THROWS_AS(m.validate(2, 5), InvalidArgument);
  CHECK_THROWS_AS(m.validate(3, 4), InvalidArgument);
  const auto s = make_model(3, 5, tiny(true));
  CHECK(s.cells.size() == 1);
  CHECK(s.cell_for(2).w_out.rows() == 5);
}

TEST_CASE("make_model is deterministic per seed") {
  CHECK(flatten(make_model(2, 3, tiny())) == flatten(make_model(2, 3, tiny())));
  auto other = tiny();
  other.seed = 18;
  CHECK(flatten(make_model(2, 3, tiny())) != flatten(make_model(2, 3, other)));
}

TEST_CASE("flatten and unflatten are inverse") {
  auto m = make_model(2, 3, tiny(false));
  auto p = flatten(m);
  for (auto& v : p) v += 1.0;
  unflatten(p, m);
  CHECK(flatten(m) == p);
  CHECK_THROWS_AS(unflatten(std::vector<double>(p.size() - 1), m), InvalidArgument);
}

TEST_CASE("mode_conv mixes Chebyshev terms per channel") {
  std::mt19937_64 rng(1);
  const auto g = oracle::random_graph(6, 0.5, rng);
  const auto a = oracle::random_factors({6}, 2, rng).factors[0];
  ChebFilter f{Matrix{{1.0, 0.0}, {0.5, 2.0}, {-1.0, 0.25}}};
  const auto t = chebyshev_apply(g.laplacian(), a, 2);
  const Matrix out = mode_conv(a, g.laplacian(), f);
  REQUIRE(out.cols() == 4);
  for (Eigen::Index r = 0; r < 2; ++r) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      Vector expect = Vector::Zero(6);
      for (Eigen::Index j = 0; j < 3; ++j) expect += f.coeffs(j, c) * t[static_cast<std::size_t>(j)].col(r);
      CHECK((out.col(r * 2 + c) - expect).norm() < 1e-14);
    }
  }
}

TEST_CASE("bilinear_conv matches dense polynomial filters on both sides") {
  std::mt19937_64 rng(2);
  const auto gr = oracle::random_graph(5, 0.5, rng);
  const auto gc = oracle::random_graph(4, 0.6, rng);
  const Matrix x = oracle::random_factors({5}, 4, rng).factors[0];
  BilinearFilter f{oracle::random_factors({3}, 3, rng).factors[0]};
  auto dense_cheb = [](const SparseMatrix& l, std::size_t j) {
    const Matrix lt = Matrix(l) - Matrix::Identity(l.rows(), l.cols());
    Matrix t0 = Matrix::Identity(l.rows(), l.cols());
    if (j == 0) return t0;
    Matrix t1 = lt;
    for (std::size_t k = 2; k <= j; ++k) {
      Matrix t2 = 2.0 * lt * t1 - t0;
      t0 = t1;
      t1 = t2;
    }
    return t1;
  };
  Matrix expect = Matrix::Zero(5, 4);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t jp = 0; jp < 3; ++jp) {
      expect += f.theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(jp)) *
                dense_cheb(gr.laplacian(), j) * x * dense_cheb(gc.laplacian(), jp);
    }
  }
  CHECK(oracle::rel_diff(bilinear_conv(x, gr.laplacian(), gc.laplacian(), f), expect) < 1e-13);
}

TEST_CASE("untrained refiner with zero output projection is the identity") {
  std::mt19937_64 rng(3);
  const std::vector<std::size_t> dims{5, 4, 3};
  const auto fs = oracle::random_factors(dims, 2, rng);
  const auto gs = oracle::random_graphs(dims, rng);
  const auto model = make_model(3, 2, tiny(true, 0.0));
  CHECK(refine_factors(fs, gs, model) == fs);
}

TEST_CASE("diffuse records one step per unroll and rejects bad shapes") {
  std::mt19937_64 rng(4);
  const auto g = oracle::random_graph(5, 0.5, rng);
  const auto a = oracle::random_factors({5}, 2, rng).factors[0];
  auto cfg = tiny();
  cfg.unroll = 4;
  const auto model = make_model(1, 2, cfg);
  const auto d = diffuse(a, g.laplacian(), model, 0);
  CHECK(d.steps.size() == 4);
  CHECK(oracle::rel_diff(d.steps[0].a, a) == 0.0);
  const auto wrong = make_model(1, 3, cfg);
  CHECK_THROWS_AS(diffuse(a, g.laplacian(), wrong, 0), InvalidArgument);
}

TEST_CASE("refiner gradients pass the finite-difference suite") {
  const auto report = check_refiner_gradients(21);
  CHECK(report.cases.size() == 10);
  CHECK(report.worst() <= 1e-4);
  CHECK(report.passed());
}

TEST_CASE("train_refiner never returns parameters worse than the start") {
  std::mt19937_64 rng(5);
  const std::vector<std::size_t> dims{6, 5, 4};
  const auto truth = oracle::random_factors(dims, 2, rng);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<TensorEntry> entries;
  for (std::size_t id = 0; id < oracle::cell_count(dims); ++id) {
    const auto idx = oracle::cell_index(id, dims);
    entries.push_back({idx, reconstruct_at(truth, idx) + noise(rng)});
  }
  const SparseTensor x(dims, entries, true);
  const auto gs = oracle::random_graphs(dims, rng);
  const auto start = init_factors(dims, 2, 1);
  for (double scale : {0.0, 0.3}) {
    auto cfg = tiny(true, scale);
    cfg.learning_rate = 1e-2;
    const auto result = train_refiner(x, start, gs, 1.0, make_model(3, 2, cfg), 30);
    CHECK(result.epoch_losses.size() == 30);
    CHECK(result.best_loss <= result.epoch_losses.front());
    const double refined = total_loss(x, refine_factors(start, gs, result.model), gs, 1.0).total;
    CHECK(refined == doctest::Approx(result.best_loss).epsilon(1e-12));
    if (scale == 0.0) {
      CHECK(result.epoch_losses.front() == doctest::Approx(result.initial_loss).epsilon(1e-14));
      CHECK(result.best_loss < result.initial_loss);
    }
  }
}

TEST_CASE("train_refiner aborts on divergence") {
  std::mt19937_64 rng(6);
  const std::vector<std::size_t> dims{4, 4};
  const auto x = oracle::random_tensor(dims, 0.8, true, rng);
  const auto gs = oracle::random_graphs(dims, rng);
  auto cfg = tiny(true, 0.5);
  cfg.learning_rate = 1e6;
  cfg.clip_norm = 0.0;
  CHECK_THROWS_AS(train_refiner(x, oracle::random_factors(dims, 2, rng), gs, 1.0, make_model(2, 2, cfg), 50),
                  NumericalError);
}
