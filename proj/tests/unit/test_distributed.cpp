#include <doctest.h>

#include <random>

#include "hyperlearn/data.hpp"
#include "hyperlearn/distributed.hpp"
#include "hyperlearn/error.hpp"
#include "hyperlearn/factor.hpp"
#include "oracles.hpp"

using namespace hyperlearn;

namespace {

struct Problem {
  SparseTensor x;
  std::vector<IntraGraph> graphs;
  FactorSet start;
};

Problem make_problem(std::uint64_t seed, bool observed, std::size_t rank = 3) {
  std::mt19937_64 rng(seed);
  const std::vector<std::size_t> dims{8, 7, 6};
  return {oracle::random_tensor(dims, 0.5, observed, rng), oracle::random_graphs(dims, rng),
          init_factors(dims, rank, seed)};
}

bool monotone(const AlternatingTrainer::Result& r) {
  double prev = r.initial.total;
  for (const auto& log : r.rounds) {
    if (log.loss.total > prev + 1e-12) return false;
    prev = log.loss.total;
  }
  return true;
}

}  // namespace

TEST_CASE("plan validation") {
  TrainPlan p;
  CHECK_NOTHROW(p.validate());
  p.rank = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.shrink = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.lambda = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.inner_steps = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  CHECK(parse_sweep("jacobi") == Sweep::jacobi);
  CHECK(to_string(Sweep::gauss_seidel) == "gauss_seidel");
  CHECK_THROWS_AS(parse_sweep("async"), InvalidArgument);
}

TEST_CASE("gauss-seidel rounds never increase the loss") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (bool observed : {true, false}) {
      auto prob = make_problem(seed, observed);
      TrainPlan plan;
      plan.rank = 3;
      plan.lambda = 0.5 + 0.25 * static_cast<double>(seed);
      plan.max_rounds = 40;
      plan.rel_tol = 0.0;
      AlternatingTrainer t(prob.x, prob.graphs, plan);
      const auto r = t.run(prob.start);
      CHECK(r.rounds.size() == 40);
      CHECK(monotone(r));
      CHECK(r.rounds.back().loss.total < r.initial.total);
    }
  }
}

TEST_CASE("gauss-seidel runs are bitwise reproducible") {
  auto prob = make_problem(3, true);
  TrainPlan plan;
  plan.rank = 3;
  plan.max_rounds = 15;
  plan.rel_tol = 0.0;
  const auto a = run_training(prob.x, prob.start, prob.graphs, plan);
  const auto b = run_training(prob.x, prob.start, prob.graphs, plan);
  CHECK(a.first == b.first);
  REQUIRE(a.second.size() == b.second.size());
  for (std::size_t i = 0; i < a.second.size(); ++i) {
    CHECK(a.second[i].loss.total == b.second[i].loss.total);
    CHECK(a.second[i].grad_norms == b.second[i].grad_norms);
  }
}

TEST_CASE("jacobi results do not depend on the worker count") {
  auto prob = make_problem(4, false);
  TrainPlan plan;
  plan.rank = 3;
  plan.sweep = Sweep::jacobi;
  plan.max_rounds = 10;
  plan.rel_tol = 0.0;
  plan.threads = 1;
  const auto inline_run = run_training(prob.x, prob.start, prob.graphs, plan);
  plan.threads = 0;
  const auto pooled = run_training(prob.x, prob.start, prob.graphs, plan);
  plan.threads = 2;
  const auto two = run_training(prob.x, prob.start, prob.graphs, plan);
  CHECK(inline_run.first == pooled.first);
  CHECK(inline_run.first == two.first);
}

TEST_CASE("jacobi undoes rounds that raise the loss and keeps going") {
  SynthSpec spec;
  spec.dims = {10, 9, 8};
  spec.rank = 2;
  spec.density = 0.5;
  spec.knn = 3;
  spec.test_fraction = 0.2;
  spec.seed = 3;
  const auto synth = generate_synthetic(spec);
  TrainPlan plan;
  plan.rank = 2;
  plan.sweep = Sweep::jacobi;
  plan.max_rounds = 30;
  AlternatingTrainer t(synth.data.tensor, synth.data.graphs, plan);
  const auto r = t.run(init_factors(spec.dims, 2, 0));
  CHECK(monotone(r));
  std::size_t rejected = 0;
  for (const auto& log : r.rounds) rejected += log.rejected ? 1 : 0;
  // The doubled steps overshoot at some point; a rejected round must not
  // end the run as if it had converged.
  CHECK(rejected > 0);
  const bool stopped_on_rejection = r.rounds.back().rejected && r.converged;
  CHECK_FALSE(stopped_on_rejection);
  CHECK(r.rounds.back().loss.total < 0.5 * r.initial.total);
}

TEST_CASE("jacobi updates every mode from the round-start snapshot") {
  auto prob = make_problem(5, true);
  TrainPlan plan;
  plan.rank = 3;
  plan.sweep = Sweep::jacobi;
  const auto [after, log] = run_round(prob.x, prob.start, prob.graphs, plan);
  // Each mode's update equals a gauss-seidel update of that mode alone,
  // taken from the untouched start.
  for (std::size_t m = 0; m < 3; ++m) {
    TrainPlan single = plan;
    single.sweep = Sweep::gauss_seidel;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != m) single.frozen_modes.push_back(k);
    }
    const auto solo = run_round(prob.x, prob.start, prob.graphs, single).first;
    CHECK(oracle::rel_diff(after.factors[m], solo.factors[m]) == 0.0);
  }
  CHECK(log.grad_norms.size() == 3);
}

TEST_CASE("freezing one mode leaves the other jacobi updates unchanged") {
  auto prob = make_problem(6, false);
  TrainPlan plan;
  plan.rank = 3;
  plan.sweep = Sweep::jacobi;
  const auto [all, all_log] = run_round(prob.x, prob.start, prob.graphs, plan);
  for (std::size_t frozen = 0; frozen < 3; ++frozen) {
    TrainPlan p = plan;
    p.frozen_modes = {frozen};
    const auto [part, log] = run_round(prob.x, prob.start, prob.graphs, p);
    CHECK(oracle::rel_diff(part.factors[frozen], prob.start.factors[frozen]) == 0.0);
    CHECK(log.grad_norms[frozen] == 0.0);
    for (std::size_t m = 0; m < 3; ++m) {
      if (m == frozen) continue;
      CHECK(oracle::rel_diff(part.factors[m], all.factors[m]) == 0.0);
      CHECK(log.grad_norms[m] == all_log.grad_norms[m]);
    }
  }
}

TEST_CASE("huge rel_tol stops after one round") {
  auto prob = make_problem(7, true);
  TrainPlan plan;
  plan.rank = 3;
  plan.rel_tol = 1e300;
  const auto [fs, logs] = run_training(prob.x, prob.start, prob.graphs, plan);
  CHECK(logs.size() == 1);
}

TEST_CASE("jacobi and gauss-seidel reach the same objective from a near-optimal start") {
  auto prob = make_problem(8, true, 2);
  TrainPlan plan;
  plan.rank = 2;
  plan.max_rounds = 3000;
  plan.rel_tol = 1e-12;
  const auto warm = run_training(prob.x, prob.start, prob.graphs, plan).first;
  FactorSet near = warm;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> jitter(0.0, 1e-3);
  for (auto& a : near.factors) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] += jitter(rng);
  }
  plan.max_rounds = 500;
  const auto gs = run_training(prob.x, near, prob.graphs, plan).second.back().loss.total;
  plan.sweep = Sweep::jacobi;
  const auto jac = run_training(prob.x, near, prob.graphs, plan).second.back().loss.total;
  CHECK(std::abs(gs - jac) <= 0.01 * gs);
}

TEST_CASE("fixed-step mode aborts on divergence") {
  auto prob = make_problem(9, false);
  TrainPlan plan;
  plan.rank = 3;
  plan.backtracking = false;
  plan.step = 1e6;
  plan.max_rounds = 50;
  CHECK_THROWS_AS(run_training(prob.x, prob.start, prob.graphs, plan), NumericalError);
}

TEST_CASE("exhausted line searches are logged as stalls") {
  auto prob = make_problem(10, true);
  TrainPlan plan;
  plan.rank = 3;
  plan.step = 1e12;
  plan.max_halvings = 2;
  const auto [fs, log] = run_round(prob.x, prob.start, prob.graphs, plan);
  std::size_t stalls = 0;
  for (auto s : log.stalls) stalls += s;
  CHECK(stalls == 3);
  CHECK(fs == prob.start);
}

TEST_CASE("worker exceptions reach the coordinator") {
  auto prob = make_problem(11, true);
  TrainPlan plan;
  plan.rank = 3;
  plan.sweep = Sweep::jacobi;
  AlternatingTrainer t(prob.x, prob.graphs, plan);
  FactorSet bad = prob.start;
  bad.factors[1](0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(t.run_round(bad));
  // The pool survives and keeps serving rounds.
  FactorSet good = prob.start;
  CHECK_NOTHROW(t.run_round(good));
}

TEST_CASE("convergence CSV layout") {
  CHECK(convergence_csv_header(2) ==
        "round,total_loss,recon,reg_0,reg_1,grad_norm_0,grad_norm_1,time_ms_mode_0,time_ms_mode_1,time_ms_round");
  RoundLog log;
  log.round = 3;
  log.loss.total = 1.5;
  log.loss.recon = 1.0;
  log.loss.reg_terms = {0.25, 0.25};
  log.grad_norms = {2.0, 3.0};
  log.mode_time_ms = {0.5, 0.75};
  log.round_time_ms = 1.25;
  CHECK(convergence_csv_row(log) == "3,1.5,1,0.25,0.25,2,3,0.5,0.75,1.25");
}
