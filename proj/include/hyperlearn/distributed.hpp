#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/objective.hpp"
#include "hyperlearn/sptensor.hpp"

namespace hyperlearn {

enum class Sweep { gauss_seidel, jacobi };

std::string to_string(Sweep s);
Sweep parse_sweep(const std::string& s);

struct TrainPlan {
  std::size_t rank = 10;
  double lambda = 1.0;
  Sweep sweep = Sweep::gauss_seidel;
  std::size_t inner_steps = 5;

  // Backtracking gradient steps. A step that needs no halving lets the next
  // trial start `step_growth` times larger.
  double step = 1e-2;
  bool backtracking = true;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  std::size_t max_halvings = 30;
  double step_growth = 2.0;

  std::size_t max_rounds = 100;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  std::vector<double> reg_weights;  // empty: all 1

  // Jacobi worker threads; 0 means one per mode, 1 runs the workers inline.
  std::size_t threads = 0;
  std::vector<std::size_t> frozen_modes;

  void validate() const;
  bool frozen(std::size_t mode) const;
};

struct RoundLog {
  std::size_t round = 0;
  LossBreakdown loss;                 // after the round
  std::vector<double> mode_time_ms;   // each worker's update time
  double round_time_ms = 0.0;         // wall time of the whole sweep
  std::vector<double> grad_norms;     // per mode, at the start of its update
  std::vector<std::size_t> stalls;    // per mode, exhausted line searches
  bool rejected = false;              // round undone by the descent guard
};

// Runs the per-mode updates of the alternating optimization.
//
// Gauss-Seidel updates modes in ascending order on the coordinator thread,
// each seeing the latest values of the others. Jacobi hands every mode to
// its own worker; all workers read the same round-start snapshot and the
// results are swapped in at the round barrier. Factor m is written only by
// worker m. A round that raises the joint loss is undone in either mode.
class AlternatingTrainer {
 public:
  AlternatingTrainer(const SparseTensor& x, std::span<const IntraGraph> graphs, TrainPlan plan);
  ~AlternatingTrainer();
  AlternatingTrainer(const AlternatingTrainer&) = delete;
  AlternatingTrainer& operator=(const AlternatingTrainer&) = delete;

  const TrainPlan& plan() const noexcept { return plan_; }

  // One sweep over all modes, updating `fs` in place.
  RoundLog run_round(FactorSet& fs);

  struct Result {
    FactorSet factors;
    LossBreakdown initial;
    std::vector<RoundLog> rounds;
    bool converged = false;
  };

  using RoundCallback = std::function<void(const RoundLog&)>;

  // Rounds until |loss change| / loss < rel_tol or max_rounds.
  Result run(FactorSet fs, const RoundCallback& on_round = {});

  // Like run() but always executes exactly `rounds` rounds.
  Result run_fixed(FactorSet fs, std::size_t rounds);

 private:
  struct ModeUpdate {
    Matrix factor;
    double grad_norm = 0.0;
    std::size_t stalls = 0;
    double time_ms = 0.0;
  };

  ModeUpdate update_mode(const FactorSet& snapshot, std::size_t mode);

  class WorkerPool;

  const SparseTensor& x_;
  std::span<const IntraGraph> graphs_;
  TrainPlan plan_;
  std::vector<double> step_;      // per-mode line-search state
  std::vector<double> step_cap_;  // lowered by undone jacobi rounds
  std::unique_ptr<WorkerPool> pool_;
};

std::pair<FactorSet, RoundLog> run_round(const SparseTensor& x, const FactorSet& fs,
                                         std::span<const IntraGraph> graphs, const TrainPlan& plan);

std::pair<FactorSet, std::vector<RoundLog>> run_training(const SparseTensor& x, const FactorSet& fs,
                                                         std::span<const IntraGraph> graphs,
                                                         const TrainPlan& plan);

// round,total_loss,recon,reg_0..,grad_norm_0..,time_ms_mode_0..,time_ms_round
std::string convergence_csv_header(std::size_t modes);
std::string convergence_csv_row(const RoundLog& log);

}  // namespace hyperlearn
