#include "hyperlearn/distributed.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "hyperlearn/error.hpp"
#include "hyperlearn/text.hpp"

namespace hyperlearn {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

std::string to_string(Sweep s) {
  return s == Sweep::gauss_seidel ? "gauss_seidel" : "jacobi";
}

Sweep parse_sweep(const std::string& s) {
  if (s == "gauss_seidel") return Sweep::gauss_seidel;
  if (s == "jacobi") return Sweep::jacobi;
  throw InvalidArgument("unknown sweep '" + s + "' (expected gauss_seidel or jacobi)");
}

void TrainPlan::validate() const {
  if (rank < 1) throw InvalidArgument("plan: rank must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("plan: lambda must be finite and >= 0");
  if (inner_steps < 1) throw InvalidArgument("plan: inner_steps must be at least 1");
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("plan: step must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidArgument("plan: shrink must lie in (0, 1)");
  if (!(sufficient_decrease >= 0.0 && sufficient_decrease < 1.0)) {
    throw InvalidArgument("plan: sufficient_decrease must lie in [0, 1)");
  }
  if (!(step_growth >= 1.0)) throw InvalidArgument("plan: step_growth must be >= 1");
  if (!(rel_tol >= 0.0)) throw InvalidArgument("plan: rel_tol must be >= 0");
  for (double w : reg_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("plan: regularizer weights must be >= 0");
  }
}

bool TrainPlan::frozen(std::size_t mode) const {
  return std::ranges::find(frozen_modes, mode) != frozen_modes.end();
}

// Persistent workers synchronized with the coordinator through one barrier:
// a start phase hands out the task, a done phase is the round barrier.
class AlternatingTrainer::WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers)
      : sync_(static_cast<std::ptrdiff_t>(workers + 1)), errors_(workers) {
    threads_.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads_.emplace_back([this, w] { loop(w); });
    }
  }

  ~WorkerPool() {
    stop_.store(true);
    sync_.arrive_and_wait();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const { return threads_.size(); }

  void run(const std::function<void(std::size_t)>& task) {
    task_ = &task;
    sync_.arrive_and_wait();
    sync_.arrive_and_wait();
    task_ = nullptr;
    std::exception_ptr first;
    for (auto& e : errors_) {
      if (e && !first) first = e;
      e = nullptr;
    }
    if (first) std::rethrow_exception(first);
  }

 private:
  void loop(std::size_t w) {
    for (;;) {
      sync_.arrive_and_wait();
      if (stop_.load()) return;
      try {
        (*task_)(w);
      } catch (...) {
        errors_[w] = std::current_exception();
      }
      sync_.arrive_and_wait();
    }
  }

  std::barrier<> sync_;
  std::vector<std::exception_ptr> errors_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::atomic<bool> stop_{false};
  std::vector<std::thread> threads_;
};

AlternatingTrainer::AlternatingTrainer(const SparseTensor& x, std::span<const IntraGraph> graphs,
                                       TrainPlan plan)
    : x_(x), graphs_(graphs), plan_(std::move(plan)) {
  plan_.validate();
  check_graphs(x_, graphs_);
  if (!plan_.reg_weights.empty() && plan_.reg_weights.size() != x_.order()) {
    throw InvalidArgument("plan: expected " + std::to_string(x_.order()) + " regularizer weights");
  }
  for (auto m : plan_.frozen_modes) {
    if (m >= x_.order()) throw InvalidArgument("plan: frozen mode " + std::to_string(m) + " out of range");
  }
  step_.assign(x_.order(), plan_.step);
  step_cap_.assign(x_.order(), 1e12);
  if (plan_.sweep == Sweep::jacobi) {
    const std::size_t workers = plan_.threads == 0 ? x_.order() : std::min(plan_.threads, x_.order());
    if (workers > 1) pool_ = std::make_unique<WorkerPool>(workers);
  }
}

AlternatingTrainer::~AlternatingTrainer() = default;

AlternatingTrainer::ModeUpdate AlternatingTrainer::update_mode(const FactorSet& snapshot,
                                                              std::size_t mode) {
  const auto start = Clock::now();
  ModeUpdate out;
  out.factor = snapshot.factors[mode];
  const ModeSubproblem sub(x_, snapshot, graphs_, plan_.lambda, mode, plan_.reg_weights);
  Matrix& a = out.factor;
  double f = sub.loss(a);
  if (!std::isfinite(f)) {
    throw NumericalError("non-finite loss in mode " + std::to_string(mode));
  }

  for (std::size_t s = 0; s < plan_.inner_steps; ++s) {
    const Matrix g = sub.gradient(a);
    const double g2 = g.squaredNorm();
    if (s == 0) out.grad_norm = std::sqrt(g2);
    if (g2 == 0.0) break;

    if (!plan_.backtracking) {
      a -= plan_.step * g;
      f = sub.loss(a);
      if (!std::isfinite(f)) {
        throw NumericalError("non-finite loss in mode " + std::to_string(mode) +
                             " with fixed step " + std::to_string(plan_.step));
      }
      continue;
    }

    double t = step_[mode];
    bool accepted = false;
    for (std::size_t h = 0; h <= plan_.max_halvings; ++h) {
      Matrix cand = a - t * g;
      const double fc = sub.loss(cand);
      if (std::isfinite(fc) && fc < f && fc <= f - plan_.sufficient_decrease * t * g2) {
        a = std::move(cand);
        f = fc;
        step_[mode] = h == 0 ? std::min(t * plan_.step_growth, step_cap_[mode]) : t;
        accepted = true;
        break;
      }
      t *= plan_.shrink;
    }
    if (!accepted) {
      ++out.stalls;
      step_[mode] = plan_.step;
      break;
    }
  }
  out.time_ms = elapsed_ms(start);
  return out;
}

RoundLog AlternatingTrainer::run_round(FactorSet& fs) {
  check_compatible(x_, fs);
  const std::size_t k = x_.order();
  RoundLog log;
  log.mode_time_ms.assign(k, 0.0);
  log.grad_norms.assign(k, 0.0);
  log.stalls.assign(k, 0);
  const auto start = Clock::now();

  if (plan_.sweep == Sweep::gauss_seidel) {
    const FactorSet before = fs;
    const double loss_before = total_loss(x_, fs, graphs_, plan_.lambda, plan_.reg_weights).total;
    for (std::size_t m = 0; m < k; ++m) {
      if (plan_.frozen(m)) continue;
      auto upd = update_mode(fs, m);
      fs.factors[m] = std::move(upd.factor);
      log.mode_time_ms[m] = upd.time_ms;
      log.grad_norms[m] = upd.grad_norm;
      log.stalls[m] = upd.stalls;
    }
    log.round_time_ms = elapsed_ms(start);
    log.loss = total_loss(x_, fs, graphs_, plan_.lambda, plan_.reg_weights);
    // Each accepted step decreases its subproblem, but the joint loss is
    // re-evaluated along a different summation path; never let rounding
    // report an increase.
    if (log.loss.total > loss_before) {
      fs = before;
      log.loss = total_loss(x_, fs, graphs_, plan_.lambda, plan_.reg_weights);
      log.rejected = true;
    }
  } else {
    const FactorSet snapshot = fs;
    const std::vector<double> steps_before = step_;
    std::vector<ModeUpdate> updates(k);
    auto work = [&](std::size_t worker) {
      const std::size_t stride = pool_ ? pool_->size() : 1;
      for (std::size_t m = worker; m < k; m += stride) {
        if (!plan_.frozen(m)) updates[m] = update_mode(snapshot, m);
      }
    };
    if (pool_) {
      pool_->run(work);
    } else {
      work(0);
    }
    for (std::size_t m = 0; m < k; ++m) {
      if (plan_.frozen(m)) continue;
      fs.factors[m] = std::move(updates[m].factor);
      log.mode_time_ms[m] = updates[m].time_ms;
      log.grad_norms[m] = updates[m].grad_norm;
      log.stalls[m] = updates[m].stalls;
    }
    log.round_time_ms = elapsed_ms(start);
    log.loss = total_loss(x_, fs, graphs_, plan_.lambda, plan_.reg_weights);
    // Simultaneous block steps can overshoot jointly even when every block
    // decreased its own subproblem. Undo such a round and retry with
    // smaller steps.
    const double loss_before = total_loss(x_, snapshot, graphs_, plan_.lambda, plan_.reg_weights).total;
    if (plan_.backtracking && !(log.loss.total <= loss_before)) {
      fs = snapshot;
      log.loss = total_loss(x_, fs, graphs_, plan_.lambda, plan_.reg_weights);
      log.rejected = true;
      for (std::size_t m = 0; m < k; ++m) {
        step_[m] = steps_before[m] * plan_.shrink;
        step_cap_[m] = step_[m];
      }
    } else {
      for (auto& c : step_cap_) c = std::min(c * plan_.step_growth, 1e12);
    }
  }
  if (!std::isfinite(log.loss.total)) throw NumericalError("non-finite loss after round");
  return log;
}

AlternatingTrainer::Result AlternatingTrainer::run(FactorSet fs, const RoundCallback& on_round) {
  Result out;
  out.initial = total_loss(x_, fs, graphs_, plan_.lambda, plan_.reg_weights);
  double prev = out.initial.total;
  for (std::size_t r = 1; r <= plan_.max_rounds; ++r) {
    RoundLog log = run_round(fs);
    log.round = r;
    const double cur = log.loss.total;
    out.rounds.push_back(std::move(log));
    if (on_round) on_round(out.rounds.back());
    // An undone Jacobi round retries with smaller steps, so an unchanged
    // loss there says nothing about convergence.
    if (out.rounds.back().rejected && plan_.sweep == Sweep::jacobi) continue;
    const double denom = std::max(std::abs(cur), std::numeric_limits<double>::min());
    if (std::abs(prev - cur) / denom < plan_.rel_tol || cur == 0.0) {
      out.converged = true;
      break;
    }
    prev = cur;
  }
  out.factors = std::move(fs);
  return out;
}

AlternatingTrainer::Result AlternatingTrainer::run_fixed(FactorSet fs, std::size_t rounds) {
  Result out;
  out.initial = total_loss(x_, fs, graphs_, plan_.lambda, plan_.reg_weights);
  for (std::size_t r = 1; r <= rounds; ++r) {
    RoundLog log = run_round(fs);
    log.round = r;
    out.rounds.push_back(std::move(log));
  }
  out.factors = std::move(fs);
  return out;
}

std::pair<FactorSet, RoundLog> run_round(const SparseTensor& x, const FactorSet& fs,
                                         std::span<const IntraGraph> graphs, const TrainPlan& plan) {
  AlternatingTrainer trainer(x, graphs, plan);
  FactorSet out = fs;
  RoundLog log = trainer.run_round(out);
  log.round = 1;
  return {std::move(out), std::move(log)};
}

std::pair<FactorSet, std::vector<RoundLog>> run_training(const SparseTensor& x, const FactorSet& fs,
                                                         std::span<const IntraGraph> graphs,
                                                         const TrainPlan& plan) {
  AlternatingTrainer trainer(x, graphs, plan);
  auto res = trainer.run(fs);
  return {std::move(res.factors), std::move(res.rounds)};
}

std::string convergence_csv_header(std::size_t modes) {
  std::string h = "round,total_loss,recon";
  for (std::size_t m = 0; m < modes; ++m) h += ",reg_" + std::to_string(m);
  for (std::size_t m = 0; m < modes; ++m) h += ",grad_norm_" + std::to_string(m);
  for (std::size_t m = 0; m < modes; ++m) h += ",time_ms_mode_" + std::to_string(m);
  h += ",time_ms_round";
  return h;
}

std::string convergence_csv_row(const RoundLog& log) {
  using text::format_real;
  std::string row = std::to_string(log.round) + "," + format_real(log.loss.total) + "," +
                    format_real(log.loss.recon);
  for (double v : log.loss.reg_terms) row += "," + format_real(v);
  for (double v : log.grad_norms) row += "," + format_real(v);
  for (double v : log.mode_time_ms) row += "," + format_real(v);
  row += "," + format_real(log.round_time_ms);
  return row;
}

}  // namespace hyperlearn
