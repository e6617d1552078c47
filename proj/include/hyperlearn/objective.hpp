#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/sptensor.hpp"
#include "hyperlearn/types.hpp"

namespace hyperlearn {

// Joint objective
//   total = lambda * recon + sum_m w_m * 1/2 tr(A_m^T L_m A_m)
// with per-mode regularizer weights w_m (all 1 unless configured).
struct LossBreakdown {
  std::vector<double> reg_terms;
  double recon = 0.0;
  double lambda = 1.0;
  double total = 0.0;

  double reg_sum() const;
};

// 1/2 tr(A^T L A) of one mode, unweighted.
double graph_regularizer(const IntraGraph& g, const Matrix& a);

// An empty `reg_weights` span means weight 1 for every mode.
LossBreakdown total_loss(const SparseTensor& x, const FactorSet& fs,
                         std::span<const IntraGraph> graphs, double lambda,
                         std::span<const double> reg_weights = {});

// lambda * recon + w_mode * 1/2 tr(A_mode^T L_mode A_mode). The recon term is
// the same for every mode since unfolding preserves the Frobenius norm.
double mode_loss(const SparseTensor& x, const FactorSet& fs, std::span<const IntraGraph> graphs,
                 double lambda, std::size_t mode, std::span<const double> reg_weights = {});

// Gradient of the joint objective with respect to A_mode:
//   observed: 2 lambda mttkrp(recon - x) + w L A
//   full:     2 lambda (A H - mttkrp(x)) + w L A,  H = gram_hadamard(skip mode)
Matrix grad_mode(const SparseTensor& x, const FactorSet& fs, std::span<const IntraGraph> graphs,
                 double lambda, std::size_t mode, std::span<const double> reg_weights = {});

// Mode-`mode` subproblem with every other factor frozen. Precomputes the
// per-entry products of the frozen rows so that trial points in a line
// search cost O(nnz * R) (observed) or O(N * R^2) (full) each.
//
// loss(A) differs from total_loss by a constant (the frozen modes'
// regularizers), so decreasing it decreases the joint objective.
class ModeSubproblem {
 public:
  ModeSubproblem(const SparseTensor& x, const FactorSet& fs, std::span<const IntraGraph> graphs,
                 double lambda, std::size_t mode, std::span<const double> reg_weights = {});

  std::size_t mode() const noexcept { return mode_; }

  double loss(const Matrix& a) const;
  Matrix gradient(const Matrix& a) const;

 private:
  double recon(const Matrix& a) const;

  const SparseTensor* x_;
  const IntraGraph* graph_;
  std::size_t mode_;
  double lambda_;
  double weight_;
  Matrix partial_;     // nnz x R products of the frozen factor rows
  Matrix gram_;        // full tensors: gram_hadamard(fs, mode)
  Matrix data_term_;   // full tensors: mttkrp(x, fs, mode)
  double sum_sq_ = 0.0;
};

// Throws unless there is one graph per mode with matching node count.
void check_graphs(const SparseTensor& x, std::span<const IntraGraph> graphs);

double reg_weight(std::span<const double> reg_weights, std::size_t mode);

}  // namespace hyperlearn
