#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/objective.hpp"
#include "hyperlearn/sptensor.hpp"
#include "hyperlearn/types.hpp"

namespace hyperlearn {

// Single-graph Chebyshev filter: coeffs(j, c) weighs T_j(L~) for output
// channel c.
struct ChebFilter {
  Matrix coeffs;  // (degree + 1) x channels

  std::size_t degree() const { return static_cast<std::size_t>(coeffs.rows()) - 1; }
  std::size_t channels() const { return static_cast<std::size_t>(coeffs.cols()); }
};

// Row/column two-graph filter: theta(j, j') weighs T_j(L~_r) X T_j'(L~_c).
struct BilinearFilter {
  Matrix theta;  // (degree + 1) x (degree + 1)
};

// LSTM cell applied independently to every node row with shared weights.
// Gate blocks are stacked in the order input, forget, output, candidate.
struct DiffusionCell {
  Matrix w_input;   // 4h x input_size
  Matrix w_hidden;  // 4h x h
  Vector bias;      // 4h
  Matrix w_out;     // R x h, maps the hidden state to a row update
  Vector b_out;     // R

  std::size_t input_size() const { return static_cast<std::size_t>(w_input.cols()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(w_hidden.cols()); }
  std::size_t output_size() const { return static_cast<std::size_t>(w_out.rows()); }
};

struct MGCNNModel {
  std::vector<ChebFilter> filters;    // one per mode
  std::vector<DiffusionCell> cells;   // one shared, or one per mode
  std::size_t unroll = 3;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;

  bool shared_cell() const { return cells.size() == 1; }
  const DiffusionCell& cell_for(std::size_t mode) const {
    return cells[shared_cell() ? 0 : mode];
  }
  std::size_t parameter_count() const;

  void validate(std::size_t modes, std::size_t rank) const;
};

struct MGCNNConfig {
  std::size_t degree = 4;
  std::size_t channels = 4;
  std::size_t hidden = 16;
  std::size_t unroll = 3;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  bool shared_cell = true;
  std::uint64_t seed = 0;
  // Scale of the random output projection. Zero makes the untrained
  // refiner the identity map.
  double output_scale = 0.0;
};

MGCNNModel make_model(std::size_t modes, std::size_t rank, const MGCNNConfig& cfg);

// A~[:, :, c] = sum_j coeffs(j, c) T_j(L~) A. Channel c of row i sits at
// column r * channels + c of the returned N x (R * channels) matrix.
Matrix mode_conv(const Matrix& a, const SparseMatrix& laplacian, const ChebFilter& f);

// sum_{j,j'} theta(j, j') T_j(L~_r) X T_j'(L~_c)
Matrix bilinear_conv(const Matrix& x, const SparseMatrix& row_laplacian,
                     const SparseMatrix& col_laplacian, const BilinearFilter& f);

// Everything the backward pass needs from one unrolled step.
struct DiffusionStep {
  Matrix a;                    // A_t
  std::vector<Matrix> cheb;    // T_j(L~) A_t
  Matrix features;             // N x input_size
  Matrix gate_i, gate_f, gate_o, cand;
  Matrix cell_prev, cell;      // c_{t-1}, c_t
  Matrix hidden_prev, hidden;  // h_{t-1}, h_t
};

struct Diffusion {
  Matrix result;  // A_T
  std::vector<DiffusionStep> steps;
};

// A_{t+1} = A_t + cell(mode_conv(A_t)) for t < unroll.
Diffusion diffuse(const Matrix& a0, const SparseMatrix& laplacian, const ChebFilter& filter,
                  const DiffusionCell& cell, std::size_t unroll);

Diffusion diffuse(const Matrix& a0, const SparseMatrix& laplacian, const MGCNNModel& model,
                  std::size_t mode);

// Applies the refiner to every factor.
FactorSet refine_factors(const FactorSet& fs, std::span<const IntraGraph> graphs,
                         const MGCNNModel& model);

// Parameter gradients laid out like the model.
struct ModelGradient {
  std::vector<Matrix> filters;
  std::vector<DiffusionCell> cells;
};

// Backpropagates dL/dA_T through the unrolled steps of one mode and adds the
// parameter gradients into `filter_grad` / `cell_grad`.
void backprop_diffusion(const Diffusion& d, const SparseMatrix& laplacian,
                        const ChebFilter& filter, const DiffusionCell& cell,
                        const Matrix& grad_result, Matrix& filter_grad, DiffusionCell& cell_grad);

// total_loss of the refined factors and its gradient in every parameter.
struct RefinerEvaluation {
  LossBreakdown loss;
  ModelGradient gradient;
};

RefinerEvaluation evaluate_refiner(const SparseTensor& x, const FactorSet& fs,
                                   std::span<const IntraGraph> graphs, double lambda,
                                   const MGCNNModel& model,
                                   std::span<const double> reg_weights = {});

// Flat parameter vector: filters in mode order, then each cell's
// w_input, w_hidden, bias, w_out, b_out (row-major).
std::vector<double> flatten(const MGCNNModel& model);
std::vector<double> flatten(const ModelGradient& grad);
void unflatten(std::span<const double> params, MGCNNModel& model);

struct RefinerResult {
  MGCNNModel model;           // lowest-loss parameters seen, epoch 0 included
  double initial_loss = 0.0;  // loss of the unrefined factors
  double best_loss = 0.0;
  std::vector<double> epoch_losses;  // loss at the start of each epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss, double grad_norm)>;

// Gradient descent on the joint loss of the refined factors through the
// unrolled diffusion, with global-norm clipping. Throws NumericalError when
// the loss exceeds 1e6 times its initial value.
RefinerResult train_refiner(const SparseTensor& x, const FactorSet& fs,
                            std::span<const IntraGraph> graphs, double lambda, MGCNNModel model,
                            std::size_t epochs, std::span<const double> reg_weights = {},
                            const EpochCallback& on_epoch = {});

}  // namespace hyperlearn
