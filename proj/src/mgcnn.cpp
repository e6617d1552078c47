#include "hyperlearn/mgcnn.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "hyperlearn/error.hpp"

namespace hyperlearn {
namespace {

Matrix sigmoid(const Matrix& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale > 0.0 ? unif(rng) : 0.0;
  return m;
}

DiffusionCell zero_like(const DiffusionCell& c) {
  return {Matrix::Zero(c.w_input.rows(), c.w_input.cols()),
          Matrix::Zero(c.w_hidden.rows(), c.w_hidden.cols()), Vector::Zero(c.bias.size()),
          Matrix::Zero(c.w_out.rows(), c.w_out.cols()), Vector::Zero(c.b_out.size())};
}

template <typename M, typename F>
void for_each_tensor(M& model, F&& fn) {
  for (auto& f : model.filters) fn(f.coeffs.data(), f.coeffs.size());
  for (auto& c : model.cells) {
    fn(c.w_input.data(), c.w_input.size());
    fn(c.w_hidden.data(), c.w_hidden.size());
    fn(c.bias.data(), c.bias.size());
    fn(c.w_out.data(), c.w_out.size());
    fn(c.b_out.data(), c.b_out.size());
  }
}

template <typename G, typename F>
void for_each_gradient(G& grad, F&& fn) {
  for (auto& f : grad.filters) fn(f.data(), f.size());
  for (auto& c : grad.cells) {
    fn(c.w_input.data(), c.w_input.size());
    fn(c.w_hidden.data(), c.w_hidden.size());
    fn(c.bias.data(), c.bias.size());
    fn(c.w_out.data(), c.w_out.size());
    fn(c.b_out.data(), c.b_out.size());
  }
}

}  // namespace

std::size_t MGCNNModel::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](const double*, Eigen::Index size) { n += static_cast<std::size_t>(size); });
  return n;
}

void MGCNNModel::validate(std::size_t modes, std::size_t rank) const {
  if (unroll < 1) throw InvalidArgument("MGCNN unroll depth must be at least 1");
  if (filters.size() != modes) {
    throw InvalidArgument("MGCNN model has " + std::to_string(filters.size()) +
                          " filters for " + std::to_string(modes) + " modes");
  }
  if (cells.size() != 1 && cells.size() != modes) {
    throw InvalidArgument("MGCNN model needs one shared cell or one per mode");
  }
  for (std::size_t m = 0; m < modes; ++m) {
    const auto& f = filters[m];
    if (f.coeffs.rows() < 1 || f.coeffs.cols() < 1 || !f.coeffs.allFinite()) {
      throw InvalidArgument("filter " + std::to_string(m) + " is empty or non-finite");
    }
    const auto& c = cell_for(m);
    const auto h = static_cast<Eigen::Index>(c.hidden_size());
    if (c.input_size() != f.channels() * rank || c.w_input.rows() != 4 * h ||
        c.w_hidden.rows() != 4 * h || c.bias.size() != 4 * h ||
        c.output_size() != rank || c.w_out.cols() != h || c.b_out.size() != c.w_out.rows()) {
      throw InvalidArgument("diffusion cell shapes do not match filter channels and rank");
    }
  }
}

MGCNNModel make_model(std::size_t modes, std::size_t rank, const MGCNNConfig& cfg) {
  if (cfg.channels < 1 || cfg.hidden < 1 || cfg.unroll < 1) {
    throw InvalidArgument("MGCNN channels, hidden size and unroll must be positive");
  }
  std::mt19937_64 rng(cfg.seed);
  MGCNNModel model;
  model.unroll = cfg.unroll;
  model.learning_rate = cfg.learning_rate;
  model.clip_norm = cfg.clip_norm;

  const auto p1 = static_cast<Eigen::Index>(cfg.degree + 1);
  for (std::size_t m = 0; m < modes; ++m) {
    model.filters.push_back(
        {uniform_matrix(p1, static_cast<Eigen::Index>(cfg.channels), 1.0 / std::sqrt(double(p1)), rng)});
  }
  const auto h = static_cast<Eigen::Index>(cfg.hidden);
  const auto in = static_cast<Eigen::Index>(cfg.channels * rank);
  const auto r = static_cast<Eigen::Index>(rank);
  const double s = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  const std::size_t n_cells = cfg.shared_cell ? 1 : modes;
  for (std::size_t c = 0; c < n_cells; ++c) {
    DiffusionCell cell;
    cell.w_input = uniform_matrix(4 * h, in, s, rng);
    cell.w_hidden = uniform_matrix(4 * h, h, s, rng);
    cell.bias = Vector::Zero(4 * h);
    cell.bias.segment(h, h).setOnes();  // forget gate
    cell.w_out = uniform_matrix(r, h, cfg.output_scale, rng);
    cell.b_out = Vector::Zero(r);
    model.cells.push_back(std::move(cell));
  }
  return model;
}

namespace {

Matrix features_from_cheb(std::span<const Matrix> cheb, const ChebFilter& f) {
  const Eigen::Index n = cheb.front().rows();
  const Eigen::Index rank = cheb.front().cols();
  const auto channels = static_cast<Eigen::Index>(f.channels());
  Matrix out = Matrix::Zero(n, rank * channels);
  for (std::size_t j = 0; j < cheb.size(); ++j) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      const double w = f.coeffs(static_cast<Eigen::Index>(j), c);
      if (w == 0.0) continue;
      for (Eigen::Index r = 0; r < rank; ++r) out.col(r * channels + c) += w * cheb[j].col(r);
    }
  }
  return out;
}

}  // namespace

Matrix mode_conv(const Matrix& a, const SparseMatrix& laplacian, const ChebFilter& f) {
  if (f.coeffs.rows() < 1 || f.coeffs.cols() < 1) throw InvalidArgument("mode_conv: empty filter");
  const auto cheb = chebyshev_apply(laplacian, a, f.degree());
  return features_from_cheb(cheb, f);
}

Matrix bilinear_conv(const Matrix& x, const SparseMatrix& row_laplacian,
                     const SparseMatrix& col_laplacian, const BilinearFilter& f) {
  if (f.theta.rows() < 1 || f.theta.rows() != f.theta.cols()) {
    throw InvalidArgument("bilinear_conv: theta must be square and non-empty");
  }
  if (col_laplacian.rows() != x.cols() || col_laplacian.cols() != x.cols()) {
    throw InvalidArgument("bilinear_conv: column Laplacian does not match input columns");
  }
  const auto degree = static_cast<std::size_t>(f.theta.rows()) - 1;
  const auto rows = chebyshev_apply(row_laplacian, x, degree);
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t j = 0; j <= degree; ++j) {
    // T_j'(L~_c) is symmetric, so right multiplication is a left one on the transpose.
    const Matrix yt = rows[j].transpose();
    const auto both = chebyshev_apply(col_laplacian, yt, degree);
    for (std::size_t jp = 0; jp <= degree; ++jp) {
      const double w = f.theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(jp));
      if (w != 0.0) out += w * both[jp].transpose();
    }
  }
  return out;
}

Diffusion diffuse(const Matrix& a0, const SparseMatrix& laplacian, const ChebFilter& filter,
                  const DiffusionCell& cell, std::size_t unroll) {
  if (unroll < 1) throw InvalidArgument("diffuse: unroll depth must be at least 1");
  const Eigen::Index n = a0.rows();
  const auto h = static_cast<Eigen::Index>(cell.hidden_size());
  if (cell.input_size() != filter.channels() * static_cast<std::size_t>(a0.cols()) ||
      cell.output_size() != static_cast<std::size_t>(a0.cols())) {
    throw InvalidArgument("diffuse: cell shapes do not match factor rank and filter channels");
  }

  Diffusion out;
  out.steps.reserve(unroll);
  Matrix a = a0;
  Matrix hidden = Matrix::Zero(n, h);
  Matrix state = Matrix::Zero(n, h);
  for (std::size_t t = 0; t < unroll; ++t) {
    DiffusionStep s;
    s.a = a;
    s.cheb = chebyshev_apply(laplacian, a, filter.degree());
    s.features = features_from_cheb(s.cheb, filter);
    Matrix z = s.features * cell.w_input.transpose() + hidden * cell.w_hidden.transpose();
    z.rowwise() += cell.bias.transpose();
    s.gate_i = sigmoid(z.leftCols(h));
    s.gate_f = sigmoid(z.middleCols(h, h));
    s.gate_o = sigmoid(z.middleCols(2 * h, h));
    s.cand = z.rightCols(h).array().tanh().matrix();
    s.cell_prev = state;
    s.hidden_prev = hidden;
    s.cell = s.gate_f.cwiseProduct(state) + s.gate_i.cwiseProduct(s.cand);
    s.hidden = s.gate_o.cwiseProduct(s.cell.array().tanh().matrix());

    Matrix delta = s.hidden * cell.w_out.transpose();
    delta.rowwise() += cell.b_out.transpose();
    a += delta;
    if (!a.allFinite()) {
      throw NumericalError("diffuse: non-finite factor at step " + std::to_string(t));
    }
    hidden = s.hidden;
    state = s.cell;
    out.steps.push_back(std::move(s));
  }
  out.result = std::move(a);
  return out;
}

Diffusion diffuse(const Matrix& a0, const SparseMatrix& laplacian, const MGCNNModel& model,
                  std::size_t mode) {
  return diffuse(a0, laplacian, model.filters.at(mode), model.cell_for(mode), model.unroll);
}

FactorSet refine_factors(const FactorSet& fs, std::span<const IntraGraph> graphs,
                         const MGCNNModel& model) {
  if (graphs.size() != fs.order()) throw InvalidArgument("refine_factors: one graph per mode required");
  model.validate(fs.order(), fs.rank);
  FactorSet out = fs;
  for (std::size_t m = 0; m < fs.order(); ++m) {
    out.factors[m] = diffuse(fs.factors[m], graphs[m].laplacian(), model, m).result;
  }
  return out;
}

void backprop_diffusion(const Diffusion& d, const SparseMatrix& laplacian,
                        const ChebFilter& filter, const DiffusionCell& cell,
                        const Matrix& grad_result, Matrix& filter_grad, DiffusionCell& cell_grad) {
  const auto h = static_cast<Eigen::Index>(cell.hidden_size());
  const auto channels = static_cast<Eigen::Index>(filter.channels());
  const Eigen::Index n = grad_result.rows();
  const Eigen::Index rank = grad_result.cols();

  Matrix grad_a = grad_result;
  Matrix grad_hidden_next = Matrix::Zero(n, h);
  Matrix grad_cell_next = Matrix::Zero(n, h);
  Matrix grad_z(n, 4 * h);

  for (std::size_t t = d.steps.size(); t-- > 0;) {
    const DiffusionStep& s = d.steps[t];
    // A_{t+1} = A_t + delta_t, so d delta_t = d A_{t+1}
    const Matrix& grad_delta = grad_a;
    cell_grad.w_out += grad_delta.transpose() * s.hidden;
    cell_grad.b_out += grad_delta.colwise().sum().transpose();

    const Matrix grad_hidden = grad_delta * cell.w_out + grad_hidden_next;
    const Matrix tanh_c = s.cell.array().tanh().matrix();
    const Matrix grad_cell =
        (grad_hidden.array() * s.gate_o.array() * (1.0 - tanh_c.array().square())).matrix() +
        grad_cell_next;

    grad_z.leftCols(h) = (grad_cell.array() * s.cand.array() * s.gate_i.array() *
                          (1.0 - s.gate_i.array())).matrix();
    grad_z.middleCols(h, h) = (grad_cell.array() * s.cell_prev.array() * s.gate_f.array() *
                               (1.0 - s.gate_f.array())).matrix();
    grad_z.middleCols(2 * h, h) = (grad_hidden.array() * tanh_c.array() * s.gate_o.array() *
                                   (1.0 - s.gate_o.array())).matrix();
    grad_z.rightCols(h) =
        (grad_cell.array() * s.gate_i.array() * (1.0 - s.cand.array().square())).matrix();
    grad_cell_next = grad_cell.cwiseProduct(s.gate_f);

    cell_grad.w_input += grad_z.transpose() * s.features;
    cell_grad.w_hidden += grad_z.transpose() * s.hidden_prev;
    cell_grad.bias += grad_z.colwise().sum().transpose();
    grad_hidden_next = grad_z * cell.w_hidden;

    const Matrix grad_features = grad_z * cell.w_input;
    std::vector<Matrix> per_order(s.cheb.size(), Matrix::Zero(n, rank));
    for (std::size_t j = 0; j < s.cheb.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      for (Eigen::Index c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (Eigen::Index r = 0; r < rank; ++r) {
          const auto col = grad_features.col(r * channels + c);
          acc += s.cheb[j].col(r).dot(col);
          per_order[j].col(r) += filter.coeffs(jj, c) * col;
        }
        filter_grad(jj, c) += acc;
      }
    }
    grad_a += chebyshev_combine(laplacian, per_order);
  }
}

RefinerEvaluation evaluate_refiner(const SparseTensor& x, const FactorSet& fs,
                                   std::span<const IntraGraph> graphs, double lambda,
                                   const MGCNNModel& model, std::span<const double> reg_weights) {
  check_graphs(x, graphs);
  check_compatible(x, fs);
  model.validate(fs.order(), fs.rank);

  std::vector<Diffusion> runs;
  runs.reserve(fs.order());
  FactorSet refined = fs;
  for (std::size_t m = 0; m < fs.order(); ++m) {
    runs.push_back(diffuse(fs.factors[m], graphs[m].laplacian(), model, m));
    refined.factors[m] = runs.back().result;
  }

  RefinerEvaluation out;
  out.loss = total_loss(x, refined, graphs, lambda, reg_weights);
  for (const auto& f : model.filters) {
    out.gradient.filters.push_back(Matrix::Zero(f.coeffs.rows(), f.coeffs.cols()));
  }
  for (const auto& c : model.cells) out.gradient.cells.push_back(zero_like(c));

  for (std::size_t m = 0; m < fs.order(); ++m) {
    const Matrix g = grad_mode(x, refined, graphs, lambda, m, reg_weights);
    auto& cell_grad = out.gradient.cells[model.shared_cell() ? 0 : m];
    backprop_diffusion(runs[m], graphs[m].laplacian(), model.filters[m], model.cell_for(m), g,
                       out.gradient.filters[m], cell_grad);
  }
  return out;
}

std::vector<double> flatten(const MGCNNModel& model) {
  std::vector<double> out;
  out.reserve(model.parameter_count());
  for_each_tensor(model, [&](const double* p, Eigen::Index size) { out.insert(out.end(), p, p + size); });
  return out;
}

std::vector<double> flatten(const ModelGradient& grad) {
  std::vector<double> out;
  for_each_gradient(grad, [&](const double* p, Eigen::Index size) { out.insert(out.end(), p, p + size); });
  return out;
}

void unflatten(std::span<const double> params, MGCNNModel& model) {
  if (params.size() != model.parameter_count()) {
    throw InvalidArgument("unflatten: expected " + std::to_string(model.parameter_count()) +
                          " parameters, got " + std::to_string(params.size()));
  }
  std::size_t offset = 0;
  for_each_tensor(model, [&](double* p, Eigen::Index size) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), size, p);
    offset += static_cast<std::size_t>(size);
  });
}

RefinerResult train_refiner(const SparseTensor& x, const FactorSet& fs,
                            std::span<const IntraGraph> graphs, double lambda, MGCNNModel model,
                            std::size_t epochs, std::span<const double> reg_weights,
                            const EpochCallback& on_epoch) {
  model.validate(fs.order(), fs.rank);
  RefinerResult out;
  out.initial_loss = total_loss(x, fs, graphs, lambda, reg_weights).total;
  out.model = model;
  out.best_loss = std::numeric_limits<double>::infinity();
  if (epochs == 0) {
    out.best_loss = evaluate_refiner(x, fs, graphs, lambda, model, reg_weights).loss.total;
    return out;
  }

  double reference = 0.0;
  std::vector<double> params = flatten(model);
  for (std::size_t epoch = 0; epoch <= epochs; ++epoch) {
    const auto eval = evaluate_refiner(x, fs, graphs, lambda, model, reg_weights);
    const double loss = eval.loss.total;
    if (epoch == 0) reference = loss;
    if (!std::isfinite(loss) || loss > 1e6 * std::max(reference, 1e-300)) {
      throw NumericalError("train_refiner: diverged at epoch " + std::to_string(epoch) +
                           " (loss " + std::to_string(loss) + ", initial " +
                           std::to_string(reference) + ")");
    }
    if (loss < out.best_loss) {
      out.best_loss = loss;
      out.model = model;
    }
    if (epoch == epochs) break;
    out.epoch_losses.push_back(loss);

    std::vector<double> grad = flatten(eval.gradient);
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    norm = std::sqrt(norm);
    if (on_epoch) on_epoch(epoch, loss, norm);
    const double scale = (model.clip_norm > 0.0 && norm > model.clip_norm) ? model.clip_norm / norm : 1.0;
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= model.learning_rate * scale * grad[i];
    unflatten(params, model);
  }
  return out;
}

}  // namespace hyperlearn
