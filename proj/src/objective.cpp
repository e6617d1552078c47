#include "hyperlearn/objective.hpp"

#include <numeric>
#include <string>

#include "hyperlearn/error.hpp"
#include "hyperlearn/factor.hpp"

namespace hyperlearn {

double LossBreakdown::reg_sum() const {
  return std::accumulate(reg_terms.begin(), reg_terms.end(), 0.0);
}

double reg_weight(std::span<const double> reg_weights, std::size_t mode) {
  if (reg_weights.empty()) return 1.0;
  if (mode >= reg_weights.size()) {
    throw InvalidArgument("no regularizer weight for mode " + std::to_string(mode));
  }
  return reg_weights[mode];
}

void check_graphs(const SparseTensor& x, std::span<const IntraGraph> graphs) {
  if (graphs.size() != x.order()) {
    throw InvalidArgument("expected " + std::to_string(x.order()) + " graphs, got " +
                          std::to_string(graphs.size()));
  }
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    if (graphs[m].size() != x.dims()[m]) {
      throw InvalidArgument("graph " + std::to_string(m) + " has " +
                            std::to_string(graphs[m].size()) + " nodes, mode size is " +
                            std::to_string(x.dims()[m]));
    }
  }
}

double graph_regularizer(const IntraGraph& g, const Matrix& a) {
  if (g.size() != static_cast<std::size_t>(a.rows())) {
    throw InvalidArgument("graph_regularizer: graph and factor sizes differ");
  }
  const Matrix la = g.laplacian() * a;
  return 0.5 * a.cwiseProduct(la).sum();
}

LossBreakdown total_loss(const SparseTensor& x, const FactorSet& fs,
                         std::span<const IntraGraph> graphs, double lambda,
                         std::span<const double> reg_weights) {
  check_graphs(x, graphs);
  LossBreakdown out;
  out.lambda = lambda;
  out.recon = masked_sq_error(x, fs);
  out.reg_terms.reserve(fs.order());
  for (std::size_t m = 0; m < fs.order(); ++m) {
    out.reg_terms.push_back(reg_weight(reg_weights, m) * graph_regularizer(graphs[m], fs.factors[m]));
  }
  out.total = lambda * out.recon + out.reg_sum();
  return out;
}

double mode_loss(const SparseTensor& x, const FactorSet& fs, std::span<const IntraGraph> graphs,
                 double lambda, std::size_t mode, std::span<const double> reg_weights) {
  check_graphs(x, graphs);
  if (mode >= x.order()) throw InvalidArgument("mode_loss: mode out of range");
  return lambda * masked_sq_error(x, fs) +
         reg_weight(reg_weights, mode) * graph_regularizer(graphs[mode], fs.factors[mode]);
}

Matrix grad_mode(const SparseTensor& x, const FactorSet& fs, std::span<const IntraGraph> graphs,
                 double lambda, std::size_t mode, std::span<const double> reg_weights) {
  check_graphs(x, graphs);
  check_compatible(x, fs);
  if (mode >= x.order()) throw InvalidArgument("grad_mode: mode out of range");
  const Matrix& a = fs.factors[mode];
  Matrix g;
  if (x.observed_only()) {
    std::vector<double> residual(x.nnz());
    for (std::size_t e = 0; e < x.nnz(); ++e) {
      residual[e] = reconstruct_at(fs, x.index(e)) - x.value(e);
    }
    g = 2.0 * lambda * mttkrp(x, residual, fs, mode);
  } else {
    g = 2.0 * lambda * (a * gram_hadamard(fs, mode) - mttkrp(x, fs, mode));
  }
  g += reg_weight(reg_weights, mode) * (graphs[mode].laplacian() * a);
  return g;
}

ModeSubproblem::ModeSubproblem(const SparseTensor& x, const FactorSet& fs,
                               std::span<const IntraGraph> graphs, double lambda,
                               std::size_t mode, std::span<const double> reg_weights)
    : x_(&x), mode_(mode), lambda_(lambda) {
  check_graphs(x, graphs);
  check_compatible(x, fs);
  if (mode >= x.order()) throw InvalidArgument("ModeSubproblem: mode out of range");
  graph_ = &graphs[mode];
  weight_ = reg_weight(reg_weights, mode);

  const auto rank = static_cast<Eigen::Index>(fs.rank);
  partial_.resize(static_cast<Eigen::Index>(x.nnz()), rank);
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const auto idx = x.index(e);
    auto row = partial_.row(static_cast<Eigen::Index>(e));
    row.setOnes();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k != mode) row.array() *= fs.factors[k].row(idx[k]).array();
    }
  }
  if (!x.observed_only()) {
    gram_ = gram_hadamard(fs, mode);
    data_term_ = Matrix::Zero(static_cast<Eigen::Index>(x.dims()[mode]), rank);
    for (std::size_t e = 0; e < x.nnz(); ++e) {
      data_term_.row(x.index(e)[mode]) += x.value(e) * partial_.row(static_cast<Eigen::Index>(e));
    }
    sum_sq_ = x.sum_of_squares();
  }
}

double ModeSubproblem::recon(const Matrix& a) const {
  if (x_->observed_only()) {
    double s = 0.0;
    for (std::size_t e = 0; e < x_->nnz(); ++e) {
      const double r = a.row(x_->index(e)[mode_]).dot(partial_.row(static_cast<Eigen::Index>(e))) -
                       x_->value(e);
      s += r * r;
    }
    return s;
  }
  const Matrix ata = a.transpose() * a;
  const double err = ata.cwiseProduct(gram_).sum() - 2.0 * a.cwiseProduct(data_term_).sum() + sum_sq_;
  return std::max(err, 0.0);
}

double ModeSubproblem::loss(const Matrix& a) const {
  return lambda_ * recon(a) + weight_ * graph_regularizer(*graph_, a);
}

Matrix ModeSubproblem::gradient(const Matrix& a) const {
  Matrix g;
  if (x_->observed_only()) {
    g = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t e = 0; e < x_->nnz(); ++e) {
      const auto row = static_cast<Eigen::Index>(x_->index(e)[mode_]);
      const auto p = partial_.row(static_cast<Eigen::Index>(e));
      const double r = a.row(row).dot(p) - x_->value(e);
      g.row(row) += (2.0 * lambda_ * r) * p;
    }
  } else {
    g = 2.0 * lambda_ * (a * gram_ - data_term_);
  }
  g += weight_ * (graph_->laplacian() * a);
  return g;
}

}  // namespace hyperlearn
