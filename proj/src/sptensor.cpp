#include "hyperlearn/sptensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hyperlearn/factor.hpp"

namespace hyperlearn {

std::vector<std::size_t> FactorSet::dims() const {
  std::vector<std::size_t> out;
  out.reserve(factors.size());
  for (const auto& a : factors) out.push_back(static_cast<std::size_t>(a.rows()));
  return out;
}

void FactorSet::validate() const {
  for (std::size_t m = 0; m < factors.size(); ++m) {
    if (static_cast<std::size_t>(factors[m].cols()) != rank) {
      throw InvalidArgument("factor " + std::to_string(m) + " has " +
                            std::to_string(factors[m].cols()) + " columns, expected rank " +
                            std::to_string(rank));
    }
    if (!factors[m].allFinite()) {
      throw InvalidArgument("factor " + std::to_string(m) + " has non-finite entries");
    }
  }
}

bool operator==(const FactorSet& a, const FactorSet& b) {
  if (a.rank != b.rank || a.factors.size() != b.factors.size()) return false;
  for (std::size_t m = 0; m < a.factors.size(); ++m) {
    if (a.factors[m].rows() != b.factors[m].rows() || a.factors[m].cols() != b.factors[m].cols() ||
        a.factors[m] != b.factors[m]) {
      return false;
    }
  }
  return true;
}

SparseTensor::SparseTensor(std::vector<std::size_t> dims, std::span<const TensorEntry> entries,
                           bool observed_only)
    : dims_(std::move(dims)), observed_only_(observed_only) {
  const std::size_t k = dims_.size();
  coords_.reserve(entries.size() * k);
  values_.reserve(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& entry = entries[e];
    if (entry.index.size() != k) {
      throw InvalidArgument("entry " + std::to_string(e) + " has " +
                            std::to_string(entry.index.size()) + " indices, tensor order is " +
                            std::to_string(k));
    }
    for (std::size_t m = 0; m < k; ++m) {
      if (entry.index[m] >= dims_[m]) {
        throw InvalidArgument("entry " + std::to_string(e) + ": index " +
                              std::to_string(entry.index[m]) + " out of range for mode " +
                              std::to_string(m) + " (size " + std::to_string(dims_[m]) + ")");
      }
      coords_.push_back(static_cast<Coord>(entry.index[m]));
    }
    values_.push_back(entry.value);
  }
  validate();
}

SparseTensor::SparseTensor(std::vector<std::size_t> dims, std::vector<Coord> coords,
                           std::vector<double> values, bool observed_only)
    : dims_(std::move(dims)),
      coords_(std::move(coords)),
      values_(std::move(values)),
      observed_only_(observed_only) {
  validate();
}

void SparseTensor::validate() {
  const std::size_t k = dims_.size();
  if (k < 2) throw InvalidArgument("tensor order must be at least 2");
  for (std::size_t m = 0; m < k; ++m) {
    if (dims_[m] == 0) throw InvalidArgument("mode " + std::to_string(m) + " has size 0");
    if (dims_[m] > std::numeric_limits<Coord>::max()) {
      throw InvalidArgument("mode " + std::to_string(m) + " is too large");
    }
  }
  if (coords_.size() != values_.size() * k) {
    throw InvalidArgument("coordinate array does not match value count");
  }
  for (std::size_t e = 0; e < values_.size(); ++e) {
    for (std::size_t m = 0; m < k; ++m) {
      if (coords_[e * k + m] >= dims_[m]) {
        throw InvalidArgument("entry " + std::to_string(e) + " out of range in mode " +
                              std::to_string(m));
      }
    }
    if (!std::isfinite(values_[e])) {
      throw InvalidArgument("entry " + std::to_string(e) + " has a non-finite value");
    }
  }

  std::vector<std::size_t> order(values_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto tuple = [&](std::size_t e) { return index(e); };
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
    return std::ranges::lexicographical_compare(tuple(a), tuple(b));
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (std::ranges::equal(tuple(order[i - 1]), tuple(order[i]))) {
      throw InvalidArgument("duplicate index tuple at entries " + std::to_string(order[i - 1]) +
                            " and " + std::to_string(order[i]));
    }
  }
}

double SparseTensor::cell_count() const {
  double cells = 1.0;
  for (auto d : dims_) cells *= static_cast<double>(d);
  return cells;
}

double SparseTensor::sum_of_squares() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

std::vector<TensorEntry> SparseTensor::entries() const {
  std::vector<TensorEntry> out;
  out.reserve(nnz());
  for (std::size_t e = 0; e < nnz(); ++e) {
    auto idx = index(e);
    out.push_back({IndexTuple(idx.begin(), idx.end()), values_[e]});
  }
  return out;
}

SparseTensor SparseTensor::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) {
    throw InvalidArgument("with_values: expected " + std::to_string(values_.size()) + " values");
  }
  SparseTensor out;
  out.dims_ = dims_;
  out.coords_ = coords_;
  out.values_ = std::move(values);
  out.observed_only_ = observed_only_;
  return out;
}

std::size_t unfold_column_index(std::span<const std::size_t> dims, std::size_t mode,
                                std::span<const std::size_t> idx) {
  if (mode >= dims.size()) {
    throw InvalidArgument("unfold_column_index: mode " + std::to_string(mode) +
                          " out of range for order " + std::to_string(dims.size()));
  }
  if (idx.size() != dims.size()) {
    throw InvalidArgument("unfold_column_index: index length does not match dims");
  }
  std::size_t col = 0;
  std::size_t stride = 1;
  for (std::size_t k = dims.size(); k-- > 0;) {
    if (idx[k] >= dims[k]) {
      throw InvalidArgument("unfold_column_index: index out of bounds in mode " +
                            std::to_string(k));
    }
    if (k == mode) continue;
    col += idx[k] * stride;
    stride *= dims[k];
  }
  return col;
}

void check_compatible(const SparseTensor& x, const FactorSet& fs) {
  if (fs.order() != x.order()) {
    throw InvalidArgument("factor set has " + std::to_string(fs.order()) +
                          " modes, tensor has " + std::to_string(x.order()));
  }
  for (std::size_t m = 0; m < x.order(); ++m) {
    if (static_cast<std::size_t>(fs.factors[m].rows()) != x.dims()[m]) {
      throw InvalidArgument("factor " + std::to_string(m) + " has " +
                            std::to_string(fs.factors[m].rows()) + " rows, tensor mode size is " +
                            std::to_string(x.dims()[m]));
    }
    if (static_cast<std::size_t>(fs.factors[m].cols()) != fs.rank) {
      throw InvalidArgument("factor " + std::to_string(m) + " column count differs from rank");
    }
  }
}

double masked_sq_error(const SparseTensor& x, const FactorSet& fs) {
  check_compatible(x, fs);
  double cross = 0.0;
  double resid = 0.0;
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const double recon = reconstruct_at(fs, x.index(e));
    const double v = x.value(e);
    resid += (v - recon) * (v - recon);
    cross += v * recon;
  }
  if (x.observed_only()) return resid;

  // ||X_hat||^2 = sum_{r,r'} prod_m (A_m^T A_m)[r,r']
  Matrix gram = Matrix::Ones(static_cast<Eigen::Index>(fs.rank), static_cast<Eigen::Index>(fs.rank));
  for (const auto& a : fs.factors) gram.array() *= (a.transpose() * a).array();
  const double err = gram.sum() - 2.0 * cross + x.sum_of_squares();
  // Cancellation can leave a tiny negative value at an exact fit.
  return std::max(err, 0.0);
}

}  // namespace hyperlearn
