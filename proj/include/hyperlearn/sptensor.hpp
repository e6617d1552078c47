#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperlearn/error.hpp"
#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/types.hpp"

namespace hyperlearn {

struct TensorEntry {
  IndexTuple index;
  double value = 0.0;

  bool operator==(const TensorEntry&) const = default;
};

// K-mode coordinate tensor of observed hyperedges.
//
// When `observed_only` is set the stored cells are the only known cells and
// every loss is evaluated on them alone. Otherwise unstored cells are
// implicit zeros (the hypergraph adjacency reading).
//
// Immutable after construction.
class SparseTensor {
 public:
  SparseTensor() = default;

  // Validates bounds and rejects duplicate index tuples.
  SparseTensor(std::vector<std::size_t> dims, std::span<const TensorEntry> entries,
               bool observed_only);

  // Flat layout: entry e occupies coords[e*K .. e*K+K).
  SparseTensor(std::vector<std::size_t> dims, std::vector<Coord> coords,
               std::vector<double> values, bool observed_only);

  std::size_t order() const noexcept { return dims_.size(); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  bool observed_only() const noexcept { return observed_only_; }

  std::span<const Coord> index(std::size_t e) const {
    return {coords_.data() + e * dims_.size(), dims_.size()};
  }
  double value(std::size_t e) const { return values_[e]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const Coord> coords() const noexcept { return coords_; }

  // Number of cells, as a double since it overflows 64 bits for large K.
  double cell_count() const;

  double sum_of_squares() const;

  std::vector<TensorEntry> entries() const;

  // Same sparsity pattern with replacement values.
  SparseTensor with_values(std::vector<double> values) const;

  bool operator==(const SparseTensor&) const = default;

 private:
  void validate();

  std::vector<std::size_t> dims_;
  std::vector<Coord> coords_;
  std::vector<double> values_;
  bool observed_only_ = true;
};

// Column of `idx` in the mode-`mode` matricization. Remaining modes are
// laid out in ascending order with the last one varying fastest, matching
// the Khatri-Rao ordering A_1 (.) .. A_{m-1} (.) A_{m+1} (.) .. A_K.
std::size_t unfold_column_index(std::span<const std::size_t> dims, std::size_t mode,
                                std::span<const std::size_t> idx);

// sum_r prod_m A_m[idx_m, r]
template <typename I>
double reconstruct_at(const FactorSet& fs, std::span<const I> idx) {
  if (idx.size() != fs.order()) {
    throw InvalidArgument("reconstruct_at: index has " + std::to_string(idx.size()) +
                          " modes, factors have " + std::to_string(fs.order()));
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < fs.rank; ++r) {
    double prod = 1.0;
    for (std::size_t m = 0; m < idx.size(); ++m) {
      const auto i = static_cast<Eigen::Index>(idx[m]);
      if (i < 0 || i >= fs.factors[m].rows()) {
        throw InvalidArgument("reconstruct_at: index out of bounds in mode " + std::to_string(m));
      }
      prod *= fs.factors[m](i, static_cast<Eigen::Index>(r));
    }
    sum += prod;
  }
  return sum;
}

inline double reconstruct_at(const FactorSet& fs, const IndexTuple& idx) {
  return reconstruct_at(fs, std::span<const std::size_t>(idx));
}

// Squared reconstruction error. Observed-only tensors sum over stored
// entries; full tensors include the implicit zeros through the Gram
// expansion, without densifying.
double masked_sq_error(const SparseTensor& x, const FactorSet& fs);

// Throws unless the factor shapes match the tensor dims.
void check_compatible(const SparseTensor& x, const FactorSet& fs);

}  // namespace hyperlearn
