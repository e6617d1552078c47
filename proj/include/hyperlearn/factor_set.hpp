#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hyperlearn/types.hpp"

namespace hyperlearn {

// The K factor matrices of a CP model. Factor `m` has one row per item of
// modality `m` and `rank` columns; row i is the learned representation of
// item i.
struct FactorSet {
  std::size_t rank = 0;
  std::vector<Matrix> factors;
  std::uint64_t seed = 0;

  std::size_t order() const noexcept { return factors.size(); }
  std::vector<std::size_t> dims() const;

  // Throws InvalidArgument on column mismatch or non-finite entries.
  void validate() const;
};

// Compares rank and factor values; the init seed is provenance only.
bool operator==(const FactorSet& a, const FactorSet& b);

}  // namespace hyperlearn
