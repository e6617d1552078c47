#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/sptensor.hpp"
#include "hyperlearn/types.hpp"

namespace hyperlearn {

inline constexpr std::size_t kKhatriRaoRowCap = 1'000'000;

// Column-wise Kronecker product in ascending order: row (i_1, .., i_m) sits
// at sum_k i_k * prod_{l>k} N_l. Only meant for small oracle checks; the
// training path never materializes it.
Matrix khatri_rao(std::span<const Matrix> mats, std::size_t max_rows = kKhatriRaoRowCap);

// Hadamard product of A_m^T A_m over every mode except `skip`. Equal to
// Omega^T Omega for the Khatri-Rao product Omega of the other factors.
Matrix gram_hadamard(const FactorSet& fs, std::size_t skip);

// X_(mode) * Omega_mode computed entry by entry over the stored cells.
Matrix mttkrp(const SparseTensor& x, const FactorSet& fs, std::size_t mode);

// Same kernel with `values` substituted for the tensor's stored values.
Matrix mttkrp(const SparseTensor& x, std::span<const double> values, const FactorSet& fs,
              std::size_t mode);

// Entries i.i.d. uniform on [0, 1/sqrt(rank)). Bitwise deterministic per seed.
FactorSet init_factors(std::span<const std::size_t> dims, std::size_t rank, std::uint64_t seed);

}  // namespace hyperlearn
