#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hyperlearn {

// Factor rows are read one at a time in every sparse kernel, so dense
// matrices are row-major throughout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

using IndexTuple = std::vector<std::size_t>;

// Per-mode coordinate as stored inside a SparseTensor.
using Coord = std::uint32_t;

}  // namespace hyperlearn
