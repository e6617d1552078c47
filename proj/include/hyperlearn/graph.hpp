#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperlearn/types.hpp"

namespace hyperlearn {

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

struct Membership {
  std::size_t node = 0;
  std::size_t group = 0;
};

// Intra-relation graph of one modality: symmetric non-negative adjacency with
// zero diagonal, weighted degrees and the cached normalized Laplacian.
class IntraGraph {
 public:
  IntraGraph() = default;

  // Validates symmetry, zero diagonal and non-negative finite weights.
  explicit IntraGraph(SparseMatrix adjacency);

  static IntraGraph edgeless(std::size_t n);

  // Undirected edge list, each edge listed once.
  static IntraGraph from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t size() const noexcept { return static_cast<std::size_t>(adjacency_.rows()); }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  const Vector& degrees() const noexcept { return degrees_; }
  const SparseMatrix& laplacian() const noexcept { return laplacian_; }

  std::size_t edge_count() const noexcept { return static_cast<std::size_t>(adjacency_.nonZeros() / 2); }

  // Each undirected edge once, u < v, sorted.
  std::vector<Edge> edges() const;

 private:
  SparseMatrix adjacency_;
  Vector degrees_;
  SparseMatrix laplacian_;
};

// I - D^{-1/2} W D^{-1/2}. Isolated nodes get an all-zero row and column.
SparseMatrix normalized_laplacian(const SparseMatrix& adjacency);

// Unweighted symmetrized k-nearest-neighbour graph under Euclidean distance.
// Ties go to the lower node id.
IntraGraph knn_graph(const Matrix& features, std::size_t k);

// i ~ j iff they share at least one group.
IntraGraph cooccurrence_graph(std::span<const Membership> memberships, std::size_t n);

// [T_0(L~) X, .., T_p(L~) X] with L~ = L - I, valid because the normalized
// Laplacian spectrum lies in [0, 2].
std::vector<Matrix> chebyshev_apply(const SparseMatrix& laplacian, const Matrix& x,
                                    std::size_t degree);

// sum_j T_j(L~) G_j by Clenshaw recurrence; the adjoint of chebyshev_apply
// contracted against per-order inputs.
Matrix chebyshev_combine(const SparseMatrix& laplacian, std::span<const Matrix> terms);

}  // namespace hyperlearn
