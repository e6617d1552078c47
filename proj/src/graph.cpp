#include "hyperlearn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "hyperlearn/error.hpp"

namespace hyperlearn {
namespace {

void check_adjacency(const SparseMatrix& w) {
  if (w.rows() != w.cols()) throw InvalidArgument("adjacency must be square");
  for (Eigen::Index i = 0; i < w.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(w, i); it; ++it) {
      if (!std::isfinite(it.value()) || it.value() < 0.0) {
        throw InvalidArgument("adjacency weights must be finite and non-negative");
      }
      if (it.row() == it.col() && it.value() != 0.0) {
        throw InvalidArgument("adjacency has a self-loop at node " + std::to_string(it.row()));
      }
      const double mirror = w.coeff(it.col(), it.row());
      if (std::abs(mirror - it.value()) > 1e-12 * std::max(1.0, std::abs(it.value()))) {
        throw InvalidArgument("adjacency is not symmetric at (" + std::to_string(it.row()) +
                              ", " + std::to_string(it.col()) + ")");
      }
    }
  }
}

}  // namespace

IntraGraph::IntraGraph(SparseMatrix adjacency) : adjacency_(std::move(adjacency)) {
  adjacency_.prune(0.0);
  adjacency_.makeCompressed();
  check_adjacency(adjacency_);
  degrees_ = Vector::Zero(adjacency_.rows());
  for (Eigen::Index i = 0; i < adjacency_.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency_, i); it; ++it) degrees_[i] += it.value();
  }
  laplacian_ = normalized_laplacian(adjacency_);
}

IntraGraph IntraGraph::edgeless(std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  return IntraGraph(SparseMatrix(size, size));
}

IntraGraph IntraGraph::from_edges(std::size_t n, std::span<const Edge> edges) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw InvalidArgument("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") out of range for " + std::to_string(n) + " nodes");
    }
    if (e.u == e.v) throw InvalidArgument("self-loop at node " + std::to_string(e.u));
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw InvalidArgument("edge weight must be finite and non-negative");
    }
    if (!seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second) {
      throw InvalidArgument("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") listed twice");
    }
    trips.emplace_back(static_cast<Eigen::Index>(e.u), static_cast<Eigen::Index>(e.v), e.weight);
    trips.emplace_back(static_cast<Eigen::Index>(e.v), static_cast<Eigen::Index>(e.u), e.weight);
  }
  const auto size = static_cast<Eigen::Index>(n);
  SparseMatrix w(size, size);
  w.setFromTriplets(trips.begin(), trips.end());
  return IntraGraph(std::move(w));
}

std::vector<Edge> IntraGraph::edges() const {
  std::vector<Edge> out;
  for (Eigen::Index i = 0; i < adjacency_.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency_, i); it; ++it) {
      if (it.col() > it.row()) {
        out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()),
                       it.value()});
      }
    }
  }
  return out;
}

SparseMatrix normalized_laplacian(const SparseMatrix& adjacency) {
  check_adjacency(adjacency);
  const Eigen::Index n = adjacency.rows();
  Vector inv_sqrt = Vector::Zero(n);
  for (Eigen::Index i = 0; i < adjacency.outerSize(); ++i) {
    double d = 0.0;
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) d += it.value();
    if (d > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(adjacency.nonZeros() + n));
  for (Eigen::Index i = 0; i < adjacency.outerSize(); ++i) {
    if (inv_sqrt[i] > 0.0) trips.emplace_back(i, i, 1.0);
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      const double v = -inv_sqrt[it.row()] * it.value() * inv_sqrt[it.col()];
      if (v != 0.0) trips.emplace_back(it.row(), it.col(), v);
    }
  }
  SparseMatrix lap(n, n);
  lap.setFromTriplets(trips.begin(), trips.end());
  lap.makeCompressed();
  return lap;
}

IntraGraph knn_graph(const Matrix& features, std::size_t k) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (features.cols() < 1) throw InvalidArgument("knn_graph: features need at least one column");
  if (k >= n) {
    throw InvalidArgument("knn_graph: k = " + std::to_string(k) + " requires more than " +
                          std::to_string(k) + " nodes, got " + std::to_string(n));
  }
  if (!features.allFinite()) throw InvalidArgument("knn_graph: non-finite features");

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::pair<double, std::size_t>> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(static_cast<Eigen::Index>(i));
    std::size_t slot = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist[slot++] = {(features.row(static_cast<Eigen::Index>(j)) - row).squaredNorm(), j};
    }
    // pair ordering breaks distance ties by the lower node id
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t j = dist[t].second;
      pairs.emplace(std::min(i, j), std::max(i, j));
    }
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) edges.push_back({u, v, 1.0});
  return IntraGraph::from_edges(n, edges);
}

IntraGraph cooccurrence_graph(std::span<const Membership> memberships, std::size_t n) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (const auto& m : memberships) {
    if (m.node >= n) {
      throw InvalidArgument("cooccurrence_graph: node " + std::to_string(m.node) +
                            " out of range for " + std::to_string(n) + " nodes");
    }
    groups[m.group].push_back(m.node);
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (auto& [group, members] : groups) {
    std::ranges::sort(members);
    const auto last = std::unique(members.begin(), members.end());
    members.erase(last, members.end());
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) pairs.emplace(members[a], members[b]);
    }
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) edges.push_back({u, v, 1.0});
  return IntraGraph::from_edges(n, edges);
}

std::vector<Matrix> chebyshev_apply(const SparseMatrix& laplacian, const Matrix& x,
                                    std::size_t degree) {
  if (laplacian.rows() != laplacian.cols() || laplacian.rows() != x.rows()) {
    throw InvalidArgument("chebyshev_apply: Laplacian is " + std::to_string(laplacian.rows()) +
                          "x" + std::to_string(laplacian.cols()) + ", signal has " +
                          std::to_string(x.rows()) + " rows");
  }
  std::vector<Matrix> out;
  out.reserve(degree + 1);
  out.push_back(x);
  if (degree == 0) return out;
  out.push_back(laplacian * x - x);
  for (std::size_t j = 2; j <= degree; ++j) {
    const Matrix& prev = out[j - 1];
    Matrix next = 2.0 * (laplacian * prev - prev) - out[j - 2];
    out.push_back(std::move(next));
  }
  return out;
}

Matrix chebyshev_combine(const SparseMatrix& laplacian, std::span<const Matrix> terms) {
  if (terms.empty()) throw InvalidArgument("chebyshev_combine: no terms");
  const Eigen::Index n = terms.front().rows();
  const Eigen::Index c = terms.front().cols();
  if (laplacian.rows() != n || laplacian.cols() != n) {
    throw InvalidArgument("chebyshev_combine: Laplacian size does not match terms");
  }
  for (const auto& t : terms) {
    if (t.rows() != n || t.cols() != c) throw InvalidArgument("chebyshev_combine: ragged terms");
  }
  const std::size_t p = terms.size() - 1;
  if (p == 0) return terms[0];

  auto shifted = [&](const Matrix& m) -> Matrix { return laplacian * m - m; };
  // b_k = G_k + 2 L~ b_{k+1} - b_{k+2};  result = G_0 + L~ b_1 - b_2
  Matrix b1 = terms[p];
  Matrix b2 = Matrix::Zero(n, c);
  for (std::size_t k = p - 1; k >= 1; --k) {
    Matrix b0 = terms[k] + 2.0 * shifted(b1) - b2;
    b2 = std::move(b1);
    b1 = std::move(b0);
  }
  return terms[0] + shifted(b1) - b2;
}

}  // namespace hyperlearn
