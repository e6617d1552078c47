#pragma once

// Brute-force reference implementations shared by the unit tests. They walk
// every cell of the dense tensor and never call into the library kernels
// they check.

#include <cmath>
#include <random>
#include <vector>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/sptensor.hpp"
#include "hyperlearn/types.hpp"

namespace oracle {

using namespace hyperlearn;

inline std::size_t cell_count(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

// Multi-index of dense cell `id`, last mode varying fastest.
inline IndexTuple cell_index(std::size_t id, const std::vector<std::size_t>& dims) {
  IndexTuple idx(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    idx[k] = id % dims[k];
    id /= dims[k];
  }
  return idx;
}

inline std::size_t cell_id(const IndexTuple& idx, const std::vector<std::size_t>& dims) {
  std::size_t id = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) id = id * dims[k] + idx[k];
  return id;
}

inline SparseTensor random_tensor(const std::vector<std::size_t>& dims, double density,
                                  bool observed_only, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TensorEntry> entries;
  for (std::size_t id = 0; id < cell_count(dims); ++id) {
    if (unif(rng) < density) entries.push_back({cell_index(id, dims), gauss(rng)});
  }
  return SparseTensor(dims, entries, observed_only);
}

inline FactorSet random_factors(const std::vector<std::size_t>& dims, std::size_t rank,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  FactorSet fs;
  fs.rank = rank;
  for (auto d : dims) {
    Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = gauss(rng);
    fs.factors.push_back(std::move(a));
  }
  return fs;
}

inline IntraGraph random_graph(std::size_t n, double p, std::mt19937_64& rng, bool weighted = true) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (unif(rng) < p) edges.push_back({u, v, weighted ? 0.1 + unif(rng) : 1.0});
    }
  }
  return IntraGraph::from_edges(n, edges);
}

inline std::vector<IntraGraph> random_graphs(const std::vector<std::size_t>& dims, std::mt19937_64& rng) {
  std::vector<IntraGraph> gs;
  for (auto d : dims) gs.push_back(random_graph(d, 0.4, rng));
  return gs;
}

// Dense cell values; unobserved cells are 0.
inline std::vector<double> dense(const SparseTensor& x) {
  std::vector<double> out(cell_count(x.dims()), 0.0);
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    auto idx = x.index(e);
    out[cell_id(IndexTuple(idx.begin(), idx.end()), x.dims())] = x.value(e);
  }
  return out;
}

inline std::vector<double> dense_mask(const SparseTensor& x) {
  std::vector<double> out(cell_count(x.dims()), 0.0);
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    auto idx = x.index(e);
    out[cell_id(IndexTuple(idx.begin(), idx.end()), x.dims())] = 1.0;
  }
  return out;
}

inline std::vector<double> dense_reconstruction(const FactorSet& fs) {
  const auto dims = fs.dims();
  std::vector<double> out(cell_count(dims), 0.0);
  for (std::size_t id = 0; id < out.size(); ++id) {
    const auto idx = cell_index(id, dims);
    for (std::size_t r = 0; r < fs.rank; ++r) {
      double p = 1.0;
      for (std::size_t m = 0; m < dims.size(); ++m) {
        p *= fs.factors[m](static_cast<Eigen::Index>(idx[m]), static_cast<Eigen::Index>(r));
      }
      out[id] += p;
    }
  }
  return out;
}

// Columns of the other modes in ascending order, last one fastest.
inline std::vector<std::size_t> other_dims(const std::vector<std::size_t>& dims, std::size_t mode) {
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (k != mode) rest.push_back(dims[k]);
  }
  return rest;
}

inline Matrix unfold(const std::vector<double>& cells, const std::vector<std::size_t>& dims,
                     std::size_t mode) {
  const auto rest = other_dims(dims, mode);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dims[mode]),
                            static_cast<Eigen::Index>(cell_count(rest)));
  for (std::size_t id = 0; id < cells.size(); ++id) {
    const auto idx = cell_index(id, dims);
    IndexTuple others;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (k != mode) others.push_back(idx[k]);
    }
    out(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(cell_id(others, rest))) =
        cells[id];
  }
  return out;
}

// Omega for `mode`: row (i_k)_{k != mode} holds prod_k A_k(i_k, r).
inline Matrix explicit_khatri_rao(const FactorSet& fs, std::size_t mode) {
  const auto rest = other_dims(fs.dims(), mode);
  Matrix omega(static_cast<Eigen::Index>(cell_count(rest)), static_cast<Eigen::Index>(fs.rank));
  for (std::size_t row = 0; row < cell_count(rest); ++row) {
    const auto idx = cell_index(row, rest);
    for (std::size_t r = 0; r < fs.rank; ++r) {
      double p = 1.0;
      std::size_t j = 0;
      for (std::size_t k = 0; k < fs.order(); ++k) {
        if (k == mode) continue;
        p *= fs.factors[k](static_cast<Eigen::Index>(idx[j++]), static_cast<Eigen::Index>(r));
      }
      omega(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(r)) = p;
    }
  }
  return omega;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

// tr(A^T L A) = sum over undirected edges of w_ij || a_i / sqrt(d_i) - a_j / sqrt(d_j) ||^2
// for the normalized Laplacian; isolated nodes contribute nothing.
inline double edge_regularizer(const IntraGraph& g, const Matrix& a) {
  double s = 0.0;
  for (const auto& e : g.edges()) {
    const double du = g.degrees()[static_cast<Eigen::Index>(e.u)];
    const double dv = g.degrees()[static_cast<Eigen::Index>(e.v)];
    const auto diff = a.row(static_cast<Eigen::Index>(e.u)) / std::sqrt(du) -
                      a.row(static_cast<Eigen::Index>(e.v)) / std::sqrt(dv);
    s += e.weight * diff.squaredNorm();
  }
  return 0.5 * s;
}

// Masked or full squared error by walking every cell.
inline double brute_sq_error(const SparseTensor& x, const FactorSet& fs) {
  const auto vals = dense(x);
  const auto mask = dense_mask(x);
  const auto recon = dense_reconstruction(fs);
  double s = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (x.observed_only() && mask[i] == 0.0) continue;
    s += (vals[i] - recon[i]) * (vals[i] - recon[i]);
  }
  return s;
}

}  // namespace oracle
