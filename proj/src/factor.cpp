#include "hyperlearn/factor.hpp"

#include <cmath>
#include <random>
#include <string>

namespace hyperlearn {

Matrix khatri_rao(std::span<const Matrix> mats, std::size_t max_rows) {
  if (mats.empty()) throw InvalidArgument("khatri_rao: empty input");
  const Eigen::Index rank = mats.front().cols();
  double rows = 1.0;
  for (const auto& m : mats) {
    if (m.cols() != rank) throw InvalidArgument("khatri_rao: column counts differ");
    rows *= static_cast<double>(m.rows());
  }
  if (rows > static_cast<double>(max_rows)) {
    throw InvalidArgument("khatri_rao: " + std::to_string(static_cast<long double>(rows)) +
                          " rows exceeds the materialization cap; use mttkrp");
  }

  Matrix out = mats.front();
  for (std::size_t k = 1; k < mats.size(); ++k) {
    const Matrix& next = mats[k];
    Matrix grown(out.rows() * next.rows(), rank);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < next.rows(); ++j) {
        grown.row(i * next.rows() + j) = out.row(i).cwiseProduct(next.row(j));
      }
    }
    out = std::move(grown);
  }
  return out;
}

Matrix gram_hadamard(const FactorSet& fs, std::size_t skip) {
  if (skip >= fs.order()) {
    throw InvalidArgument("gram_hadamard: skip mode " + std::to_string(skip) + " out of range");
  }
  const auto r = static_cast<Eigen::Index>(fs.rank);
  Matrix out = Matrix::Ones(r, r);
  for (std::size_t m = 0; m < fs.order(); ++m) {
    if (m == skip) continue;
    out.array() *= (fs.factors[m].transpose() * fs.factors[m]).array();
  }
  return out;
}

Matrix mttkrp(const SparseTensor& x, std::span<const double> values, const FactorSet& fs,
              std::size_t mode) {
  check_compatible(x, fs);
  if (mode >= x.order()) throw InvalidArgument("mttkrp: mode out of range");
  if (values.size() != x.nnz()) throw InvalidArgument("mttkrp: value count does not match tensor");

  const auto rank = static_cast<Eigen::Index>(fs.rank);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(x.dims()[mode]), rank);
  Eigen::RowVectorXd prod(rank);
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const auto idx = x.index(e);
    prod.setConstant(values[e]);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k == mode) continue;
      prod.array() *= fs.factors[k].row(idx[k]).array();
    }
    out.row(idx[mode]) += prod;
  }
  return out;
}

Matrix mttkrp(const SparseTensor& x, const FactorSet& fs, std::size_t mode) {
  return mttkrp(x, x.values(), fs, mode);
}

FactorSet init_factors(std::span<const std::size_t> dims, std::size_t rank, std::uint64_t seed) {
  if (rank == 0) throw InvalidArgument("init_factors: rank must be positive");
  std::mt19937_64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  // 53 random mantissa bits; the clamp keeps the interval half-open after rounding.
  auto unif = [&] {
    const double v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * scale;
    return v < scale ? v : std::nextafter(scale, 0.0);
  };
  FactorSet fs;
  fs.rank = rank;
  fs.seed = seed;
  for (auto n : dims) {
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rank));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = unif();
    fs.factors.push_back(std::move(a));
  }
  return fs;
}

}  // namespace hyperlearn
