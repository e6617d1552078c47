#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperlearn/factor_set.hpp"
#include "hyperlearn/sptensor.hpp"

namespace hyperlearn {

struct Prediction {
  IndexTuple index;
  double predicted = 0.0;
  double actual = 0.0;
};

// Reconstructions of `entries` under `fs`.
std::vector<Prediction> predict(std::span<const TensorEntry> entries, const FactorSet& fs);

double rmse(std::span<const Prediction> predictions);

// Ranks by descending score, ties broken by ascending item position, and
// averages precision@k over the ranks k of the positives.
double average_precision(std::span<const double> scores, std::span<const bool> labels);

// Every test hyperedge is completed with each candidate of `target_mode`;
// the argmax of the reconstruction (lowest index on ties) is the
// prediction. Returns the fraction predicted correctly.
double attribution_accuracy(std::span<const TensorEntry> test, const FactorSet& fs,
                            std::size_t target_mode);

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::size_t support = 0;
  std::uint64_t seed = 0;
  std::uint64_t plan_hash = 0;

  void validate() const;
};

std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& r);

}  // namespace hyperlearn
