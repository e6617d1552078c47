#include "hyperlearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hyperlearn/error.hpp"
#include "hyperlearn/text.hpp"

namespace hyperlearn {

std::vector<Prediction> predict(std::span<const TensorEntry> entries, const FactorSet& fs) {
  std::vector<Prediction> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.index.size() != fs.order()) throw InvalidArgument("predict: entry order differs from factors");
    for (std::size_t m = 0; m < e.index.size(); ++m) {
      if (e.index[m] >= static_cast<std::size_t>(fs.factors[m].rows())) {
        throw InvalidArgument("predict: index out of range in mode " + std::to_string(m));
      }
    }
    out.push_back({e.index, reconstruct_at(fs, e.index), e.value});
  }
  return out;
}

double rmse(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw InvalidArgument("rmse: no predictions");
  double sq = 0.0;
  for (const auto& p : predictions) sq += (p.predicted - p.actual) * (p.predicted - p.actual);
  return std::sqrt(sq / static_cast<double>(predictions.size()));
}

double average_precision(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("average_precision: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // Extended precision so that small hand examples land on the double
  // nearest the exact rational.
  long double sum = 0.0L;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!labels[order[k]]) continue;
    ++hits;
    sum += static_cast<long double>(hits) / static_cast<long double>(k + 1);
  }
  if (hits == 0) throw InvalidArgument("average_precision: no positive labels");
  return static_cast<double>(sum / static_cast<long double>(hits));
}

double attribution_accuracy(std::span<const TensorEntry> test, const FactorSet& fs,
                            std::size_t target_mode) {
  if (test.empty()) throw InvalidArgument("attribution_accuracy: empty test set");
  if (target_mode >= fs.order()) throw InvalidArgument("attribution_accuracy: target mode out of range");
  const auto rank = static_cast<Eigen::Index>(fs.rank);
  const Matrix& target = fs.factors[target_mode];
  std::size_t correct = 0;
  for (const auto& e : test) {
    if (e.index.size() != fs.order()) throw InvalidArgument("attribution_accuracy: entry order mismatch");
    // Product of the fixed modes' rows, then one matrix-vector product over
    // every candidate.
    Vector w = Vector::Ones(rank);
    for (std::size_t m = 0; m < fs.order(); ++m) {
      if (e.index[m] >= static_cast<std::size_t>(fs.factors[m].rows())) {
        throw InvalidArgument("attribution_accuracy: index out of range in mode " + std::to_string(m));
      }
      if (m != target_mode) {
        w.array() *= fs.factors[m].row(static_cast<Eigen::Index>(e.index[m])).transpose().array();
      }
    }
    const Vector scores = target * w;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.size(); ++c) {
      if (scores[c] > scores[best]) best = c;
    }
    if (static_cast<std::size_t>(best) == e.index[target_mode]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

void MetricReport::validate() const {
  if (!std::isfinite(value)) throw NumericalError("metric " + name + " is not finite");
  if (support < 1) throw InvalidArgument("metric " + name + " has no support");
}

std::string metric_csv_header() { return "metric,value,support,seed,plan_hash"; }

std::string metric_csv_row(const MetricReport& r) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.plan_hash));
  return r.name + "," + text::format_real(r.value) + "," + std::to_string(r.support) + "," +
         std::to_string(r.seed) + "," + hash;
}

}  // namespace hyperlearn
