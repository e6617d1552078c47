#include "hyperlearn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hyperlearn/factor.hpp"
#include "hyperlearn/graph.hpp"
#include "hyperlearn/mgcnn.hpp"
#include "hyperlearn/objective.hpp"
#include "hyperlearn/sptensor.hpp"

namespace hyperlearn {
namespace {

struct Instance {
  SparseTensor x;
  FactorSet fs;
  std::vector<IntraGraph> graphs;
  double lambda = 1.0;
  std::vector<double> reg_weights;
};

IntraGraph random_graph(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (unif(rng) < 0.5) edges.push_back({u, v, 0.2 + unif(rng)});
    }
  }
  return IntraGraph::from_edges(n, edges);
}

Instance random_instance(std::size_t order, bool observed_only, std::size_t max_dim,
                         std::size_t max_rank, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dim(2, max_dim);
  std::uniform_int_distribution<std::size_t> rank(1, max_rank);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Instance inst;
  std::vector<std::size_t> dims(order);
  for (auto& d : dims) d = dim(rng);
  std::size_t cells = 1;
  for (auto d : dims) cells *= d;

  std::vector<TensorEntry> entries;
  for (std::size_t id = 0; id < cells; ++id) {
    if (unif(rng) >= 0.6) continue;
    IndexTuple idx(order);
    std::size_t rest = id;
    for (std::size_t k = order; k-- > 0;) {
      idx[k] = rest % dims[k];
      rest /= dims[k];
    }
    entries.push_back({std::move(idx), gauss(rng)});
  }
  inst.x = SparseTensor(dims, entries, observed_only);

  inst.fs.rank = rank(rng);
  for (auto d : dims) {
    Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(inst.fs.rank));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = gauss(rng);
    inst.fs.factors.push_back(std::move(a));
  }
  for (auto d : dims) inst.graphs.push_back(random_graph(d, rng));
  inst.lambda = 0.1 + 2.0 * unif(rng);
  for (std::size_t m = 0; m < order; ++m) inst.reg_weights.push_back(0.1 + unif(rng));
  return inst;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

}  // namespace

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& c : cases) w = std::max(w, c.rel_error);
  return w;
}

bool GradcheckReport::passed() const {
  return !cases.empty() && std::ranges::all_of(cases, [&](const GradcheckCase& c) {
    return std::isfinite(c.rel_error) && c.rel_error <= tolerance;
  });
}

GradcheckReport check_objective_gradients(std::uint64_t seed, std::size_t instances, double step,
                                          double tolerance) {
  GradcheckReport report;
  report.tolerance = tolerance;
  std::mt19937_64 rng(seed);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t order = 2 + n % 3;
    const bool observed = n % 2 == 0;
    Instance inst = random_instance(order, observed, order == 4 ? 4 : 6, 3, rng);
    for (std::size_t mode = 0; mode < order; ++mode) {
      const Matrix analytic = grad_mode(inst.x, inst.fs, inst.graphs, inst.lambda, mode, inst.reg_weights);
      Matrix numeric(analytic.rows(), analytic.cols());
      FactorSet probe = inst.fs;
      Matrix& a = probe.factors[mode];
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double orig = a.data()[i];
        a.data()[i] = orig + step;
        const double up = total_loss(inst.x, probe, inst.graphs, inst.lambda, inst.reg_weights).total;
        a.data()[i] = orig - step;
        const double down = total_loss(inst.x, probe, inst.graphs, inst.lambda, inst.reg_weights).total;
        a.data()[i] = orig;
        numeric.data()[i] = (up - down) / (2.0 * step);
      }
      report.cases.push_back(
          {"instance " + std::to_string(n) + " K=" + std::to_string(order) +
               (observed ? " observed" : " full") + " mode " + std::to_string(mode),
           relative_error({analytic.data(), static_cast<std::size_t>(analytic.size())},
                          {numeric.data(), static_cast<std::size_t>(numeric.size())})});
    }
  }
  return report;
}

GradcheckReport check_refiner_gradients(std::uint64_t seed, std::size_t instances, double step,
                                        double tolerance) {
  GradcheckReport report;
  report.tolerance = tolerance;
  std::mt19937_64 rng(seed);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t order = 2 + n % 2;
    const bool observed = n % 3 != 2;
    Instance inst = random_instance(order, observed, 5, 2, rng);
    // Keep factors small so the LSTM gates stay out of saturation.
    for (auto& a : inst.fs.factors) a *= 0.5;

    MGCNNConfig cfg;
    cfg.degree = 2;
    cfg.channels = 2;
    cfg.hidden = 3;
    cfg.unroll = 2 + n % 2;
    cfg.shared_cell = n % 2 == 0;
    cfg.seed = rng();
    cfg.output_scale = 0.5;
    MGCNNModel model = make_model(order, inst.fs.rank, cfg);

    const auto eval = evaluate_refiner(inst.x, inst.fs, inst.graphs, inst.lambda, model, inst.reg_weights);
    const std::vector<double> analytic = flatten(eval.gradient);
    std::vector<double> params = flatten(model);
    std::vector<double> numeric(params.size());
    MGCNNModel probe = model;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double orig = params[i];
      params[i] = orig + step;
      unflatten(params, probe);
      const double up = evaluate_refiner(inst.x, inst.fs, inst.graphs, inst.lambda, probe, inst.reg_weights).loss.total;
      params[i] = orig - step;
      unflatten(params, probe);
      const double down = evaluate_refiner(inst.x, inst.fs, inst.graphs, inst.lambda, probe, inst.reg_weights).loss.total;
      params[i] = orig;
      numeric[i] = (up - down) / (2.0 * step);
    }
    report.cases.push_back({"instance " + std::to_string(n) + " K=" + std::to_string(order) +
                                (cfg.shared_cell ? " shared" : " per-mode") + " cell",
                            relative_error(analytic, numeric)});
  }
  return report;
}

}  // namespace hyperlearn
