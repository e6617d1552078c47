#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hyperlearn/config.hpp"
#include "hyperlearn/data.hpp"
#include "hyperlearn/distributed.hpp"
#include "hyperlearn/error.hpp"
#include "hyperlearn/factor.hpp"
#include "hyperlearn/gradcheck.hpp"
#include "hyperlearn/io.hpp"
#include "hyperlearn/metrics.hpp"
#include "hyperlearn/mgcnn.hpp"
#include "hyperlearn/objective.hpp"

namespace py = pybind11;
using namespace hyperlearn;

namespace {

using CoordArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;
using ValueArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

SparseTensor tensor_from_arrays(std::vector<std::size_t> dims, CoordArray coords, ValueArray values,
                                bool observed_only) {
  const auto c = coords.unchecked<2>();
  const auto v = values.unchecked<1>();
  if (static_cast<std::size_t>(c.shape(1)) != dims.size()) {
    throw InvalidArgument("coords must have one column per mode");
  }
  if (c.shape(0) != v.shape(0)) throw InvalidArgument("coords and values differ in length");
  std::vector<Coord> flat;
  flat.reserve(static_cast<std::size_t>(c.shape(0) * c.shape(1)));
  for (py::ssize_t e = 0; e < c.shape(0); ++e) {
    for (py::ssize_t k = 0; k < c.shape(1); ++k) {
      const auto i = c(e, k);
      if (i < 0 || static_cast<std::size_t>(i) >= dims[static_cast<std::size_t>(k)]) {
        throw InvalidArgument("index out of range in entry " + std::to_string(e));
      }
      flat.push_back(static_cast<Coord>(i));
    }
  }
  std::vector<double> vals(v.data(0), v.data(0) + v.shape(0));
  return SparseTensor(std::move(dims), std::move(flat), std::move(vals), observed_only);
}

py::array_t<std::int64_t> tensor_coords(const SparseTensor& x) {
  py::array_t<std::int64_t> out({static_cast<py::ssize_t>(x.nnz()), static_cast<py::ssize_t>(x.order())});
  auto o = out.mutable_unchecked<2>();
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const auto idx = x.index(e);
    for (std::size_t k = 0; k < x.order(); ++k) {
      o(static_cast<py::ssize_t>(e), static_cast<py::ssize_t>(k)) = idx[k];
    }
  }
  return out;
}

FactorSet make_factor_set(std::vector<Matrix> factors) {
  FactorSet fs;
  fs.rank = factors.empty() ? 0 : static_cast<std::size_t>(factors.front().cols());
  fs.factors = std::move(factors);
  fs.validate();
  return fs;
}

std::vector<TensorEntry> entries_of(const SparseTensor& x) { return x.entries(); }

}  // namespace

PYBIND11_MODULE(_hyperlearn, m) {
  m.doc() = "Hypergraph tensor factorization with graph regularization";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", invalid.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  (void)base;

  py::class_<TensorEntry>(m, "TensorEntry")
      .def(py::init([](IndexTuple index, double value) { return TensorEntry{std::move(index), value}; }),
           py::arg("index"), py::arg("value"))
      .def_readwrite("index", &TensorEntry::index)
      .def_readwrite("value", &TensorEntry::value)
      .def("__repr__", [](const TensorEntry& e) {
        return "TensorEntry(" + py::repr(py::cast(e.index)).cast<std::string>() + ", " +
               std::to_string(e.value) + ")";
      });

  py::class_<SparseTensor>(m, "SparseTensor")
      .def(py::init(&tensor_from_arrays), py::arg("dims"), py::arg("coords"), py::arg("values"),
           py::arg("observed_only") = true)
      .def(py::init([](std::vector<std::size_t> dims, const std::vector<TensorEntry>& entries,
                       bool observed_only) {
             return SparseTensor(std::move(dims), entries, observed_only);
           }),
           py::arg("dims"), py::arg("entries"), py::arg("observed_only") = true)
      .def_property_readonly("dims", &SparseTensor::dims)
      .def_property_readonly("order", &SparseTensor::order)
      .def_property_readonly("nnz", &SparseTensor::nnz)
      .def_property_readonly("observed_only", &SparseTensor::observed_only)
      .def_property_readonly("coords", &tensor_coords)
      .def_property_readonly("values", [](const SparseTensor& x) {
        return py::array_t<double>(static_cast<py::ssize_t>(x.nnz()), x.values().data());
      })
      .def("entries", &entries_of)
      .def("__len__", &SparseTensor::nnz);

  py::class_<Edge>(m, "Edge")
      .def(py::init([](std::size_t u, std::size_t v, double w) { return Edge{u, v, w}; }),
           py::arg("u"), py::arg("v"), py::arg("weight") = 1.0)
      .def_readwrite("u", &Edge::u)
      .def_readwrite("v", &Edge::v)
      .def_readwrite("weight", &Edge::weight);

  py::class_<IntraGraph>(m, "IntraGraph")
      .def_static("edgeless", &IntraGraph::edgeless, py::arg("n"))
      .def_static(
          "from_edges",
          [](std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& es) {
            std::vector<Edge> edges;
            for (const auto& [u, v, w] : es) edges.push_back({u, v, w});
            return IntraGraph::from_edges(n, edges);
          },
          py::arg("n"), py::arg("edges"))
      .def_static("knn", &knn_graph, py::arg("features"), py::arg("k"))
      .def_property_readonly("size", &IntraGraph::size)
      .def_property_readonly("edge_count", &IntraGraph::edge_count)
      .def_property_readonly("degrees", &IntraGraph::degrees)
      .def("edges", [](const IntraGraph& g) {
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        for (const auto& e : g.edges()) out.emplace_back(e.u, e.v, e.weight);
        return out;
      })
      .def("laplacian", [](const IntraGraph& g) { return Eigen::MatrixXd(g.laplacian()); },
           "Dense normalized Laplacian.");

  py::class_<FactorSet>(m, "FactorSet")
      .def(py::init(&make_factor_set), py::arg("factors"))
      .def_readonly("rank", &FactorSet::rank)
      .def_readwrite("factors", &FactorSet::factors)
      .def_readonly("seed", &FactorSet::seed)
      .def_property_readonly("dims", &FactorSet::dims)
      .def_property_readonly("order", &FactorSet::order)
      .def("__eq__", [](const FactorSet& a, const FactorSet& b) { return a == b; });

  m.def("init_factors", [](std::vector<std::size_t> dims, std::size_t rank, std::uint64_t seed) {
    return init_factors(dims, rank, seed);
  }, py::arg("dims"), py::arg("rank"), py::arg("seed") = 0);
  m.def("mttkrp", py::overload_cast<const SparseTensor&, const FactorSet&, std::size_t>(&mttkrp),
        py::arg("x"), py::arg("fs"), py::arg("mode"));
  m.def("gram_hadamard", &gram_hadamard, py::arg("fs"), py::arg("skip"));
  m.def("khatri_rao", [](const std::vector<Matrix>& mats) { return khatri_rao(mats); }, py::arg("mats"));

  py::class_<LossBreakdown>(m, "LossBreakdown")
      .def_readonly("recon", &LossBreakdown::recon)
      .def_readonly("lambda_", &LossBreakdown::lambda)
      .def_readonly("reg_terms", &LossBreakdown::reg_terms)
      .def_readonly("total", &LossBreakdown::total)
      .def_property_readonly("reg_sum", &LossBreakdown::reg_sum);

  m.def("total_loss",
        [](const SparseTensor& x, const FactorSet& fs, const std::vector<IntraGraph>& graphs,
           double lambda, const std::vector<double>& weights) {
          return total_loss(x, fs, graphs, lambda, weights);
        },
        py::arg("x"), py::arg("fs"), py::arg("graphs"), py::arg("lambda_") = 1.0,
        py::arg("reg_weights") = std::vector<double>{});
  m.def("grad_mode",
        [](const SparseTensor& x, const FactorSet& fs, const std::vector<IntraGraph>& graphs,
           double lambda, std::size_t mode, const std::vector<double>& weights) {
          return grad_mode(x, fs, graphs, lambda, mode, weights);
        },
        py::arg("x"), py::arg("fs"), py::arg("graphs"), py::arg("lambda_"), py::arg("mode"),
        py::arg("reg_weights") = std::vector<double>{});

  py::enum_<Sweep>(m, "Sweep")
      .value("gauss_seidel", Sweep::gauss_seidel)
      .value("jacobi", Sweep::jacobi);

  py::class_<TrainPlan>(m, "TrainPlan")
      .def(py::init<>())
      .def_readwrite("rank", &TrainPlan::rank)
      .def_readwrite("lambda_", &TrainPlan::lambda)
      .def_readwrite("sweep", &TrainPlan::sweep)
      .def_readwrite("inner_steps", &TrainPlan::inner_steps)
      .def_readwrite("step", &TrainPlan::step)
      .def_readwrite("backtracking", &TrainPlan::backtracking)
      .def_readwrite("shrink", &TrainPlan::shrink)
      .def_readwrite("sufficient_decrease", &TrainPlan::sufficient_decrease)
      .def_readwrite("max_halvings", &TrainPlan::max_halvings)
      .def_readwrite("step_growth", &TrainPlan::step_growth)
      .def_readwrite("max_rounds", &TrainPlan::max_rounds)
      .def_readwrite("rel_tol", &TrainPlan::rel_tol)
      .def_readwrite("seed", &TrainPlan::seed)
      .def_readwrite("reg_weights", &TrainPlan::reg_weights)
      .def_readwrite("threads", &TrainPlan::threads)
      .def_readwrite("frozen_modes", &TrainPlan::frozen_modes)
      .def("validate", &TrainPlan::validate);

  py::class_<RoundLog>(m, "RoundLog")
      .def_readonly("round", &RoundLog::round)
      .def_readonly("loss", &RoundLog::loss)
      .def_readonly("mode_time_ms", &RoundLog::mode_time_ms)
      .def_readonly("round_time_ms", &RoundLog::round_time_ms)
      .def_readonly("grad_norms", &RoundLog::grad_norms)
      .def_readonly("stalls", &RoundLog::stalls)
      .def_readonly("rejected", &RoundLog::rejected);

  py::class_<AlternatingTrainer::Result>(m, "TrainResult")
      .def_readonly("factors", &AlternatingTrainer::Result::factors)
      .def_readonly("initial", &AlternatingTrainer::Result::initial)
      .def_readonly("rounds", &AlternatingTrainer::Result::rounds)
      .def_readonly("converged", &AlternatingTrainer::Result::converged);

  m.def("train",
        [](const SparseTensor& x, const std::vector<IntraGraph>& graphs, const TrainPlan& plan,
           std::optional<FactorSet> init) {
          FactorSet start = init ? std::move(*init) : init_factors(x.dims(), plan.rank, plan.seed);
          py::gil_scoped_release release;
          AlternatingTrainer trainer(x, graphs, plan);
          return trainer.run(std::move(start));
        },
        py::arg("x"), py::arg("graphs"), py::arg("plan"), py::arg("init") = py::none(),
        "Alternating training from `init`, or from init_factors(dims, plan.rank, plan.seed).");

  py::class_<MGCNNConfig>(m, "MGCNNConfig")
      .def(py::init<>())
      .def_readwrite("degree", &MGCNNConfig::degree)
      .def_readwrite("channels", &MGCNNConfig::channels)
      .def_readwrite("hidden", &MGCNNConfig::hidden)
      .def_readwrite("unroll", &MGCNNConfig::unroll)
      .def_readwrite("learning_rate", &MGCNNConfig::learning_rate)
      .def_readwrite("clip_norm", &MGCNNConfig::clip_norm)
      .def_readwrite("shared_cell", &MGCNNConfig::shared_cell)
      .def_readwrite("seed", &MGCNNConfig::seed)
      .def_readwrite("output_scale", &MGCNNConfig::output_scale);

  py::class_<MGCNNModel>(m, "MGCNNModel")
      .def_property_readonly("parameter_count", &MGCNNModel::parameter_count)
      .def_property_readonly("shared_cell", &MGCNNModel::shared_cell)
      .def_readonly("unroll", &MGCNNModel::unroll)
      .def("parameters", [](const MGCNNModel& model) { return flatten(model); })
      .def("set_parameters", [](MGCNNModel& model, const std::vector<double>& p) { unflatten(p, model); })
      .def("save", [](const MGCNNModel& model, const std::filesystem::path& p) { io::save_model(p, model); })
      .def_static("load", &io::load_model);

  m.def("make_model", &make_model, py::arg("modes"), py::arg("rank"), py::arg("config") = MGCNNConfig{});
  m.def("refine_factors",
        [](const FactorSet& fs, const std::vector<IntraGraph>& graphs, const MGCNNModel& model) {
          return refine_factors(fs, graphs, model);
        },
        py::arg("fs"), py::arg("graphs"), py::arg("model"));

  py::class_<RefinerResult>(m, "RefinerResult")
      .def_readonly("model", &RefinerResult::model)
      .def_readonly("initial_loss", &RefinerResult::initial_loss)
      .def_readonly("best_loss", &RefinerResult::best_loss)
      .def_readonly("epoch_losses", &RefinerResult::epoch_losses);

  m.def("train_refiner",
        [](const SparseTensor& x, const FactorSet& fs, const std::vector<IntraGraph>& graphs,
           double lambda, MGCNNModel model, std::size_t epochs, const std::vector<double>& weights) {
          py::gil_scoped_release release;
          return train_refiner(x, fs, graphs, lambda, std::move(model), epochs, weights);
        },
        py::arg("x"), py::arg("fs"), py::arg("graphs"), py::arg("lambda_"), py::arg("model"),
        py::arg("epochs"), py::arg("reg_weights") = std::vector<double>{});

  m.def("rmse",
        [](const std::vector<TensorEntry>& test, const FactorSet& fs) { return rmse(predict(test, fs)); },
        py::arg("test"), py::arg("fs"));
  m.def("predict",
        [](const std::vector<TensorEntry>& entries, const FactorSet& fs) {
          std::vector<double> out;
          for (const auto& p : predict(entries, fs)) out.push_back(p.predicted);
          return out;
        },
        py::arg("entries"), py::arg("fs"));
  m.def("average_precision",
        [](const std::vector<double>& scores, const std::vector<bool>& labels) {
          const std::unique_ptr<bool[]> flags(new bool[labels.size()]);
          std::copy(labels.begin(), labels.end(), flags.get());
          return average_precision(scores, std::span<const bool>(flags.get(), labels.size()));
        },
        py::arg("scores"), py::arg("labels"));
  m.def("attribution_accuracy",
        [](const std::vector<TensorEntry>& test, const FactorSet& fs, std::size_t target_mode) {
          return attribution_accuracy(test, fs, target_mode);
        },
        py::arg("test"), py::arg("fs"), py::arg("target_mode") = 1);

  py::class_<GradcheckReport>(m, "GradcheckReport")
      .def_property_readonly("worst", &GradcheckReport::worst)
      .def_property_readonly("passed", &GradcheckReport::passed)
      .def_readonly("tolerance", &GradcheckReport::tolerance)
      .def_property_readonly("cases", [](const GradcheckReport& r) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& c : r.cases) out.emplace_back(c.label, c.rel_error);
        return out;
      });
  m.def("check_objective_gradients", &check_objective_gradients, py::arg("seed"),
        py::arg("instances") = 20, py::arg("step") = 1e-5, py::arg("tolerance") = 1e-5);
  m.def("check_refiner_gradients", &check_refiner_gradients, py::arg("seed"),
        py::arg("instances") = 10, py::arg("step") = 1e-5, py::arg("tolerance") = 1e-4);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("tensor", &Dataset::tensor)
      .def_readonly("test_entries", &Dataset::test_entries)
      .def_readonly("graphs", &Dataset::graphs)
      .def_readonly("names", &Dataset::names)
      .def("validate", &Dataset::validate);

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("dims", &SynthSpec::dims)
      .def_readwrite("rank", &SynthSpec::rank)
      .def_readwrite("noise_std", &SynthSpec::noise_std)
      .def_readwrite("density", &SynthSpec::density)
      .def_readwrite("knn", &SynthSpec::knn)
      .def_readwrite("test_fraction", &SynthSpec::test_fraction)
      .def_readwrite("seed", &SynthSpec::seed);

  py::class_<AttributionSpec>(m, "AttributionSpec")
      .def(py::init<>())
      .def_readwrite("artworks", &AttributionSpec::artworks)
      .def_readwrite("artists", &AttributionSpec::artists)
      .def_readwrite("media", &AttributionSpec::media)
      .def_readwrite("timeframes", &AttributionSpec::timeframes)
      .def_readwrite("style_dim", &AttributionSpec::style_dim)
      .def_readwrite("feature_noise", &AttributionSpec::feature_noise)
      .def_readwrite("knn", &AttributionSpec::knn)
      .def_readwrite("test_fraction", &AttributionSpec::test_fraction)
      .def_readwrite("seed", &AttributionSpec::seed);

  m.def("generate_synthetic",
        [](const SynthSpec& spec) {
          auto s = generate_synthetic(spec);
          return std::make_pair(std::move(s.data), std::move(s.truth));
        },
        py::arg("spec"), "Returns (dataset, truth factors).");
  m.def("generate_attribution", &generate_attribution, py::arg("spec") = AttributionSpec{});
  m.def("load_dataset", &load_dataset, py::arg("manifest"));
  m.def("save_dataset", &save_dataset, py::arg("dir"), py::arg("data"));
  m.def("load_factors", &io::load_factors, py::arg("path"));
  m.def("save_factors", [](const std::filesystem::path& p, const FactorSet& fs) { io::save_factors(p, fs); },
        py::arg("path"), py::arg("fs"));

  py::class_<PlanConfig>(m, "PlanConfig")
      .def_readwrite("train", &PlanConfig::train)
      .def_readwrite("refine", &PlanConfig::refine)
      .def_readwrite("refine_epochs", &PlanConfig::refine_epochs);
  m.def("parse_plan", [](const std::string& text) { return parse_plan(text); }, py::arg("text"));
  m.def("format_plan", &format_plan, py::arg("plan"));
}
