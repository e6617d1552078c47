// hyperlearn: command-line driver.
//
//   hyperlearn synth     --spec <file> --out <dir>
//   hyperlearn train     --manifest <file> --plan <file> --out <dir> [--refine]
//   hyperlearn eval      --manifest <file> --factors <file> --metric rmse|ap|attribution
//   hyperlearn bench     --manifest <file> --plan <file> --sweeps gauss_seidel,jacobi --repeats n
//   hyperlearn gradcheck --seed s
//
// Exit codes: 0 success, 1 malformed input, 2 numerical abort.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hyperlearn/config.hpp"
#include "hyperlearn/data.hpp"
#include "hyperlearn/distributed.hpp"
#include "hyperlearn/error.hpp"
#include "hyperlearn/factor.hpp"
#include "hyperlearn/gradcheck.hpp"
#include "hyperlearn/io.hpp"
#include "hyperlearn/metrics.hpp"
#include "hyperlearn/mgcnn.hpp"
#include "hyperlearn/text.hpp"

namespace fs = std::filesystem;
using namespace hyperlearn;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw InvalidArgument("cannot write " + p.string());
  return os;
}

void cmd_synth(const fs::path& spec_path, const fs::path& out) {
  const auto spec = parse_generator_spec(io::read_text(spec_path), spec_path.string());
  if (const auto* planted = std::get_if<SynthSpec>(&spec)) {
    const auto synth = generate_synthetic(*planted);
    const auto manifest = save_dataset(out, synth.data);
    io::save_factors(out / "truth.tsv", synth.truth);
    std::cout << "wrote " << manifest.string() << " (" << synth.data.tensor.nnz() << " train, "
              << synth.data.test_entries.size() << " test entries)\n";
  } else {
    const auto data = generate_attribution(std::get<AttributionSpec>(spec));
    const auto manifest = save_dataset(out, data);
    std::cout << "wrote " << manifest.string() << " (" << data.tensor.nnz() << " train, "
              << data.test_entries.size() << " test hyperedges)\n";
  }
}

struct TrainArgs {
  fs::path manifest, plan, out, init;
  bool refine = false;
  bool quiet = false;
};

void cmd_train(const TrainArgs& a) {
  const Dataset data = load_dataset(a.manifest);
  const PlanConfig cfg = parse_plan(io::read_text(a.plan), a.plan.string());
  const auto& plan = cfg.train;
  fs::create_directories(a.out);

  FactorSet start = a.init.empty() ? init_factors(data.tensor.dims(), plan.rank, plan.seed)
                                   : io::load_factors(a.init);
  if (start.rank != plan.rank) throw InvalidArgument("initial factors have rank " + std::to_string(start.rank));
  check_compatible(data.tensor, start);

  auto csv = open_out(a.out / "convergence.csv");
  csv << convergence_csv_header(data.tensor.order()) << '\n';
  AlternatingTrainer trainer(data.tensor, data.graphs, plan);
  const auto result = trainer.run(std::move(start), [&](const RoundLog& log) {
    csv << convergence_csv_row(log) << '\n';
    if (!a.quiet) std::cerr << "round " << log.round << " loss " << text::format_real(log.loss.total) << '\n';
  });
  io::save_factors(a.out / "factors.tsv", result.factors);
  const double trained = result.rounds.empty() ? result.initial.total : result.rounds.back().loss.total;
  std::cout << "rounds=" << result.rounds.size() << " converged=" << (result.converged ? "true" : "false")
            << " loss=" << text::format_real(trained) << '\n';

  if (!a.refine) return;
  auto refine_csv = open_out(a.out / "refine.csv");
  refine_csv << "epoch,total_loss,grad_norm\n";
  const MGCNNModel model = make_model(data.tensor.order(), plan.rank, cfg.refine);
  const auto refined = train_refiner(data.tensor, result.factors, data.graphs, plan.lambda, model,
                                     cfg.refine_epochs, plan.reg_weights,
                                     [&](std::size_t epoch, double loss, double grad_norm) {
                                       refine_csv << epoch << ',' << text::format_real(loss) << ','
                                                  << text::format_real(grad_norm) << '\n';
                                     });
  io::save_model(a.out / "model.tsv", refined.model);
  io::save_factors(a.out / "factors.tsv", refine_factors(result.factors, data.graphs, refined.model));
  io::save_factors(a.out / "factors_unrefined.tsv", result.factors);
  std::cout << "refined loss=" << text::format_real(refined.best_loss)
            << " (before " << text::format_real(refined.initial_loss) << ")\n";
}

struct EvalArgs {
  fs::path manifest, factors, plan;
  std::string metric;
  std::size_t target_mode = 1;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

void cmd_eval(const EvalArgs& a) {
  const Dataset data = load_dataset(a.manifest);
  const FactorSet factors = io::load_factors(a.factors);
  check_compatible(data.tensor, factors);
  if (data.test_entries.empty()) throw InvalidArgument(a.manifest.string() + ": no held-out entries");

  MetricReport report;
  report.name = a.metric;
  report.support = data.test_entries.size();
  report.seed = a.seed;
  report.plan_hash = text::fnv1a(io::read_text(a.plan.empty() ? a.factors : a.plan));
  if (a.metric == "rmse") {
    report.value = rmse(predict(data.test_entries, factors));
  } else if (a.metric == "ap") {
    const auto preds = predict(data.test_entries, factors);
    std::vector<double> scores;
    std::vector<char> labels;
    for (const auto& p : preds) {
      scores.push_back(p.predicted);
      labels.push_back(p.actual > a.threshold);
    }
    // span<const bool> needs contiguous bools; vector<bool> is not.
    const std::unique_ptr<bool[]> flags(new bool[labels.size()]);
    for (std::size_t i = 0; i < labels.size(); ++i) flags[i] = labels[i] != 0;
    report.value = average_precision(scores, {flags.get(), labels.size()});
  } else if (a.metric == "attribution") {
    report.value = attribution_accuracy(data.test_entries, factors, a.target_mode);
  } else {
    throw InvalidArgument("unknown metric '" + a.metric + "'");
  }
  report.validate();
  std::cout << metric_csv_header() << '\n' << metric_csv_row(report) << '\n';
}

struct BenchArgs {
  fs::path manifest, plan, out;
  std::vector<std::string> sweeps{"gauss_seidel", "jacobi"};
  std::size_t repeats = 3;
  std::optional<std::size_t> rounds;
};

void cmd_bench(const BenchArgs& a) {
  const Dataset data = load_dataset(a.manifest);
  const PlanConfig cfg = parse_plan(io::read_text(a.plan), a.plan.string());
  const std::size_t rounds = a.rounds.value_or(cfg.train.max_rounds);
  if (a.repeats == 0 || rounds == 0) throw InvalidArgument("bench: repeats and rounds must be positive");

  std::vector<Sweep> sweeps;
  for (const auto& s : a.sweeps) sweeps.push_back(parse_sweep(s));

  std::ofstream file;
  if (!a.out.empty()) file = open_out(a.out);
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << "sweep,repeat,round,round_time_ms,total_loss\n";
  for (const Sweep sweep : sweeps) {
    TrainPlan plan = cfg.train;
    plan.sweep = sweep;
    for (std::size_t r = 0; r < a.repeats; ++r) {
      AlternatingTrainer trainer(data.tensor, data.graphs, plan);
      const auto result = trainer.run_fixed(init_factors(data.tensor.dims(), plan.rank, plan.seed), rounds);
      for (const auto& log : result.rounds) {
        os << to_string(sweep) << ',' << r << ',' << log.round << ',' << text::format_real(log.round_time_ms)
           << ',' << text::format_real(log.loss.total) << '\n';
      }
    }
  }
}

bool cmd_gradcheck(std::uint64_t seed) {
  const auto objective = check_objective_gradients(seed);
  const auto refiner = check_refiner_gradients(seed);
  for (const auto* r : {&objective, &refiner}) {
    for (const auto& c : r->cases) {
      if (c.rel_error > r->tolerance) {
        std::cout << "  FAIL " << c.label << " rel_error=" << text::format_real(c.rel_error) << '\n';
      }
    }
  }
  std::cout << "objective: " << objective.cases.size() << " cases, worst rel error "
            << text::format_real(objective.worst()) << " (tol " << text::format_real(objective.tolerance)
            << ") " << (objective.passed() ? "PASS" : "FAIL") << '\n';
  std::cout << "mgcnn: " << refiner.cases.size() << " cases, worst rel error "
            << text::format_real(refiner.worst()) << " (tol " << text::format_real(refiner.tolerance)
            << ") " << (refiner.passed() ? "PASS" : "FAIL") << '\n';
  return objective.passed() && refiner.passed();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-regularized hypergraph tensor factorization"};
  app.require_subcommand(1);

  fs::path synth_spec, synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--spec", synth_spec, "Generator spec (key=value)")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Alternating training, optionally followed by MGCNN refinement");
  train->add_option("--manifest", train_args.manifest)->required();
  train->add_option("--plan", train_args.plan)->required();
  train->add_option("--out", train_args.out)->required();
  train->add_option("--init", train_args.init, "Warm-start factor checkpoint");
  train->add_flag("--refine", train_args.refine, "Train the MGCNN refiner on the trained factors");
  train->add_flag("--quiet", train_args.quiet, "No per-round progress on stderr");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score factors on the held-out entries");
  eval->add_option("--manifest", eval_args.manifest)->required();
  eval->add_option("--factors", eval_args.factors)->required();
  eval->add_option("--metric", eval_args.metric)->required()->check(CLI::IsMember({"rmse", "ap", "attribution"}));
  eval->add_option("--target-mode", eval_args.target_mode, "Candidate mode for attribution");
  eval->add_option("--threshold", eval_args.threshold, "Label threshold for ap");
  eval->add_option("--plan", eval_args.plan, "Plan file to fingerprint");
  eval->add_option("--seed", eval_args.seed, "Seed recorded in the report");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Per-round timing of the sweep schedules");
  bench->add_option("--manifest", bench_args.manifest)->required();
  bench->add_option("--plan", bench_args.plan)->required();
  bench->add_option("--sweeps", bench_args.sweeps)->delimiter(',');
  bench->add_option("--repeats", bench_args.repeats);
  bench->add_option("--rounds", bench_args.rounds, "Rounds per repeat (default: plan max_rounds)");
  bench->add_option("--out", bench_args.out, "CSV path (default: stdout)");

  std::uint64_t gc_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of every analytic gradient");
  gradcheck->add_option("--seed", gc_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) cmd_synth(synth_spec, synth_out);
    if (*train) cmd_train(train_args);
    if (*eval) cmd_eval(eval_args);
    if (*bench) cmd_bench(bench_args);
    if (*gradcheck) return cmd_gradcheck(gc_seed) ? 0 : 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
