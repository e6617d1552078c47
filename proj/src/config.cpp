#include "hyperlearn/config.hpp"

#include <functional>
#include <map>
#include <set>

#include "hyperlearn/error.hpp"
#include "hyperlearn/text.hpp"

namespace hyperlearn {
namespace {

using Setter = std::function<void(std::string_view)>;
using Setters = std::map<std::string, Setter, std::less<>>;

Setter real(double& dst, std::string_view what) {
  return [&dst, what](std::string_view v) { dst = text::parse_real(v, what); };
}

Setter size(std::size_t& dst, std::string_view what) {
  return [&dst, what](std::string_view v) { dst = text::parse_uint(v, what); };
}

Setter seed(std::uint64_t& dst) {
  return [&dst](std::string_view v) { dst = text::parse_uint(v, "seed"); };
}

Setter flag(bool& dst, std::string_view what) {
  return [&dst, what](std::string_view v) { dst = text::parse_bool(v, what); };
}

template <typename T, typename F>
Setter list(std::vector<T>& dst, F parse) {
  return [&dst, parse](std::string_view v) {
    dst.clear();
    if (text::trim(v).empty()) return;
    for (auto item : text::split(v, ',')) dst.push_back(parse(text::trim(item)));
  };
}

void apply(const std::vector<KeyValue>& kvs, const Setters& setters, const std::string& source,
           std::string_view skip = {}) {
  for (const auto& kv : kvs) {
    if (!skip.empty() && kv.key == skip) continue;
    const auto it = setters.find(kv.key);
    if (it == setters.end()) throw ParseError(source, kv.line, "unknown key '" + kv.key + "'");
    try {
      it->second(kv.value);
    } catch (const ParseError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ParseError(source, kv.line, e.what());
    }
  }
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::string_view content, const std::string& source) {
  std::vector<KeyValue> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (auto line : text::split(content, '\n')) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key=value");
    std::string key(text::trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    if (!seen.insert(key).second) throw ParseError(source, line_no, "duplicate key '" + key + "'");
    out.push_back({std::move(key), std::string(text::trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

PlanConfig parse_plan(std::string_view content, const std::string& source) {
  PlanConfig cfg;
  auto& p = cfg.train;
  auto& r = cfg.refine;
  const Setters setters{
      {"rank", size(p.rank, "rank")},
      {"lambda", real(p.lambda, "lambda")},
      {"sweep", [&p](std::string_view v) { p.sweep = parse_sweep(std::string(v)); }},
      {"inner_steps", size(p.inner_steps, "inner_steps")},
      {"step", real(p.step, "step")},
      {"backtracking", flag(p.backtracking, "backtracking")},
      {"shrink", real(p.shrink, "shrink")},
      {"sufficient_decrease", real(p.sufficient_decrease, "sufficient_decrease")},
      {"max_halvings", size(p.max_halvings, "max_halvings")},
      {"step_growth", real(p.step_growth, "step_growth")},
      {"max_rounds", size(p.max_rounds, "max_rounds")},
      {"rel_tol", real(p.rel_tol, "rel_tol")},
      {"seed", seed(p.seed)},
      {"reg_weights", list(p.reg_weights, [](std::string_view v) { return text::parse_real(v, "reg weight"); })},
      {"threads", size(p.threads, "threads")},
      {"frozen_modes", list(p.frozen_modes, [](std::string_view v) {
         return static_cast<std::size_t>(text::parse_uint(v, "frozen mode"));
       })},
      {"refine_epochs", size(cfg.refine_epochs, "refine_epochs")},
      {"refine_degree", size(r.degree, "refine_degree")},
      {"refine_channels", size(r.channels, "refine_channels")},
      {"refine_hidden", size(r.hidden, "refine_hidden")},
      {"refine_unroll", size(r.unroll, "refine_unroll")},
      {"refine_learning_rate", real(r.learning_rate, "refine_learning_rate")},
      {"refine_clip_norm", real(r.clip_norm, "refine_clip_norm")},
      {"refine_shared_cell", flag(r.shared_cell, "refine_shared_cell")},
      {"refine_seed", seed(r.seed)},
      {"refine_output_scale", real(r.output_scale, "refine_output_scale")},
  };
  apply(parse_key_values(content, source), setters, source);
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(source + ": " + e.what());
  }
  return cfg;
}

std::string format_plan(const PlanConfig& cfg) {
  const auto& p = cfg.train;
  const auto& r = cfg.refine;
  auto real_list = [](const std::vector<double>& v) { return text::join(v, ',', text::format_real); };
  auto size_list = [](const std::vector<std::size_t>& v) {
    return text::join(v, ',', [](std::size_t s) { return std::to_string(s); });
  };
  std::string out;
  auto put = [&out](std::string_view k, const std::string& v) {
    out.append(k).append("=").append(v).append("\n");
  };
  put("rank", std::to_string(p.rank));
  put("lambda", text::format_real(p.lambda));
  put("sweep", to_string(p.sweep));
  put("inner_steps", std::to_string(p.inner_steps));
  put("step", text::format_real(p.step));
  put("backtracking", p.backtracking ? "true" : "false");
  put("shrink", text::format_real(p.shrink));
  put("sufficient_decrease", text::format_real(p.sufficient_decrease));
  put("max_halvings", std::to_string(p.max_halvings));
  put("step_growth", text::format_real(p.step_growth));
  put("max_rounds", std::to_string(p.max_rounds));
  put("rel_tol", text::format_real(p.rel_tol));
  put("seed", std::to_string(p.seed));
  put("reg_weights", real_list(p.reg_weights));
  put("threads", std::to_string(p.threads));
  put("frozen_modes", size_list(p.frozen_modes));
  put("refine_epochs", std::to_string(cfg.refine_epochs));
  put("refine_degree", std::to_string(r.degree));
  put("refine_channels", std::to_string(r.channels));
  put("refine_hidden", std::to_string(r.hidden));
  put("refine_unroll", std::to_string(r.unroll));
  put("refine_learning_rate", text::format_real(r.learning_rate));
  put("refine_clip_norm", text::format_real(r.clip_norm));
  put("refine_shared_cell", r.shared_cell ? "true" : "false");
  put("refine_seed", std::to_string(r.seed));
  put("refine_output_scale", text::format_real(r.output_scale));
  return out;
}

GeneratorSpec parse_generator_spec(std::string_view content, const std::string& source) {
  const auto kvs = parse_key_values(content, source);
  std::string kind = "planted";
  for (const auto& kv : kvs) {
    if (kv.key == "kind") kind = kv.value;
  }

  auto checked = [&source](auto spec) {
    try {
      spec.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(source + ": " + e.what());
    }
    return spec;
  };

  if (kind == "planted") {
    SynthSpec s;
    const Setters setters{
        {"dims", list(s.dims, [](std::string_view v) { return static_cast<std::size_t>(text::parse_uint(v, "dim")); })},
        {"rank", size(s.rank, "rank")},
        {"noise_std", real(s.noise_std, "noise_std")},
        {"density", real(s.density, "density")},
        {"knn", size(s.knn, "knn")},
        {"test_fraction", real(s.test_fraction, "test_fraction")},
        {"seed", seed(s.seed)},
    };
    apply(kvs, setters, source, "kind");
    return checked(s);
  }
  if (kind == "attribution") {
    AttributionSpec s;
    const Setters setters{
        {"artworks", size(s.artworks, "artworks")},
        {"artists", size(s.artists, "artists")},
        {"media", size(s.media, "media")},
        {"timeframes", size(s.timeframes, "timeframes")},
        {"style_dim", size(s.style_dim, "style_dim")},
        {"feature_noise", real(s.feature_noise, "feature_noise")},
        {"knn", size(s.knn, "knn")},
        {"test_fraction", real(s.test_fraction, "test_fraction")},
        {"seed", seed(s.seed)},
    };
    apply(kvs, setters, source, "kind");
    return checked(s);
  }
  throw InvalidArgument(source + ": unknown kind '" + kind + "' (expected planted or attribution)");
}

}  // namespace hyperlearn
