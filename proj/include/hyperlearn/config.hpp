#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hyperlearn/data.hpp"
#include "hyperlearn/distributed.hpp"
#include "hyperlearn/mgcnn.hpp"

namespace hyperlearn {

// key=value lines; '#' starts a comment line. Duplicate keys are errors.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<KeyValue> parse_key_values(std::string_view text, const std::string& source);

// Plan file. Training keys map onto TrainPlan; refine_* keys onto the
// MGCNN refiner.
struct PlanConfig {
  TrainPlan train;
  MGCNNConfig refine;
  std::size_t refine_epochs = 200;
};

PlanConfig parse_plan(std::string_view text, const std::string& source = "<plan>");
std::string format_plan(const PlanConfig& cfg);

// Synth spec file: kind=planted (default) or kind=attribution followed by
// the generator's fields.
using GeneratorSpec = std::variant<SynthSpec, AttributionSpec>;

GeneratorSpec parse_generator_spec(std::string_view text, const std::string& source = "<spec>");

}  // namespace hyperlearn
