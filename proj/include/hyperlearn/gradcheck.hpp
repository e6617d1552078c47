#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hyperlearn {

struct GradcheckCase {
  std::string label;
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double tolerance = 0.0;

  double worst() const;
  bool passed() const;
};

// grad_mode against central differences of total_loss on random instances
// cycling K = 2, 3, 4; even instances use observed-only tensors, odd ones
// full tensors. Every mode of every instance is one case.
GradcheckReport check_objective_gradients(std::uint64_t seed, std::size_t instances = 20,
                                          double step = 1e-5, double tolerance = 1e-5);

// evaluate_refiner's parameter gradient against central differences of the
// refined loss, over every flattened parameter.
GradcheckReport check_refiner_gradients(std::uint64_t seed, std::size_t instances = 10,
                                        double step = 1e-5, double tolerance = 1e-4);

}  // namespace hyperlearn
