#pragma once

#include "nspomdp/belief.hpp"

#include <cstddef>

namespace nspomdp {

struct HorizonValue {
  int horizon = 0;
  double value = 0.0;  // optimal expected discounted reward over `horizon` steps
  double lower = 0.0;  // value + beta^h L
  double upper = 0.0;  // value + beta^h U
  std::size_t nodes = 0;
};

// Backward induction over the belief tree, memoized on rounded particle sets.
// Throws BudgetError once more than `budget` distinct nodes are expanded.
HorizonValue finite_horizon_value(const Model& m, const ParticleBelief& b, int horizon, std::size_t budget = 1000000);

}  // namespace nspomdp
