#pragma once

#include "nspomdp/bounds.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nspomdp {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes DIR/bounds.txt (exact half-space rows for every alpha piece, Upsilon as
// belief literals) and, for 2-D models, polygon dumps DIR/alpha_<i>.txt and DIR/max.txt.
void save_bounds(const std::string& dir, const Model& m, const LowerBound& lower, const UpperBoundSet& upper);

struct StoredBounds {
  LowerBound lower;
  UpperBoundSet upper;
};

StoredBounds load_bounds(const std::string& dir, const Model& m);

// Pointwise maximum of the alphas as (agent state, piece) cells over every perception region.
std::vector<std::pair<AgentState, Piece>> max_refinement(const Model& m, const LowerBound& lower);

// Polygon dumps only; requires a 2-D model.
void export_value_dumps(const std::string& dir, const Model& m, const LowerBound& lower);

}  // namespace nspomdp
