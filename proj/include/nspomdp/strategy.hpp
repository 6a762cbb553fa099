#pragma once

#include "nspomdp/bounds.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace nspomdp {

// One-step lookahead on a fixed lower bound.
class LookaheadStrategy {
 public:
  LookaheadStrategy(const Model& m, LowerBound lower) : model_(&m), lower_(std::move(lower)) {}

  int next_action(const Belief& b) const;
  Backup evaluate(const Belief& b) const;
  const LowerBound& lower() const { return lower_; }

 private:
  const Model* model_;
  LowerBound lower_;
};

struct PathStep {
  AgentState agent;
  geom::Vector env;
  int action = 0;
  double reward = 0.0;
  AgentState observation;
  double return_so_far = 0.0;
};

struct PathRecord {
  std::vector<PathStep> steps;
  double discounted_return = 0.0;
  // Only filled when the model carries a suggested-action table.
  bool has_suggestions = false;
  std::size_t compliant_steps = 0;
  double mean_loc = 0.0;  // average location index over visited states (trust level in the car-parking models)

  double compliance_ratio() const {
    return steps.empty() ? 0.0 : static_cast<double>(compliant_steps) / static_cast<double>(steps.size());
  }
};

using SimRng = std::mt19937_64;

// Generator for run `run` of a batch seeded with `seed`.
SimRng run_rng(std::uint64_t seed, std::uint64_t run);

// Draws an environment point from b (particle by weight, region by mass then uniformly).
geom::Vector sample_state(const Model& m, const Belief& b, SimRng& rng);

// Thrown when a realized observation has zero probability under the tracked belief.
using TrackingError = ObservationError;

PathRecord simulate(const Model& m, const LookaheadStrategy& strategy, const Belief& b0, const geom::Vector& env0, int horizon,
                    SimRng& rng);

// Columns: run,step,loc,per,<coords>,action,reward,return_so_far
void write_path_csv_header(std::ostream& out, const Model& m);
void write_path_csv(std::ostream& out, const Model& m, std::size_t run, const PathRecord& path);

}  // namespace nspomdp
