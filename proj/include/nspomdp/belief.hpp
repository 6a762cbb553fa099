#pragma once

#include "nspomdp/model.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nspomdp {

class ObservationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Particle {
  geom::Vector point;
  double weight = 0.0;
};

// Weighted Dirac mixture; weights sum to one.
struct ParticleBelief {
  AgentState agent;
  std::vector<Particle> particles;
};

// Uniform density on a polytope; volume cached.
struct DensityRegion {
  geom::Polytope region;
  double density = 0.0;
  double volume = 0.0;
};

// Sum of uniform densities; sum of density * volume is one. Regions may overlap.
struct RegionBelief {
  AgentState agent;
  std::vector<DensityRegion> regions;
};

using Belief = std::variant<ParticleBelief, RegionBelief>;

AgentState agent_of(const Belief& b);
inline bool is_particle(const Belief& b) { return std::holds_alternative<ParticleBelief>(b); }

inline constexpr double eps_merge = 1e-9;

// Merges coincident points, normalizes, checks percept compatibility.
ParticleBelief make_particle_belief(const Model& m, AgentState s, const std::vector<geom::Vector>& points,
                                    std::vector<double> weights = {});
// Normalizes so that sum of density * volume is one; drops degenerate regions.
RegionBelief make_region_belief(const Model& m, AgentState s, const std::vector<geom::Polytope>& regions,
                                std::vector<double> densities = {});

// Throws std::invalid_argument naming the violated invariant.
void check_belief(const Model& m, const Belief& b);

// Successor belief for one observation together with its probability.
struct Branch {
  AgentState agent;
  double prob = 0.0;
  Belief belief;
};

// All positive-probability observations under `action`, ordered by agent state.
std::vector<Branch> branches(const Model& m, const Belief& b, int action);

double obs_prob(const Model& m, const Belief& b, int action, AgentState next);
ParticleBelief particle_update(const Model& m, const ParticleBelief& b, int action, AgentState next);
RegionBelief region_update(const Model& m, const RegionBelief& b, int action, AgentState next);
Belief update(const Model& m, const Belief& b, int action, AgentState next);

// Total weight of particles within eps_merge of x.
double point_mass(const ParticleBelief& b, const geom::Vector& x);

// Mass of the belief inside a polytope.
double mass_in(const Belief& b, const geom::Polytope& p);

// Expectation of a function constant on each piece (pieces partition the domain).
double expect(const std::vector<Piece>& pieces, const Belief& b);
double expected_reward(const Model& m, const Belief& b, int action);

// Belief literal (JSON); see the README for the format.
Belief parse_belief(const Model& m, std::string_view text);
Belief load_belief_file(const Model& m, const std::string& path);
std::string format_belief(const Model& m, const Belief& b);

}  // namespace nspomdp
