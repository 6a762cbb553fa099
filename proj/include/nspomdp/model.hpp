#pragma once

#include "nspomdp/geom.hpp"
#include "nspomdp/perception.hpp"

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nspomdp {

// Every violated invariant, one entry each, naming where it was found.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct AffinePiece {
  geom::Polytope guard;
  geom::AffineMap map;
};

struct MixtureComponent {
  double weight = 1.0;
  std::vector<AffinePiece> pieces;  // guards partition the domain; first match wins
};

struct EnvDynamics {
  std::vector<MixtureComponent> components;
};

// A constant value on a polytope.
struct Piece {
  geom::Polytope region;
  double value = 0.0;
};

struct RewardRule {
  geom::Polytope region;
  double value = 0.0;
  std::optional<std::vector<AgentState>> agents;  // nullopt: every agent state
};

// First matching rule wins; points matching none get the default.
struct RewardTable {
  double default_value = 0.0;
  std::vector<RewardRule> rules;
};

struct AgentTransition {
  AgentState from;
  int action = 0;
  int next_loc = 0;
  double prob = 0.0;
};

// Unvalidated model content; Model::create checks it.
struct ModelData {
  std::string name;
  std::vector<std::string> locs;
  std::vector<std::string> pers;
  std::vector<std::string> actions;
  geom::Polytope domain;
  std::vector<std::vector<bool>> available;  // [loc * |Per| + per][action]
  std::vector<AgentTransition> agent_dynamics;
  std::vector<EnvDynamics> env_dynamics;     // per action
  std::vector<std::shared_ptr<const LocPerception>> perception;  // per loc
  std::vector<RewardTable> reward_action;    // per action
  RewardTable reward_state;
  double beta = 0.9;
  std::optional<std::vector<std::vector<int>>> suggested;  // per percept: suggested actions
};

struct GlobalBounds {
  double lower = 0.0;  // L
  double upper = 0.0;  // U
  double blind = 0.0;  // R_LB
};

struct Successor {
  AgentState agent;
  geom::Vector env;
  double prob = 0.0;
};

class Model {
 public:
  static Model create(ModelData data);

  const std::string& name() const { return data_.name; }
  int dim() const { return data_.domain.dim(); }
  const geom::Polytope& domain() const { return data_.domain; }
  int num_locs() const { return static_cast<int>(data_.locs.size()); }
  int num_pers() const { return static_cast<int>(data_.pers.size()); }
  int num_actions() const { return static_cast<int>(data_.actions.size()); }
  std::size_t num_agent_states() const { return data_.locs.size() * data_.pers.size(); }
  const std::string& loc_label(int loc) const { return data_.locs.at(static_cast<std::size_t>(loc)); }
  const std::string& per_label(int per) const { return data_.pers.at(static_cast<std::size_t>(per)); }
  const std::string& action_label(int a) const { return data_.actions.at(static_cast<std::size_t>(a)); }
  std::optional<int> find_loc(std::string_view label) const;
  std::optional<int> find_per(std::string_view label) const;
  std::optional<int> find_action(std::string_view label) const;
  std::string describe(AgentState s) const;

  std::size_t agent_index(AgentState s) const {
    return static_cast<std::size_t>(s.loc) * data_.pers.size() + static_cast<std::size_t>(s.per);
  }
  AgentState agent_at(std::size_t index) const {
    const auto p = data_.pers.size();
    return {static_cast<int>(index / p), static_cast<int>(index % p)};
  }

  double beta() const { return data_.beta; }
  bool available(AgentState s, int action) const;
  std::vector<int> available_actions(AgentState s) const;
  // (next loc, probability) pairs with positive probability.
  const std::vector<std::pair<int, double>>& agent_next(AgentState s, int action) const;
  double agent_prob(AgentState s, int action, int next_loc) const;
  const EnvDynamics& env(int action) const { return data_.env_dynamics.at(static_cast<std::size_t>(action)); }
  // First piece of the component whose guard contains x.
  const AffinePiece& piece_for(int action, std::size_t component, const geom::Vector& x) const;

  const PerceptionSpec& perception() const { return perception_; }
  const PerceptionFcp& phi() const { return phi_; }
  int observe(int loc, const geom::Vector& s_env) const { return perception_.observe(loc, s_env); }
  bool percept_compatible(AgentState s, const geom::Vector& s_env) const;

  std::vector<Successor> successors(AgentState s, const geom::Vector& s_env, int action) const;
  double reward(AgentState s, const geom::Vector& s_env, int action) const;
  // Partition of the domain on which the reward of (action, s) is constant.
  const std::vector<Piece>& reward_pieces(int action, AgentState s) const;
  // Reward FCP over S for one action: (agent state, constant) payload per region.
  geom::Fcp<std::pair<AgentState, double>> reward_fcp(int action) const;
  const GlobalBounds& global_bounds() const { return bounds_; }

  const std::optional<std::vector<std::vector<int>>>& suggested() const { return data_.suggested; }
  const ModelData& data() const { return data_; }

 private:
  explicit Model(ModelData data);

  ModelData data_;
  PerceptionSpec perception_;
  PerceptionFcp phi_;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> agent_next_;  // [agent][action]
  std::vector<std::vector<std::shared_ptr<const std::vector<Piece>>>> rewards_;  // [action][agent]
  GlobalBounds bounds_;
};

// Pieces covering `domain` by first-match over (region, value) rules plus a default.
std::vector<Piece> first_match_partition(const geom::Polytope& domain,
                                         const std::vector<std::pair<geom::Polytope, double>>& rules,
                                         double default_value);

// Parses and validates a model file. `base_dir` resolves relative network_file paths.
Model load_model(std::string_view text, const std::string& base_dir = ".");
Model load_model_file(const std::string& path);

// Polytope literal: list of [normal..., offset] rows or {"box": [[lo, hi], ...]}.
geom::Polytope parse_polytope_json(std::string_view text);

// Line and column (1-based) of a byte offset.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset);

}  // namespace nspomdp
