#pragma once

#include "nspomdp/geom.hpp"

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nspomdp {

// Indices into the model's Loc and Per label lists.
struct AgentState {
  int loc = 0;
  int per = 0;
  auto operator<=>(const AgentState&) const = default;
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One-hidden-layer ReLU classifier f(x) = W2 max(0, W1 x + b1) + b2.
struct ReluNet {
  geom::Matrix w1;
  geom::Vector b1;
  geom::Matrix w2;
  geom::Vector b2;
  std::vector<std::string> labels;

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int num_classes() const { return static_cast<int>(w2.rows()); }

  geom::Vector forward(const geom::Vector& x) const;
  // Argmax with ties to the smallest class index.
  int classify(const geom::Vector& x) const;
};

// Parses the weight-file JSON; throws std::invalid_argument with a reason.
ReluNet parse_relu_net(std::string_view json_text);
void validate_relu_net(const ReluNet& net);

inline constexpr int max_hidden_units = 24;

// Partition of the domain into polytopes of constant class (payload = class index),
// ordered by activation pattern then class.
geom::Fcp<int> enumerate_preimage(const ReluNet& net, const geom::Polytope& domain);

// Per-location environment partition with percept indices as payloads.
struct LocPerception {
  geom::Fcp<int> partition;
  std::optional<ReluNet> net;       // set for network-backed locations
  std::vector<int> class_to_per;    // class index -> percept index
};

class PerceptionSpec {
 public:
  PerceptionSpec() = default;
  PerceptionSpec(geom::Polytope domain, std::vector<std::shared_ptr<const LocPerception>> per_loc);

  const geom::Polytope& domain() const { return domain_; }
  std::size_t num_locs() const { return per_loc_.size(); }
  const LocPerception& at(int loc) const { return *per_loc_.at(static_cast<std::size_t>(loc)); }

  // Percept index of s_E at loc; DomainError outside the domain.
  int observe(int loc, const geom::Vector& s_env) const;

 private:
  geom::Polytope domain_;
  std::vector<std::shared_ptr<const LocPerception>> per_loc_;
};

struct PhiRegion {
  AgentState agent;
  geom::Polytope polytope;
};

// Perception partition lifted to agent states.
class PerceptionFcp {
 public:
  PerceptionFcp() = default;
  PerceptionFcp(const PerceptionSpec& spec, int num_pers);

  std::size_t size() const { return regions_.size(); }
  const PhiRegion& operator[](std::size_t i) const { return regions_[i]; }
  const std::vector<PhiRegion>& regions() const { return regions_; }
  // Region indices carrying the given agent state, in partition order.
  const std::vector<std::size_t>& of(AgentState s) const;
  // Region indices of a location, in partition order.
  const std::vector<std::size_t>& of_loc(int loc) const { return by_loc_.at(static_cast<std::size_t>(loc)); }
  // First region of agent state s containing x.
  std::optional<std::size_t> locate(AgentState s, const geom::Vector& x) const;

 private:
  int num_pers_ = 0;
  std::vector<PhiRegion> regions_;
  std::vector<std::vector<std::size_t>> by_agent_;
  std::vector<std::vector<std::size_t>> by_loc_;
};

}  // namespace nspomdp
