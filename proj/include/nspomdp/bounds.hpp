#pragma once

#include "nspomdp/belief.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace nspomdp {

inline constexpr double eps_prune = 1e-9;

// Piecewise-constant function over S. Each perception region either carries a
// partition of itself into constant pieces or takes the fill value.
class AlphaFunction {
 public:
  AlphaFunction(std::size_t num_regions, double fill);

  double fill() const { return fill_; }
  std::size_t num_regions() const { return by_region_.size(); }
  const std::vector<Piece>& pieces(std::size_t region) const { return by_region_.at(region); }
  void set_pieces(std::size_t region, std::vector<Piece> pieces) { by_region_.at(region) = std::move(pieces); }
  std::size_t num_pieces() const;

  double value(const Model& m, AgentState s, const geom::Vector& x) const;
  double expect(const Model& m, const Belief& b) const;

 private:
  double fill_;
  std::vector<std::vector<Piece>> by_region_;
};

using AlphaPtr = std::shared_ptr<const AlphaFunction>;

struct LowerBound {
  std::vector<AlphaPtr> gamma;
};

struct LbValue {
  double value = 0.0;
  std::size_t index = 0;  // lowest index among maximizers
};

LbValue lb_value(const Model& m, const LowerBound& lower, const Belief& b);

struct UpsilonEntry {
  Belief belief;
  double value = 0.0;
};

// Belief-value points, indexed by agent state. Adding a belief equal to a
// stored one keeps the smaller value.
class UpperBoundSet {
 public:
  UpperBoundSet() = default;
  explicit UpperBoundSet(std::size_t num_agent_states) : by_agent_(num_agent_states) {}

  void add(const Model& m, Belief b, double y);
  std::size_t size() const { return entries_.size(); }
  const std::vector<UpsilonEntry>& entries() const { return entries_; }
  const std::vector<std::size_t>& of(std::size_t agent_index) const { return by_agent_.at(agent_index); }

 private:
  std::vector<UpsilonEntry> entries_;
  std::vector<std::vector<std::size_t>> by_agent_;
};

bool same_belief(const Belief& a, const Belief& b);

// Interpolated upper bounds (raw LP optimum); both return U when no comparable point exists.
double ub_value_particle(const Model& m, const UpperBoundSet& upper, const ParticleBelief& b);
double ub_value_region(const Model& m, const UpperBoundSet& upper, const RegionBelief& b);
// The smaller of U and the interpolation for the belief type.
double ub_value(const Model& m, const UpperBoundSet& upper, const Belief& b);

// Largest-weight subset of regions with a full-dimensional common intersection.
std::vector<std::size_t> max_density_subset(const RegionBelief& b);

struct ActionLookahead {
  int action = 0;
  double reward = 0.0;  // expected immediate reward
  std::vector<Branch> branches;
};

std::vector<ActionLookahead> lookahead(const Model& m, const Belief& b);

struct Backup {
  double value = 0.0;
  std::vector<int> maximizers;  // in action order
  std::vector<double> q;        // per lookahead entry
};

Backup bellman_lb(const Model& m, const LowerBound& lower, const std::vector<ActionLookahead>& la);
Backup bellman_ub(const Model& m, const UpperBoundSet& upper, const std::vector<ActionLookahead>& la);

using AlphaChoice = std::function<const AlphaFunction&(AgentState)>;

// beta * delta_A * sum over successors of x reaching `next` of probability * alpha.
double bval(const Model& m, AgentState s, const geom::Vector& x, int action, AgentState next, const AlphaFunction& alpha);
// R_a(s, x) + sum over successor agent states of bval with the chosen alpha.
double backup_at(const Model& m, AgentState s, const geom::Vector& x, int action, const AlphaChoice& choice);

// Image, split and preimage tables per (region, action, loc', component).
class IsppCache {
 public:
  struct Fragment {
    std::size_t target;     // perception region reached
    geom::Polytope image;   // image of `dom` inside the target
  };
  struct PieceImage {
    geom::Polytope dom;     // region intersected with the piece guard
    geom::AffineMap map;
    std::vector<Fragment> fragments;
  };
  using Table = std::vector<PieceImage>;

  std::shared_ptr<const Table> get(const Model& m, std::size_t region, int action, int next_loc, std::size_t component);

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, int, int, std::size_t>, std::shared_ptr<const Table>> tables_;
};

// Partition of one perception region into pieces on which the backup is constant,
// each valued by `backup_at` at an interior point and clamped to [L, U].
std::vector<Piece> ispp_backup(const Model& m, std::size_t region, int action, const AlphaChoice& choice,
                               IsppCache* cache = nullptr);

// Full cross product over actions and choice functions; throws BudgetError past `budget`.
std::vector<AlphaPtr> exact_vi_step(const Model& m, const LowerBound& lower, std::size_t budget = 10000);

struct UpdateResult {
  int action = 0;           // lower-backup maximizer used for the new alpha
  double lb_backup = 0.0;   // lower Bellman backup at b
  double ub_backup = 0.0;   // upper Bellman backup at b (stored with b)
  double alpha_value = 0.0; // expectation of the new alpha at b
  bool alpha_added = false;
  AlphaPtr alpha;
};

// Both bounds with their shared model and caches.
class ValueBounds {
 public:
  // Lower bound: the constant blind-strategy value; upper bound: seeds valued U.
  ValueBounds(const Model& m, const std::vector<Belief>& seeds, int threads = 1);

  const Model& model() const { return *model_; }
  const GlobalBounds& global() const { return model_->global_bounds(); }
  const LowerBound& lower() const { return lower_; }
  const UpperBoundSet& upper() const { return upper_; }
  int threads() const { return threads_; }

  LbValue lb(const Belief& b) const { return lb_value(*model_, lower_, b); }
  double ub(const Belief& b) const { return ub_value(*model_, upper_, b); }

  UpdateResult point_update(const Belief& b, const std::vector<ActionLookahead>* la = nullptr);

  void add_alpha(AlphaPtr alpha) { lower_.gamma.push_back(std::move(alpha)); }
  void add_point(Belief b, double y) { upper_.add(*model_, std::move(b), y); }
  void replace(LowerBound lower, UpperBoundSet upper);

 private:
  const Model* model_;
  LowerBound lower_;
  UpperBoundSet upper_;
  std::unique_ptr<IsppCache> cache_;
  int threads_;
};

// Worker count from NSPOMDP_THREADS, else 1.
int threads_from_env();

}  // namespace nspomdp
