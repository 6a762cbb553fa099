#pragma once

#include "nspomdp/bounds.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace nspomdp {

struct SolveConfig {
  double epsilon = 1e-3;
  std::size_t max_iterations = 10000;
  std::optional<int> max_depth;  // default: default_max_depth()
  std::uint64_t rng_seed = 0;
  bool parallel_ispp = false;
  bool log_candidates = false;  // keep every recursion node's candidate list
};

// ceil(log_beta(eps / (2 (U - L)))) + 5, or 0 when U == L.
int default_max_depth(const Model& m, double epsilon);

struct TraceRow {
  std::size_t iter = 0;
  double lb = 0.0;
  double ub = 0.0;
  std::size_t gamma_size = 0;
  std::size_t upsilon_size = 0;
  double millis = 0.0;
};

// One (action, observation) pair considered when choosing where to recurse.
struct Candidate {
  int action = 0;
  AgentState next;
  double prob = 0.0;
  double ub = 0.0;
  double lb = 0.0;
  double excess = 0.0;
  bool open = false;  // would pass the width test one level down
};

struct NodeLog {
  int depth = 0;
  std::vector<Candidate> candidates;
  std::optional<std::size_t> chosen;  // empty when every child is already finished
};

enum class SolveStatus { converged, budget_exhausted };

struct SolveState {
  explicit SolveState(ValueBounds vb) : bounds(std::move(vb)) {}

  ValueBounds bounds;
  std::vector<TraceRow> trace;  // row 0 is the initial state
  SolveStatus status = SolveStatus::budget_exhausted;
  std::size_t iterations = 0;
  std::size_t seed_count = 0;
  std::vector<std::size_t> updates_by_depth;
  std::vector<NodeLog> nodes;

  double lb() const { return trace.back().lb; }
  double ub() const { return trace.back().ub; }
  double gap() const { return ub() - lb(); }
};

// P(s'|b,a) * (ub - lb - eps * beta^(t+1)) at the successor belief.
double excess(double prob, double ub, double lb, double epsilon, double beta, int t_next);

// b0 and its one-step successors under every action and observation.
std::vector<Belief> default_seeds(const Model& m, const Belief& b0);

class Solver {
 public:
  Solver(const Model& m, Belief b0, SolveConfig config);

  // One call of the exploration from b0; appends a trace row.
  void iterate();
  bool converged() const;
  SolveState run();

  SolveState& state() { return state_; }
  const SolveState& state() const { return state_; }
  int max_depth() const { return max_depth_; }

 private:
  void explore(const Belief& b, int t);
  void update(const Belief& b, int t, const std::vector<ActionLookahead>* la = nullptr);
  void record();

  const Model* model_;
  Belief b0_;
  SolveConfig config_;
  int max_depth_;
  SolveState state_;
  std::chrono::steady_clock::time_point start_;
};

SolveState solve(const Model& m, const Belief& b0, const SolveConfig& config);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace nspomdp
