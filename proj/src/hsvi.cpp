#include "nspomdp/hsvi.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace nspomdp {
namespace {

int solver_threads(bool parallel) {
  if (!parallel) return 1;
  if (std::getenv("NSPOMDP_THREADS")) return threads_from_env();
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

int default_max_depth(const Model& m, double epsilon) {
  const auto& g = m.global_bounds();
  const double spread = g.upper - g.lower;
  if (spread <= 0.0) return 0;
  const double depth = std::log(epsilon / (2.0 * spread)) / std::log(m.beta());
  return std::max(0, static_cast<int>(std::ceil(depth))) + 5;
}

double excess(double prob, double ub, double lb, double epsilon, double beta, int t_next) {
  return prob * (ub - lb - epsilon * std::pow(beta, t_next));
}

std::vector<Belief> default_seeds(const Model& m, const Belief& b0) {
  std::vector<Belief> seeds{b0};
  for (int a : m.available_actions(agent_of(b0))) {
    for (auto& br : branches(m, b0, a)) seeds.push_back(std::move(br.belief));
  }
  return seeds;
}

Solver::Solver(const Model& m, Belief b0, SolveConfig config)
    : model_(&m),
      b0_(std::move(b0)),
      config_(config),
      max_depth_(config.max_depth.value_or(default_max_depth(m, config.epsilon))),
      state_(ValueBounds(m, default_seeds(m, b0_), solver_threads(config.parallel_ispp))),
      start_(std::chrono::steady_clock::now()) {
  if (!(config_.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  check_belief(m, b0_);
  const auto& g = m.global_bounds();
  if (g.upper > g.lower) {
    const double needed = std::ceil(std::log(config_.epsilon / (g.upper - g.lower)) / std::log(m.beta()));
    if (max_depth_ < needed) {
      std::cerr << "warning: max depth " << max_depth_ << " is below " << needed << " needed for the width test\n";
    }
  }
  state_.seed_count = default_seeds(m, b0_).size();
  record();
}

void Solver::record() {
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  const auto& vb = state_.bounds;
  state_.trace.push_back({state_.iterations, vb.lb(b0_).value, vb.ub(b0_), vb.lower().gamma.size(), vb.upper().size(), ms});
}

bool Solver::converged() const { return state_.gap() <= config_.epsilon; }

void Solver::update(const Belief& b, int t, const std::vector<ActionLookahead>* la) {
  state_.bounds.point_update(b, la);
  if (state_.updates_by_depth.size() <= static_cast<std::size_t>(t)) state_.updates_by_depth.resize(static_cast<std::size_t>(t) + 1, 0);
  ++state_.updates_by_depth[static_cast<std::size_t>(t)];
}

void Solver::explore(const Belief& b, int t) {
  auto& vb = state_.bounds;
  if (t >= max_depth_) return;
  if (vb.ub(b) - vb.lb(b).value <= config_.epsilon * std::pow(model_->beta(), -t)) return;

  const auto la = lookahead(*model_, b);
  const auto upper_backup = bellman_ub(*model_, vb.upper(), la);
  update(b, t, &la);

  // Largest weighted excess over every upper-backup maximizer; ties keep action order, then agent order.
  // Only children the width test at t + 1 would explore compete: recursing into a finished child is a
  // no-op, and picking one forever (a self-loop at its own fixed point) would stall the search.
  NodeLog node{t, {}, std::nullopt};
  const Belief* next = nullptr;
  double best = -std::numeric_limits<double>::infinity();
  const double child_width = config_.epsilon * std::pow(model_->beta(), -(t + 1));
  for (int a : upper_backup.maximizers) {
    const auto& entry = *std::find_if(la.begin(), la.end(), [&](const ActionLookahead& e) { return e.action == a; });
    std::vector<const Branch*> order;
    for (const auto& br : entry.branches) order.push_back(&br);
    std::stable_sort(order.begin(), order.end(), [&](const Branch* x, const Branch* y) {
      return model_->agent_index(x->agent) < model_->agent_index(y->agent);
    });
    for (const Branch* br : order) {
      const double ub = vb.ub(br->belief), lb = vb.lb(br->belief).value;
      const double ex = excess(br->prob, ub, lb, config_.epsilon, model_->beta(), t + 1);
      const bool open = t + 1 < max_depth_ && ub - lb > child_width;
      node.candidates.push_back({a, br->agent, br->prob, ub, lb, ex, open});
      if (open && ex > best) {
        best = ex;
        next = &br->belief;
        node.chosen = node.candidates.size() - 1;
      }
    }
  }
  if (config_.log_candidates) state_.nodes.push_back(node);
  if (next) explore(*next, t + 1);
  update(b, t);
}

void Solver::iterate() {
  explore(b0_, 0);
  ++state_.iterations;
  record();
}

SolveState Solver::run() {
  while (!converged() && state_.iterations < config_.max_iterations) iterate();
  state_.status = converged() ? SolveStatus::converged : SolveStatus::budget_exhausted;
  return std::move(state_);
}

SolveState solve(const Model& m, const Belief& b0, const SolveConfig& config) { return Solver(m, b0, config).run(); }

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "iter,lb,ub,gamma_size,upsilon_size,millis\n";
  for (const auto& r : trace) {
    out << r.iter << ',' << geom::format_number(r.lb) << ',' << geom::format_number(r.ub) << ',' << r.gamma_size << ','
        << r.upsilon_size << ',' << geom::format_number(r.millis) << '\n';
  }
}

}  // namespace nspomdp
