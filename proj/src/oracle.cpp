#include "nspomdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nspomdp {
namespace {

using Key = std::vector<long long>;

Key canonical(const Model& m, int k, const ParticleBelief& b) {
  std::vector<std::vector<long long>> parts;
  for (const auto& p : b.particles) {
    std::vector<long long> row;
    for (Eigen::Index i = 0; i < p.point.size(); ++i) row.push_back(std::llround(p.point[i] * 1e9));
    row.push_back(std::llround(p.weight * 1e12));
    parts.push_back(std::move(row));
  }
  std::sort(parts.begin(), parts.end());
  Key key{k, static_cast<long long>(m.agent_index(b.agent))};
  for (const auto& row : parts) key.insert(key.end(), row.begin(), row.end());
  return key;
}

class Unroller {
 public:
  Unroller(const Model& m, std::size_t budget) : m_(m), budget_(budget) {}

  double value(int k, const ParticleBelief& b) {
    if (k == 0) return 0.0;
    auto key = canonical(m_, k, b);
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= budget_) {
      throw BudgetError("finite-horizon oracle exceeded " + std::to_string(budget_) + " belief nodes");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int a : m_.available_actions(b.agent)) {
      double q = expected_reward(m_, b, a);
      for (const auto& br : branches(m_, b, a)) q += m_.beta() * br.prob * value(k - 1, std::get<ParticleBelief>(br.belief));
      best = std::max(best, q);
    }
    memo_.emplace(std::move(key), best);
    return best;
  }

  std::size_t nodes() const { return memo_.size(); }

 private:
  const Model& m_;
  std::size_t budget_;
  std::map<Key, double> memo_;
};

}  // namespace

HorizonValue finite_horizon_value(const Model& m, const ParticleBelief& b, int horizon, std::size_t budget) {
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  check_belief(m, Belief(b));
  Unroller unroll(m, budget);
  HorizonValue out;
  out.horizon = horizon;
  out.value = unroll.value(horizon, b);
  const double tail = std::pow(m.beta(), horizon);
  out.lower = out.value + tail * m.global_bounds().lower;
  out.upper = out.value + tail * m.global_bounds().upper;
  out.nodes = unroll.nodes();
  return out;
}

}  // namespace nspomdp
