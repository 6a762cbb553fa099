#include "nspomdp/strategy.hpp"

#include <algorithm>
#include <ostream>

namespace nspomdp {

Backup LookaheadStrategy::evaluate(const Belief& b) const { return bellman_lb(*model_, lower_, lookahead(*model_, b)); }

int LookaheadStrategy::next_action(const Belief& b) const { return evaluate(b).maximizers.front(); }

SimRng run_rng(std::uint64_t seed, std::uint64_t run) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(run),
                    static_cast<std::uint32_t>(run >> 32)};
  return SimRng(seq);
}

namespace {

std::size_t pick(const std::vector<double>& weights, SimRng& rng) {
  return std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
}

}  // namespace

geom::Vector sample_state(const Model& m, const Belief& b, SimRng& rng) {
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) {
    std::vector<double> w;
    for (const auto& p : pb->particles) w.push_back(p.weight);
    return pb->particles[pick(w, rng)].point;
  }
  const auto& rb = std::get<RegionBelief>(b);
  std::vector<double> w;
  for (const auto& r : rb.regions) w.push_back(r.density * r.volume);
  const auto& region = rb.regions[pick(w, rng)].region;
  const auto vs = geom::vertices(region);
  geom::Vector lo = vs.front(), hi = vs.front();
  for (const auto& v : vs) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  geom::Vector x(m.dim());
  for (int tries = 0; tries < 100000; ++tries) {
    for (int i = 0; i < m.dim(); ++i) x[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
    if (region.contains(x, 0.0)) return x;
  }
  return geom::interior_point(region);
}

PathRecord simulate(const Model& m, const LookaheadStrategy& strategy, const Belief& b0, const geom::Vector& env0, int horizon,
                    SimRng& rng) {
  PathRecord path;
  const auto& suggested = m.suggested();
  path.has_suggestions = suggested.has_value();
  Belief b = b0;
  AgentState s = agent_of(b0);
  geom::Vector x = env0;
  if (!m.percept_compatible(s, x)) throw std::invalid_argument("initial state is not consistent with the belief's agent state");
  double discount = 1.0, loc_sum = 0.0;
  for (int k = 0; k < horizon; ++k) {
    const int a = strategy.next_action(b);
    const double r = m.reward(s, x, a);
    path.discounted_return += discount * r;
    discount *= m.beta();

    const auto succ = m.successors(s, x, a);
    std::vector<double> probs;
    for (const auto& sc : succ) probs.push_back(sc.prob);
    const auto& next = succ[pick(probs, rng)];

    if (suggested) {
      const auto& allowed = suggested->at(static_cast<std::size_t>(s.per));
      if (std::find(allowed.begin(), allowed.end(), a) != allowed.end()) ++path.compliant_steps;
    }
    loc_sum += s.loc;
    path.steps.push_back({s, x, a, r, next.agent, path.discounted_return});
    b = update(m, b, a, next.agent);
    s = next.agent;
    x = next.env;
  }
  if (!path.steps.empty()) path.mean_loc = loc_sum / static_cast<double>(path.steps.size());
  return path;
}

void write_path_csv_header(std::ostream& out, const Model& m) {
  static const char* axes[] = {"x", "y", "z"};
  out << "run,step,loc,per";
  for (int i = 0; i < m.dim(); ++i) {
    if (i < 3) out << ',' << axes[i];
    else out << ",x" << i;
  }
  out << ",action,reward,return_so_far\n";
}

void write_path_csv(std::ostream& out, const Model& m, std::size_t run, const PathRecord& path) {
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    const auto& st = path.steps[k];
    out << run << ',' << k << ',' << m.loc_label(st.agent.loc) << ',' << m.per_label(st.agent.per);
    for (int i = 0; i < m.dim(); ++i) out << ',' << geom::format_number(st.env[i]);
    out << ',' << m.action_label(st.action) << ',' << geom::format_number(st.reward) << ','
        << geom::format_number(st.return_so_far) << '\n';
  }
}

}  // namespace nspomdp
