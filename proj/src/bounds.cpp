#include "nspomdp/bounds.hpp"

#include "nspomdp/lp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <limits>
#include <thread>

namespace nspomdp {
namespace {

using geom::Polytope;
using geom::Vector;

double intersection_volume(const Polytope& a, const Polytope& b) { return geom::volume(geom::intersect(a, b)); }

bool near_max(double q, double best) { return std::abs(q - best) <= 1e-9 * std::max(1.0, std::abs(best)); }

void warn_mixed_types() {
  static std::once_flag once;
  std::call_once(once, [] {
    std::cerr << "warning: upper bound queried with a belief type that differs from the stored points; using U\n";
  });
}

// Mass of a region belief inside each perception region of its agent state.
std::vector<double> region_masses(const Model& m, const RegionBelief& b) {
  const auto& idx = m.phi().of(b.agent);
  std::vector<double> masses(idx.size(), 0.0);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    for (const auto& r : b.regions) masses[j] += r.density * intersection_volume(r.region, m.phi()[idx[j]].polytope);
  }
  return masses;
}

double expect_region(const Model& m, const AlphaFunction& alpha, const RegionBelief& b, const std::vector<double>& masses) {
  const auto& idx = m.phi().of(b.agent);
  double v = 0.0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& pieces = alpha.pieces(idx[j]);
    if (pieces.empty()) {
      v += alpha.fill() * masses[j];
      continue;
    }
    for (const auto& p : pieces) {
      double mass = 0.0;
      for (const auto& r : b.regions) mass += r.density * intersection_volume(r.region, p.region);
      v += p.value * mass;
    }
  }
  return v;
}

bool has_mass(const Model& m, const Belief& b, std::size_t region) {
  const auto& poly = m.phi()[region].polytope;
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) {
    return std::any_of(pb->particles.begin(), pb->particles.end(), [&](const Particle& p) { return poly.contains(p.point); });
  }
  for (const auto& r : std::get<RegionBelief>(b).regions) {
    if (intersection_volume(r.region, poly) > geom::eps_vol) return true;
  }
  return false;
}

lp::LpOutcome solve_ub_lp(const lp::LinearProgram& program) {
  auto out = lp::solve(program);
  if (out.status != lp::Status::optimal) throw lp::NumericalError("upper bound LP did not reach an optimum");
  return out;
}

// Columns with identical coefficients collapse to the smallest value.
void add_column(std::vector<std::vector<double>>& cols, std::vector<double>& ys, std::vector<double> col, double y) {
  for (std::size_t k = 0; k < cols.size(); ++k) {
    bool same = true;
    for (std::size_t i = 0; i < col.size() && same; ++i) same = std::abs(cols[k][i] - col[i]) <= 1e-12;
    if (same) {
      ys[k] = std::min(ys[k], y);
      return;
    }
  }
  cols.push_back(std::move(col));
  ys.push_back(y);
}

struct Box {
  Vector lo, hi;
};

// Axis-aligned bounds from the vertices; unbounded extent when vertices are unavailable.
Box bounding_box(const Polytope& p) {
  const auto n = p.dim();
  Box b{Vector::Constant(n, -std::numeric_limits<double>::infinity()), Vector::Constant(n, std::numeric_limits<double>::infinity())};
  if (n > 3) return b;
  const auto vs = geom::vertices(p);
  if (vs.empty()) return b;
  b.lo = vs.front();
  b.hi = vs.front();
  for (const auto& v : vs) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

bool boxes_overlap(const Box& a, const Box& b) {
  for (Eigen::Index i = 0; i < a.lo.size(); ++i) {
    if (a.hi[i] < b.lo[i] + geom::eps_num || b.hi[i] < a.lo[i] + geom::eps_num) return false;
  }
  return true;
}

std::vector<Polytope> product(const std::vector<Polytope>& a, const std::vector<Polytope>& b) {
  std::vector<Box> a_box, b_box;
  for (const auto& p : a) a_box.push_back(bounding_box(p));
  for (const auto& q : b) b_box.push_back(bounding_box(q));
  std::vector<Polytope> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!boxes_overlap(a_box[i], b_box[j])) continue;
      const auto& q = b[j];
      const auto cut = geom::intersect(p, q);
      if (geom::is_full_dimensional(cut)) out.push_back(geom::simplify(cut));
    }
  }
  return out;
}

std::shared_ptr<const IsppCache::Table> build_table(const Model& m, std::size_t region, int action, int next_loc,
                                                    std::size_t component) {
  auto table = std::make_shared<IsppCache::Table>();
  const auto& phi = m.phi();
  for (const auto& piece : m.env(action).components.at(component).pieces) {
    const auto dom = geom::intersect(phi[region].polytope, piece.guard);
    if (!geom::is_full_dimensional(dom)) continue;
    IsppCache::PieceImage pi{geom::simplify(dom), piece.map, {}};
    const auto image = geom::affine_image(pi.dom, piece.map);
    for (std::size_t k : phi.of_loc(next_loc)) {
      const auto frag = geom::intersect(image, phi[k].polytope);
      if (geom::is_full_dimensional(frag)) pi.fragments.push_back({k, geom::simplify(frag)});
    }
    table->push_back(std::move(pi));
  }
  return table;
}

}  // namespace

AlphaFunction::AlphaFunction(std::size_t num_regions, double fill) : fill_(fill), by_region_(num_regions) {}

std::size_t AlphaFunction::num_pieces() const {
  std::size_t n = 0;
  for (const auto& r : by_region_) n += r.empty() ? 1 : r.size();
  return n;
}

double AlphaFunction::value(const Model& m, AgentState s, const Vector& x) const {
  const auto k = m.phi().locate(s, x);
  if (!k) return fill_;
  const auto& pieces = by_region_.at(*k);
  if (pieces.empty()) return fill_;
  const Piece* closest = nullptr;
  double slack = -std::numeric_limits<double>::infinity();
  for (const auto& p : pieces) {
    if (p.region.contains(x)) return p.value;
    const double sl = p.region.min_slack(x);
    if (sl > slack) {
      slack = sl;
      closest = &p;
    }
  }
  // Rounding left x just outside every piece; take the nearest.
  return closest->value;
}

double AlphaFunction::expect(const Model& m, const Belief& b) const {
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) {
    double v = 0.0;
    for (const auto& p : pb->particles) v += p.weight * value(m, pb->agent, p.point);
    return v;
  }
  const auto& rb = std::get<RegionBelief>(b);
  return expect_region(m, *this, rb, region_masses(m, rb));
}

LbValue lb_value(const Model& m, const LowerBound& lower, const Belief& b) {
  if (lower.gamma.empty()) throw std::logic_error("lower bound has no alpha functions");
  LbValue best{-std::numeric_limits<double>::infinity(), 0};
  std::vector<double> masses;
  const auto* rb = std::get_if<RegionBelief>(&b);
  if (rb) masses = region_masses(m, *rb);
  for (std::size_t i = 0; i < lower.gamma.size(); ++i) {
    const double v = rb ? expect_region(m, *lower.gamma[i], *rb, masses) : lower.gamma[i]->expect(m, b);
    if (v > best.value) best = {v, i};
  }
  return best;
}

bool same_belief(const Belief& a, const Belief& b) {
  if (a.index() != b.index() || agent_of(a) != agent_of(b)) return false;
  if (const auto* pa = std::get_if<ParticleBelief>(&a)) {
    const auto& pb = std::get<ParticleBelief>(b);
    if (pa->particles.size() != pb.particles.size()) return false;
    for (const auto& p : pa->particles) {
      if (std::abs(point_mass(pb, p.point) - p.weight) > 1e-12) return false;
    }
    return true;
  }
  const auto& ra = std::get<RegionBelief>(a).regions;
  const auto& rb = std::get<RegionBelief>(b).regions;
  if (ra.size() != rb.size()) return false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const auto& x = ra[i].region;
    const auto& y = rb[i].region;
    if (x.num_halfspaces() != y.num_halfspaces()) return false;
    if ((x.normals() - y.normals()).cwiseAbs().maxCoeff() > 1e-12) return false;
    if ((x.offsets() - y.offsets()).cwiseAbs().maxCoeff() > 1e-12) return false;
    if (std::abs(ra[i].density - rb[i].density) > 1e-12 * std::max(1.0, ra[i].density)) return false;
  }
  return true;
}

void UpperBoundSet::add(const Model& m, Belief b, double y) {
  const auto a = m.agent_index(agent_of(b));
  if (by_agent_.size() != m.num_agent_states()) by_agent_.resize(m.num_agent_states());
  for (std::size_t k : by_agent_[a]) {
    if (same_belief(entries_[k].belief, b)) {
      entries_[k].value = std::min(entries_[k].value, y);
      return;
    }
  }
  by_agent_[a].push_back(entries_.size());
  entries_.push_back({std::move(b), y});
}

double ub_value_particle(const Model& m, const UpperBoundSet& upper, const ParticleBelief& b) {
  const auto& g = m.global_bounds();
  std::vector<std::vector<double>> cols;
  std::vector<double> ys;
  double exact = std::numeric_limits<double>::infinity();
  bool other_types = false;
  for (std::size_t k : upper.of(m.agent_index(b.agent))) {
    const auto& e = upper.entries()[k];
    const auto* pk = std::get_if<ParticleBelief>(&e.belief);
    if (!pk) {
      other_types = true;
      continue;
    }
    if (same_belief(e.belief, Belief(b))) exact = std::min(exact, e.value);
    std::vector<double> col;
    col.reserve(b.particles.size());
    for (const auto& p : b.particles) col.push_back(point_mass(*pk, p.point));
    add_column(cols, ys, std::move(col), e.value);
  }
  if (cols.empty()) {
    if (other_types) warn_mixed_types();
    return g.upper;
  }
  const double spread = g.upper - g.lower;
  if (spread <= 0.0) return std::min(exact, *std::min_element(ys.begin(), ys.end()));

  // Variables: lambda_1..lambda_K, then c.
  const std::size_t K = cols.size(), n = b.particles.size();
  lp::LinearProgram prog;
  prog.objective = ys;
  prog.objective.push_back(spread * static_cast<double>(n));
  prog.bounds.assign(K + 1, lp::VarBounds{0.0, std::numeric_limits<double>::infinity()});
  for (std::size_t i = 0; i < n; ++i) {
    lp::Constraint up{std::vector<double>(K + 1, 0.0), lp::Relation::greater_equal, b.particles[i].weight};
    lp::Constraint down{std::vector<double>(K + 1, 0.0), lp::Relation::greater_equal, -b.particles[i].weight};
    for (std::size_t k = 0; k < K; ++k) {
      up.coeffs[k] = cols[k][i];
      down.coeffs[k] = -cols[k][i];
    }
    up.coeffs[K] = 1.0;
    down.coeffs[K] = 1.0;
    prog.constraints.push_back(std::move(up));
    prog.constraints.push_back(std::move(down));
  }
  lp::Constraint simplex{std::vector<double>(K + 1, 1.0), lp::Relation::equal, 1.0};
  simplex.coeffs[K] = 0.0;
  prog.constraints.push_back(std::move(simplex));
  const auto out = solve_ub_lp(prog);
  return std::min(out.value, exact);
}

std::vector<std::size_t> max_density_subset(const RegionBelief& b) {
  const std::size_t n = b.regions.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return b.regions[x].density > b.regions[y].density; });
  if (n > 12) {
    // Greedy chain, largest weight first.
    std::vector<std::size_t> chosen{order[0]};
    Polytope common = b.regions[order[0]].region;
    for (std::size_t j = 1; j < n; ++j) {
      const auto cut = geom::intersect(common, b.regions[order[j]].region);
      if (geom::is_full_dimensional(cut)) {
        common = cut;
        chosen.push_back(order[j]);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }
  std::vector<double> rest(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;) rest[j] = rest[j + 1] + b.regions[order[j]].density;
  std::vector<std::size_t> best, current;
  double best_w = -1.0;
  std::function<void(std::size_t, const Polytope*, double)> dfs = [&](std::size_t j, const Polytope* common, double w) {
    if (w + rest[j] <= best_w) return;
    if (j == n) {
      best = current;
      best_w = w;
      return;
    }
    const auto& reg = b.regions[order[j]].region;
    const Polytope next = common ? geom::intersect(*common, reg) : reg;
    if (geom::is_full_dimensional(next)) {
      current.push_back(order[j]);
      dfs(j + 1, &next, w + b.regions[order[j]].density);
      current.pop_back();
    }
    dfs(j + 1, common, w);
  };
  dfs(0, nullptr, 0.0);
  std::sort(best.begin(), best.end());
  return best;
}

double ub_value_region(const Model& m, const UpperBoundSet& upper, const RegionBelief& b) {
  const auto& g = m.global_bounds();
  std::vector<const RegionBelief*> stored;
  std::vector<double> ys;
  double exact = std::numeric_limits<double>::infinity();
  bool other_types = false;
  for (std::size_t k : upper.of(m.agent_index(b.agent))) {
    const auto& e = upper.entries()[k];
    const auto* rk = std::get_if<RegionBelief>(&e.belief);
    if (!rk) {
      other_types = true;
      continue;
    }
    if (same_belief(e.belief, Belief(b))) exact = std::min(exact, e.value);
    stored.push_back(rk);
    ys.push_back(e.value);
  }
  if (stored.empty()) {
    if (other_types) warn_mixed_types();
    return g.upper;
  }
  const auto subset = max_density_subset(b);
  Polytope peak = b.regions[subset[0]].region;
  for (std::size_t j = 1; j < subset.size(); ++j) peak = geom::intersect(peak, b.regions[subset[j]].region);
  peak = geom::simplify(peak);

  std::vector<std::vector<double>> cols;
  std::vector<double> col_ys;
  for (std::size_t k = 0; k < stored.size(); ++k) {
    double overlap = 0.0;
    for (const auto& r : stored[k]->regions) overlap += r.density * intersection_volume(r.region, peak);
    add_column(cols, col_ys, {overlap}, ys[k]);
  }
  const double spread = g.upper - g.lower;
  if (spread <= 0.0) return std::min(exact, *std::min_element(col_ys.begin(), col_ys.end()));
  const std::size_t K = cols.size();
  lp::LinearProgram prog;
  prog.objective = col_ys;
  prog.objective.push_back(spread);
  prog.bounds.assign(K + 1, lp::VarBounds{0.0, std::numeric_limits<double>::infinity()});
  // c + sum lambda_k overlap_k >= 1
  lp::Constraint cover{std::vector<double>(K + 1, 1.0), lp::Relation::greater_equal, 1.0};
  for (std::size_t k = 0; k < K; ++k) cover.coeffs[k] = cols[k][0];
  prog.constraints.push_back(std::move(cover));
  lp::Constraint simplex{std::vector<double>(K + 1, 1.0), lp::Relation::equal, 1.0};
  simplex.coeffs[K] = 0.0;
  prog.constraints.push_back(std::move(simplex));
  const auto out = solve_ub_lp(prog);
  return std::min(out.value, exact);
}

double ub_value(const Model& m, const UpperBoundSet& upper, const Belief& b) {
  // U bounds the value everywhere; the interpolation can overshoot it far from stored points.
  const double raw = std::holds_alternative<ParticleBelief>(b) ? ub_value_particle(m, upper, std::get<ParticleBelief>(b))
                                                              : ub_value_region(m, upper, std::get<RegionBelief>(b));
  return std::min(raw, m.global_bounds().upper);
}

std::vector<ActionLookahead> lookahead(const Model& m, const Belief& b) {
  std::vector<ActionLookahead> out;
  for (int a : m.available_actions(agent_of(b))) out.push_back({a, expected_reward(m, b, a), branches(m, b, a)});
  return out;
}

namespace {

template <class Value>
Backup backup_with(const Model& m, const std::vector<ActionLookahead>& la, Value&& value) {
  Backup out;
  out.value = -std::numeric_limits<double>::infinity();
  for (const auto& entry : la) {
    double q = entry.reward;
    for (const auto& br : entry.branches) q += m.beta() * br.prob * value(br.belief);
    out.q.push_back(q);
    out.value = std::max(out.value, q);
  }
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (near_max(out.q[i], out.value)) out.maximizers.push_back(la[i].action);
  }
  return out;
}

}  // namespace

Backup bellman_lb(const Model& m, const LowerBound& lower, const std::vector<ActionLookahead>& la) {
  return backup_with(m, la, [&](const Belief& b) { return lb_value(m, lower, b).value; });
}

Backup bellman_ub(const Model& m, const UpperBoundSet& upper, const std::vector<ActionLookahead>& la) {
  return backup_with(m, la, [&](const Belief& b) { return ub_value(m, upper, b); });
}

double bval(const Model& m, AgentState s, const Vector& x, int action, AgentState next, const AlphaFunction& alpha) {
  double v = 0.0;
  for (const auto& succ : m.successors(s, x, action)) {
    if (succ.agent == next) v += succ.prob * alpha.value(m, succ.agent, succ.env);
  }
  return m.beta() * v;
}

double backup_at(const Model& m, AgentState s, const Vector& x, int action, const AlphaChoice& choice) {
  double v = 0.0;
  for (const auto& succ : m.successors(s, x, action)) v += succ.prob * choice(succ.agent).value(m, succ.agent, succ.env);
  return m.reward(s, x, action) + m.beta() * v;
}

std::shared_ptr<const IsppCache::Table> IsppCache::get(const Model& m, std::size_t region, int action, int next_loc,
                                                       std::size_t component) {
  const auto key = std::make_tuple(region, action, next_loc, component);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = tables_.find(key);
    if (it != tables_.end()) return it->second;
  }
  auto table = build_table(m, region, action, next_loc, component);
  std::lock_guard<std::mutex> lock(mutex_);
  return tables_.emplace(key, std::move(table)).first->second;
}

std::vector<Piece> ispp_backup(const Model& m, std::size_t region, int action, const AlphaChoice& choice, IsppCache* cache) {
  const auto& phi = m.phi();
  const AgentState s = phi[region].agent;
  const auto& dyn = m.env(action);
  std::vector<Polytope> cells{phi[region].polytope};
  for (const auto& [next_loc, p_loc] : m.agent_next(s, action)) {
    for (std::size_t c = 0; c < dyn.components.size(); ++c) {
      const auto table = cache ? cache->get(m, region, action, next_loc, c) : build_table(m, region, action, next_loc, c);
      std::vector<Polytope> pre;
      for (const auto& pi : *table) {
        for (const auto& frag : pi.fragments) {
          const auto& pieces = choice(phi[frag.target].agent).pieces(frag.target);
          if (pieces.empty()) {
            pre.push_back(geom::affine_preimage(frag.image, pi.map));
            continue;
          }
          for (const auto& q : pieces) {
            const auto cut = geom::intersect(frag.image, q.region);
            if (geom::is_full_dimensional(cut)) pre.push_back(geom::affine_preimage(cut, pi.map));
          }
        }
      }
      cells = product(cells, pre);
    }
  }
  std::vector<Polytope> rewards;
  for (const auto& p : m.reward_pieces(action, s)) rewards.push_back(p.region);
  cells = product(cells, rewards);

  const auto& g = m.global_bounds();
  std::vector<Piece> out;
  out.reserve(cells.size());
  for (auto& cell : cells) {
    const Vector x = geom::interior_point(cell);
    const double v = std::clamp(backup_at(m, s, x, action, choice), g.lower, g.upper);
    out.push_back({std::move(cell), v});
  }
  return out;
}

std::vector<AlphaPtr> exact_vi_step(const Model& m, const LowerBound& lower, std::size_t budget) {
  const std::size_t n_states = m.num_agent_states();
  const std::size_t n_gamma = lower.gamma.size();
  if (n_gamma == 0) throw std::logic_error("lower bound has no alpha functions");
  double count = static_cast<double>(m.num_actions());
  for (std::size_t i = 0; i < n_states; ++i) count *= static_cast<double>(n_gamma);
  if (count > static_cast<double>(budget)) {
    throw BudgetError("exact value iteration needs " + geom::format_number(count) + " alpha functions, budget " +
                      std::to_string(budget));
  }
  IsppCache cache;
  const auto& g = m.global_bounds();
  std::vector<AlphaPtr> out;
  for (int a = 0; a < m.num_actions(); ++a) {
    std::vector<std::size_t> pick(n_states, 0);
    while (true) {
      const AlphaChoice choice = [&](AgentState s) -> const AlphaFunction& { return *lower.gamma[pick[m.agent_index(s)]]; };
      auto alpha = std::make_shared<AlphaFunction>(m.phi().size(), g.lower);
      for (std::size_t k = 0; k < m.phi().size(); ++k) {
        if (m.available(m.phi()[k].agent, a)) alpha->set_pieces(k, ispp_backup(m, k, a, choice, &cache));
      }
      out.push_back(std::move(alpha));
      std::size_t i = 0;
      while (i < n_states && ++pick[i] == n_gamma) pick[i++] = 0;
      if (i == n_states) break;
    }
  }
  return out;
}

ValueBounds::ValueBounds(const Model& m, const std::vector<Belief>& seeds, int threads)
    : model_(&m), upper_(m.num_agent_states()), cache_(std::make_unique<IsppCache>()), threads_(std::max(1, threads)) {
  lower_.gamma.push_back(std::make_shared<AlphaFunction>(m.phi().size(), m.global_bounds().blind));
  for (const auto& b : seeds) upper_.add(m, b, m.global_bounds().upper);
}

void ValueBounds::replace(LowerBound lower, UpperBoundSet upper) {
  if (lower.gamma.empty()) throw std::invalid_argument("lower bound needs at least one alpha function");
  lower_ = std::move(lower);
  upper_ = std::move(upper);
}

UpdateResult ValueBounds::point_update(const Belief& b, const std::vector<ActionLookahead>* given) {
  const Model& m = *model_;
  const auto& g = m.global_bounds();
  std::vector<ActionLookahead> own;
  if (!given) own = lookahead(m, b);
  const auto& la = given ? *given : own;

  UpdateResult res;
  const auto lower_backup = bellman_lb(m, lower_, la);
  res.action = lower_backup.maximizers.front();
  res.lb_backup = lower_backup.value;
  const auto entry = std::find_if(la.begin(), la.end(), [&](const ActionLookahead& e) { return e.action == res.action; });

  // Per observation, the alpha maximizing the successor value; others take the first alpha.
  std::vector<const AlphaFunction*> chosen(m.num_agent_states(), lower_.gamma.front().get());
  for (const auto& br : entry->branches) chosen[m.agent_index(br.agent)] = lower_.gamma[lb_value(m, lower_, br.belief).index].get();
  const AlphaChoice choice = [&](AgentState s) -> const AlphaFunction& { return *chosen[m.agent_index(s)]; };

  std::vector<std::size_t> regions;
  for (std::size_t k : m.phi().of(agent_of(b))) {
    if (has_mass(m, b, k)) regions.push_back(k);
  }
  std::vector<std::vector<Piece>> results(regions.size());
  const auto workers = static_cast<std::size_t>(std::min<int>(threads_, static_cast<int>(regions.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < regions.size(); ++i) results[i] = ispp_backup(m, regions[i], res.action, choice, cache_.get());
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < regions.size(); i = next++) {
            results[i] = ispp_backup(m, regions[i], res.action, choice, cache_.get());
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  auto alpha = std::make_shared<AlphaFunction>(m.phi().size(), g.lower);
  for (std::size_t i = 0; i < regions.size(); ++i) alpha->set_pieces(regions[i], std::move(results[i]));
  res.alpha_value = alpha->expect(m, b);
  res.alpha = alpha;
  if (res.alpha_value > lb_value(m, lower_, b).value + eps_prune) {
    lower_.gamma.push_back(alpha);
    res.alpha_added = true;
  }

  res.ub_backup = std::min(bellman_ub(m, upper_, la).value, g.upper);
  upper_.add(m, b, res.ub_backup);
  return res;
}

int threads_from_env() {
  const char* v = std::getenv("NSPOMDP_THREADS");
  if (!v) return 1;
  try {
    return std::max(1, std::stoi(v));
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace nspomdp
