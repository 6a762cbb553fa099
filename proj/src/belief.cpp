#include "nspomdp/belief.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace nspomdp {
namespace {

using geom::Polytope;
using geom::Vector;
using nlohmann::json;

bool same_point(const Vector& a, const Vector& b) { return (a - b).norm() <= eps_merge; }

void add_particle(std::vector<Particle>& ps, const Vector& x, double w) {
  for (auto& p : ps) {
    if (same_point(p.point, x)) {
      p.weight += w;
      return;
    }
  }
  ps.push_back({x, w});
}

double intersection_volume(const Polytope& a, const Polytope& b) { return geom::volume(geom::intersect(a, b)); }

// Mass of a region belief inside the perception regions of its agent state.
double compatible_volume(const Model& m, AgentState s, const Polytope& p) {
  double v = 0.0;
  for (std::size_t k : m.phi().of(s)) v += intersection_volume(p, m.phi()[k].polytope);
  return v;
}

std::vector<Branch> particle_branches(const Model& m, const ParticleBelief& b, int action) {
  const auto& dyn = m.env(action);
  std::map<AgentState, std::vector<Particle>> buckets;
  for (const auto& part : b.particles) {
    for (std::size_t c = 0; c < dyn.components.size(); ++c) {
      const Vector y = m.piece_for(action, c, part.point).map.apply(part.point);
      const double w = part.weight * dyn.components[c].weight;
      for (const auto& [loc, p_loc] : m.agent_next(b.agent, action)) {
        add_particle(buckets[AgentState{loc, m.observe(loc, y)}], y, w * p_loc);
      }
    }
  }
  std::vector<Branch> out;
  for (auto& [agent, ps] : buckets) {
    double total = 0.0;
    for (const auto& p : ps) total += p.weight;
    if (total <= 0.0) continue;
    for (auto& p : ps) p.weight /= total;
    out.push_back({agent, total, ParticleBelief{agent, std::move(ps)}});
  }
  return out;
}

std::vector<Branch> region_branches(const Model& m, const RegionBelief& b, int action) {
  const auto& dyn = m.env(action);
  const auto& phi = m.phi();
  std::map<AgentState, std::vector<DensityRegion>> buckets;
  for (const auto& [loc, p_loc] : m.agent_next(b.agent, action)) {
    for (const auto& reg : b.regions) {
      for (const auto& comp : dyn.components) {
        for (const auto& piece : comp.pieces) {
          const auto dom = geom::intersect(reg.region, piece.guard);
          if (!geom::is_full_dimensional(dom)) continue;
          const auto image = geom::affine_image(dom, piece.map);
          // Densities scale by the inverse Jacobian of the piece.
          const double density = p_loc * reg.density * comp.weight / std::abs(piece.map.determinant());
          for (std::size_t k : phi.of_loc(loc)) {
            const auto frag = geom::intersect(image, phi[k].polytope);
            if (!geom::is_full_dimensional(frag)) continue;
            auto simple = geom::simplify(frag);
            const double vol = geom::volume(simple);
            if (vol < geom::eps_vol) continue;
            buckets[phi[k].agent].push_back({std::move(simple), density, vol});
          }
        }
      }
    }
  }
  std::vector<Branch> out;
  for (auto& [agent, regs] : buckets) {
    double total = 0.0;
    for (const auto& r : regs) total += r.density * r.volume;
    if (total <= 0.0) continue;
    for (auto& r : regs) r.density /= total;
    out.push_back({agent, total, RegionBelief{agent, std::move(regs)}});
  }
  return out;
}

Branch pick(std::vector<Branch> all, AgentState next) {
  for (auto& br : all) {
    if (br.agent == next) return std::move(br);
  }
  throw ObservationError("observation has zero probability under the belief");
}

Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected a list of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(where + ": expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

std::string label_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  return j.dump();
}

json polytope_json(const Polytope& p) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < p.normals().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < p.normals().cols(); ++c) row.push_back(p.normals()(i, c));
    row.push_back(p.offsets()(i));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

AgentState agent_of(const Belief& b) {
  return std::visit([](const auto& x) { return x.agent; }, b);
}

ParticleBelief make_particle_belief(const Model& m, AgentState s, const std::vector<Vector>& points,
                                    std::vector<double> weights) {
  if (points.empty()) throw std::invalid_argument("particle belief needs at least one point");
  if (weights.empty()) weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
  if (weights.size() != points.size()) throw std::invalid_argument("particle belief: weights and points differ in length");
  ParticleBelief b{s, {}};
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("particle belief: weights must be positive");
    if (points[i].size() != m.dim()) throw std::invalid_argument("particle belief: point dimension differs from the model");
    if (!m.percept_compatible(s, points[i])) {
      throw std::invalid_argument("particle belief: point " + std::to_string(i) + " is not percept compatible with " +
                                  m.describe(s));
    }
    add_particle(b.particles, points[i], weights[i]);
    total += weights[i];
  }
  for (auto& p : b.particles) p.weight /= total;
  return b;
}

RegionBelief make_region_belief(const Model& m, AgentState s, const std::vector<Polytope>& regions,
                                std::vector<double> densities) {
  if (regions.empty()) throw std::invalid_argument("region belief needs at least one region");
  if (densities.empty()) densities.assign(regions.size(), 1.0);
  if (densities.size() != regions.size()) throw std::invalid_argument("region belief: densities and regions differ in length");
  RegionBelief b{s, {}};
  double total = 0.0;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (!(densities[i] > 0.0)) throw std::invalid_argument("region belief: densities must be positive");
    if (regions[i].dim() != m.dim()) throw std::invalid_argument("region belief: region dimension differs from the model");
    const double vol = geom::volume(regions[i]);
    if (vol < geom::eps_vol) continue;
    const double inside = compatible_volume(m, s, regions[i]);
    if (inside < vol - 1e-9 * std::max(1.0, vol)) {
      throw std::invalid_argument("region belief: region " + std::to_string(i) + " is not percept compatible with " +
                                  m.describe(s));
    }
    b.regions.push_back({geom::simplify(regions[i]), densities[i], vol});
    total += densities[i] * vol;
  }
  if (b.regions.empty()) throw std::invalid_argument("region belief: every region is degenerate");
  for (auto& r : b.regions) r.density /= total;
  return b;
}

void check_belief(const Model& m, const Belief& b) {
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) {
    double total = 0.0;
    for (const auto& p : pb->particles) {
      if (!(p.weight > 0.0)) throw std::invalid_argument("particle weight not positive");
      if (!m.percept_compatible(pb->agent, p.point)) throw std::invalid_argument("particle not percept compatible");
      total += p.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("particle weights sum to " + geom::format_number(total));
    return;
  }
  const auto& rb = std::get<RegionBelief>(b);
  double total = 0.0;
  for (const auto& r : rb.regions) {
    if (!(r.density > 0.0)) throw std::invalid_argument("region density not positive");
    if (compatible_volume(m, rb.agent, r.region) < r.volume - 1e-9 * std::max(1.0, r.volume)) {
      throw std::invalid_argument("region not percept compatible");
    }
    total += r.density * r.volume;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("region mass sums to " + geom::format_number(total));
}

std::vector<Branch> branches(const Model& m, const Belief& b, int action) {
  const AgentState s = agent_of(b);
  if (!m.available(s, action)) {
    throw std::invalid_argument("action '" + m.action_label(action) + "' unavailable at " + m.describe(s));
  }
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) return particle_branches(m, *pb, action);
  return region_branches(m, std::get<RegionBelief>(b), action);
}

double obs_prob(const Model& m, const Belief& b, int action, AgentState next) {
  for (const auto& br : branches(m, b, action)) {
    if (br.agent == next) return br.prob;
  }
  return 0.0;
}

ParticleBelief particle_update(const Model& m, const ParticleBelief& b, int action, AgentState next) {
  return std::get<ParticleBelief>(pick(branches(m, b, action), next).belief);
}

RegionBelief region_update(const Model& m, const RegionBelief& b, int action, AgentState next) {
  return std::get<RegionBelief>(pick(branches(m, b, action), next).belief);
}

Belief update(const Model& m, const Belief& b, int action, AgentState next) {
  return pick(branches(m, b, action), next).belief;
}

double point_mass(const ParticleBelief& b, const Vector& x) {
  double w = 0.0;
  for (const auto& p : b.particles) {
    if (same_point(p.point, x)) w += p.weight;
  }
  return w;
}

double mass_in(const Belief& b, const Polytope& p) {
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) {
    double w = 0.0;
    for (const auto& part : pb->particles) {
      if (p.contains(part.point)) w += part.weight;
    }
    return w;
  }
  double w = 0.0;
  for (const auto& r : std::get<RegionBelief>(b).regions) w += r.density * intersection_volume(r.region, p);
  return w;
}

double expect(const std::vector<Piece>& pieces, const Belief& b) {
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) {
    double v = 0.0;
    for (const auto& part : pb->particles) {
      const auto it = std::find_if(pieces.begin(), pieces.end(), [&](const Piece& p) { return p.region.contains(part.point); });
      if (it == pieces.end()) throw DomainError("expectation: particle outside every piece");
      v += part.weight * it->value;
    }
    return v;
  }
  double v = 0.0;
  for (const auto& r : std::get<RegionBelief>(b).regions) {
    for (const auto& p : pieces) {
      if (p.value == 0.0) continue;
      v += p.value * r.density * intersection_volume(r.region, p.region);
    }
  }
  return v;
}

double expected_reward(const Model& m, const Belief& b, int action) {
  return expect(m.reward_pieces(action, agent_of(b)), b);
}

Belief parse_belief(const Model& m, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(e.what(), line, col);
  }
  try {
    if (!j.is_object()) throw std::invalid_argument("belief: expected an object");
    const auto& as = j.at("agent_state");
    if (!as.is_array() || as.size() != 2) throw std::invalid_argument("belief: agent_state must be [loc, per]");
    const auto loc = m.find_loc(label_text(as[0]));
    const auto per = m.find_per(label_text(as[1]));
    if (!loc || !per) throw std::invalid_argument("belief: unknown agent state " + as.dump());
    const AgentState s{*loc, *per};
    const auto type = j.at("type").get<std::string>();
    if (type == "particles") {
      std::vector<Vector> points;
      for (const auto& p : j.at("points")) points.push_back(vector_of(p, "belief.points"));
      std::vector<double> weights;
      if (j.contains("weights")) {
        const auto w = vector_of(j.at("weights"), "belief.weights");
        weights.assign(w.data(), w.data() + w.size());
      }
      return make_particle_belief(m, s, points, std::move(weights));
    }
    if (type == "region") {
      std::vector<Polytope> regions;
      for (const auto& p : j.at("polytopes")) regions.push_back(parse_polytope_json(p.dump()));
      std::vector<double> densities;
      if (j.contains("densities")) {
        const auto w = vector_of(j.at("densities"), "belief.densities");
        densities.assign(w.data(), w.data() + w.size());
      }
      return make_region_belief(m, s, regions, std::move(densities));
    }
    throw std::invalid_argument("belief: unknown type '" + type + "'");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("belief: ") + e.what());
  } catch (const ValidationError& e) {
    throw std::invalid_argument(std::string("belief: ") + e.what());
  }
}

Belief load_belief_file(const Model& m, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_belief(m, ss.str());
}

std::string format_belief(const Model& m, const Belief& b) {
  const AgentState s = agent_of(b);
  json j;
  j["agent_state"] = {m.loc_label(s.loc), m.per_label(s.per)};
  if (const auto* pb = std::get_if<ParticleBelief>(&b)) {
    j["type"] = "particles";
    json points = json::array(), weights = json::array();
    for (const auto& p : pb->particles) {
      points.push_back(std::vector<double>(p.point.data(), p.point.data() + p.point.size()));
      weights.push_back(p.weight);
    }
    j["points"] = std::move(points);
    j["weights"] = std::move(weights);
  } else {
    j["type"] = "region";
    json polys = json::array(), densities = json::array();
    for (const auto& r : std::get<RegionBelief>(b).regions) {
      polys.push_back(polytope_json(r.region));
      densities.push_back(r.density);
    }
    j["polytopes"] = std::move(polys);
    j["densities"] = std::move(densities);
  }
  return j.dump();
}

}  // namespace nspomdp
