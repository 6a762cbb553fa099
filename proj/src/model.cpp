#include "nspomdp/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nspomdp {
namespace {

using geom::Matrix;
using geom::Polytope;
using geom::Vector;
using nlohmann::json;

std::string join_issues(const std::vector<std::string>& issues) {
  std::string s = "model validation failed";
  for (const auto& i : issues) s += "; " + i;
  return s;
}

std::string fmt(double v) { return geom::format_number(v); }

// Structural problem while reading the JSON tree.
[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError({where + ": " + what});
}

std::string label_of(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_number()) return j.dump();
  fail(where, "expected a label (string or number)");
}

double number_of(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return j.at(key);
}

Polytope polytope_of(const json& j, int dim, const std::string& where) {
  if (j.is_object()) {
    const auto& box = member(j, "box", where);
    if (!box.is_array() || (dim > 0 && static_cast<int>(box.size()) != dim)) fail(where, "box has wrong dimension");
    Vector lo(static_cast<Eigen::Index>(box.size())), hi(lo.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
      if (!box[i].is_array() || box[i].size() != 2) fail(where, "box entries must be [lo, hi]");
      lo(static_cast<Eigen::Index>(i)) = number_of(box[i][0], where);
      hi(static_cast<Eigen::Index>(i)) = number_of(box[i][1], where);
    }
    return Polytope::box(lo, hi);
  }
  if (!j.is_array() || j.empty()) fail(where, "polytope must be a non-empty list of [normal..., offset] rows or a box");
  const auto d = dim > 0 ? dim : static_cast<int>(j[0].size()) - 1;
  if (d < 1) fail(where, "polytope rows need at least one coefficient");
  Matrix a(static_cast<Eigen::Index>(j.size()), d);
  Vector b(a.rows());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != d + 1) {
      fail(where, "row " + std::to_string(r) + " must have " + std::to_string(d + 1) + " numbers");
    }
    for (int c = 0; c < d; ++c) a(static_cast<Eigen::Index>(r), c) = number_of(j[r][static_cast<std::size_t>(c)], where);
    b(static_cast<Eigen::Index>(r)) = number_of(j[r][static_cast<std::size_t>(d)], where);
  }
  return Polytope(a, b);
}

struct Labels {
  const std::vector<std::string>* list;
  const char* kind;
  int find(const std::string& label, const std::string& where) const {
    const auto it = std::find(list->begin(), list->end(), label);
    if (it == list->end()) fail(where, std::string("unknown ") + kind + " '" + label + "'");
    return static_cast<int>(it - list->begin());
  }
  // "*" expands to all.
  std::vector<int> match(const json& j, const std::string& where) const {
    if (j.is_string() && j.get<std::string>() == "*") {
      std::vector<int> all(list->size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      return all;
    }
    if (j.is_array()) {
      std::vector<int> out;
      for (const auto& e : j) out.push_back(find(label_of(e, where), where));
      return out;
    }
    return {find(label_of(j, where), where)};
  }
};

std::vector<std::string> labels_of(const json& j, const char* key) {
  const auto& arr = member(j, key, "model");
  if (!arr.is_array() || arr.empty()) fail(key, "must be a non-empty list");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(label_of(arr[i], std::string(key) + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<AgentState> agent_pattern(const json& j, const Labels& locs, const Labels& pers, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "agent state must be [loc, per]");
  std::vector<AgentState> out;
  for (int l : locs.match(j[0], where))
    for (int p : pers.match(j[1], where)) out.push_back({l, p});
  return out;
}

RewardTable reward_table_of(const json& j, int dim, const Labels& locs, const Labels& pers, const std::string& where) {
  RewardTable t;
  if (j.is_number()) {
    t.default_value = j.get<double>();
    return t;
  }
  if (j.contains("default")) t.default_value = number_of(j.at("default"), where + ".default");
  if (j.contains("regions")) {
    const auto& regs = j.at("regions");
    for (std::size_t i = 0; i < regs.size(); ++i) {
      const std::string w = where + ".regions[" + std::to_string(i) + "]";
      RewardRule rule{polytope_of(member(regs[i], "polytope", w), dim, w + ".polytope"),
                      number_of(member(regs[i], "value", w), w + ".value"), std::nullopt};
      if (regs[i].contains("agent_states")) {
        std::vector<AgentState> agents;
        for (const auto& pat : regs[i].at("agent_states")) {
          const auto more = agent_pattern(pat, locs, pers, w + ".agent_states");
          agents.insert(agents.end(), more.begin(), more.end());
        }
        rule.agents = std::move(agents);
      }
      t.rules.push_back(std::move(rule));
    }
  }
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<const LocPerception> perception_of(const json& j, const Polytope& domain, const Labels& pers,
                                                   const std::string& base_dir, const std::string& where) {
  auto lp = std::make_shared<LocPerception>();
  std::optional<ReluNet> net;
  if (j.contains("network")) {
    try {
      net = parse_relu_net(j.at("network").dump());
    } catch (const std::invalid_argument& e) {
      fail(where + ".network", e.what());
    }
  } else if (j.contains("network_file")) {
    const auto path = (std::filesystem::path(base_dir) / j.at("network_file").get<std::string>()).string();
    try {
      net = parse_relu_net(read_file(path));
    } catch (const std::exception& e) {
      fail(where + ".network_file", e.what());
    }
  }
  if (net) {
    for (const auto& l : net->labels) lp->class_to_per.push_back(pers.find(l, where + ".labels"));
    for (const auto& r : enumerate_preimage(*net, domain).regions()) {
      lp->partition.add(r.polytope, lp->class_to_per[static_cast<std::size_t>(r.payload)]);
    }
    lp->net = std::move(net);
    return lp;
  }
  const auto& regs = member(j, "regions", where);
  for (std::size_t i = 0; i < regs.size(); ++i) {
    const std::string w = where + ".regions[" + std::to_string(i) + "]";
    lp->partition.add(polytope_of(member(regs[i], "polytope", w), domain.dim(), w + ".polytope"),
                      pers.find(label_of(member(regs[i], "per", w), w + ".per"), w + ".per"));
  }
  return lp;
}

ModelData data_from_json(const json& root, const std::string& base_dir) {
  if (!root.is_object()) fail("model", "top level must be an object");
  ModelData d;
  d.name = root.value("name", std::string("model"));
  d.locs = labels_of(root, "locs");
  d.pers = labels_of(root, "pers");
  d.actions = labels_of(root, "actions");
  const Labels locs{&d.locs, "loc"}, pers{&d.pers, "per"}, acts{&d.actions, "action"};
  d.domain = polytope_of(member(root, "domain", "model"), 0, "domain");
  const int dim = d.domain.dim();
  d.beta = number_of(member(root, "beta", "model"), "beta");

  // Availability: first matching rule per agent state.
  const std::size_t n_agents = d.locs.size() * d.pers.size();
  d.available.assign(n_agents, std::vector<bool>(d.actions.size(), false));
  std::vector<bool> assigned(n_agents, false);
  const auto& avail = member(root, "available", "model");
  if (!avail.is_array()) fail("available", "must be a list of rules");
  for (std::size_t i = 0; i < avail.size(); ++i) {
    const std::string w = "available[" + std::to_string(i) + "]";
    const auto ls = locs.match(member(avail[i], "loc", w), w + ".loc");
    const auto ps = pers.match(member(avail[i], "per", w), w + ".per");
    const auto as = acts.match(member(avail[i], "actions", w), w + ".actions");
    for (int l : ls)
      for (int p : ps) {
        const auto idx = static_cast<std::size_t>(l) * d.pers.size() + static_cast<std::size_t>(p);
        if (assigned[idx]) continue;
        assigned[idx] = true;
        for (int a : as) d.available[idx][static_cast<std::size_t>(a)] = true;
      }
  }

  const auto& da = member(root, "delta_A", "model");
  if (!da.is_array()) fail("delta_A", "must be a list of [agent_state, action, loc', prob]");
  for (std::size_t i = 0; i < da.size(); ++i) {
    const std::string w = "delta_A[" + std::to_string(i) + "]";
    if (!da[i].is_array() || da[i].size() != 4) fail(w, "entry must be [agent_state, action, loc', prob]");
    const auto from = agent_pattern(da[i][0], locs, pers, w);
    const auto as = acts.match(da[i][1], w);
    const int next = locs.find(label_of(da[i][2], w), w);
    const double prob = number_of(da[i][3], w);
    for (const auto& s : from)
      for (int a : as) d.agent_dynamics.push_back({s, a, next, prob});
  }

  d.env_dynamics.assign(d.actions.size(), EnvDynamics{});
  const auto& env = member(root, "env_dynamics", "model");
  for (auto it = env.begin(); it != env.end(); ++it) {
    const std::string w = "env_dynamics." + it.key();
    const auto as = acts.match(json(it.key()), w);
    const auto& comps = it.value().is_object() ? member(it.value(), "components", w) : it.value();
    EnvDynamics dyn;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const std::string wc = w + ".components[" + std::to_string(c) + "]";
      MixtureComponent comp;
      comp.weight = comps[c].contains("weight") ? number_of(comps[c].at("weight"), wc + ".weight") : 1.0;
      const auto& pieces = member(comps[c], "pieces", wc);
      for (std::size_t p = 0; p < pieces.size(); ++p) {
        const std::string wp = wc + ".pieces[" + std::to_string(p) + "]";
        const auto& pc = pieces[p];
        // "otherwise": whatever the earlier guards of this component leave uncovered.
        const bool rest = pc.contains("guard") && pc.at("guard").is_string();
        if (rest && pc.at("guard").get<std::string>() != "otherwise") fail(wp + ".guard", "expected a polytope or \"otherwise\"");
        Polytope guard = pc.contains("guard") && !rest ? polytope_of(pc.at("guard"), dim, wp + ".guard") : d.domain;
        Matrix m = Matrix::Identity(dim, dim);
        if (pc.contains("matrix")) {
          const auto& mj = pc.at("matrix");
          if (!mj.is_array() || static_cast<int>(mj.size()) != dim) fail(wp + ".matrix", "wrong row count");
          for (int r = 0; r < dim; ++r) {
            if (!mj[static_cast<std::size_t>(r)].is_array() || static_cast<int>(mj[static_cast<std::size_t>(r)].size()) != dim) {
              fail(wp + ".matrix", "wrong column count");
            }
            for (int cc = 0; cc < dim; ++cc) m(r, cc) = number_of(mj[static_cast<std::size_t>(r)][static_cast<std::size_t>(cc)], wp + ".matrix");
          }
        }
        Vector off = Vector::Zero(dim);
        if (pc.contains("offset")) {
          const auto& oj = pc.at("offset");
          if (!oj.is_array() || static_cast<int>(oj.size()) != dim) fail(wp + ".offset", "wrong length");
          for (int r = 0; r < dim; ++r) off(r) = number_of(oj[static_cast<std::size_t>(r)], wp + ".offset");
        }
        if (rest) {
          std::vector<Polytope> remaining{d.domain};
          for (const auto& prev : comp.pieces) {
            std::vector<Polytope> next;
            for (const auto& r : remaining)
              for (auto& q : geom::difference(r, prev.guard)) next.push_back(std::move(q));
            remaining = std::move(next);
          }
          for (auto& r : remaining) comp.pieces.push_back({std::move(r), geom::AffineMap(m, off)});
          continue;
        }
        comp.pieces.push_back({std::move(guard), geom::AffineMap(m, off)});
      }
      dyn.components.push_back(std::move(comp));
    }
    for (int a : as) d.env_dynamics[static_cast<std::size_t>(a)] = dyn;
  }

  const auto& perc = member(root, "perception", "model");
  d.perception.assign(d.locs.size(), nullptr);
  if (perc.contains("*")) {
    const auto shared = perception_of(perc.at("*"), d.domain, pers, base_dir, "perception.*");
    for (auto& p : d.perception) p = shared;
  }
  for (auto it = perc.begin(); it != perc.end(); ++it) {
    if (it.key() == "*") continue;
    const int l = locs.find(it.key(), "perception");
    d.perception[static_cast<std::size_t>(l)] = perception_of(it.value(), d.domain, pers, base_dir, "perception." + it.key());
  }

  d.reward_action.assign(d.actions.size(), RewardTable{});
  if (root.contains("reward_action")) {
    const auto& ra = root.at("reward_action");
    for (auto it = ra.begin(); it != ra.end(); ++it) {
      const auto table = reward_table_of(it.value(), dim, locs, pers, "reward_action." + it.key());
      for (int a : acts.match(json(it.key()), "reward_action")) d.reward_action[static_cast<std::size_t>(a)] = table;
    }
  }
  if (root.contains("reward_state")) d.reward_state = reward_table_of(root.at("reward_state"), dim, locs, pers, "reward_state");

  if (root.contains("suggested")) {
    std::vector<std::vector<int>> sug(d.pers.size());
    const auto& sj = root.at("suggested");
    for (auto it = sj.begin(); it != sj.end(); ++it) {
      const int p = pers.find(it.key(), "suggested");
      sug[static_cast<std::size_t>(p)] = acts.match(it.value(), "suggested." + it.key());
    }
    d.suggested = std::move(sug);
  }
  return d;
}

void check_partition(const Polytope& domain, const std::vector<Polytope>& parts, const std::string& where,
                     std::vector<std::string>& issues) {
  if (domain.dim() > 3) return;
  const double dom = geom::volume(domain);
  double covered = 0.0;
  for (const auto& p : parts) covered += geom::volume(geom::intersect(p, domain));
  double overlap = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size(); ++j)
      overlap += geom::volume(geom::intersect(geom::intersect(parts[i], parts[j]), domain));
  if (std::abs(covered - overlap - dom) > 1e-9 * std::max(1.0, dom) + geom::eps_vol) {
    issues.push_back(where + ": regions cover volume " + fmt(covered - overlap) + " of domain volume " + fmt(dom));
  }
  if (overlap > geom::eps_vol) issues.push_back(where + ": regions overlap with volume " + fmt(overlap));
}

std::vector<std::string> validate(const ModelData& d) {
  std::vector<std::string> issues;
  const int dim = d.domain.dim();
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) issues.push_back(msg);
  };
  need(d.beta > 0.0 && d.beta < 1.0, "beta: must lie in (0, 1), got " + fmt(d.beta));
  need(dim >= 1, "domain: dimension must be positive");
  if (dim < 1) return issues;
  need(geom::is_bounded(d.domain), "domain: must be bounded");
  need(geom::is_full_dimensional(d.domain), "domain: must be full-dimensional");
  if (!issues.empty()) return issues;
  for (const auto* labels : {&d.locs, &d.pers, &d.actions}) {
    for (std::size_t i = 0; i < labels->size(); ++i)
      for (std::size_t j = i + 1; j < labels->size(); ++j)
        need((*labels)[i] != (*labels)[j], "labels: duplicate '" + (*labels)[i] + "'");
  }
  const std::size_t n_agents = d.locs.size() * d.pers.size();
  auto agent_name = [&](AgentState s) {
    return "(loc=" + d.locs.at(static_cast<std::size_t>(s.loc)) + ", per=" + d.pers.at(static_cast<std::size_t>(s.per)) + ")";
  };
  need(d.available.size() == n_agents, "available: table size differs from |Loc|*|Per|");
  need(d.env_dynamics.size() == d.actions.size(), "env_dynamics: one entry per action required");
  need(d.reward_action.size() == d.actions.size(), "reward_action: one entry per action required");
  need(d.perception.size() == d.locs.size(), "perception: one entry per loc required");
  if (!issues.empty()) return issues;

  std::vector<std::vector<double>> row_sum(n_agents, std::vector<double>(d.actions.size(), 0.0));
  for (const auto& t : d.agent_dynamics) {
    const auto idx = static_cast<std::size_t>(t.from.loc) * d.pers.size() + static_cast<std::size_t>(t.from.per);
    if (!(t.prob >= 0.0 && t.prob <= 1.0)) {
      issues.push_back("delta_A row " + agent_name(t.from) + " action=" + d.actions[static_cast<std::size_t>(t.action)] +
                       ": probability " + fmt(t.prob) + " outside [0, 1]");
    }
    row_sum[idx][static_cast<std::size_t>(t.action)] += t.prob;
  }
  for (std::size_t i = 0; i < n_agents; ++i) {
    const AgentState s{static_cast<int>(i / d.pers.size()), static_cast<int>(i % d.pers.size())};
    bool any = false;
    for (std::size_t a = 0; a < d.actions.size(); ++a) {
      if (!d.available[i][a]) {
        if (row_sum[i][a] != 0.0) {
          issues.push_back("delta_A row " + agent_name(s) + " action=" + d.actions[a] + ": action not available");
        }
        continue;
      }
      any = true;
      if (std::abs(row_sum[i][a] - 1.0) > 1e-12) {
        issues.push_back("delta_A row " + agent_name(s) + " action=" + d.actions[a] + ": sums to " + fmt(row_sum[i][a]));
      }
    }
    need(any, "available: no action available at " + agent_name(s));
  }

  for (std::size_t a = 0; a < d.actions.size(); ++a) {
    const auto& dyn = d.env_dynamics[a];
    const std::string w = "env_dynamics." + d.actions[a];
    if (dyn.components.empty()) {
      issues.push_back(w + ": no mixture components");
      continue;
    }
    double total = 0.0;
    for (const auto& c : dyn.components) {
      total += c.weight;
      need(c.weight > 0.0, w + ": mixture weights must be positive");
    }
    need(std::abs(total - 1.0) <= 1e-12, w + ": mixture weights sum to " + fmt(total));
    for (std::size_t c = 0; c < dyn.components.size(); ++c) {
      const std::string wc = w + ".components[" + std::to_string(c) + "]";
      std::vector<Polytope> guards;
      bool dims_ok = true;
      for (std::size_t p = 0; p < dyn.components[c].pieces.size(); ++p) {
        const auto& piece = dyn.components[c].pieces[p];
        const std::string wp = wc + ".pieces[" + std::to_string(p) + "]";
        if (piece.guard.dim() != dim || piece.map.dim() != dim) {
          issues.push_back(wp + ": dimension mismatch");
          dims_ok = false;
          continue;
        }
        guards.push_back(piece.guard);
        if (!piece.map.invertible()) {
          issues.push_back(wp + ": map is not invertible (|det| <= 1e-12)");
          continue;
        }
        if (dim <= 3) {
          const auto dom = geom::intersect(piece.guard, d.domain);
          if (!geom::is_full_dimensional(dom)) continue;
          for (const auto& v : geom::vertices(dom)) {
            if (!d.domain.contains(piece.map.apply(v), 1e-9)) {
              issues.push_back(wp + ": image of the guard leaves the domain");
              break;
            }
          }
        }
      }
      if (dims_ok) check_partition(d.domain, guards, wc + " guards", issues);
    }
  }

  for (std::size_t l = 0; l < d.locs.size(); ++l) {
    const std::string w = "perception." + d.locs[l];
    if (!d.perception[l]) {
      issues.push_back(w + ": missing perception");
      continue;
    }
    std::vector<Polytope> parts;
    for (const auto& r : d.perception[l]->partition.regions()) {
      if (r.polytope.dim() != dim) {
        issues.push_back(w + ": region dimension mismatch");
        continue;
      }
      if (r.payload < 0 || r.payload >= static_cast<int>(d.pers.size())) issues.push_back(w + ": unknown percept index");
      parts.push_back(r.polytope);
    }
    if (d.perception[l]->net) {
      need(d.perception[l]->net->input_dim() == dim, w + ": network input dimension differs from domain");
      // Enumerated partitions cover by construction; check the sum only.
      if (dim <= 3) {
        double covered = 0.0;
        for (const auto& p : parts) covered += geom::volume(p);
        const double dom = geom::volume(d.domain);
        need(std::abs(covered - dom) <= 1e-6 * dom, w + ": network partition covers " + fmt(covered) + " of " + fmt(dom));
      }
    } else {
      check_partition(d.domain, parts, w, issues);
    }
  }

  auto check_table = [&](const RewardTable& t, const std::string& w) {
    need(std::isfinite(t.default_value), w + ": default must be finite");
    for (std::size_t i = 0; i < t.rules.size(); ++i) {
      need(t.rules[i].region.dim() == dim, w + ".regions[" + std::to_string(i) + "]: dimension mismatch");
      need(std::isfinite(t.rules[i].value), w + ".regions[" + std::to_string(i) + "]: value must be finite");
    }
  };
  for (std::size_t a = 0; a < d.actions.size(); ++a) check_table(d.reward_action[a], "reward_action." + d.actions[a]);
  check_table(d.reward_state, "reward_state");
  if (d.suggested) {
    need(d.suggested->size() == d.pers.size(), "suggested: one entry per percept required");
    for (const auto& row : *d.suggested)
      for (int a : row) need(a >= 0 && a < static_cast<int>(d.actions.size()), "suggested: unknown action index");
  }
  return issues;
}

std::vector<std::pair<Polytope, double>> rules_for(const RewardTable& t, AgentState s, std::vector<int>& key) {
  std::vector<std::pair<Polytope, double>> out;
  for (std::size_t i = 0; i < t.rules.size(); ++i) {
    const auto& r = t.rules[i];
    if (r.agents && std::find(r.agents->begin(), r.agents->end(), s) == r.agents->end()) continue;
    key.push_back(static_cast<int>(i));
    out.emplace_back(r.region, r.value);
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::vector<Piece> first_match_partition(const Polytope& domain, const std::vector<std::pair<Polytope, double>>& rules,
                                         double default_value) {
  std::vector<Piece> out;
  std::vector<Polytope> remaining{domain};
  for (const auto& [region, value] : rules) {
    std::vector<Polytope> next;
    for (const auto& r : remaining) {
      const auto inside = geom::intersect(r, region);
      if (!geom::is_full_dimensional(inside)) {
        next.push_back(r);
        continue;
      }
      out.push_back({geom::simplify(inside), value});
      for (auto& rest : geom::difference(r, region)) next.push_back(std::move(rest));
    }
    remaining = std::move(next);
  }
  for (auto& r : remaining) out.push_back({std::move(r), default_value});
  return out;
}

Model::Model(ModelData data) : data_(std::move(data)) {}

Model Model::create(ModelData data) {
  const auto issues = validate(data);
  if (!issues.empty()) throw ValidationError(issues);
  Model m(std::move(data));
  const auto& d = m.data_;
  m.perception_ = PerceptionSpec(d.domain, d.perception);
  m.phi_ = PerceptionFcp(m.perception_, m.num_pers());

  const std::size_t n_agents = m.num_agent_states();
  m.agent_next_.assign(n_agents, std::vector<std::vector<std::pair<int, double>>>(d.actions.size()));
  for (const auto& t : d.agent_dynamics) {
    if (t.prob <= 0.0) continue;
    auto& row = m.agent_next_[m.agent_index(t.from)][static_cast<std::size_t>(t.action)];
    auto it = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == t.next_loc; });
    if (it == row.end()) {
      row.emplace_back(t.next_loc, t.prob);
    } else {
      it->second += t.prob;
    }
  }
  for (auto& per_agent : m.agent_next_)
    for (auto& row : per_agent) std::sort(row.begin(), row.end());

  // Reward partitions, shared between agent states with the same applicable rules.
  std::map<std::pair<std::vector<int>, std::vector<int>>, std::shared_ptr<const std::vector<Piece>>> cache;
  std::map<std::vector<int>, std::vector<Piece>> state_cache;
  m.rewards_.assign(d.actions.size(), std::vector<std::shared_ptr<const std::vector<Piece>>>(n_agents));
  for (std::size_t a = 0; a < d.actions.size(); ++a) {
    for (std::size_t i = 0; i < n_agents; ++i) {
      const AgentState s = m.agent_at(i);
      std::vector<int> key_a, key_s;
      const auto rules_a = rules_for(d.reward_action[a], s, key_a);
      const auto rules_s = rules_for(d.reward_state, s, key_s);
      key_a.insert(key_a.begin(), static_cast<int>(a));
      auto found = cache.find({key_a, key_s});
      if (found != cache.end()) {
        m.rewards_[a][i] = found->second;
        continue;
      }
      auto st = state_cache.find(key_s);
      if (st == state_cache.end()) {
        st = state_cache.emplace(key_s, first_match_partition(d.domain, rules_s, d.reward_state.default_value)).first;
      }
      const auto act = first_match_partition(d.domain, rules_a, d.reward_action[a].default_value);
      auto pieces = std::make_shared<std::vector<Piece>>();
      for (const auto& pa : act) {
        for (const auto& ps : st->second) {
          const auto cut = geom::intersect(pa.region, ps.region);
          if (!geom::is_full_dimensional(cut)) continue;
          pieces->push_back({geom::simplify(cut), pa.value + ps.value});
        }
      }
      cache.emplace(std::make_pair(key_a, key_s), pieces);
      m.rewards_[a][i] = std::move(pieces);
    }
  }

  const double scale = 1.0 / (1.0 - d.beta);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double blind = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_agents; ++i) {
    double best_floor = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < d.actions.size(); ++a) {
      if (!d.available[i][a]) continue;
      double floor = std::numeric_limits<double>::infinity();
      for (const auto& p : *m.rewards_[a][i]) {
        lo = std::min(lo, p.value);
        hi = std::max(hi, p.value);
        floor = std::min(floor, p.value);
      }
      best_floor = std::max(best_floor, floor);
    }
    blind = std::min(blind, best_floor);
  }
  m.bounds_ = {lo * scale, hi * scale, blind * scale};
  return m;
}

std::optional<int> Model::find_loc(std::string_view label) const {
  const auto it = std::find(data_.locs.begin(), data_.locs.end(), label);
  if (it == data_.locs.end()) return std::nullopt;
  return static_cast<int>(it - data_.locs.begin());
}

std::optional<int> Model::find_per(std::string_view label) const {
  const auto it = std::find(data_.pers.begin(), data_.pers.end(), label);
  if (it == data_.pers.end()) return std::nullopt;
  return static_cast<int>(it - data_.pers.begin());
}

std::optional<int> Model::find_action(std::string_view label) const {
  const auto it = std::find(data_.actions.begin(), data_.actions.end(), label);
  if (it == data_.actions.end()) return std::nullopt;
  return static_cast<int>(it - data_.actions.begin());
}

std::string Model::describe(AgentState s) const { return "(" + loc_label(s.loc) + "," + per_label(s.per) + ")"; }

bool Model::available(AgentState s, int action) const {
  return data_.available.at(agent_index(s)).at(static_cast<std::size_t>(action));
}

std::vector<int> Model::available_actions(AgentState s) const {
  std::vector<int> out;
  for (int a = 0; a < num_actions(); ++a) {
    if (available(s, a)) out.push_back(a);
  }
  return out;
}

const std::vector<std::pair<int, double>>& Model::agent_next(AgentState s, int action) const {
  return agent_next_.at(agent_index(s)).at(static_cast<std::size_t>(action));
}

double Model::agent_prob(AgentState s, int action, int next_loc) const {
  for (const auto& [l, p] : agent_next(s, action)) {
    if (l == next_loc) return p;
  }
  return 0.0;
}

const AffinePiece& Model::piece_for(int action, std::size_t component, const Vector& x) const {
  const auto& comp = env(action).components.at(component);
  for (const auto& p : comp.pieces) {
    if (p.guard.contains(x)) return p;
  }
  throw DomainError("no dynamics piece of action '" + action_label(action) + "' covers the state");
}

bool Model::percept_compatible(AgentState s, const Vector& s_env) const {
  return data_.domain.contains(s_env) && observe(s.loc, s_env) == s.per;
}

std::vector<Successor> Model::successors(AgentState s, const Vector& s_env, int action) const {
  if (!available(s, action)) {
    throw std::invalid_argument("action '" + action_label(action) + "' unavailable at " + describe(s));
  }
  if (!percept_compatible(s, s_env)) throw std::invalid_argument("state not percept compatible at " + describe(s));
  std::vector<Successor> out;
  const auto& dyn = env(action);
  for (const auto& [loc, p_loc] : agent_next(s, action)) {
    for (std::size_t c = 0; c < dyn.components.size(); ++c) {
      const Vector next = piece_for(action, c, s_env).map.apply(s_env);
      const AgentState s_next{loc, observe(loc, next)};
      const double prob = p_loc * dyn.components[c].weight;
      auto it = std::find_if(out.begin(), out.end(), [&](const Successor& e) {
        return e.agent == s_next && (e.env - next).cwiseAbs().maxCoeff() <= geom::eps_num;
      });
      if (it == out.end()) {
        out.push_back({s_next, next, prob});
      } else {
        it->prob += prob;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Successor& a, const Successor& b) { return a.agent < b.agent; });
  return out;
}

const std::vector<Piece>& Model::reward_pieces(int action, AgentState s) const {
  return *rewards_.at(static_cast<std::size_t>(action)).at(agent_index(s));
}

double Model::reward(AgentState s, const Vector& s_env, int action) const {
  if (!available(s, action)) {
    throw std::invalid_argument("action '" + action_label(action) + "' unavailable at " + describe(s));
  }
  for (const auto& p : reward_pieces(action, s)) {
    if (p.region.contains(s_env)) return p.value;
  }
  throw DomainError("reward lookup outside the domain");
}

geom::Fcp<std::pair<AgentState, double>> Model::reward_fcp(int action) const {
  geom::Fcp<std::pair<AgentState, double>> out;
  for (std::size_t i = 0; i < num_agent_states(); ++i) {
    const AgentState s = agent_at(i);
    for (const auto& p : reward_pieces(action, s)) out.add(p.region, {s, p.value});
  }
  return out;
}

Model load_model(std::string_view text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = line_column(text, offset);
    throw ParseError(e.what(), line, col);
  }
  ModelData data;
  try {
    data = data_from_json(root, base_dir);
  } catch (const json::exception& e) {
    throw ValidationError({std::string("model: ") + e.what()});
  } catch (const geom::GeometryError& e) {
    throw ValidationError({std::string("model: ") + e.what()});
  }
  return Model::create(std::move(data));
}

Model load_model_file(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return load_model(read_file(path), dir.empty() ? "." : dir);
}

Polytope parse_polytope_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(e.what(), line, col);
  }
  return polytope_of(j, 0, "polytope");
}

}  // namespace nspomdp
