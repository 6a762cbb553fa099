#include "nspomdp/perception.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace nspomdp {
namespace {

using geom::Matrix;
using geom::Polytope;
using geom::Vector;

Matrix matrix_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(std::string(what) + " must be a non-empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument(std::string(what) + " rows have unequal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Polytope single_row(const Vector& normal, double offset) {
  Matrix a = normal.transpose();
  Vector b(1);
  b(0) = offset;
  return Polytope(a, b);
}

}  // namespace

Vector ReluNet::forward(const Vector& x) const {
  const Vector hidden = (w1 * x + b1).cwiseMax(0.0);
  return w2 * hidden + b2;
}

int ReluNet::classify(const Vector& x) const {
  const Vector f = forward(x);
  int best = 0;
  for (int c = 1; c < f.size(); ++c) {
    if (f(c) > f(best)) best = c;
  }
  return best;
}

void validate_relu_net(const ReluNet& net) {
  const auto h = net.w1.rows();
  if (net.w1.cols() < 1 || h < 1) throw std::invalid_argument("network needs e >= 1 and h >= 1");
  if (net.b1.size() != h) throw std::invalid_argument("network b1 length differs from h");
  if (net.w2.cols() != h) throw std::invalid_argument("network W2 column count differs from h");
  if (net.w2.rows() < 2) throw std::invalid_argument("network needs at least two classes");
  if (net.b2.size() != net.w2.rows()) throw std::invalid_argument("network b2 length differs from class count");
  if (static_cast<Eigen::Index>(net.labels.size()) != net.w2.rows()) {
    throw std::invalid_argument("network labels length differs from class count");
  }
  if (!net.w1.allFinite() || !net.b1.allFinite() || !net.w2.allFinite() || !net.b2.allFinite()) {
    throw std::invalid_argument("network weights must be finite");
  }
}

ReluNet parse_relu_net(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("network file: ") + e.what());
  }
  ReluNet net;
  try {
    net.w1 = matrix_from(j.at("W1"), "W1");
    net.b1 = vector_from(j.at("b1"), "b1");
    net.w2 = matrix_from(j.at("W2"), "W2");
    net.b2 = vector_from(j.at("b2"), "b2");
    for (const auto& l : j.at("labels")) net.labels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    if (j.contains("e") && j["e"].get<int>() != net.input_dim()) throw std::invalid_argument("network e differs from W1");
    if (j.contains("h") && j["h"].get<int>() != net.hidden_dim()) throw std::invalid_argument("network h differs from W1");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("network file: ") + e.what());
  }
  validate_relu_net(net);
  return net;
}

geom::Fcp<int> enumerate_preimage(const ReluNet& net, const Polytope& domain) {
  validate_relu_net(net);
  if (net.hidden_dim() > max_hidden_units) {
    throw BudgetError("activation-pattern budget exceeded: h = " + std::to_string(net.hidden_dim()) + " > 24");
  }
  if (domain.dim() != net.input_dim()) throw geom::GeometryError("network input dimension differs from domain");
  if (!geom::is_bounded(domain)) throw DomainError("preimage domain must be bounded");

  struct Cell {
    std::uint64_t pattern;
    int cls;
    Polytope polytope;
  };
  std::vector<Cell> cells;
  const int h = net.hidden_dim();
  const int k = net.num_classes();

  auto emit = [&](const Polytope& cell, std::uint64_t pattern) {
    // Affine form of the logits on this activation cell.
    Matrix gate = Matrix::Zero(h, h);
    for (int j = 0; j < h; ++j) gate(j, j) = ((pattern >> j) & 1U) ? 1.0 : 0.0;
    const Matrix g = net.w2 * gate * net.w1;
    const Vector g0 = net.w2 * gate * net.b1 + net.b2;
    for (int c = 0; c < k; ++c) {
      Polytope region = cell;
      bool dead = false;
      for (int o = 0; o < k && !dead; ++o) {
        if (o == c) continue;
        const Vector normal = (g.row(o) - g.row(c)).transpose();
        const double offset = g0(c) - g0(o);
        if (normal.norm() < 1e-12) {
          // Constant difference: a lower-index rival must lose strictly.
          if (o < c ? offset <= 0.0 : offset < 0.0) dead = true;
          continue;
        }
        region = geom::intersect(region, single_row(normal, offset));
      }
      if (dead || !geom::is_full_dimensional(region)) continue;
      cells.push_back({pattern, c, geom::simplify(region)});
    }
  };

  std::function<void(int, const Polytope&, std::uint64_t)> dfs = [&](int j, const Polytope& cell, std::uint64_t pattern) {
    if (j == h) {
      emit(cell, pattern);
      return;
    }
    const Vector w = net.w1.row(j).transpose();
    const double b = net.b1(j);
    if (w.norm() < 1e-12) {
      dfs(j + 1, cell, b > 0.0 ? (pattern | (std::uint64_t{1} << j)) : pattern);
      return;
    }
    const Polytope off = geom::intersect(cell, single_row(w, -b));
    if (geom::is_full_dimensional(off)) dfs(j + 1, off, pattern);
    const Polytope on = geom::intersect(cell, single_row(-w, b));
    if (geom::is_full_dimensional(on)) dfs(j + 1, on, pattern | (std::uint64_t{1} << j));
  };
  if (geom::is_full_dimensional(domain)) dfs(0, domain, 0);

  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.pattern != b.pattern ? a.pattern < b.pattern : a.cls < b.cls;
  });
  geom::Fcp<int> out;
  for (auto& c : cells) out.add(std::move(c.polytope), c.cls);
  return out;
}

PerceptionSpec::PerceptionSpec(Polytope domain, std::vector<std::shared_ptr<const LocPerception>> per_loc)
    : domain_(std::move(domain)), per_loc_(std::move(per_loc)) {}

int PerceptionSpec::observe(int loc, const Vector& s_env) const {
  if (!domain_.contains(s_env)) throw DomainError("observe: environment point outside the domain");
  const auto& lp = at(loc);
  if (lp.net) return lp.class_to_per.at(static_cast<std::size_t>(lp.net->classify(s_env)));
  const auto idx = lp.partition.locate(s_env);
  if (!idx) throw DomainError("observe: point not covered by the perception partition");
  return lp.partition[*idx].payload;
}

PerceptionFcp::PerceptionFcp(const PerceptionSpec& spec, int num_pers) : num_pers_(num_pers) {
  const int locs = static_cast<int>(spec.num_locs());
  by_agent_.assign(static_cast<std::size_t>(locs * num_pers), {});
  by_loc_.assign(static_cast<std::size_t>(locs), {});
  for (int loc = 0; loc < locs; ++loc) {
    for (const auto& r : spec.at(loc).partition.regions()) {
      if (!geom::is_full_dimensional(r.polytope)) continue;
      const AgentState s{loc, r.payload};
      by_agent_.at(static_cast<std::size_t>(loc * num_pers + r.payload)).push_back(regions_.size());
      by_loc_[static_cast<std::size_t>(loc)].push_back(regions_.size());
      regions_.push_back({s, r.polytope});
    }
  }
}

const std::vector<std::size_t>& PerceptionFcp::of(AgentState s) const {
  return by_agent_.at(static_cast<std::size_t>(s.loc * num_pers_ + s.per));
}

std::optional<std::size_t> PerceptionFcp::locate(AgentState s, const Vector& x) const {
  for (std::size_t i : of(s)) {
    if (regions_[i].polytope.contains(x)) return i;
  }
  return std::nullopt;
}

}  // namespace nspomdp
