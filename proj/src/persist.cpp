#include "nspomdp/persist.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace nspomdp {
namespace {

namespace fs = std::filesystem;

constexpr const char* header = "nspomdp-bounds v1";

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_alpha_dump(const fs::path& path, const Model& m, const AlphaFunction& alpha) {
  auto out = open_out(path);
  for (std::size_t k = 0; k < m.phi().size(); ++k) {
    const auto label = m.describe(m.phi()[k].agent);
    const auto& pieces = alpha.pieces(k);
    if (pieces.empty()) out << geom::polygon_dump_line(label, m.phi()[k].polytope, alpha.fill()) << '\n';
    for (const auto& p : pieces) out << geom::polygon_dump_line(label, p.region, p.value) << '\n';
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string file) : in_(in), file_(std::move(file)) {}

  std::istringstream line() {
    std::string s;
    if (!std::getline(in_, s)) fail("unexpected end of file");
    ++line_no_;
    return std::istringstream(s);
  }

  // Reads "<word> <values...>" and checks the word.
  std::istringstream expect(const std::string& word) {
    auto ls = line();
    std::string w;
    ls >> w;
    if (w != word) fail("expected '" + word + "', found '" + w + "'");
    return ls;
  }

  template <class T>
  T read(std::istringstream& ls, const char* what) {
    T v{};
    if (!(ls >> v)) fail(std::string("malformed ") + what);
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError(file_ + " line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string file_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_bounds(const std::string& dir, const Model& m, const LowerBound& lower, const UpperBoundSet& upper) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  auto out = open_out(fs::path(dir) / "bounds.txt");
  out << header << '\n';
  out << "model " << m.name() << '\n';
  out << "regions " << m.phi().size() << '\n';
  out << "gamma " << lower.gamma.size() << '\n';
  for (const auto& alpha : lower.gamma) {
    std::size_t with_pieces = 0;
    for (std::size_t k = 0; k < alpha->num_regions(); ++k) with_pieces += alpha->pieces(k).empty() ? 0 : 1;
    out << "alpha " << exact(alpha->fill()) << ' ' << with_pieces << '\n';
    for (std::size_t k = 0; k < alpha->num_regions(); ++k) {
      const auto& pieces = alpha->pieces(k);
      if (pieces.empty()) continue;
      out << "region " << k << ' ' << pieces.size() << '\n';
      for (const auto& p : pieces) {
        out << "piece " << exact(p.value) << ' ' << p.region.num_halfspaces() << '\n';
        for (Eigen::Index r = 0; r < p.region.normals().rows(); ++r) {
          for (Eigen::Index c = 0; c < p.region.normals().cols(); ++c) out << exact(p.region.normals()(r, c)) << ' ';
          out << exact(p.region.offsets()(r)) << '\n';
        }
      }
    }
  }
  out << "upsilon " << upper.size() << '\n';
  for (const auto& e : upper.entries()) {
    out << "point " << exact(e.value) << ' ' << nlohmann::json::parse(format_belief(m, e.belief)).dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + dir + "/bounds.txt");
  if (m.dim() == 2) export_value_dumps(dir, m, lower);
}

StoredBounds load_bounds(const std::string& dir, const Model& m) {
  const auto path = fs::path(dir) / "bounds.txt";
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  Reader rd(in, path.string());
  {
    std::string h;
    auto ls = rd.line();
    std::getline(ls, h);
    if (h != header) rd.fail("missing header '" + std::string(header) + "'");
  }
  {
    auto ls = rd.expect("model");
    std::string name;
    std::getline(ls >> std::ws, name);
    if (name != m.name()) rd.fail("bounds belong to model '" + name + "', not '" + m.name() + "'");
  }
  {
    auto ls = rd.expect("regions");
    if (rd.read<std::size_t>(ls, "region count") != m.phi().size()) rd.fail("perception region count does not match the model");
  }
  StoredBounds out;
  out.upper = UpperBoundSet(m.num_agent_states());
  auto gl = rd.expect("gamma");
  const auto n_alpha = rd.read<std::size_t>(gl, "alpha count");
  const int d = m.dim();
  for (std::size_t i = 0; i < n_alpha; ++i) {
    auto al = rd.expect("alpha");
    const auto fill = rd.read<double>(al, "fill value");
    const auto n_regions = rd.read<std::size_t>(al, "region count");
    auto alpha = std::make_shared<AlphaFunction>(m.phi().size(), fill);
    for (std::size_t j = 0; j < n_regions; ++j) {
      auto rl = rd.expect("region");
      const auto k = rd.read<std::size_t>(rl, "region index");
      const auto n_pieces = rd.read<std::size_t>(rl, "piece count");
      if (k >= m.phi().size()) rd.fail("region index out of range");
      std::vector<Piece> pieces;
      for (std::size_t p = 0; p < n_pieces; ++p) {
        auto pl = rd.expect("piece");
        const auto value = rd.read<double>(pl, "piece value");
        const auto rows = rd.read<std::size_t>(pl, "row count");
        geom::Matrix a(static_cast<Eigen::Index>(rows), d);
        geom::Vector b(static_cast<Eigen::Index>(rows));
        for (std::size_t r = 0; r < rows; ++r) {
          auto row = rd.line();
          for (int c = 0; c < d; ++c) a(static_cast<Eigen::Index>(r), c) = rd.read<double>(row, "row coefficient");
          b(static_cast<Eigen::Index>(r)) = rd.read<double>(row, "row offset");
        }
        pieces.push_back({geom::Polytope(a, b), value});
      }
      alpha->set_pieces(k, std::move(pieces));
    }
    out.lower.gamma.push_back(std::move(alpha));
  }
  if (out.lower.gamma.empty()) rd.fail("no alpha functions");
  auto ul = rd.expect("upsilon");
  const auto n_points = rd.read<std::size_t>(ul, "point count");
  for (std::size_t i = 0; i < n_points; ++i) {
    auto pl = rd.expect("point");
    const auto y = rd.read<double>(pl, "point value");
    std::string literal;
    std::getline(pl >> std::ws, literal);
    try {
      out.upper.add(m, parse_belief(m, literal), y);
    } catch (const std::exception& e) {
      rd.fail(std::string("bad belief literal: ") + e.what());
    }
  }
  return out;
}

std::vector<std::pair<AgentState, Piece>> max_refinement(const Model& m, const LowerBound& lower) {
  std::vector<std::pair<AgentState, Piece>> out;
  for (std::size_t k = 0; k < m.phi().size(); ++k) {
    const auto& region = m.phi()[k];
    std::vector<Piece> cells{{region.polytope, -std::numeric_limits<double>::infinity()}};
    for (const auto& alpha : lower.gamma) {
      std::vector<Piece> own = alpha->pieces(k);
      if (own.empty()) own.push_back({region.polytope, alpha->fill()});
      std::vector<Piece> next;
      for (const auto& cell : cells) {
        std::vector<geom::Polytope> rest{cell.region};
        for (const auto& p : own) {
          if (p.value <= cell.value) continue;
          const auto cut = geom::intersect(cell.region, p.region);
          if (!geom::is_full_dimensional(cut)) continue;
          next.push_back({geom::simplify(cut), p.value});
          std::vector<geom::Polytope> left;
          for (const auto& r : rest) {
            for (auto& piece : geom::difference(r, p.region)) left.push_back(std::move(piece));
          }
          rest = std::move(left);
        }
        for (auto& r : rest) next.push_back({std::move(r), cell.value});
      }
      cells = std::move(next);
    }
    for (auto& c : cells) out.emplace_back(region.agent, std::move(c));
  }
  return out;
}

void export_value_dumps(const std::string& dir, const Model& m, const LowerBound& lower) {
  if (m.dim() != 2) throw IoError("polygon dumps need a 2-D environment");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  for (std::size_t i = 0; i < lower.gamma.size(); ++i) {
    write_alpha_dump(fs::path(dir) / ("alpha_" + std::to_string(i) + ".txt"), m, *lower.gamma[i]);
  }
  auto out = open_out(fs::path(dir) / "max.txt");
  for (const auto& [agent, piece] : max_refinement(m, lower)) {
    out << geom::polygon_dump_line(m.describe(agent), piece.region, piece.value) << '\n';
  }
}

}  // namespace nspomdp
