#include "nspomdp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nspomdp::lp {
namespace {

constexpr double pivot_tol = 1e-9;
constexpr double cost_tol = 1e-9;
constexpr double feas_tol = 1e-9;
constexpr double eps_det = 1e-12;
constexpr std::size_t max_pivots = 500000;

enum class VarKind { shifted, flipped, split };

struct ColumnMap {
  VarKind kind;
  std::size_t col;
  double anchor;
};

struct StdRow {
  std::vector<double> a;
  Relation rel;
  double rhs;
};

// Dense tableau for min c.y, rows in standard form with y >= 0.
class Tableau {
 public:
  Tableau(const std::vector<StdRow>& rows, std::size_t structural)
      : structural_(structural) {
    std::size_t extra = 0;
    for (const auto& r : rows) extra += (r.rel == Relation::less_equal) ? 1 : 2;
    cols_ = structural + extra;
    width_ = cols_ + 1;
    m_ = rows.size();
    data_.assign(m_ * width_, 0.0);
    basis_.assign(m_, 0);
    artificial_.assign(cols_, false);
    std::size_t next = structural;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& r = rows[i];
      std::copy(r.a.begin(), r.a.end(), row(i));
      row(i)[cols_] = r.rhs;
      if (r.rel == Relation::less_equal) {
        row(i)[next] = 1.0;
        basis_[i] = next++;
      } else {
        row(i)[next++] = -1.0;
        row(i)[next] = 1.0;
        artificial_[next] = true;
        basis_[i] = next++;
      }
    }
  }

  // Returns false when the rows are inconsistent.
  bool phase_one() {
    std::vector<double> cost(cols_, 0.0);
    bool any = false;
    for (std::size_t c = 0; c < cols_; ++c) {
      if (artificial_[c]) {
        cost[c] = 1.0;
        any = true;
      }
    }
    if (!any) return true;
    load_costs(cost);
    run(true);
    double scale = 1.0;
    for (std::size_t i = 0; i < m_; ++i) scale = std::max(scale, std::abs(row(i)[cols_]));
    if (-z_ > feas_tol * scale) return false;
    drive_out_artificials();
    return true;
  }

  // Returns false when unbounded.
  bool phase_two(const std::vector<double>& structural_cost) {
    std::vector<double> cost(cols_, 0.0);
    std::copy(structural_cost.begin(), structural_cost.end(), cost.begin());
    load_costs(cost);
    return run(false);
  }

  std::vector<double> structural_values() const {
    std::vector<double> y(structural_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < structural_) y[basis_[i]] = std::max(0.0, row(i)[cols_]);
    }
    return y;
  }

 private:
  double* row(std::size_t i) { return data_.data() + i * width_; }
  const double* row(std::size_t i) const { return data_.data() + i * width_; }

  void load_costs(const std::vector<double>& cost) {
    reduced_ = cost;
    z_ = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* r = row(i);
      for (std::size_t c = 0; c < cols_; ++c) reduced_[c] -= cb * r[c];
      z_ -= cb * r[cols_];
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    double* pr = row(r);
    const double p = pr[c];
    if (std::abs(p) < eps_det) {
      throw NumericalError("simplex pivot magnitude " + std::to_string(p) + " below 1e-12");
    }
    const double inv = 1.0 / p;
    for (std::size_t k = 0; k < width_; ++k) pr[k] *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* ri = row(i);
      const double f = ri[c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < width_; ++k) ri[k] -= f * pr[k];
      ri[c] = 0.0;
    }
    const double f = reduced_[c];
    if (f != 0.0) {
      for (std::size_t k = 0; k < cols_; ++k) reduced_[k] -= f * pr[k];
      reduced_[c] = 0.0;
      z_ -= f * pr[cols_];
    }
    basis_[r] = c;
  }

  // Bland's rule: lowest eligible entering column, lowest basic index on ratio ties.
  bool run(bool allow_artificial) {
    for (std::size_t iter = 0; iter < max_pivots; ++iter) {
      std::size_t enter = cols_;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (!allow_artificial && artificial_[c]) continue;
        if (reduced_[c] < -cost_tol) {
          enter = c;
          break;
        }
      }
      if (enter == cols_) return true;
      std::size_t leave = m_;
      double best = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = row(i)[enter];
        if (a <= pivot_tol) continue;
        const double ratio = std::max(0.0, row(i)[cols_]) / a;
        if (leave == m_ || ratio < best - 1e-12) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + 1e-12 && basis_[i] < basis_[leave]) {
          leave = i;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
    throw NumericalError("simplex pivot budget exhausted");
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_;) {
      if (!artificial_[basis_[i]]) {
        ++i;
        continue;
      }
      std::size_t col = cols_;
      double best = pivot_tol;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (artificial_[c]) continue;
        if (std::abs(row(i)[c]) > best) {
          best = std::abs(row(i)[c]);
          col = c;
        }
      }
      if (col != cols_) {
        pivot(i, col);
        ++i;
        continue;
      }
      // Redundant row: drop it.
      std::copy(row(m_ - 1), row(m_ - 1) + width_, row(i));
      basis_[i] = basis_[m_ - 1];
      --m_;
      data_.resize(m_ * width_);
      basis_.resize(m_);
    }
  }

  std::size_t structural_;
  std::size_t cols_ = 0;
  std::size_t width_ = 0;
  std::size_t m_ = 0;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
  std::vector<bool> artificial_;
  std::vector<double> reduced_;
  double z_ = 0.0;
};

struct StandardForm {
  std::vector<ColumnMap> columns;
  std::size_t structural = 0;
  std::vector<StdRow> rows;
};

void check_program(std::size_t n, const std::vector<Constraint>& constraints,
                   const std::vector<VarBounds>& bounds) {
  if (n == 0) throw InvalidProgram("linear program needs at least one variable");
  if (!bounds.empty() && bounds.size() != n) {
    throw InvalidProgram("bounds length " + std::to_string(bounds.size()) + " != " + std::to_string(n));
  }
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (constraints[i].coeffs.size() != n) {
      throw InvalidProgram("constraint " + std::to_string(i) + " has wrong coefficient count");
    }
  }
  for (const auto& b : bounds) {
    if (b.lo > b.hi) throw InvalidProgram("variable bounds with lo > hi");
  }
}

StandardForm standardize(std::size_t n, const std::vector<Constraint>& constraints,
                         const std::vector<VarBounds>& bounds) {
  StandardForm sf;
  std::vector<std::pair<std::size_t, double>> upper_rows;
  for (std::size_t j = 0; j < n; ++j) {
    const VarBounds b = bounds.empty() ? VarBounds{} : bounds[j];
    if (std::isfinite(b.lo)) {
      sf.columns.push_back({VarKind::shifted, sf.structural, b.lo});
      if (std::isfinite(b.hi)) upper_rows.emplace_back(sf.structural, b.hi - b.lo);
      sf.structural += 1;
    } else if (std::isfinite(b.hi)) {
      sf.columns.push_back({VarKind::flipped, sf.structural, b.hi});
      sf.structural += 1;
    } else {
      sf.columns.push_back({VarKind::split, sf.structural, 0.0});
      sf.structural += 2;
    }
  }

  auto push = [&](std::vector<double> a, Relation rel, double rhs) {
    if (rhs < 0.0) {
      for (double& v : a) v = -v;
      rhs = -rhs;
      if (rel == Relation::less_equal) {
        rel = Relation::greater_equal;
      } else if (rel == Relation::greater_equal) {
        rel = Relation::less_equal;
      }
    }
    sf.rows.push_back({std::move(a), rel, rhs});
  };

  for (const auto& con : constraints) {
    std::vector<double> a(sf.structural, 0.0);
    double rhs = con.rhs;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = con.coeffs[j];
      if (c == 0.0) continue;
      const auto& cm = sf.columns[j];
      switch (cm.kind) {
        case VarKind::shifted:
          a[cm.col] += c;
          rhs -= c * cm.anchor;
          break;
        case VarKind::flipped:
          a[cm.col] -= c;
          rhs -= c * cm.anchor;
          break;
        case VarKind::split:
          a[cm.col] += c;
          a[cm.col + 1] -= c;
          break;
      }
    }
    if (con.relation == Relation::equal) {
      push(a, Relation::less_equal, rhs);
      push(std::move(a), Relation::greater_equal, rhs);
    } else {
      push(std::move(a), con.relation, rhs);
    }
  }
  for (const auto& [col, width] : upper_rows) {
    std::vector<double> a(sf.structural, 0.0);
    a[col] = 1.0;
    push(std::move(a), Relation::less_equal, width);
  }
  return sf;
}

std::vector<double> recover(const StandardForm& sf, const std::vector<double>& y) {
  std::vector<double> x(sf.columns.size());
  for (std::size_t j = 0; j < sf.columns.size(); ++j) {
    const auto& cm = sf.columns[j];
    switch (cm.kind) {
      case VarKind::shifted:
        x[j] = cm.anchor + y[cm.col];
        break;
      case VarKind::flipped:
        x[j] = cm.anchor - y[cm.col];
        break;
      case VarKind::split:
        x[j] = y[cm.col] - y[cm.col + 1];
        break;
    }
  }
  return x;
}

}  // namespace

LpOutcome solve(const LinearProgram& program) {
  const std::size_t n = program.objective.size();
  check_program(n, program.constraints, program.bounds);
  const StandardForm sf = standardize(n, program.constraints, program.bounds);

  Tableau tab(sf.rows, sf.structural);
  LpOutcome out;
  if (!tab.phase_one()) {
    out.status = Status::infeasible;
    return out;
  }
  const double sign = program.sense == Sense::minimize ? 1.0 : -1.0;
  std::vector<double> cost(sf.structural, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = sign * program.objective[j];
    const auto& cm = sf.columns[j];
    switch (cm.kind) {
      case VarKind::shifted:
        cost[cm.col] += c;
        break;
      case VarKind::flipped:
        cost[cm.col] -= c;
        break;
      case VarKind::split:
        cost[cm.col] += c;
        cost[cm.col + 1] -= c;
        break;
    }
  }
  if (!tab.phase_two(cost)) {
    out.status = Status::unbounded;
    return out;
  }
  out.status = Status::optimal;
  out.assignment = recover(sf, tab.structural_values());
  out.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.value += program.objective[j] * out.assignment[j];
  return out;
}

bool feasible(std::size_t num_vars, const std::vector<Constraint>& constraints,
              const std::vector<VarBounds>& bounds) {
  check_program(num_vars, constraints, bounds);
  const StandardForm sf = standardize(num_vars, constraints, bounds);
  Tableau tab(sf.rows, sf.structural);
  return tab.phase_one();
}

}  // namespace nspomdp::lp
