#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nspomdp::lp {

enum class Sense { minimize, maximize };
enum class Relation { less_equal, equal, greater_equal };
enum class Status { optimal, infeasible, unbounded };

struct Constraint {
  std::vector<double> coeffs;
  Relation relation = Relation::less_equal;
  double rhs = 0.0;
};

// Defaults describe a free variable.
struct VarBounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct LinearProgram {
  std::vector<double> objective;
  Sense sense = Sense::minimize;
  std::vector<Constraint> constraints;
  std::vector<VarBounds> bounds;  // empty means every variable is free
};

struct LpOutcome {
  Status status = Status::infeasible;
  double value = 0.0;
  std::vector<double> assignment;
};

// Raised when a pivot would amplify values beyond 1/eps_det, or the pivot
// budget runs out.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidProgram : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double eps_lp = 1e-7;

LpOutcome solve(const LinearProgram& program);

// Phase one only.
bool feasible(std::size_t num_vars, const std::vector<Constraint>& constraints,
              const std::vector<VarBounds>& bounds = {});

}  // namespace nspomdp::lp
