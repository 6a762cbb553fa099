// nspomdp command-line driver: solve, simulate, preimage, export-values, oracle.
#include "nspomdp/hsvi.hpp"
#include "nspomdp/lp.hpp"
#include "nspomdp/oracle.hpp"
#include "nspomdp/persist.hpp"
#include "nspomdp/strategy.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace nspomdp;
namespace fs = std::filesystem;

namespace {

constexpr int exit_usage = 1, exit_validation = 2, exit_budget = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int report(const std::string& kind, const std::string& msg, int code) {
  std::cerr << "error: kind=" << kind << " msg=" << one_line(msg) << '\n';
  return code;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Bare names resolve against the bundled models directory.
std::string resolve(const std::string& path) {
  if (fs::exists(path)) return path;
  for (const auto& candidate : {fs::path(NSPOMDP_MODELS_DIR) / path, fs::path(NSPOMDP_MODELS_DIR) / (path + ".json")}) {
    if (fs::exists(candidate)) return candidate.string();
  }
  throw IoError("no such file: " + path);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

// Either a polytope literal or "lo1,hi1,lo2,hi2,..." for a box.
geom::Polytope parse_domain(const std::string& text) {
  if (!text.empty() && (text.front() == '{' || text.front() == '[')) return parse_polytope_json(text);
  std::vector<double> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad --domain value '" + item + "'");
    }
  }
  if (values.empty() || values.size() % 2 != 0) throw UsageError("--domain needs lo,hi pairs");
  geom::Vector lo(static_cast<Eigen::Index>(values.size() / 2)), hi(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    lo[i] = values[static_cast<std::size_t>(2 * i)];
    hi[i] = values[static_cast<std::size_t>(2 * i + 1)];
  }
  return geom::Polytope::box(lo, hi);
}

struct SolveArgs {
  std::string model, belief, trace, dump_alphas, bounds_out;
  double epsilon = 1e-3;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 10000;
  bool parallel = false;
};

int run_solve(const SolveArgs& a) {
  const auto m = load_model_file(resolve(a.model));
  const auto b0 = load_belief_file(m, resolve(a.belief));
  SolveConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.rng_seed = a.seed;
  cfg.max_iterations = a.max_iterations;
  cfg.parallel_ispp = a.parallel;
  const auto state = solve(m, b0, cfg);
  if (!a.trace.empty()) {
    auto out = open_out(a.trace);
    write_trace_csv(out, state.trace);
  }
  if (!a.bounds_out.empty()) save_bounds(a.bounds_out, m, state.bounds.lower(), state.bounds.upper());
  if (!a.dump_alphas.empty()) export_value_dumps(a.dump_alphas, m, state.bounds.lower());
  std::cout << "lb " << geom::format_number(state.lb()) << " ub " << geom::format_number(state.ub()) << " gap "
            << geom::format_number(state.gap()) << " iters " << state.iterations << '\n';
  if (state.status == SolveStatus::budget_exhausted) {
    return report("budget", "iteration budget exhausted with gap " + geom::format_number(state.gap()), exit_budget);
  }
  return 0;
}

struct SimulateArgs {
  std::string model, bounds, belief, out;
  std::size_t runs = 1;
  int horizon = 50;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  const auto m = load_model_file(resolve(a.model));
  const auto b0 = load_belief_file(m, resolve(a.belief));
  auto stored = load_bounds(a.bounds, m);
  const LookaheadStrategy strategy(m, std::move(stored.lower));
  auto out = open_out(a.out);
  write_path_csv_header(out, m);
  double sum = 0.0, sum_sq = 0.0, compliance = 0.0, trust = 0.0;
  bool suggestions = false;
  for (std::size_t r = 0; r < a.runs; ++r) {
    auto rng = run_rng(a.seed, r);
    const auto x0 = sample_state(m, b0, rng);
    const auto path = simulate(m, strategy, b0, x0, a.horizon, rng);
    write_path_csv(out, m, r, path);
    sum += path.discounted_return;
    sum_sq += path.discounted_return * path.discounted_return;
    suggestions = path.has_suggestions;
    compliance += path.compliance_ratio();
    trust += path.mean_loc;
  }
  const double n = static_cast<double>(a.runs);
  const double mean = sum / n;
  const double var = a.runs > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  const auto& g = m.global_bounds();
  std::cout << "runs " << a.runs << " mean_return " << geom::format_number(mean) << " std_error "
            << geom::format_number(std::sqrt(var / n)) << " truncation "
            << geom::format_number(std::pow(m.beta(), a.horizon) * (g.upper - g.lower));
  if (suggestions) {
    std::cout << " compliance " << geom::format_number(compliance / n) << " mean_loc " << geom::format_number(trust / n);
  }
  std::cout << '\n';
  return 0;
}

int run_preimage(const std::string& net_path, const std::string& domain_text, const std::string& out_path) {
  const auto net = parse_relu_net(read_file(resolve(net_path)));
  const auto domain = parse_domain(domain_text);
  if (domain.dim() != net.input_dim()) throw std::invalid_argument("domain dimension does not match the network input");
  const auto fcp = enumerate_preimage(net, domain);
  double covered = 0.0;
  for (const auto& r : fcp.regions()) covered += geom::volume(r.polytope);
  const double total = geom::volume(domain);
  auto out = open_out(out_path);
  for (const auto& r : fcp.regions()) {
    const std::string label = net.labels.empty() ? std::to_string(r.payload) : net.labels[static_cast<std::size_t>(r.payload)];
    if (domain.dim() == 2) {
      out << geom::polygon_dump_line(label, r.polytope, static_cast<double>(r.payload)) << '\n';
    } else {
      out << label << ';' << geom::format_number(geom::volume(r.polytope)) << '\n';
    }
  }
  const bool ok = std::abs(covered - total) <= 1e-6 * total;
  std::cout << "regions " << fcp.size() << " area " << geom::format_number(covered) << " domain " << geom::format_number(total)
            << " coverage " << (ok ? "ok" : "FAILED") << '\n';
  return ok ? 0 : report("numeric", "preimage regions do not cover the domain", exit_validation);
}

int run_export(const std::string& model, const std::string& bounds, const std::string& out) {
  const auto m = load_model_file(resolve(model));
  const auto stored = load_bounds(bounds, m);
  export_value_dumps(out, m, stored.lower);
  std::cout << "alphas " << stored.lower.gamma.size() << " written to " << out << '\n';
  return 0;
}

int run_oracle(const std::string& model, const std::string& belief, int horizon, std::size_t budget) {
  const auto m = load_model_file(resolve(model));
  const auto b = load_belief_file(m, resolve(belief));
  const auto* pb = std::get_if<ParticleBelief>(&b);
  if (!pb) throw std::invalid_argument("the oracle needs a particle belief");
  const auto v = finite_horizon_value(m, *pb, horizon, budget);
  std::cout << "horizon " << v.horizon << " value " << geom::format_number(v.value) << " bracket "
            << geom::format_number(v.lower) << ' ' << geom::format_number(v.upper) << " nodes " << v.nodes << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neuro-symbolic POMDP solver"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "run the heuristic search to an epsilon gap at the initial belief");
  solve_cmd->add_option("--model", solve_args.model, "model file or bundled model name")->required();
  solve_cmd->add_option("--belief", solve_args.belief, "initial belief file")->required();
  solve_cmd->add_option("--epsilon", solve_args.epsilon, "target gap")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", solve_args.seed, "random seed");
  solve_cmd->add_option("--trace", solve_args.trace, "per-iteration CSV");
  solve_cmd->add_option("--dump-alphas", solve_args.dump_alphas, "directory for alpha polygon dumps");
  solve_cmd->add_option("--bounds-out", solve_args.bounds_out, "directory to store both bounds");
  solve_cmd->add_option("--max-iterations", solve_args.max_iterations, "iteration budget");
  solve_cmd->add_flag("--parallel", solve_args.parallel, "run region backups on worker threads");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate the lookahead strategy from stored bounds");
  sim_cmd->add_option("--model", sim_args.model)->required();
  sim_cmd->add_option("--bounds", sim_args.bounds, "directory written by solve --bounds-out")->required();
  sim_cmd->add_option("--belief", sim_args.belief)->required();
  sim_cmd->add_option("--runs", sim_args.runs)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--horizon", sim_args.horizon)->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--seed", sim_args.seed);
  sim_cmd->add_option("--out", sim_args.out, "path CSV")->required();

  std::string net, domain, fcp_out;
  auto* pre_cmd = app.add_subcommand("preimage", "exact preimage partition of a ReLU classifier");
  pre_cmd->add_option("--net", net, "weight file")->required();
  pre_cmd->add_option("--domain", domain, "box as lo,hi pairs or a polytope literal")->required();
  pre_cmd->add_option("--out", fcp_out)->required();

  std::string ex_model, ex_bounds, ex_out;
  auto* ex_cmd = app.add_subcommand("export-values", "polygon dumps of stored alphas and their maximum");
  ex_cmd->add_option("--model", ex_model)->required();
  ex_cmd->add_option("--bounds", ex_bounds)->required();
  ex_cmd->add_option("--out", ex_out)->required();

  std::string or_model, or_belief;
  int horizon = 10;
  std::size_t budget = 1000000;
  auto* or_cmd = app.add_subcommand("oracle", "finite-horizon value of a particle belief");
  or_cmd->add_option("--model", or_model)->required();
  or_cmd->add_option("--belief", or_belief)->required();
  or_cmd->add_option("--horizon", horizon)->required()->check(CLI::NonNegativeNumber);
  or_cmd->add_option("--budget", budget, "node budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), exit_usage);
  }

  try {
    if (*solve_cmd) return run_solve(solve_args);
    if (*sim_cmd) return run_simulate(sim_args);
    if (*pre_cmd) return run_preimage(net, domain, fcp_out);
    if (*ex_cmd) return run_export(ex_model, ex_bounds, ex_out);
    if (*or_cmd) return run_oracle(or_model, or_belief, horizon, budget);
  } catch (const UsageError& e) {
    return report("usage", e.what(), exit_usage);
  } catch (const IoError& e) {
    return report("io", e.what(), exit_usage);
  } catch (const BudgetError& e) {
    return report("budget", e.what(), exit_budget);
  } catch (const ParseError& e) {
    return report("parse", e.what(), exit_validation);
  } catch (const ValidationError& e) {
    return report("validation", e.what(), exit_validation);
  } catch (const lp::NumericalError& e) {
    return report("numeric", e.what(), exit_validation);
  } catch (const ObservationError& e) {
    return report("observation", e.what(), exit_validation);
  } catch (const DomainError& e) {
    return report("domain", e.what(), exit_validation);
  } catch (const std::invalid_argument& e) {
    return report("validation", e.what(), exit_validation);
  } catch (const std::exception& e) {
    return report("internal", e.what(), exit_validation);
  }
  return exit_usage;
}
