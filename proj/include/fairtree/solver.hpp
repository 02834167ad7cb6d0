#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fairtree/milp.hpp"

namespace fairtree {

enum class SolveStatus { kOptimal, kFeasibleTimeLimit, kInfeasible, kUnbounded };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double time_limit_s = 300.0;
  double abs_gap = 1e-9;
  double rel_gap = 1e-9;
  double int_tol = 1e-6;
  enum class Branching { kMostFractional, kPseudoCost };
  Branching branching = Branching::kMostFractional;
  enum class NodeOrder { kBestBound, kDepthFirst };
  NodeOrder node_order = NodeOrder::kBestBound;
  std::uint64_t seed = 0;
  // cooperative cancellation from another thread; solver returns its
  // incumbent with status feasible-time-limit
  const std::atomic<bool>* cancel = nullptr;
};

// (ticks, lower, upper) recorded at every bound improvement. Ticks are a
// deterministic work measure (simplex iterations + nodes), not wall time, so
// emitted artifacts are reproducible run to run.
struct TraceSample {
  double ticks;
  double lower;
  double upper;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> assignment;  // full variable assignment (empty if none)
  double objective = 0.0;          // incumbent objective (model sense)
  double lower_bound = 0.0;        // best proven bound (minimization: lower)
  double gap = 0.0;                // (upper - lower) / max(1, |upper|)
  long node_count = 0;
  long lp_iterations = 0;
  double ticks = 0.0;
  double wall_seconds = 0.0;
  std::vector<TraceSample> trace;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;  // structural solution
  double objective = 0.0;
  long iterations = 0;
};

// Solve the linear relaxation (integrality marks ignored) with a bounded
// revised simplex; deterministic for a fixed model.
LpResult solve_lp(const MilpModel& model);

class SimplexSolver;  // internal engine

// LP-based branch and bound over the model's binary variables. Best-bound
// node selection with depth-first plunging; branches on the most fractional
// binary, ties by registry order.
class BranchAndBound {
 public:
  explicit BranchAndBound(const MilpModel& model);
  ~BranchAndBound();

  // Validates the assignment against all rows and bounds (tolerance 1e-6,
  // binaries integral); the incumbent seeds the initial upper bound.
  void install_incumbent(std::span<const double> x);

  SolveResult solve(const SolverOptions& opts);

 private:
  const MilpModel& model_;
  std::vector<double> incumbent_;
  double incumbent_obj_ = 0.0;
  bool has_incumbent_ = false;
};

inline SolveResult branch_and_bound(const MilpModel& model, const SolverOptions& opts) {
  BranchAndBound bnb(model);
  return bnb.solve(opts);
}

// Fixed-format MPS writer (ROWS/COLUMNS/RHS/BOUNDS with integer markers).
// Names longer than 8 characters are mangled deterministically; the name map
// is returned. Values are written at full precision.
struct MpsNameMap {
  std::vector<std::pair<std::string, std::string>> rows;  // (mps name, model name)
  std::vector<std::pair<std::string, std::string>> cols;
};

MpsNameMap export_mps(const MilpModel& model, const std::string& path);
std::string write_mps(const MilpModel& model, MpsNameMap* map = nullptr);
MilpModel import_mps(const std::string& path);
MilpModel parse_mps(const std::string& text);

}  // namespace fairtree
