#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "fairtree/milp.hpp"

namespace fairtree {

// Bounded-variable revised simplex over the computational form
//   min c.x  s.t.  A x + s = b,  lb <= (x, s) <= ub,
// with slack bounds encoding the row sense. Dense LU factorization of the
// basis (refreshed periodically) with product-form eta updates in between.
// Used directly by solve_lp and as the relaxation engine inside branch and
// bound, where re-solves after bound changes run the dual simplex from the
// parent basis.
class SimplexSolver {
 public:
  enum class Status { kOptimal, kInfeasible, kUnbounded, kStalled };

  enum VStat : std::uint8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2, kFreeAtZero = 3 };

  struct Basis {
    std::vector<int> basic;        // column per basis row position
    std::vector<std::uint8_t> vstat;
  };

  explicit SimplexSolver(const MilpModel& model);

  int num_rows() const { return m_; }
  int num_structural() const { return n_; }

  // bound overrides for branch and bound (structural columns only)
  void reset_bounds();
  void set_bound(int var, double lb, double ub);
  double lower(int var) const { return lb_[var]; }
  double upper(int var) const { return ub_[var]; }

  // full solve from a slack/artificial basis (phase 1 + phase 2)
  Status solve_from_scratch();
  // re-optimize from the current (dual-feasible) basis after bound changes
  Status reoptimize_dual();

  Basis save_basis() const;
  void load_basis(const Basis& basis);

  double objective() const;                  // model sense, includes constant
  std::vector<double> solution() const;      // structural values
  long iterations() const { return iterations_; }
  double primal_infeasibility() const;
  bool needs_rebuild() const { return repaired_; }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  template <typename Fn>
  void for_col(int j, Fn&& fn) const {
    if (j < n_) {
      for (int p = a_ptr_[j]; p < a_ptr_[j + 1]; ++p) fn(a_row_[p], a_val_[p]);
    } else if (j < n_ + m_) {
      fn(j - n_, 1.0);
    } else {
      fn(j - n_ - m_, art_sign_[j - n_ - m_]);
    }
  }

  double col_dot(int j, const std::vector<double>& v) const;

  void factorize();                       // LU of current basis, recompute x_B
  void ftran(std::vector<double>& v) const;   // v := B^-1 v
  void btran(std::vector<double>& v) const;   // v := B^-T v
  void compute_xb();
  void push_eta(int pos, const std::vector<double>& w);

  Status primal_loop(const std::vector<double>& cost, bool phase1);
  bool choose_entering(const std::vector<double>& cost, bool bland, int& q, double& dq);
  void setup_crash_basis();               // slacks where feasible, artificials elsewhere

  const MilpModel& model_;
  int n_ = 0;  // structural columns
  int m_ = 0;  // rows
  int ntot_ = 0;

  // structural matrix, CSC
  std::vector<int> a_ptr_, a_row_;
  std::vector<double> a_val_;
  std::vector<double> rhs_;

  std::vector<double> cost_;      // phase-2 cost (min sense)
  std::vector<double> lb_, ub_;   // current bounds, all columns
  std::vector<double> model_lb_, model_ub_;
  std::vector<double> art_sign_;
  int num_artificial_ = 0;

  std::vector<int> basic_;            // size m
  std::vector<int> pos_in_basis_;     // column -> basis position or -1
  std::vector<std::uint8_t> vstat_;
  std::vector<double> x_;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  struct Eta {
    int pos;
    std::vector<double> col;
  };
  std::vector<Eta> etas_;
  bool factorized_ = false;

  long iterations_ = 0;
  double sense_flip_ = 1.0;  // -1 when the model maximizes
  bool repaired_ = false;    // near-singular factorization observed
};

}  // namespace fairtree
