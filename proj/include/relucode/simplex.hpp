#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace relucode::lp {

/// maximize c'x  subject to  A x <= b,  x >= 0.  Entries of b may have any sign.
struct LinearProgram {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class Status { optimal, infeasible, unbounded };

struct Solution {
  Status status = Status::infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct Options {
  std::size_t max_iterations = 50000;
  double pivot_tol = 1e-11;
  /// Phase-one objective above this means the constraints are infeasible.
  double feasibility_tol = 1e-9;
};

/// Dense two-phase tableau simplex. Bland's rule picks both the entering
/// column (lowest index with positive reduced profit) and the leaving row
/// (lowest basic index among minimum ratios), so it cannot cycle.
/// Throws NumericalError when max_iterations pivots are exceeded.
Solution solve(const LinearProgram& problem, const Options& options = {});

}  // namespace relucode::lp
