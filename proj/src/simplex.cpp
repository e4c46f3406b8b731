#include "relucode/simplex.hpp"

#include <limits>
#include <string>
#include <vector>

#include "relucode/errors.hpp"

namespace relucode::lp {

namespace {

class Tableau {
 public:
  Tableau(const LinearProgram& p, const Options& options)
      : options_(options),
        rows_(p.A.rows()),
        n_orig_(p.A.cols()),
        n_slack_(p.A.rows()) {
    // Rows with negative right-hand side are negated and need an artificial.
    std::vector<Eigen::Index> needs_artificial;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (p.b[i] < 0) needs_artificial.push_back(i);
    }
    n_art_ = static_cast<Eigen::Index>(needs_artificial.size());
    cols_ = n_orig_ + n_slack_ + n_art_;
    t_ = Eigen::MatrixXd::Zero(rows_, cols_ + 1);
    basis_.assign(static_cast<std::size_t>(rows_), 0);
    Eigen::Index next_art = 0;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const double sign = p.b[i] < 0 ? -1.0 : 1.0;
      t_.row(i).head(n_orig_) = sign * p.A.row(i);
      t_(i, n_orig_ + i) = sign;
      t_(i, cols_) = sign * p.b[i];
      if (sign < 0) {
        const Eigen::Index a = n_orig_ + n_slack_ + next_art++;
        t_(i, a) = 1.0;
        basis_[static_cast<std::size_t>(i)] = a;
      } else {
        basis_[static_cast<std::size_t>(i)] = n_orig_ + i;
      }
    }
  }

  Eigen::Index artificial_begin() const { return n_orig_ + n_slack_; }
  bool has_artificials() const { return n_art_ > 0; }

  /// Runs simplex iterations on `cost` over columns [0, allowed_end).
  /// Returns false if unbounded.
  bool optimize(const Eigen::VectorXd& cost, Eigen::Index allowed_end, std::size_t& iterations) {
    Eigen::VectorXd reduced(cols_);
    while (true) {
      // reduced profit d_j = c_j - c_B' column_j
      reduced = cost;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double cb = cost[basis_[static_cast<std::size_t>(i)]];
        if (cb != 0.0) reduced -= cb * t_.row(i).head(cols_).transpose();
      }
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < allowed_end; ++j) {
        if (reduced[j] > options_.pivot_tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;

      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double a = t_(i, entering);
        if (a > options_.pivot_tol) {
          best_ratio = std::min(best_ratio, std::max(t_(i, cols_), 0.0) / a);
        }
      }
      if (best_ratio == std::numeric_limits<double>::infinity()) return false;
      // Among (near-)tied minimum ratios, leave on the lowest basic index.
      const double tie_tol = 1e-12 * (1.0 + best_ratio);
      Eigen::Index leaving = -1;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double a = t_(i, entering);
        if (a <= options_.pivot_tol) continue;
        if (std::max(t_(i, cols_), 0.0) / a > best_ratio + tie_tol) continue;
        if (leaving < 0 || basis_[static_cast<std::size_t>(i)] <
                               basis_[static_cast<std::size_t>(leaving)]) {
          leaving = i;
        }
      }

      if (++iterations > options_.max_iterations) {
        throw NumericalError("simplex exceeded " + std::to_string(options_.max_iterations) +
                                 " iterations",
                             iterations);
      }
      pivot(leaving, entering);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index s) {
    t_.row(r) /= t_(r, s);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (i == r) continue;
      const double f = t_(i, s);
      if (f != 0.0) {
        t_.row(i) -= f * t_.row(r);
        t_(i, s) = 0.0;
      }
    }
    basis_[static_cast<std::size_t>(r)] = s;
  }

  /// Pivots basic artificials (at value zero) out of the basis where possible.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < artificial_begin()) continue;
      for (Eigen::Index j = 0; j < artificial_begin(); ++j) {
        if (std::abs(t_(i, j)) > options_.pivot_tol) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  double objective(const Eigen::VectorXd& cost) const {
    double z = 0.0;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      z += cost[basis_[static_cast<std::size_t>(i)]] * t_(i, cols_);
    }
    return z;
  }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_orig_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const auto j = basis_[static_cast<std::size_t>(i)];
      if (j < n_orig_) x[j] = std::max(t_(i, cols_), 0.0);
    }
    return x;
  }

  Eigen::Index columns() const { return cols_; }

 private:
  Options options_;
  Eigen::Index rows_;
  Eigen::Index n_orig_;
  Eigen::Index n_slack_;
  Eigen::Index n_art_ = 0;
  Eigen::Index cols_ = 0;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

Solution solve(const LinearProgram& problem, const Options& options) {
  if (problem.A.rows() != problem.b.size() || problem.A.cols() != problem.c.size()) {
    throw ShapeError("linear program has inconsistent dimensions");
  }
  Tableau tableau(problem, options);
  Solution out;

  if (tableau.has_artificials()) {
    Eigen::VectorXd phase_one = Eigen::VectorXd::Zero(tableau.columns());
    phase_one.tail(tableau.columns() - tableau.artificial_begin()).setConstant(-1.0);
    tableau.optimize(phase_one, tableau.columns(), out.iterations);
    if (tableau.objective(phase_one) < -options.feasibility_tol) {
      out.status = Status::infeasible;
      return out;
    }
    tableau.expel_artificials();
  }

  Eigen::VectorXd phase_two = Eigen::VectorXd::Zero(tableau.columns());
  phase_two.head(problem.c.size()) = problem.c;
  if (!tableau.optimize(phase_two, tableau.artificial_begin(), out.iterations)) {
    out.status = Status::unbounded;
    return out;
  }
  out.status = Status::optimal;
  out.x = tableau.primal();
  out.objective = problem.c.dot(out.x);
  return out;
}

}  // namespace relucode::lp
