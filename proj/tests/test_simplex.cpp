#include <doctest.h>

#include "relucode/errors.hpp"
#include "relucode/simplex.hpp"

using namespace relucode;

namespace {

lp::LinearProgram make(std::initializer_list<std::initializer_list<double>> a,
                       std::initializer_list<double> b, std::initializer_list<double> c) {
  lp::LinearProgram p;
  p.A.resize(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(c.size()));
  Eigen::Index i = 0;
  for (const auto& row : a) {
    Eigen::Index j = 0;
    for (const double v : row) p.A(i, j++) = v;
    ++i;
  }
  p.b = Eigen::Map<const Eigen::VectorXd>(b.begin(), static_cast<Eigen::Index>(b.size()));
  p.c = Eigen::Map<const Eigen::VectorXd>(c.begin(), static_cast<Eigen::Index>(c.size()));
  return p;
}

}  // namespace

TEST_CASE("textbook maximization") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
  const auto sol = lp::solve(make({{1, 0}, {0, 2}, {3, 2}}, {4, 12, 18}, {3, 5}));
  REQUIRE(sol.status == lp::Status::optimal);
  CHECK(sol.objective == doctest::Approx(36.0).epsilon(1e-12));
  CHECK(sol.x[0] == doctest::Approx(2.0));
  CHECK(sol.x[1] == doctest::Approx(6.0));
}

TEST_CASE("negative right-hand sides go through phase one") {
  // max -x - y, x + y >= 2 (as -x - y <= -2), x <= 3  ->  objective -2
  const auto sol = lp::solve(make({{-1, -1}, {1, 0}}, {-2, 3}, {-1, -1}));
  REQUIRE(sol.status == lp::Status::optimal);
  CHECK(sol.objective == doctest::Approx(-2.0));
  CHECK(sol.x.sum() == doctest::Approx(2.0));
}

TEST_CASE("infeasible and unbounded problems") {
  // x <= 1 and x >= 2
  CHECK(lp::solve(make({{1}, {-1}}, {1, -2}, {1})).status == lp::Status::infeasible);
  // max x with only x - y <= 1
  CHECK(lp::solve(make({{1, -1}}, {1}, {1, 0})).status == lp::Status::unbounded);
  // empty constraint set, zero objective
  lp::LinearProgram empty;
  empty.A.resize(0, 2);
  empty.b.resize(0);
  empty.c = Eigen::VectorXd::Zero(2);
  CHECK(lp::solve(empty).status == lp::Status::optimal);
}

TEST_CASE("Bland's rule terminates on a cycling example") {
  // Beale's problem cycles under the largest-coefficient rule. Optimum 1/20.
  const auto sol = lp::solve(make({{0.25, -60, -1.0 / 25, 9}, {0.5, -90, -1.0 / 50, 3}, {0, 0, 1, 0}},
                                  {0, 0, 1}, {0.75, -150, 1.0 / 50, -6}));
  REQUIRE(sol.status == lp::Status::optimal);
  CHECK(sol.objective == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("iteration limit raises a numerical error") {
  lp::Options opts;
  opts.max_iterations = 1;
  try {
    lp::solve(make({{1, 0}, {0, 2}, {3, 2}}, {4, 12, 18}, {3, 5}), opts);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.iterations() == 2);
  }
}

TEST_CASE("equality-like degenerate systems") {
  // x + y <= 1 and -x - y <= -1 pin x + y = 1; max x -> 1
  const auto sol = lp::solve(make({{1, 1}, {-1, -1}}, {1, -1}, {1, 0}));
  REQUIRE(sol.status == lp::Status::optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
}
