#include <doctest.h>

#include <json.hpp>

#include "relucode/errors.hpp"
#include "relucode/polyhedra.hpp"
#include "relucode/tessellation.hpp"
#include "test_support.hpp"

using namespace relucode;
using relucode::testing::net_e1;
using relucode::testing::net_e2;
using relucode::testing::random_network;
using relucode::testing::vec;

namespace {

// Literal evaluation of the closed-form cell rows: for layer k (1-based)
//   W(k) = Qpi(k) W_k Qbeta(k-1) W_{k-1} ... Qbeta(1) W_1
//   b(k) = Qpi(k) W_k sum_{i<k} [Qbeta(k-1) W_{k-1} ... Qbeta(i+1) W_{i+1}] Qbeta(i) b_i + Qpi(k) b_k
// built from explicit diagonal matrices, independent of the forward recursion.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> closed_form_rows(const ReluNetwork& net,
                                                             const ActivationTrace& trace,
                                                             std::size_t k1) {
  auto W = [&](std::size_t k) -> const Eigen::MatrixXd& { return net.layer(k - 1).weights; };
  auto b = [&](std::size_t k) -> const Eigen::VectorXd& { return net.layer(k - 1).bias; };
  auto q_beta = [&](std::size_t k) {
    const auto& pre = trace.pre_activations[k - 1];
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(pre.size(), pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) q(i, i) = pre[i] > 0 ? 1.0 : 0.0;
    return q;
  };
  auto q_pi = [&](std::size_t k) {
    return Eigen::MatrixXd(2.0 * q_beta(k) - Eigen::MatrixXd::Identity(W(k).rows(), W(k).rows()));
  };
  // prod_{j=1}^{count} Qbeta(k-j) W_{k-j}
  auto chain = [&](std::size_t k, std::size_t count, Eigen::Index cols) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(cols, cols);
    bool first = true;
    for (std::size_t j = 1; j <= count; ++j) {
      const Eigen::MatrixXd factor = q_beta(k - j) * W(k - j);
      p = first ? factor : Eigen::MatrixXd(p * factor);
      first = false;
    }
    return p;
  };
  const std::size_t k = k1;
  const Eigen::MatrixXd A =
      k == 1 ? Eigen::MatrixXd(q_pi(1) * W(1))
             : Eigen::MatrixXd(q_pi(k) * W(k) * chain(k, k - 1, 0));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(W(k).cols());
  for (std::size_t i = 1; i + 1 <= k; ++i) {
    const std::size_t count = k - i - 1;
    const Eigen::VectorXd tail = q_beta(i) * b(i);
    acc += count == 0 ? tail : Eigen::VectorXd(chain(k, count, 0) * tail);
  }
  const Eigen::VectorXd bias = q_pi(k) * W(k) * acc + q_pi(k) * b(k);
  return {A, bias};
}

double min_normalized_slack(const HPolyhedron& p, const Eigen::VectorXd& x, double box) {
  double s = box - x.cwiseAbs().maxCoeff();
  const Eigen::VectorXd r = p.residual(x);
  for (Eigen::Index i = 0; i < r.size(); ++i) s = std::min(s, r[i] / p.A.row(i).norm());
  return s;
}

}  // namespace

TEST_CASE("q profiles") {
  auto q = q_profile(forward(net_e1(), vec({1, 2})));
  CHECK(q.binary[0] == vec({1, 1}));
  CHECK(q.polar[0] == vec({1, 1}));
  q = q_profile(forward(net_e1(), vec({-1, 2})));
  CHECK(q.binary[0] == vec({0, 1}));
  CHECK(q.polar[0] == vec({-1, 1}));
  q = q_profile(forward(net_e2(), vec({1, 2})));
  CHECK(q.binary[0] == vec({1, 1}));
  CHECK(q.binary[1] == vec({0}));
  CHECK(q.polar[1] == vec({-1}));

  const auto from_code = q_profile(net_e2(), code_of(net_e2(), vec({1, 2})));
  CHECK(from_code.binary == q.binary);
  CHECK_THROWS_AS(q_profile(net_e2(), code_of(net_e1(), vec({1, 2}))), IncompatibleCodesError);

  Rng rng(1);
  const auto net = random_network(rng, 3, {6, 6});
  for (int i = 0; i < 50; ++i) {
    const auto p = q_profile(forward(net, vec({rng.normal(), rng.normal(), rng.normal()})));
    for (std::size_t k = 0; k < p.binary.size(); ++k) {
      CHECK(p.polar[k] == Eigen::VectorXd(2.0 * p.binary[k].array() - 1.0));
    }
  }
}

TEST_CASE("region examples") {
  auto p = region_of(net_e1(), vec({1, 2}));
  CHECK(p.A == Eigen::MatrixXd::Identity(2, 2));
  CHECK(p.b == vec({0, 0}));
  CHECK(p.provenance == std::vector<RowProvenance>{{0, 0, 1}, {0, 1, 1}});

  p = region_of(net_e1(), vec({-1, 2}));
  Eigen::MatrixXd expect(2, 2);
  expect << -1, 0, 0, 1;
  CHECK(p.A == expect);
  CHECK(p.b == vec({0, 0}));
  CHECK(p.provenance[0].sign == -1);

  p = region_of(net_e2(), vec({2, 1}));
  Eigen::MatrixXd e2(3, 2);
  e2 << 1, 0, 0, 1, 1, -1;
  CHECK(p.A == e2);
  CHECK(p.b == vec({0, 0, 0}));
  CHECK(p.rows() == 3);
  CHECK(p.provenance[2] == RowProvenance{1, 0, 1});
}

TEST_CASE("region rows match the closed-form product expansion") {
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + trial % 3;
    const auto net = random_network(rng, m, {5, 4, 6, 3});
    Eigen::VectorXd x(static_cast<Eigen::Index>(m));
    for (auto& v : x) v = rng.uniform(-3, 3);
    const auto trace = forward(net, x);
    const auto poly = region_of(net, x);
    REQUIRE(poly.rows() == net.total_neurons());
    for (std::size_t k = 1; k <= net.depth(); ++k) {
      const auto [A, b] = closed_form_rows(net, trace, k);
      const auto off = static_cast<Eigen::Index>(net.layer_offsets()[k - 1]);
      const auto n = A.rows();
      CHECK((poly.A.middleRows(off, n) - A).cwiseAbs().maxCoeff() <= 1e-10 * (1 + A.cwiseAbs().maxCoeff()));
      CHECK((poly.b.segment(off, n) - b).cwiseAbs().maxCoeff() <= 1e-10 * (1 + b.cwiseAbs().maxCoeff()));
    }
    // generating point satisfies its own system
    CHECK(poly.residual(x).minCoeff() >= -1e-9);
  }
}

TEST_CASE("containment examples") {
  const auto p = region_of(net_e1(), vec({1, 2}));
  CHECK(contains(p, vec({3, 4}), Closure::closed));
  CHECK_FALSE(contains(p, vec({0, 1}), Closure::open));
  CHECK(contains(p, vec({0, 1}), Closure::closed));
  CHECK_FALSE(contains(region_of(net_e2(), vec({2, 1})), vec({1, 2}), Closure::closed));
  CHECK_THROWS_AS(contains(p, vec({1}), Closure::open), ShapeError);
}

TEST_CASE("Chebyshev center of the clipped quadrant") {
  const auto p = region_of(net_e1(), vec({1, 2}));
  const auto ball = chebyshev_center(p, 1.0);
  REQUIRE(ball);
  CHECK(std::abs(ball->center[0] - 0.5) <= 1e-8);
  CHECK(std::abs(ball->center[1] - 0.5) <= 1e-8);
  CHECK(std::abs(ball->radius - 0.5) <= 1e-8);

  // grid search oracle, step 0.005
  double best = -1.0;
  Eigen::VectorXd arg(2);
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const Eigen::VectorXd x = vec({-1 + 0.005 * i, -1 + 0.005 * j});
      const double s = min_normalized_slack(p, x, 1.0);
      if (s > best) {
        best = s;
        arg = x;
      }
    }
  }
  CHECK(std::abs(best - ball->radius) <= 0.005);
  CHECK((arg - ball->center).norm() <= 0.01);
}

TEST_CASE("Chebyshev special cases") {
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  CHECK_FALSE(chebyshev_center(A, vec({0, -1}), 10.0));

  const auto full = chebyshev_center(Eigen::MatrixXd(0, 3), Eigen::VectorXd(0), 1.0);
  REQUIRE(full);
  CHECK(full->center.norm() <= 1e-12);
  CHECK(full->radius == doctest::Approx(1.0));

  // a zero row with negative offset is infeasible, with positive offset harmless
  CHECK_FALSE(chebyshev_center(Eigen::MatrixXd::Zero(1, 2), vec({-1}), 1.0));
  CHECK(chebyshev_center(Eigen::MatrixXd::Zero(1, 2), vec({1}), 1.0)->radius ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(chebyshev_center(A, vec({0, 1}), 0.0), PreconditionError);

  // a thin slab 0 <= x1 <= 1e-3
  Eigen::MatrixXd slab(2, 2);
  slab << 1, 0, -1, 0;
  const auto thin = chebyshev_center(slab, vec({0, 1e-3}), 5.0);
  REQUIRE(thin);
  CHECK(thin->radius == doctest::Approx(5e-4));
}

TEST_CASE("redundancy pruning") {
  const auto p = region_of(net_e2(), vec({2, 1}));
  const auto pruned = prune_redundant(p);
  REQUIRE(pruned.rows() == 2);
  CHECK(pruned.provenance[0] == RowProvenance{0, 1, 1});
  CHECK(pruned.provenance[1] == RowProvenance{1, 0, 1});
  CHECK(prune_redundant(region_of(net_e1(), vec({1, 2}))).rows() == 2);

  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = random_network(rng, 2, {8, 8});
    const auto x = vec({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    const auto full = region_of(net, x);
    const auto small = prune_redundant(full);
    CHECK(small.rows() <= full.rows());
    for (int i = 0; i < 300; ++i) {
      const auto y = vec({rng.uniform(-6, 6), rng.uniform(-6, 6)});
      const Eigen::VectorXd r = full.residual(y);
      // skip points within rounding distance of a pruned boundary
      if (r.cwiseAbs().minCoeff() < 1e-9) continue;
      CHECK(contains(full, y, Closure::closed) == contains(small, y, Closure::closed));
    }
  }
}

TEST_CASE("facet witness examples") {
  const auto e1 = net_e1();
  const auto w = facet_witness(e1, Code::from_string("11", e1.fingerprint()),
                               Code::from_string("01", e1.fingerprint()));
  REQUIRE(w.status == WitnessStatus::certified);
  REQUIRE(w.point);
  CHECK((*w.point)[0] == doctest::Approx(0.0));
  CHECK((*w.point)[1] > 0.0);
  CHECK(code_of(e1, *w.point).to_string() == "01");
  CHECK(w.flipped_bit == 0);

  CHECK_THROWS_AS(facet_witness(e1, Code::from_string("11", e1.fingerprint()),
                                Code::from_string("00", e1.fingerprint())),
                  PreconditionError);

  const auto e2 = net_e2();
  const auto w2 = facet_witness(e2, Code::from_string("11|1", e2.fingerprint()),
                                Code::from_string("11|0", e2.fingerprint()));
  REQUIRE(w2.status == WitnessStatus::certified);
  const auto& z = *w2.point;
  CHECK(std::abs(z[0] - z[1]) < 1e-7);
  CHECK(z[0] > 0.0);
  CHECK(code_of(e2, z).to_string() == "11|0");
}

TEST_CASE("facet witness reports non-adjacent cells") {
  // Two parallel hyperplanes x1 = 0 and x1 = 1: codes 10 and 11 are adjacent,
  // but the cell of 01 (x1 < 0 and x1 > 1) is empty, so 00 <-> 01 has no facet.
  Eigen::MatrixXd w(2, 2);
  w << 1, 0, 1, 0;
  const ReluNetwork net(2, {AffineLayer{w, vec({0, -1})}});
  const auto ok = facet_witness(net, Code::from_string("10", net.fingerprint()),
                                Code::from_string("11", net.fingerprint()));
  CHECK(ok.status == WitnessStatus::certified);
  const auto none = facet_witness(net, Code::from_string("00", net.fingerprint()),
                                  Code::from_string("01", net.fingerprint()));
  CHECK(none.status == WitnessStatus::not_adjacent);
  CHECK_FALSE(none.point);
}

TEST_CASE("facet witnesses on random grid neighbors satisfy their post-conditions") {
  Rng rng(47);
  std::size_t certified = 0;
  std::size_t tried = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const auto net = random_network(rng, 2, {6, 5});
    const auto grid = grid_tessellation(net, {{{-3, 3}, {-3, 3}}}, 150);
    for (const auto& pair : grid.neighbor_pairs) {
      if (pair.hamming != 1) continue;
      const auto& a = grid.id_to_code[pair.id_a];
      const auto& b = grid.id_to_code[pair.id_b];
      ++tried;
      const auto w = facet_witness(net, a, b);
      if (w.status != WitnessStatus::certified) continue;
      ++certified;
      const auto& z = *w.point;
      const auto trace = forward(net, z);
      std::size_t layer = net.depth() - 1;
      while (net.layer_offsets()[layer] > w.flipped_bit) --layer;
      const double pre = trace.pre_activations[layer][static_cast<Eigen::Index>(
          w.flipped_bit - net.layer_offsets()[layer])];
      CHECK(std::abs(pre) < 1e-7);
      const auto code = code_of(net, z);
      CHECK_FALSE(code.test(w.flipped_bit));
      CHECK(code == a.with_bit(w.flipped_bit, false));
      const Eigen::VectorXd r = region_of_code(net, a).residual(z);
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (static_cast<std::size_t>(i) != w.flipped_bit) CHECK(r[i] > 0.0);
      }
    }
  }
  CHECK(tried > 0);
  CHECK(certified == tried);
}

TEST_CASE("duality suite on small random networks") {
  Rng rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = random_network(rng, 2 + trial % 2, {6, 5, 4});
    DualityOptions opts;
    opts.samples = 300;
    opts.seed = static_cast<std::uint64_t>(trial);
    const auto report = verify_duality(net, opts);
    CHECK(report.points == 300);
    CHECK(report.residual_failures == 0);
    CHECK(report.pair_failures == 0);
    CHECK(report.equal_code_pairs > 0);
    CHECK(report.passed());
  }
}

TEST_CASE("polyhedron export formats") {
  const auto p = region_of(net_e1(), vec({-1, 2}));
  CHECK(to_ine(p) == "H-representation\nbegin\n2 3 real\n0 -1 0\n0 0 1\nend\n");
  const auto doc = nlohmann::json::parse(to_json(p));
  CHECK(doc["A"][0][0] == -1.0);
  CHECK(doc["b"].size() == 2);
  CHECK(doc["provenance"][0] == nlohmann::json::array({0, 0, -1}));
}
