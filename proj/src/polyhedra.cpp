#include "relucode/polyhedra.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "relucode/errors.hpp"
#include "relucode/random.hpp"
#include "relucode/simplex.hpp"

namespace relucode {

// ---- activation profiles ----------------------------------------------------

QProfile q_profile(const ActivationTrace& trace) {
  QProfile q;
  for (const auto& pre : trace.pre_activations) {
    Eigen::VectorXd beta = (pre.array() > 0.0).cast<double>();
    q.polar.push_back(2.0 * beta.array() - 1.0);
    q.binary.push_back(std::move(beta));
  }
  return q;
}

QProfile q_profile(const ReluNetwork& net, const Code& code) {
  if (code.size() != net.total_neurons() || code.fingerprint() != net.fingerprint()) {
    throw IncompatibleCodesError("code was not produced by this network");
  }
  QProfile q;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    Eigen::VectorXd beta(net.layer(k).rows());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      beta[i] = code.test(net.layer_offsets()[k] + static_cast<std::size_t>(i)) ? 1.0 : 0.0;
    }
    q.polar.push_back(2.0 * beta.array() - 1.0);
    q.binary.push_back(std::move(beta));
  }
  return q;
}

// ---- cells ---------------------------------------------------------------------

HPolyhedron region_from_profile(const ReluNetwork& net, const QProfile& profile) {
  if (profile.binary.size() != net.depth() || profile.polar.size() != net.depth()) {
    throw ShapeError("activation profile depth does not match the network");
  }
  const auto m = static_cast<Eigen::Index>(net.input_dim());
  HPolyhedron poly;
  poly.A.resize(static_cast<Eigen::Index>(net.total_neurons()), m);
  poly.b.resize(static_cast<Eigen::Index>(net.total_neurons()));
  poly.provenance.reserve(net.total_neurons());

  // On the cell, the input to layer k is the affine map map_w * x + map_b.
  Eigen::MatrixXd map_w = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd map_b = Eigen::VectorXd::Zero(m);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& layer = net.layer(k);
    const auto& beta = profile.binary[k];
    const auto& pi = profile.polar[k];
    if (static_cast<std::size_t>(beta.size()) != layer.rows() ||
        static_cast<std::size_t>(pi.size()) != layer.rows()) {
      throw ShapeError("activation profile width mismatch at layer " + std::to_string(k));
    }
    Eigen::MatrixXd pre_w = layer.weights * map_w;
    Eigen::VectorXd pre_b = layer.weights * map_b + layer.bias;
    const auto n = pre_w.rows();
    poly.A.middleRows(row, n) = pi.asDiagonal() * pre_w;
    poly.b.segment(row, n) = pi.asDiagonal() * pre_b;
    for (Eigen::Index i = 0; i < n; ++i) {
      poly.provenance.push_back({k, static_cast<std::size_t>(i), pi[i] > 0 ? 1 : -1});
    }
    row += n;
    map_w = beta.asDiagonal() * pre_w;
    map_b = beta.asDiagonal() * pre_b;
  }
  return poly;
}

HPolyhedron region_of(const ReluNetwork& net, const Eigen::VectorXd& x) {
  return region_from_profile(net, q_profile(forward(net, x)));
}

HPolyhedron region_of_code(const ReluNetwork& net, const Code& code) {
  return region_from_profile(net, q_profile(net, code));
}

bool contains(const HPolyhedron& poly, const Eigen::VectorXd& x, Closure mode) {
  if (static_cast<std::size_t>(x.size()) != poly.dim()) {
    throw ShapeError("point has dimension " + std::to_string(x.size()) + ", polyhedron " +
                     std::to_string(poly.dim()));
  }
  const Eigen::VectorXd r = poly.residual(x);
  return mode == Closure::closed ? (r.array() >= 0.0).all() : (r.array() > 0.0).all();
}

// ---- Chebyshev center -------------------------------------------------------------

std::optional<ChebyshevBall> chebyshev_center(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                              double box_bound) {
  if (!(box_bound > 0.0) || !std::isfinite(box_bound)) {
    throw PreconditionError("box_bound must be positive and finite");
  }
  if (A.rows() != b.size()) {
    throw ShapeError("constraint matrix and offset vector disagree in length");
  }
  const Eigen::Index m = A.cols();
  const Eigen::Index k = A.rows();
  // Variables (y, r) with x = y - box_bound, so y >= 0 encodes x >= -box_bound.
  lp::LinearProgram p;
  p.A = Eigen::MatrixXd::Zero(k + 2 * m + 1, m + 1);
  p.b.resize(k + 2 * m + 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    // A_i x + b_i >= |A_i| r   <=>   -A_i y + |A_i| r <= b_i - box * sum(A_i)
    p.A.row(i).head(m) = -A.row(i);
    p.A(i, m) = A.row(i).norm();
    p.b[i] = b[i] - box_bound * A.row(i).sum();
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    p.A(k + 2 * j, j) = 1.0;  // x_j + r <= box
    p.A(k + 2 * j, m) = 1.0;
    p.b[k + 2 * j] = 2.0 * box_bound;
    p.A(k + 2 * j + 1, j) = -1.0;  // -x_j + r <= box
    p.A(k + 2 * j + 1, m) = 1.0;
    p.b[k + 2 * j + 1] = 0.0;
  }
  p.A(k + 2 * m, m) = 1.0;  // r <= box keeps the zero-dimensional case bounded
  p.b[k + 2 * m] = box_bound;
  p.c = Eigen::VectorXd::Zero(m + 1);
  p.c[m] = 1.0;

  const auto sol = lp::solve(p);
  if (sol.status != lp::Status::optimal) {
    return std::nullopt;
  }
  ChebyshevBall ball;
  ball.center = sol.x.head(m).array() - box_bound;
  ball.radius = sol.x[m];
  return ball;
}

std::optional<ChebyshevBall> chebyshev_center(const HPolyhedron& poly, double box_bound) {
  return chebyshev_center(poly.A, poly.b, box_bound);
}

// ---- redundancy ----------------------------------------------------------------

HPolyhedron prune_redundant(const HPolyhedron& poly, double tol) {
  const Eigen::Index m = poly.A.cols();
  std::vector<bool> keep(poly.rows(), true);
  for (Eigen::Index i = 0; i < poly.A.rows(); ++i) {
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < poly.A.rows(); ++j) {
      if (j != i && keep[static_cast<std::size_t>(j)]) others.push_back(j);
    }
    // min A_i x over the other rows, x = u - v free:  max -A_i (u - v)
    // subject to -A_j (u - v) <= b_j.
    lp::LinearProgram p;
    const auto n_rows = static_cast<Eigen::Index>(others.size());
    p.A.resize(n_rows, 2 * m);
    p.b.resize(n_rows);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
      const auto j = others[static_cast<std::size_t>(r)];
      p.A.row(r).head(m) = -poly.A.row(j);
      p.A.row(r).tail(m) = poly.A.row(j);
      p.b[r] = poly.b[j];
    }
    p.c.resize(2 * m);
    p.c.head(m) = -poly.A.row(i).transpose();
    p.c.tail(m) = poly.A.row(i).transpose();
    const auto sol = lp::solve(p);
    if (sol.status == lp::Status::optimal && -sol.objective + poly.b[i] >= -tol) {
      keep[static_cast<std::size_t>(i)] = false;
    }
  }
  HPolyhedron out;
  const auto kept = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
  out.A.resize(kept, m);
  out.b.resize(kept);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < poly.A.rows(); ++i) {
    if (!keep[static_cast<std::size_t>(i)]) continue;
    out.A.row(r) = poly.A.row(i);
    out.b[r] = poly.b[i];
    out.provenance.push_back(poly.provenance[static_cast<std::size_t>(i)]);
    ++r;
  }
  return out;
}

// ---- facet witnesses -----------------------------------------------------------------

namespace {

std::size_t single_flipped_bit(const Code& a, const Code& b) {
  const auto d = hamming(a, b);
  if (d != 1) {
    throw PreconditionError("facet_witness needs codes at Hamming distance 1, got " +
                            std::to_string(d));
  }
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t w = 0; w < wa.size(); ++w) {
    if (const auto diff = wa[w] ^ wb[w]; diff != 0) {
      return w * kWordBits + static_cast<std::size_t>(std::countr_zero(diff));
    }
  }
  return 0;  // unreachable: distance is 1
}

// True when z satisfies every post-condition of a certified witness.
bool witness_holds(const ReluNetwork& net, const HPolyhedron& cell, const Code& expected,
                   std::size_t bit, const Eigen::VectorXd& z) {
  const auto trace = forward(net, z);
  std::size_t layer = 0;
  while (layer + 1 < net.depth() && net.layer_offsets()[layer + 1] <= bit) ++layer;
  const double pre = trace.pre_activations[layer][static_cast<Eigen::Index>(
      bit - net.layer_offsets()[layer])];
  if (!(std::abs(pre) < kHyperplaneTol)) return false;
  const Eigen::VectorXd r = cell.residual(z);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (static_cast<std::size_t>(i) != bit && !(r[i] > 0.0)) return false;
  }
  return code_of(net, trace) == expected;
}

}  // namespace

FacetWitness facet_witness(const ReluNetwork& net, const Code& code_a, const Code& code_b,
                           double box_bound) {
  const std::size_t bit = single_flipped_bit(code_a, code_b);
  const HPolyhedron cell = region_of_code(net, code_a);
  const auto j = static_cast<Eigen::Index>(bit);
  const Eigen::Index m = cell.A.cols();
  const Eigen::Index k = cell.A.rows();

  FacetWitness result;
  result.flipped_bit = bit;

  const Eigen::RowVectorXd hyper = cell.A.row(j);
  const double hyper_b = cell.b[j];
  Eigen::Index pivot = 0;
  hyper.cwiseAbs().maxCoeff(&pivot);
  if (hyper[pivot] == 0.0) {
    // The neuron is constant on this cell; no hyperplane to sit on.
    return result;
  }

  // On the hyperplane, x_pivot = alpha . y + beta where y are the other coordinates.
  std::vector<Eigen::Index> free_coords;
  for (Eigen::Index q = 0; q < m; ++q) {
    if (q != pivot) free_coords.push_back(q);
  }
  const auto d = static_cast<Eigen::Index>(free_coords.size());
  Eigen::RowVectorXd alpha(d);
  for (Eigen::Index q = 0; q < d; ++q) {
    alpha[q] = -hyper[free_coords[static_cast<std::size_t>(q)]] / hyper[pivot];
  }
  const double beta = -hyper_b / hyper[pivot];

  // Remaining cell rows plus the box on x_pivot, expressed in y.
  Eigen::MatrixXd reduced_A(k - 1 + 2, d);
  Eigen::VectorXd reduced_b(k - 1 + 2);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (i == j) continue;
    for (Eigen::Index q = 0; q < d; ++q) {
      reduced_A(r, q) = cell.A(i, free_coords[static_cast<std::size_t>(q)]) +
                        cell.A(i, pivot) * alpha[q];
    }
    reduced_b[r] = cell.b[i] + cell.A(i, pivot) * beta;
    ++r;
  }
  reduced_A.row(r) = -alpha;  // box - x_pivot >= 0
  reduced_b[r] = box_bound - beta;
  ++r;
  reduced_A.row(r) = alpha;  // x_pivot + box >= 0
  reduced_b[r] = box_bound + beta;

  const auto ball = chebyshev_center(reduced_A, reduced_b, box_bound);
  if (!ball) {
    return result;
  }
  result.radius = ball->radius;
  if (!(ball->radius > kStrictnessTol)) {
    result.status = WitnessStatus::undetermined;
    return result;
  }

  Eigen::VectorXd z(m);
  for (Eigen::Index q = 0; q < d; ++q) {
    z[free_coords[static_cast<std::size_t>(q)]] = ball->center[q];
  }
  z[pivot] = alpha.dot(ball->center) + beta;

  // Step onto the bit-0 side of the hyperplane by a few ulps if rounding left z above it.
  const Code expected = code_a.with_bit(bit, false);
  const double sign = cell.provenance[bit].sign;  // unsigned pre-activation = sign * row
  const Eigen::VectorXd normal = sign * hyper.transpose();
  const double normal_sq = normal.squaredNorm();
  std::size_t layer = 0;
  while (layer + 1 < net.depth() && net.layer_offsets()[layer + 1] <= bit) ++layer;
  const auto neuron = static_cast<Eigen::Index>(bit - net.layer_offsets()[layer]);
  double nudge = 1e-15 * (1.0 + std::abs(hyper_b) + z.cwiseAbs().maxCoeff() * hyper.cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 12; ++attempt) {
    const auto trace = forward(net, z);
    const double pre = trace.pre_activations[layer][neuron];
    if (pre <= 0.0 && code_of(net, trace) == expected) break;
    z -= ((std::max(pre, 0.0) + nudge) / normal_sq) * normal;
    nudge *= 4.0;
  }

  if (witness_holds(net, cell, expected, bit, z)) {
    result.status = WitnessStatus::certified;
    result.point = std::move(z);
  } else {
    result.status = WitnessStatus::undetermined;
  }
  return result;
}

// ---- export ------------------------------------------------------------------------

std::string to_json(const HPolyhedron& poly) {
  nlohmann::json doc;
  doc["input_dim"] = poly.dim();
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < poly.A.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < poly.A.cols(); ++j) row.push_back(poly.A(i, j));
    a.push_back(std::move(row));
  }
  doc["A"] = std::move(a);
  nlohmann::json b = nlohmann::json::array();
  for (Eigen::Index i = 0; i < poly.b.size(); ++i) b.push_back(poly.b[i]);
  doc["b"] = std::move(b);
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : poly.provenance) prov.push_back({p.layer, p.neuron, p.sign});
  doc["provenance"] = std::move(prov);
  return doc.dump(1) + "\n";
}

std::string to_ine(const HPolyhedron& poly) {
  std::string out = "H-representation\nbegin\n";
  out += std::to_string(poly.rows()) + " " + std::to_string(poly.dim() + 1) + " real\n";
  char buf[32];
  for (Eigen::Index i = 0; i < poly.A.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", poly.b[i] + 0.0);
    out += buf;
    for (Eigen::Index j = 0; j < poly.A.cols(); ++j) {
      std::snprintf(buf, sizeof buf, " %.17g", poly.A(i, j) + 0.0);
      out += buf;
    }
    out.push_back('\n');
  }
  out += "end\n";
  return out;
}

// ---- duality property suite ----------------------------------------------------------------

namespace {

bool away_from_boundaries(const ActivationTrace& trace, double min_abs) {
  for (const auto& pre : trace.pre_activations) {
    if ((pre.array().abs() <= min_abs).any()) return false;
  }
  return true;
}

}  // namespace

DualityReport verify_duality(const ReluNetwork& net, const DualityOptions& options) {
  Rng rng(options.seed);
  const auto m = static_cast<Eigen::Index>(net.input_dim());
  struct Sample {
    Eigen::VectorXd x;
    Code code;
    HPolyhedron cell;
  };
  auto make_sample = [&](Eigen::VectorXd x) -> std::optional<Sample> {
    const auto trace = forward(net, x);
    if (!away_from_boundaries(trace, options.min_abs_preactivation)) return std::nullopt;
    return Sample{x, code_of(net, trace), region_from_profile(net, q_profile(trace))};
  };

  DualityReport report;
  std::vector<Sample> samples;
  samples.reserve(options.samples);
  const std::size_t max_draws = options.samples * options.max_draws_factor;
  for (std::size_t draw = 0; samples.size() < options.samples && draw < max_draws; ++draw) {
    Eigen::VectorXd x(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      x[i] = rng.uniform(-options.sample_radius, options.sample_radius);
    }
    if (auto s = make_sample(std::move(x))) {
      samples.push_back(std::move(*s));
    } else {
      ++report.rejected_near_boundary;
    }
  }
  report.points = samples.size();

  auto check_pair = [&](const Sample& p, const Sample& q) {
    const bool same_code = p.code == q.code;
    const bool mutual = contains(p.cell, q.x, Closure::open) && contains(q.cell, p.x, Closure::open);
    ++report.pair_checks;
    if (same_code) ++report.equal_code_pairs;
    if (same_code != mutual) ++report.pair_failures;
  };

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const Eigen::VectorXd r = s.cell.residual(s.x);
    ++report.residual_checks;
    report.worst_residual = std::min(report.worst_residual, r.minCoeff());
    if (r.minCoeff() < -kResidualTol) ++report.residual_failures;

    check_pair(s, samples[(i + 1) % samples.size()]);
    Eigen::VectorXd nearby = s.x;
    for (Eigen::Index c = 0; c < m; ++c) nearby[c] += 1e-3 * rng.normal();
    if (auto t = make_sample(std::move(nearby))) check_pair(s, *t);
  }
  return report;
}

}  // namespace relucode
