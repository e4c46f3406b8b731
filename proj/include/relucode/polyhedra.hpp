#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relucode/codes.hpp"
#include "relucode/network.hpp"

namespace relucode {

/// Per-layer activation states: binary[k][i] in {0, 1} and polar = 2 * binary - 1.
struct QProfile {
  std::vector<Eigen::VectorXd> binary;
  std::vector<Eigen::VectorXd> polar;
};

QProfile q_profile(const ActivationTrace& trace);
QProfile q_profile(const ReluNetwork& net, const Code& code);

struct RowProvenance {
  std::size_t layer;
  std::size_t neuron;
  int sign;  // polar state of the neuron, +1 or -1
  bool operator==(const RowProvenance&) const = default;
};

/// The point set {x | A x + b >= 0}, one row per neuron in layer-major order
/// unless pruned.
struct HPolyhedron {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<RowProvenance> provenance;

  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(A.cols()); }
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const { return A * x + b; }
};

/// Closed cell of a given activation profile. Layer k contributes the rows
/// Q_pi(k) W_k Q_beta(k-1) W_{k-1} ... Q_beta(1) W_1 with the matching
/// propagated bias, built by carrying the cell's affine input map forward.
HPolyhedron region_from_profile(const ReluNetwork& net, const QProfile& profile);
HPolyhedron region_of(const ReluNetwork& net, const Eigen::VectorXd& x);
HPolyhedron region_of_code(const ReluNetwork& net, const Code& code);

enum class Closure { closed, open };

/// Exact sign test of the computed residual: >= 0 (closed) or > 0 (open).
bool contains(const HPolyhedron& poly, const Eigen::VectorXd& x, Closure mode);

inline constexpr double kDefaultBoxBound = 1e3;
inline constexpr double kStrictnessTol = 1e-9;
inline constexpr double kHyperplaneTol = 1e-7;
inline constexpr double kResidualTol = 1e-9;

struct ChebyshevBall {
  Eigen::VectorXd center;
  double radius;
};

/// Largest ball (in the Euclidean metric) inside {A x + b >= 0} intersected
/// with the box [-box_bound, box_bound]^m. Returns nullopt if that
/// intersection is empty. Zero rows enter only through their sign of b.
std::optional<ChebyshevBall> chebyshev_center(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                              double box_bound);
std::optional<ChebyshevBall> chebyshev_center(const HPolyhedron& poly,
                                              double box_bound = kDefaultBoxBound);

/// Drops rows implied by the others: row i goes when min over the remaining
/// system of A_i x + b_i is >= -tol (one LP per row, in row order).
HPolyhedron prune_redundant(const HPolyhedron& poly, double tol = kResidualTol);

enum class WitnessStatus { certified, not_adjacent, undetermined };

struct FacetWitness {
  WitnessStatus status = WitnessStatus::not_adjacent;
  std::optional<Eigen::VectorXd> point;
  double radius = 0.0;
  std::size_t flipped_bit = 0;
};

/// Searches the hyperplane of the single differing neuron for a point where
/// every other row of code_a's cell holds strictly. A certified point z has
/// |pre-activation of the flipped neuron| < 1e-7, all other rows > 0, and
/// code_of(z) == code_a with the flipped bit cleared. Throws
/// PreconditionError unless hamming(code_a, code_b) == 1.
FacetWitness facet_witness(const ReluNetwork& net, const Code& code_a, const Code& code_b,
                           double box_bound = kDefaultBoxBound);

std::string to_json(const HPolyhedron& poly);
/// cdd-style H-representation: each row is "b_i A_i1 ... A_im" meaning b + A x >= 0.
std::string to_ine(const HPolyhedron& poly);

// ---- property suite -----------------------------------------------------

struct DualityOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double sample_radius = 3.0;       // points drawn from [-r, r]^m
  double min_abs_preactivation = 1e-6;
  std::size_t max_draws_factor = 100;  // give up after samples * factor draws
};

struct DualityReport {
  std::size_t points = 0;
  std::size_t rejected_near_boundary = 0;
  std::size_t residual_checks = 0;
  std::size_t residual_failures = 0;
  std::size_t pair_checks = 0;
  std::size_t pair_failures = 0;
  std::size_t equal_code_pairs = 0;
  double worst_residual = 0.0;

  bool passed() const { return residual_failures == 0 && pair_failures == 0 && points > 0; }
};

/// Samples points away from every hyperplane and checks (a) the generating
/// point satisfies its own cell's system to -1e-9 and (b) for pairs,
/// equal codes iff each point lies in the other's open cell. Pairs combine
/// each point with the next sample and with a small perturbation of itself.
DualityReport verify_duality(const ReluNetwork& net, const DualityOptions& options);

}  // namespace relucode
