#pragma once

// Closed forms for symmetric configurations: three equiprobable states,
// N equiprobable states, two-of-three equal priors, and a symmetric
// four-state family.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qdisc/core.hpp"
#include "qdisc/solver_direct.hpp"

namespace qdisc {

// ------------------------------------------------ three equiprobable states

enum class ThreeEqKind { Generalized, ProjectivePair };

struct ThreeEqClassification {
  ThreeEqKind kind = ThreeEqKind::Generalized;
  std::array<std::size_t, 2> pair{0, 1};  // meaningful for ProjectivePair
  /// (b1+b2).(b3-b1), (b3+b1).(b2-b3), (b2+b3).(b1-b2)
  std::array<double, 3> inequality_values{};
};

/// Values within 1e-10 of zero count as violated. Throws DegenerateInput on
/// coincident states.
ThreeEqClassification classify_three_equiprobable(const BlochVector& b1,
                                                  const BlochVector& b2,
                                                  const BlochVector& b3,
                                                  double tol = kDefaultTolerance);

/// Offset of the plane through the three Bloch points, as a vector from the
/// origin: c det[b1,b2,b3] / |c|^2 with c = (b2-b1) x (b3-b1).
Eigen::Vector3d common_offset_vector(const BlochVector& b1, const BlochVector& b2,
                                     const BlochVector& b3);

/// (1/3)(1 + sqrt(1 - 4 |offset|^2)).
double three_equiprobable_value(const BlochVector& b1, const BlochVector& b2,
                                const BlochVector& b3);

/// Frame with the plane normal as z (oriented so the offset is >= 0), x along
/// the sum of the in-plane projections of b1 and b2, y along their
/// difference. Rows of `axes` are the frame axes in input coordinates.
struct TripleFrame {
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();
  double offset = 0.0;
  std::array<Eigen::Vector3d, 3> local;  // states in frame coordinates
};

TripleFrame canonical_triple_frame(const BlochVector& b1, const BlochVector& b2,
                                   const BlochVector& b3);

Solution solve_three_equiprobable(const BlochVector& b1, const BlochVector& b2,
                                  const BlochVector& b3,
                                  double tol = kDefaultTolerance);

struct EquiprobableExtension {
  std::vector<bool> absorbed;
  std::vector<double> values;  // offset . (beta_j - offset)
  double p_corr = 0.0;         // (1/N)(1 + sqrt(1 - 4 |offset|^2))
};

/// Whether extra states can join a generalized three-state measurement of
/// equiprobable states with zero frequency; N = 3 + extras.size().
EquiprobableExtension extend_equiprobable(std::span<const BlochVector, 3> base,
                                          std::span<const BlochVector> extras);

// -------------------------------------------------- N equiprobable states

enum class NequalKind { StatesFormPovm, LatitudeReducible, NoNontrivialB };

struct NequalStructure {
  NequalKind kind = NequalKind::NoNontrivialB;
  std::vector<double> omega;             // StatesFormPovm
  double p_corr = 0.0;                   // StatesFormPovm: 2/N
  Eigen::Vector3d b_direction = Eigen::Vector3d::Zero();  // LatitudeReducible
};

NequalStructure nequal_structure(std::span<const BlochVector> states,
                                 double tol = kDefaultTolerance);

// ------------------------------------------- two of three equal priors

/// b1 = (sin 2t, 0, cos 2t)/2, b2 = (-sin 2t, 0, cos 2t)/2, b3 = (0, 0, 1/2);
/// priors (p, p, 1 - 2p). 0 < theta <= pi/4.
struct MirrorSymmetricConfig {
  double theta = 0.0;
};

/// b1 = (b, 0, sqrt(1-b^2))/2, b2 = (-b, 0, sqrt(1-b^2))/2, b3 = (1/2, 0, 0);
/// priors (p, p, 1 - 2p). 0 < b < 1.
struct CzhecConfig {
  double b = 0.0;
};

using TwoOfThreeConfig = std::variant<MirrorSymmetricConfig, CzhecConfig>;

struct ThresholdPair {
  double p_l = 0.0;
  double p_r = 0.0;
};

/// Generalized measurement is optimal for p_l < p < p_r. Throws
/// ConfigMismatch for parameters outside the family.
ThresholdPair two_of_three_thresholds(const TwoOfThreeConfig& config);

Problem two_of_three_problem(const TwoOfThreeConfig& config, double p,
                             double tol = kDefaultTolerance);

/// Frequencies of the three-element measurement of the Czhec family.
std::array<double, 3> czhec_frequencies(double b, double p);
/// Optimal success probability of the three-element measurement.
double czhec_value(double b, double p);
/// Signed length of B along b1 + b2.
double czhec_b_length(double b, double p);

// ------------------------------------------------ four-state family

/// b1,2 = (b11, +-b12, 0), b3,4 = (0, b32, +-b33); priors (p, p, 1/2-p, 1/2-p).
struct FourSymmetricConfig {
  double b11 = 0.0;
  double b32 = 0.0;
  double b33 = 0.5;
};

ThresholdPair four_symmetric_thresholds(const FourSymmetricConfig& config);
Problem four_symmetric_problem(const FourSymmetricConfig& config, double p,
                               double tol = kDefaultTolerance);

struct FourSymmetricFourElement {
  double a = 0.0;
  double b1 = 0.0;                 // B = (b1, 0, 0)
  std::array<double, 4> omega{};
};

/// Four-element closed form, meaningful for p_l < p < p_r.
FourSymmetricFourElement four_symmetric_four_element(const FourSymmetricConfig& config,
                                                      double p);

/// Frequencies (omega_2, omega_3 = omega_4) at p = p_l.
std::array<double, 2> four_symmetric_lower_frequencies(const FourSymmetricConfig& config);

struct FourSymmetricSolution {
  Solution solution;
  ThresholdPair thresholds;
};

FourSymmetricSolution four_symmetric_solve(const FourSymmetricConfig& config, double p,
                                           double tol = kDefaultTolerance);

}  // namespace qdisc
