#pragma once

// States and priors for which a given POVM is the minimum-error measurement.
//
// For a free vector R:
//   q_j   = (1/4 + (2 gamma_j + R) . R) / (1/2 + 2 gamma_j . R)
//   A     = 1 / sum_j q_j,   p_j = A q_j
//   beta_j = ((1 - q_j) gamma_j + R) / q_j
// Every beta_j has length 1/2 by construction, and A is the optimal success
// probability of the generated problem.

#include <vector>

#include "qdisc/core.hpp"
#include "qdisc/rng.hpp"

namespace qdisc {

struct InverseResult {
  Problem problem;
  double a_value = 0.0;
  std::vector<double> q;
  Eigen::Vector3d r_vector = Eigen::Vector3d::Zero();
};

/// Throws DenominatorVanishes(j), NonPositivePrior(j), or CertificateFailed
/// when the POVM does not certify on the generated problem.
InverseResult inverse(const Povm& povm, const Eigen::Vector3d& r,
                      double tol = kDefaultTolerance);

struct RoundTripReport {
  double a_value = 0.0;
  double solved_p_corr = 0.0;
  double value_gap = 0.0;       // |solved_p_corr - a_value|
  double max_length_error = 0.0;  // max_j ||beta_j| - 1/2|
  bool povm_certifies = false;
  bool passed = false;          // certifies and value_gap <= threshold
};

RoundTripReport round_trip(const Povm& povm, const Eigen::Vector3d& r,
                           double threshold = 1e-8,
                           double tol = kDefaultTolerance);

/// Rejection-samples R uniformly in a ball until inverse() succeeds. The
/// radius starts at 0.4 and halves after every `attempts_per_radius`
/// failures. Throws the last inverse() error after `max_attempts`.
InverseResult sample_admissible(const Povm& povm, CounterRng& rng,
                                int max_attempts = 2000,
                                int attempts_per_radius = 200,
                                double tol = kDefaultTolerance);

}  // namespace qdisc
