#pragma once

// Minimum-error measurement for N pure qubit states.
//
// An optimal POVM with active set S (omega_j > 0 for j in S) has
//   gamma_j = (p_j beta_j - B) / (A - p_j),   A = tr Gamma > p_j,
// for some real vector B. Requiring |gamma_j| = 1/2 gives, for each j in S,
//   A^2/4 - A p_j/2 = |B|^2 - 2 p_j B . beta_j,
// and the frequencies follow from sum omega_j gamma_j = 0, sum omega_j = 2.
// solve() walks active sets of size 4, 3 and 2, and accepts the first
// candidate whose optimality certificate passes on the full problem.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdisc/core.hpp"
#include "qdisc/oracle_sim.hpp"

namespace qdisc {

enum class MeasurementKind { Projective, Generalized3, Generalized4, PovmOfStates };

struct Classification {
  MeasurementKind kind = MeasurementKind::Projective;
  std::vector<std::size_t> active;  // indices with omega > 0
};

std::string to_string(MeasurementKind kind);

struct Solution {
  Povm povm;
  double p_corr = 0.0;
  Classification classification;
  Certificate certificate;
  bool degenerate = false;
  std::vector<std::string> diagnostics;
};

struct CandidateSystem {
  double a = 0.0;
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  std::vector<std::size_t> subset;
};

/// gamma_j = (beta_j p_j - B) / (A - p_j) for j in subset; lengths are not
/// normalized. Throws DegenerateDenominator when A == p_j.
std::vector<BlochVector> gamma_from_ab(const Problem& problem,
                                       std::span<const std::size_t> subset,
                                       double a, const Eigen::Vector3d& b);

/// Optimal projective measurement for two states with p1 + p2 <= 1.
/// The returned POVM has two elements indexed like the arguments.
Solution solve_two(const BlochVector& beta1, const BlochVector& beta2,
                   double p1, double p2, double tol = kDefaultTolerance);

/// Pads a solution of the subproblem on `subset` to the full problem with
/// zero-frequency elements and recomputes p_corr and the certificate.
Solution embed(const Solution& sub, std::span<const std::size_t> subset,
               const Problem& problem);

struct ExtensionResult {
  std::size_t index = 0;
  bool absorbed = false;
  double trace = 0.0;  // tr G_j
  double det = 0.0;    // det G_j
  /// Closed forms for a projective two-state base: tr G_j = A - p_j and the
  /// determinant expression in A, D, p_1, p_2 and the Bloch vectors.
  std::optional<double> closed_form_trace;
  std::optional<double> closed_form_det;
};

/// Whether each extra state can be added with a zero-frequency element while
/// keeping the base measurement optimal (G_j = Gamma - p_j rho_j >= 0).
/// `base.povm` must be indexed like `problem`.
std::vector<ExtensionResult> extension_check(
    const Solution& base, const Problem& problem,
    std::span<const std::size_t> extra);

/// Closed-form det G_j for the projective optimum of the pair (i1, i2).
double pair_extension_det(const Problem& problem, std::size_t i1,
                          std::size_t i2, std::size_t j);

/// Four active states: B = A v from the three differenced equations, then A
/// from the summed quadratic. A rank-2 consistent system (states sharing a
/// latitude) fixes B along the null direction. Throws SingularSystem or
/// NoAdmissibleRoot.
CandidateSystem solve_candidate_m4(const Problem& problem,
                                   std::span<const std::size_t> subset);
std::vector<CandidateSystem> candidate_systems_m4(
    const Problem& problem, std::span<const std::size_t> subset);

/// Three active states: the two differenced equations plus coplanarity of the
/// gamma_j, which is linear in B, give B = A v + w; A then solves a
/// quadratic. Collinear p_j beta_j fall back to damped Newton from eight
/// deterministic starts. Throws NoConvergence or NoAdmissibleRoot.
CandidateSystem solve_candidate_m3(const Problem& problem,
                                   std::span<const std::size_t> subset);
std::vector<CandidateSystem> candidate_systems_m3(
    const Problem& problem, std::span<const std::size_t> subset);

/// Frequencies on the candidate's subset from sum omega gamma = 0,
/// sum omega = 2. Values in [-1e-12, 0) are clamped to 0. Throws
/// NegativeFrequency or SingularSystem.
std::vector<double> frequencies_from_candidate(const Problem& problem,
                                               const CandidateSystem& candidate);

/// Builds the full-size POVM for a candidate with known frequencies.
Povm povm_from_candidate(const Problem& problem,
                         const CandidateSystem& candidate,
                         std::span<const double> omega);

/// Origin in the convex hull of the states: smallest simplex (2..4 vertices)
/// whose barycentric weights are nonnegative, scaled to sum to 2.
std::optional<std::vector<double>> states_form_povm(
    std::span<const BlochVector> states, double tol = kDefaultTolerance);

struct SolveOptions {
  bool oracle_fallback = true;
  OracleConfig oracle{};
};

/// Certified minimum-error measurement. Throws SolverFailure when neither the
/// cascade nor the oracle fallback yields a passing certificate.
Solution solve(const Problem& problem, const SolveOptions& options = {});

/// Classification from the active set size of a POVM.
Classification classify_povm(const Povm& povm, bool states_form_povm = false);

}  // namespace qdisc
