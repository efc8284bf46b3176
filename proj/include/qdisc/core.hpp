#pragma once

// Bloch-vector representation of pure qubit states and rank-one POVMs.
//
// Convention: a pure state is rho = I/2 + beta . sigma with |beta| = 1/2, and a
// POVM element is omega * (I/2 + gamma . sigma) with |gamma| = 1/2. With this
// scaling tr(rho_i pi_j) = 1/2 + 2 beta_i . gamma_j.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qdisc/errors.hpp"

namespace qdisc {

using BlochVector = Eigen::Vector3d;
using Matrix2c = Eigen::Matrix2cd;
using Complex = std::complex<double>;

inline constexpr double kDefaultTolerance = 1e-9;
inline constexpr double kBlochRadius = 0.5;

bool is_pure(const BlochVector& beta, double tol = kDefaultTolerance);

BlochVector bloch_from_ket(Complex a, Complex b);

/// Pauli coefficients of a 2x2 Hermitian matrix c0*I + c . sigma.
struct DensityMatrix {
  double c0 = 0.5;
  Eigen::Vector3d c = Eigen::Vector3d::Zero();

  Matrix2c matrix() const;
  double trace() const { return 2.0 * c0; }
};

DensityMatrix density_from_bloch(const BlochVector& beta,
                                 double tol = kDefaultTolerance);

/// I/2 + v . sigma, without any length check.
Matrix2c pauli_matrix(const Eigen::Vector3d& v);

/// |<psi_1|psi_2>|^2 = 1/2 + 2 beta_1 . beta_2.
double overlap(const BlochVector& beta1, const BlochVector& beta2);

/// A discrimination instance: pure states with prior probabilities.
///
/// Top-level instances need sum(p) = 1; subproblems only sum(p) <= 1.
class Problem {
 public:
  static Problem top_level(std::vector<BlochVector> states,
                           std::vector<double> priors,
                           double tolerance = kDefaultTolerance);
  static Problem subproblem(std::vector<BlochVector> states,
                            std::vector<double> priors,
                            double tolerance = kDefaultTolerance);

  std::size_t size() const { return states_.size(); }
  const std::vector<BlochVector>& states() const { return states_; }
  const std::vector<double>& priors() const { return priors_; }
  const BlochVector& state(std::size_t j) const { return states_[j]; }
  double prior(std::size_t j) const { return priors_[j]; }
  double tolerance() const { return tolerance_; }
  double prior_mass() const;
  double max_prior() const;
  bool is_top_level() const { return top_level_; }

 private:
  Problem(std::vector<BlochVector> states, std::vector<double> priors,
          double tolerance, bool top_level);

  std::vector<BlochVector> states_;
  std::vector<double> priors_;
  double tolerance_;
  bool top_level_;
};

struct PovmElement {
  double omega = 0.0;
  BlochVector gamma = BlochVector(0.0, 0.0, 0.5);
};

struct Povm {
  std::vector<PovmElement> elements;

  std::size_t size() const { return elements.size(); }
  const PovmElement& operator[](std::size_t j) const { return elements[j]; }
  PovmElement& operator[](std::size_t j) { return elements[j]; }
  Matrix2c element_matrix(std::size_t j) const;
};

/// Throws CompletenessViolation, NegativeFrequency or NonProjectorElement.
void validate_povm(const Povm& povm, double tol = kDefaultTolerance);

/// Gamma = sum_j p_j omega_j pi_j rho_j, kept as a full complex matrix since
/// away from the optimum it need not be Hermitian.
struct CostMatrix {
  Matrix2c value = Matrix2c::Zero();

  Complex trace() const { return value.trace(); }
  Matrix2c hermitian_part() const {
    return 0.5 * (value + value.adjoint());
  }
};

CostMatrix cost_matrix(const Problem& problem, const Povm& povm);

/// real(tr Gamma); the same code path as cost_matrix.
double success_probability(const Problem& problem, const Povm& povm);

/// Outcome probabilities omega_j (1/2 + 2 beta . gamma_j) for one state.
std::vector<double> outcome_distribution(const BlochVector& state,
                                         const Povm& povm);

struct HermitianEigenvalues {
  double min;
  double max;
};

/// Closed-form spectrum of the Hermitian part of a 2x2 matrix.
HermitianEigenvalues hermitian_eigenvalues(const Matrix2c& h);

bool is_psd_by_eigenvalues(const Matrix2c& h, double tol);
/// tr H >= -2 tol and det H >= -tol * ||H||_F; agrees with the eigenvalue
/// route outside an O(tol) band.
bool is_psd_by_trace_det(const Matrix2c& h, double tol);

double max_entry_norm(const Matrix2c& m);

struct Certificate {
  double hermiticity_residual = 0.0;
  std::vector<double> min_eig_g;
  /// ||G_j pihat_j|| per element (zero for inactive ones).
  std::vector<double> complementarity;
  double tolerance = kDefaultTolerance;
  bool passed = false;
};

/// Checks Gamma = Gamma^+, G_j = Gamma~ - p_j rho_j >= 0 for every j and
/// G_j pihat_j = 0 for active elements. A passing certificate is a proof of
/// global optimality.
Certificate certify(const Problem& problem, const Povm& povm);
Certificate certify(const Problem& problem, const Povm& povm, double tol);

/// Applies a rotation to every Bloch vector.
Problem rotated(const Problem& problem, const Eigen::Matrix3d& rotation);
Povm rotated(const Povm& povm, const Eigen::Matrix3d& rotation);

}  // namespace qdisc
