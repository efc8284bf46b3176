#include "qdisc/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/LU>

namespace qdisc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::InvalidPriors: return "InvalidPriors";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::CompletenessViolation: return "CompletenessViolation";
    case ErrorKind::NegativeFrequency: return "NegativeFrequency";
    case ErrorKind::NonProjectorElement: return "NonProjectorElement";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NoAdmissibleRoot: return "NoAdmissibleRoot";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::DenominatorVanishes: return "DenominatorVanishes";
    case ErrorKind::NonPositivePrior: return "NonPositivePrior";
    case ErrorKind::CertificateFailed: return "CertificateFailed";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::ConfigMismatch: return "ConfigMismatch";
  }
  return "Unknown";
}

namespace {

std::string with_kind(ErrorKind kind, const std::string& message,
                      std::optional<std::size_t> index) {
  std::ostringstream os;
  os << to_string(kind);
  if (index) os << " [" << *index << "]";
  os << ": " << message;
  return os.str();
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> index)
    : std::runtime_error(with_kind(kind, message, index)),
      kind_(kind),
      index_(index) {}

bool is_pure(const BlochVector& beta, double tol) {
  return beta.allFinite() && std::abs(beta.norm() - kBlochRadius) <= tol;
}

BlochVector bloch_from_ket(Complex a, Complex b) {
  const double norm2 = std::norm(a) + std::norm(b);
  if (!std::isfinite(norm2) || std::abs(norm2 - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidState,
                "ket is not normalized (|a|^2+|b|^2 = " +
                    std::to_string(norm2) + ")");
  }
  // beta_k = tr(rho sigma_k)/2 with rho = |psi><psi|.
  const Complex cross = std::conj(a) * b;
  return {cross.real(), cross.imag(), 0.5 * (std::norm(a) - std::norm(b))};
}

Matrix2c DensityMatrix::matrix() const {
  Matrix2c m;
  m(0, 0) = Complex(c0 + c.z(), 0.0);
  m(0, 1) = Complex(c.x(), -c.y());
  m(1, 0) = Complex(c.x(), c.y());
  m(1, 1) = Complex(c0 - c.z(), 0.0);
  return m;
}

DensityMatrix density_from_bloch(const BlochVector& beta, double tol) {
  if (!is_pure(beta, tol)) {
    throw Error(ErrorKind::InvalidState,
                "Bloch vector length " + std::to_string(beta.norm()) +
                    " is not 1/2; only pure states are supported");
  }
  return DensityMatrix{0.5, beta};
}

Matrix2c pauli_matrix(const Eigen::Vector3d& v) {
  return DensityMatrix{0.5, v}.matrix();
}

double overlap(const BlochVector& beta1, const BlochVector& beta2) {
  return 0.5 + 2.0 * beta1.dot(beta2);
}

// ---------------------------------------------------------------- Problem

Problem::Problem(std::vector<BlochVector> states, std::vector<double> priors,
                 double tolerance, bool top_level)
    : states_(std::move(states)),
      priors_(std::move(priors)),
      tolerance_(tolerance),
      top_level_(top_level) {
  if (!(tolerance_ > 0.0) || !std::isfinite(tolerance_)) {
    throw Error(ErrorKind::InvalidPriors, "tolerance must be positive");
  }
  if (states_.size() != priors_.size()) {
    throw Error(ErrorKind::ShapeError,
                "states and priors have different lengths (" +
                    std::to_string(states_.size()) + " vs " +
                    std::to_string(priors_.size()) + ")");
  }
  if (states_.size() < 2) {
    throw Error(ErrorKind::ShapeError, "at least two states are required");
  }
  for (std::size_t j = 0; j < states_.size(); ++j) {
    if (!is_pure(states_[j], tolerance_)) {
      throw Error(ErrorKind::InvalidState,
                  "Bloch vector length " + std::to_string(states_[j].norm()) +
                      " is not 1/2",
                  j);
    }
    if (!(priors_[j] > 0.0) || !std::isfinite(priors_[j])) {
      throw Error(ErrorKind::InvalidPriors, "prior must be positive", j);
    }
  }
  const double mass = prior_mass();
  if (top_level_ && std::abs(mass - 1.0) > tolerance_) {
    throw Error(ErrorKind::InvalidPriors,
                "priors sum to " + std::to_string(mass) + ", expected 1");
  }
  if (!top_level_ && mass > 1.0 + tolerance_) {
    throw Error(ErrorKind::InvalidPriors,
                "subproblem priors sum to " + std::to_string(mass) +
                    ", expected <= 1");
  }
}

Problem Problem::top_level(std::vector<BlochVector> states,
                           std::vector<double> priors, double tolerance) {
  return Problem(std::move(states), std::move(priors), tolerance, true);
}

Problem Problem::subproblem(std::vector<BlochVector> states,
                            std::vector<double> priors, double tolerance) {
  return Problem(std::move(states), std::move(priors), tolerance, false);
}

double Problem::prior_mass() const {
  return std::accumulate(priors_.begin(), priors_.end(), 0.0);
}

double Problem::max_prior() const {
  return *std::max_element(priors_.begin(), priors_.end());
}

// ------------------------------------------------------------------- POVM

Matrix2c Povm::element_matrix(std::size_t j) const {
  return elements[j].omega * pauli_matrix(elements[j].gamma);
}

void validate_povm(const Povm& povm, double tol) {
  if (povm.size() == 0) {
    throw Error(ErrorKind::CompletenessViolation, "POVM has no elements");
  }
  double omega_sum = 0.0;
  Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
  for (std::size_t j = 0; j < povm.size(); ++j) {
    const auto& e = povm[j];
    if (!std::isfinite(e.omega) || e.omega < -tol) {
      throw Error(ErrorKind::NegativeFrequency,
                  "frequency " + std::to_string(e.omega) + " is negative", j);
    }
    if (!is_pure(e.gamma, tol)) {
      throw Error(ErrorKind::NonProjectorElement,
                  "direction length " + std::to_string(e.gamma.norm()) +
                      " is not 1/2",
                  j);
    }
    omega_sum += e.omega;
    weighted += e.omega * e.gamma;
  }
  if (std::abs(omega_sum - 2.0) > tol) {
    throw Error(ErrorKind::CompletenessViolation,
                "frequencies sum to " + std::to_string(omega_sum) +
                    ", expected 2");
  }
  if (weighted.norm() > tol) {
    throw Error(ErrorKind::CompletenessViolation,
                "sum of omega*gamma has norm " +
                    std::to_string(weighted.norm()) + ", expected 0");
  }
}

CostMatrix cost_matrix(const Problem& problem, const Povm& povm) {
  if (problem.size() != povm.size()) {
    throw Error(ErrorKind::ShapeError,
                "problem has " + std::to_string(problem.size()) +
                    " states but POVM has " + std::to_string(povm.size()) +
                    " elements");
  }
  CostMatrix gamma;
  for (std::size_t j = 0; j < problem.size(); ++j) {
    if (povm[j].omega == 0.0) continue;
    gamma.value += problem.prior(j) * povm.element_matrix(j) *
                   pauli_matrix(problem.state(j));
  }
  return gamma;
}

double success_probability(const Problem& problem, const Povm& povm) {
  return cost_matrix(problem, povm).trace().real();
}

std::vector<double> outcome_distribution(const BlochVector& state,
                                         const Povm& povm) {
  std::vector<double> probs(povm.size());
  for (std::size_t j = 0; j < povm.size(); ++j) {
    probs[j] = povm[j].omega * (0.5 + 2.0 * state.dot(povm[j].gamma));
  }
  return probs;
}

// ------------------------------------------------- 2x2 Hermitian spectrum

HermitianEigenvalues hermitian_eigenvalues(const Matrix2c& h) {
  const double a = h(0, 0).real();
  const double d = h(1, 1).real();
  const Complex b = 0.5 * (h(0, 1) + std::conj(h(1, 0)));
  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), std::abs(b));
  return {mean - radius, mean + radius};
}

bool is_psd_by_eigenvalues(const Matrix2c& h, double tol) {
  return hermitian_eigenvalues(h).min >= -tol;
}

bool is_psd_by_trace_det(const Matrix2c& h, double tol) {
  const Matrix2c herm = 0.5 * (h + h.adjoint());
  const double tr = herm.trace().real();
  const double det = herm.determinant().real();
  return tr >= -2.0 * tol && det >= -tol * herm.norm();
}

double max_entry_norm(const Matrix2c& m) { return m.cwiseAbs().maxCoeff(); }

// ------------------------------------------------------------ certificate

Certificate certify(const Problem& problem, const Povm& povm) {
  return certify(problem, povm, problem.tolerance());
}

Certificate certify(const Problem& problem, const Povm& povm, double tol) {
  validate_povm(povm, tol);
  const CostMatrix gamma = cost_matrix(problem, povm);
  const Matrix2c herm = gamma.hermitian_part();

  Certificate cert;
  cert.tolerance = tol;
  cert.hermiticity_residual = max_entry_norm(gamma.value - gamma.value.adjoint());
  cert.min_eig_g.resize(problem.size());
  cert.complementarity.assign(problem.size(), 0.0);
  bool ok = cert.hermiticity_residual <= tol;
  for (std::size_t j = 0; j < problem.size(); ++j) {
    const Matrix2c g = herm - problem.prior(j) * pauli_matrix(problem.state(j));
    cert.min_eig_g[j] = hermitian_eigenvalues(g).min;
    ok = ok && cert.min_eig_g[j] >= -tol;
    if (povm[j].omega > 0.0) {
      cert.complementarity[j] = max_entry_norm(g * povm.element_matrix(j));
      ok = ok && cert.complementarity[j] <= tol;
    }
  }
  cert.passed = ok;
  return cert;
}

Problem rotated(const Problem& problem, const Eigen::Matrix3d& rotation) {
  std::vector<BlochVector> states;
  states.reserve(problem.size());
  for (const auto& s : problem.states()) states.emplace_back(rotation * s);
  if (problem.is_top_level()) {
    return Problem::top_level(std::move(states), problem.priors(),
                              problem.tolerance());
  }
  return Problem::subproblem(std::move(states), problem.priors(),
                             problem.tolerance());
}

Povm rotated(const Povm& povm, const Eigen::Matrix3d& rotation) {
  Povm out = povm;
  for (auto& e : out.elements) e.gamma = rotation * e.gamma;
  return out;
}

}  // namespace qdisc
