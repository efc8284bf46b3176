#include "qdisc/solver_inverse.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "qdisc/solver_direct.hpp"

namespace qdisc {

InverseResult inverse(const Povm& povm, const Eigen::Vector3d& r, double tol) {
  validate_povm(povm, tol);
  const std::size_t n = povm.size();
  std::vector<double> q(n);
  double f = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const BlochVector& g = povm[j].gamma;
    const double denom = 0.5 + 2.0 * g.dot(r);
    if (std::abs(denom) <= tol) {
      throw Error(ErrorKind::DenominatorVanishes,
                  "1/2 + 2 gamma_j . R vanishes for element " + std::to_string(j), j);
    }
    q[j] = (0.25 + (2.0 * g + r).dot(r)) / denom;
    if (!(q[j] > 0.0)) {
      throw Error(ErrorKind::NonPositivePrior,
                  "q_j = " + std::to_string(q[j]) + " for element " + std::to_string(j), j);
    }
    f += q[j];
  }
  const double a = 1.0 / f;
  std::vector<BlochVector> states(n);
  std::vector<double> priors(n);
  for (std::size_t j = 0; j < n; ++j) {
    priors[j] = a * q[j];
    states[j] = ((1.0 - q[j]) * povm[j].gamma + r) / q[j];
  }
  Problem problem = Problem::top_level(std::move(states), std::move(priors), tol);
  if (!certify(problem, povm, tol).passed) {
    throw Error(ErrorKind::CertificateFailed,
                "POVM is not optimal for the states generated from this R");
  }
  return {std::move(problem), a, std::move(q), r};
}

RoundTripReport round_trip(const Povm& povm, const Eigen::Vector3d& r,
                           double threshold, double tol) {
  const InverseResult inv = inverse(povm, r, tol);
  RoundTripReport report;
  report.a_value = inv.a_value;
  for (const auto& b : inv.problem.states()) {
    report.max_length_error =
        std::max(report.max_length_error, std::abs(b.norm() - kBlochRadius));
  }
  report.povm_certifies = certify(inv.problem, povm, tol).passed;
  report.solved_p_corr = solve(inv.problem).p_corr;
  report.value_gap = std::abs(report.solved_p_corr - inv.a_value);
  report.passed = report.povm_certifies && report.value_gap <= threshold;
  return report;
}

InverseResult sample_admissible(const Povm& povm, CounterRng& rng,
                                int max_attempts, int attempts_per_radius,
                                double tol) {
  double radius = 0.4;
  std::optional<Error> last;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0 && attempt % attempts_per_radius == 0) radius *= 0.5;
    Eigen::Vector3d r;
    do {
      r = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0,
           2.0 * rng.uniform() - 1.0};
    } while (r.squaredNorm() > 1.0);
    try {
      return inverse(povm, radius * r, tol);
    } catch (const Error& e) {
      last = e;
    }
  }
  throw *last;
}

}  // namespace qdisc
