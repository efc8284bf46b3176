#include "qdisc/solver_direct.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace qdisc {

namespace {

constexpr double kRootResidual = 1e-10;
constexpr double kClampFloor = -1e-12;
constexpr double kRankTolerance = 1e-10;

// A^2/4 - A p_j/2 - |B|^2 + 2 p_j B . beta_j, zero iff |gamma_j| = 1/2.
double length_residual(double a, const Eigen::Vector3d& b, double p,
                       const BlochVector& beta) {
  return 0.25 * a * a - 0.5 * a * p - b.squaredNorm() + 2.0 * p * b.dot(beta);
}

// Real roots of qa x^2 + qb x + qc = 0 in descending order.
std::vector<double> real_roots(double qa, double qb, double qc) {
  std::vector<double> roots;
  const double scale = std::max({std::abs(qa), std::abs(qb), std::abs(qc)});
  if (scale == 0.0) return roots;
  if (std::abs(qa) <= 1e-14 * scale) {
    if (std::abs(qb) > 1e-14 * scale) roots.push_back(-qc / qb);
    return roots;
  }
  double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) {
    if (disc < -1e-14 * qb * qb) return roots;
    disc = 0.0;
  }
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (qb + std::copysign(sq, qb));
  if (q != 0.0) {
    roots.push_back(q / qa);
    roots.push_back(qc / q);
  } else {
    roots.push_back(0.0);
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

double max_prior_on(const Problem& problem, std::span<const std::size_t> subset) {
  double m = 0.0;
  for (auto j : subset) m = std::max(m, problem.prior(j));
  return m;
}

// Keeps roots with A > max p_j whose length equations all hold.
std::vector<CandidateSystem> admissible(const Problem& problem,
                                        std::span<const std::size_t> subset,
                                        const std::vector<double>& roots,
                                        const Eigen::Vector3d& v,
                                        const Eigen::Vector3d& w) {
  std::vector<CandidateSystem> out;
  const double pmax = max_prior_on(problem, subset);
  for (double a : roots) {
    if (!(a > pmax + problem.tolerance()) || !std::isfinite(a)) continue;
    const Eigen::Vector3d b = a * v + w;
    bool ok = true;
    for (auto j : subset) {
      ok = ok && std::abs(length_residual(a, b, problem.prior(j),
                                          problem.state(j))) <= kRootResidual;
    }
    if (ok) {
      out.push_back({a, b, std::vector<std::size_t>(subset.begin(), subset.end())});
    }
  }
  return out;
}

std::string subset_string(std::span<const std::size_t> subset) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < subset.size(); ++k) os << (k ? "," : "") << subset[k];
  os << '}';
  return os.str();
}

// Damped Gauss-Newton on (A, B) for three length equations plus coplanarity.
std::vector<CandidateSystem> newton_m3(const Problem& problem,
                                       std::span<const std::size_t> subset) {
  std::array<Eigen::Vector3d, 3> a;
  std::array<double, 3> p{};
  std::array<BlochVector, 3> beta;
  for (int k = 0; k < 3; ++k) {
    p[k] = problem.prior(subset[k]);
    beta[k] = problem.state(subset[k]);
    a[k] = p[k] * beta[k];
  }
  const Eigen::Vector3d c = (a[1] - a[0]).cross(a[2] - a[0]);
  Eigen::Matrix3d am;
  am << a[0], a[1], a[2];
  const double det_a = am.determinant();

  auto residual = [&](const Eigen::Vector4d& x) {
    const Eigen::Vector3d b = x.tail<3>();
    Eigen::Vector4d f;
    for (int k = 0; k < 3; ++k) f[k] = length_residual(x[0], b, p[k], beta[k]);
    f[3] = det_a - b.dot(c);
    return f;
  };
  auto jacobian = [&](const Eigen::Vector4d& x) {
    const Eigen::Vector3d b = x.tail<3>();
    Eigen::Matrix4d j;
    for (int k = 0; k < 3; ++k) {
      j(k, 0) = 0.5 * x[0] - 0.5 * p[k];
      j.block<1, 3>(k, 1) = (-2.0 * b + 2.0 * p[k] * beta[k]).transpose();
    }
    j(3, 0) = 0.0;
    j.block<1, 3>(3, 1) = -c.transpose();
    return j;
  };

  // Starts: the equal-prior closed form A = (alpha/3)(1 + sqrt(1 - 4 h^2))
  // with B along the mean direction, and perturbations of it.
  const double alpha = p[0] + p[1] + p[2];
  const Eigen::Vector3d mean_beta = (beta[0] + beta[1] + beta[2]) / 3.0;
  const double h = std::min(mean_beta.norm(), 0.5);
  const double a_sym = alpha / 3.0 * (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * h * h)));
  const Eigen::Vector3d b_sym = alpha / 3.0 * mean_beta;
  const std::array<std::pair<double, double>, 8> perturb{{
      {1.0, 1.0}, {1.1, 0.5}, {0.9, 1.5}, {1.2, 0.0},
      {1.05, -1.0}, {1.3, 2.0}, {0.95, 0.25}, {1.5, -0.5}}};

  std::vector<double> roots_seen;
  std::vector<CandidateSystem> out;
  for (const auto& [sa, sb] : perturb) {
    Eigen::Vector4d x;
    x[0] = std::max(a_sym * sa, max_prior_on(problem, subset) * 1.01);
    x.tail<3>() = b_sym * sb;
    Eigen::Vector4d f = residual(x);
    for (int it = 0; it < 100 && f.cwiseAbs().maxCoeff() > 1e-14; ++it) {
      const Eigen::Vector4d step =
          jacobian(x).completeOrthogonalDecomposition().solve(-f);
      if (!step.allFinite()) break;
      double lambda = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 30; ++ls) {
        const Eigen::Vector4d trial = x + lambda * step;
        const Eigen::Vector4d ft = residual(trial);
        if (ft.squaredNorm() < f.squaredNorm()) {
          x = trial;
          f = ft;
          improved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!improved) break;
    }
    if (f.cwiseAbs().maxCoeff() > kRootResidual) continue;
    const bool seen = std::any_of(roots_seen.begin(), roots_seen.end(),
                                  [&](double r) { return std::abs(r - x[0]) < 1e-9; });
    if (seen) continue;
    roots_seen.push_back(x[0]);
    auto adm = admissible(problem, subset, {x[0]}, Eigen::Vector3d::Zero(),
                          x.tail<3>());
    out.insert(out.end(), adm.begin(), adm.end());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& l, const auto& r) { return l.a > r.a; });
  return out;
}

std::vector<std::vector<std::size_t>> subsets_by_mass(
    const Problem& problem, const std::vector<std::size_t>& pool,
    std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (pool.size() < k) return out;
  std::vector<bool> mask(pool.size(), false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (mask[i]) s.push_back(pool[i]);
    }
    out.push_back(std::move(s));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  auto mass = [&](const std::vector<std::size_t>& s) {
    double m = 0.0;
    for (auto j : s) m += problem.prior(j);
    return m;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& l, const auto& r) {
    const double ml = mass(l);
    const double mr = mass(r);
    if (std::abs(ml - mr) > 1e-15) return ml > mr;
    return l < r;
  });
  return out;
}

}  // namespace

std::string to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::Projective: return "projective";
    case MeasurementKind::Generalized3: return "generalized3";
    case MeasurementKind::Generalized4: return "generalized4";
    case MeasurementKind::PovmOfStates: return "povm_of_states";
  }
  return "unknown";
}

Classification classify_povm(const Povm& povm, bool states_form_povm) {
  Classification c;
  for (std::size_t j = 0; j < povm.size(); ++j) {
    if (povm[j].omega > 0.0) c.active.push_back(j);
  }
  if (states_form_povm && c.active.size() >= 4) {
    c.kind = MeasurementKind::PovmOfStates;
  } else if (c.active.size() <= 2) {
    c.kind = MeasurementKind::Projective;
  } else if (c.active.size() == 3) {
    c.kind = MeasurementKind::Generalized3;
  } else if (c.active.size() == 4) {
    c.kind = MeasurementKind::Generalized4;
  } else {
    c.kind = MeasurementKind::PovmOfStates;
  }
  return c;
}

std::vector<BlochVector> gamma_from_ab(const Problem& problem,
                                       std::span<const std::size_t> subset,
                                       double a, const Eigen::Vector3d& b) {
  std::vector<BlochVector> gammas;
  gammas.reserve(subset.size());
  for (auto j : subset) {
    const double denom = a - problem.prior(j);
    if (std::abs(denom) <= 1e-14) {
      throw Error(ErrorKind::DegenerateDenominator,
                  "A equals the prior of state " + std::to_string(j), j);
    }
    gammas.emplace_back((problem.state(j) * problem.prior(j) - b) / denom);
  }
  return gammas;
}

// -------------------------------------------------------------- two states

Solution solve_two(const BlochVector& beta1, const BlochVector& beta2,
                   double p1, double p2, double tol) {
  if (!(p1 > 0.0) || !(p2 > 0.0) || p1 + p2 > 1.0 + tol) {
    throw Error(ErrorKind::InvalidPriors,
                "two-state priors must be positive with p1 + p2 <= 1");
  }
  const Problem sub = Problem::subproblem({beta1, beta2}, {p1, p2}, tol);

  Solution sol;
  sol.povm.elements.resize(2);
  const Eigen::Vector3d sum = beta1 + beta2;
  const Eigen::Vector3d diff = beta1 - beta2;

  if (diff.norm() <= tol) {
    // Identical states: guess the likelier label.
    const BlochVector g = (p1 >= p2) ? BlochVector(beta1) : BlochVector(-beta1);
    sol.povm[0] = {1.0, g};
    sol.povm[1] = {1.0, -g};
    sol.degenerate = true;
    sol.diagnostics.push_back("identical states; any projective POVM is optimal");
  } else {
    // Frame with beta_1 = (a, b, 0), beta_2 = (a, -b, 0), a >= 0, b > 0.
    const Eigen::Vector3d e2 = diff.normalized();
    Eigen::Vector3d e1 = sum - sum.dot(e2) * e2;
    if (e1.norm() <= 1e-12) {
      e1 = e2.unitOrthogonal();
    } else {
      e1.normalize();
    }
    const double a = 0.5 * sum.dot(e1);
    const double b = 0.5 * diff.dot(e2);
    const double d = std::hypot(a * (p1 - p2), b * (p1 + p2));
    // pi_1 off-diagonal entry (a(p1-p2) - i b(p1+p2)) / 2D is gamma_x - i gamma_y.
    const double gx = a * (p1 - p2) / (2.0 * d);
    const double gy = b * (p1 + p2) / (2.0 * d);
    const Eigen::Vector3d g = gx * e1 + gy * e2;
    sol.povm[0] = {1.0, g};
    sol.povm[1] = {1.0, -g};
  }
  sol.p_corr = success_probability(sub, sol.povm);
  sol.certificate = certify(sub, sol.povm, tol);
  sol.classification = {MeasurementKind::Projective, {0, 1}};
  return sol;
}

Solution embed(const Solution& sub, std::span<const std::size_t> subset,
               const Problem& problem) {
  if (sub.povm.size() != subset.size()) {
    throw Error(ErrorKind::ShapeError, "subset and solution sizes differ");
  }
  Solution full;
  full.povm.elements.assign(problem.size(), PovmElement{});
  for (std::size_t k = 0; k < subset.size(); ++k) {
    full.povm[subset[k]] = sub.povm[k];
  }
  full.p_corr = success_probability(problem, full.povm);
  full.certificate = certify(problem, full.povm);
  full.classification = classify_povm(full.povm);
  full.classification.kind = sub.classification.kind == MeasurementKind::PovmOfStates &&
                                     full.classification.active.size() >= 4
                                 ? MeasurementKind::PovmOfStates
                                 : full.classification.kind;
  full.degenerate = sub.degenerate;
  full.diagnostics = sub.diagnostics;
  return full;
}

// --------------------------------------------------------------- extension

double pair_extension_det(const Problem& problem, std::size_t i1,
                          std::size_t i2, std::size_t j) {
  const double p1 = problem.prior(i1);
  const double p2 = problem.prior(i2);
  const double pj = problem.prior(j);
  const BlochVector& b1 = problem.state(i1);
  const BlochVector& b2 = problem.state(i2);
  const BlochVector& bj = problem.state(j);
  const double d = std::sqrt((p1 * p1 + p2 * p2) / 4.0 - 2.0 * p1 * p2 * b1.dot(b2));
  const double a = 0.5 * (p1 + p2) + d;
  return 0.5 * d * (a - pj) - a * (p1 - p2) * (p1 - p2) / (8.0 * d) +
         pj * (p1 - p2) / (2.0 * d) * (p1 * b1 - p2 * b2).dot(bj) +
         pj * (p1 * (b1 - bj) + p2 * (b2 - bj)).dot(bj);
}

std::vector<ExtensionResult> extension_check(
    const Solution& base, const Problem& problem,
    std::span<const std::size_t> extra) {
  const CostMatrix gamma = cost_matrix(problem, base.povm);
  const Matrix2c herm = gamma.hermitian_part();
  const double a = gamma.trace().real();
  const bool pair_base = !base.degenerate &&
                         base.classification.kind == MeasurementKind::Projective &&
                         base.classification.active.size() == 2;

  std::vector<ExtensionResult> out;
  out.reserve(extra.size());
  for (auto j : extra) {
    const Matrix2c g = herm - problem.prior(j) * pauli_matrix(problem.state(j));
    ExtensionResult r;
    r.index = j;
    r.trace = g.trace().real();
    r.det = g.determinant().real();
    r.absorbed = is_psd_by_eigenvalues(g, problem.tolerance());
    if (pair_base) {
      r.closed_form_trace = a - problem.prior(j);
      r.closed_form_det = pair_extension_det(problem, base.classification.active[0],
                                             base.classification.active[1], j);
    }
    out.push_back(r);
  }
  return out;
}

// ------------------------------------------------------------ four states

std::vector<CandidateSystem> candidate_systems_m4(
    const Problem& problem, std::span<const std::size_t> subset) {
  if (subset.size() != 4) {
    throw Error(ErrorKind::ShapeError, "M=4 candidate needs four states");
  }
  const std::size_t i0 = subset[0];
  const double p0 = problem.prior(i0);
  const BlochVector& beta0 = problem.state(i0);
  Eigen::Matrix3d m;
  Eigen::Vector3d rhs;
  for (int k = 1; k < 4; ++k) {
    const std::size_t j = subset[static_cast<std::size_t>(k)];
    m.row(k - 1) = 4.0 * (p0 * beta0 - problem.prior(j) * problem.state(j)).transpose();
    rhs[k - 1] = p0 - problem.prior(j);
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv[0] > 0.0)) {
    throw Error(ErrorKind::SingularSystem, "differenced system vanishes");
  }
  const int rank = static_cast<int>((sv.array() > kRankTolerance * sv[0]).count());

  std::vector<double> roots;
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  if (rank == 3) {
    v = svd.solve(rhs);
    // Summed equations: M A^2 - 2 A alpha = 4 M |B|^2 - 8 sum_j p_j B . beta_j
    // with B = A v; the root A = 0 is discarded.
    double alpha = 0.0;
    double cross = 0.0;
    for (auto j : subset) {
      alpha += problem.prior(j);
      cross += problem.prior(j) * v.dot(problem.state(j));
    }
    const double denom = 4.0 * (1.0 - 4.0 * v.squaredNorm());
    if (std::abs(denom) <= 1e-14) {
      throw Error(ErrorKind::NoAdmissibleRoot, "summed equation is degenerate");
    }
    roots.push_back((2.0 * alpha - 8.0 * cross) / denom);
  } else if (rank == 2) {
    // Consistent rank-2 system: p_j beta_j . n is the same for all j, and the
    // n-component of sum omega_j gamma_j = 0 forces B . n to that value.
    const Eigen::Vector3d n = svd.matrixV().col(2);
    v = svd.solve(rhs);
    if ((m * v - rhs).norm() > kRankTolerance * std::max(1.0, rhs.norm())) {
      throw Error(ErrorKind::SingularSystem,
                  "rank-deficient differenced system is inconsistent");
    }
    v -= v.dot(n) * n;
    const double c0 = p0 * beta0.dot(n);
    w = c0 * n;
    const double qa = 0.25 - v.squaredNorm();
    const double qb = -(0.5 * p0 - 2.0 * p0 * v.dot(beta0));
    const double qc = -(c0 * c0 - 2.0 * p0 * c0 * beta0.dot(n));
    roots = real_roots(qa, qb, qc);
  } else {
    throw Error(ErrorKind::SingularSystem,
                "differenced system has rank " + std::to_string(rank));
  }
  auto out = admissible(problem, subset, roots, v, w);
  if (out.empty()) {
    throw Error(ErrorKind::NoAdmissibleRoot,
                "no root with A > max p_j on " + subset_string(subset));
  }
  return out;
}

CandidateSystem solve_candidate_m4(const Problem& problem,
                                   std::span<const std::size_t> subset) {
  return candidate_systems_m4(problem, subset).front();
}

// ----------------------------------------------------------- three states

std::vector<CandidateSystem> candidate_systems_m3(
    const Problem& problem, std::span<const std::size_t> subset) {
  if (subset.size() != 3) {
    throw Error(ErrorKind::ShapeError, "M=3 candidate needs three states");
  }
  std::array<Eigen::Vector3d, 3> a;
  for (int k = 0; k < 3; ++k) {
    const std::size_t j = subset[static_cast<std::size_t>(k)];
    a[k] = problem.prior(j) * problem.state(j);
  }
  const double p0 = problem.prior(subset[0]);
  const BlochVector& beta0 = problem.state(subset[0]);

  // det[a_j - B] = det[a] - B . ((a_1 - a_0) x (a_2 - a_0)), so coplanarity
  // of the gamma_j is one more linear equation for B.
  Eigen::Matrix3d m;
  m.row(0) = 4.0 * (a[0] - a[1]).transpose();
  m.row(1) = 4.0 * (a[0] - a[2]).transpose();
  m.row(2) = ((a[1] - a[0]).cross(a[2] - a[0])).transpose();
  Eigen::Matrix3d am;
  am << a[0], a[1], a[2];

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[2] <= kRankTolerance * sv[0]) {
    auto out = newton_m3(problem, subset);
    if (out.empty()) {
      throw Error(ErrorKind::NoConvergence,
                  "Newton found no admissible root on " + subset_string(subset));
    }
    return out;
  }
  const Eigen::Vector3d v = svd.solve(Eigen::Vector3d(
      p0 - problem.prior(subset[1]), p0 - problem.prior(subset[2]), 0.0));
  const Eigen::Vector3d w = svd.solve(Eigen::Vector3d(0.0, 0.0, am.determinant()));

  const double qa = 0.25 - v.squaredNorm();
  const double qb = -(0.5 * p0 + 2.0 * v.dot(w) - 2.0 * p0 * v.dot(beta0));
  const double qc = -(w.squaredNorm() - 2.0 * p0 * w.dot(beta0));
  auto out = admissible(problem, subset, real_roots(qa, qb, qc), v, w);
  if (out.empty()) {
    throw Error(ErrorKind::NoAdmissibleRoot,
                "no root with A > max p_j on " + subset_string(subset));
  }
  return out;
}

CandidateSystem solve_candidate_m3(const Problem& problem,
                                   std::span<const std::size_t> subset) {
  return candidate_systems_m3(problem, subset).front();
}

// ------------------------------------------------------------ frequencies

std::vector<double> frequencies_from_candidate(const Problem& problem,
                                               const CandidateSystem& candidate) {
  const auto gammas = gamma_from_ab(problem, candidate.subset, candidate.a, candidate.b);
  const auto m = static_cast<Eigen::Index>(gammas.size());
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    if (!is_pure(gammas[k], problem.tolerance())) {
      throw Error(ErrorKind::NonProjectorElement,
                  "candidate direction does not have length 1/2",
                  candidate.subset[k]);
    }
  }
  Eigen::MatrixXd w(4, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    w.block<3, 1>(0, k) = gammas[static_cast<std::size_t>(k)];
    w(3, k) = 1.0;
  }
  const Eigen::Vector4d target(0.0, 0.0, 0.0, 2.0);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[m - 1] <= kRankTolerance * sv[0]) {
    throw Error(ErrorKind::SingularSystem,
                "frequency system is rank deficient on " + subset_string(candidate.subset));
  }
  const Eigen::VectorXd omega = svd.solve(target);
  if ((w * omega - target).norm() > kRootResidual) {
    throw Error(ErrorKind::SingularSystem,
                "frequency system is incompatible on " + subset_string(candidate.subset));
  }

  std::vector<double> out(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < m; ++k) {
    double x = omega[k];
    if (x < kClampFloor) {
      throw Error(ErrorKind::NegativeFrequency,
                  "frequency " + std::to_string(x) + " is negative",
                  candidate.subset[static_cast<std::size_t>(k)]);
    }
    out[static_cast<std::size_t>(k)] = std::max(x, 0.0);
  }
  return out;
}

Povm povm_from_candidate(const Problem& problem, const CandidateSystem& candidate,
                         std::span<const double> omega) {
  const auto gammas = gamma_from_ab(problem, candidate.subset, candidate.a, candidate.b);
  Povm povm;
  povm.elements.assign(problem.size(), PovmElement{});
  for (std::size_t k = 0; k < candidate.subset.size(); ++k) {
    povm[candidate.subset[k]] = {omega[k], gammas[k].normalized() * kBlochRadius};
  }
  return povm;
}

// -------------------------------------------------------- states as a POVM

std::optional<std::vector<double>> states_form_povm(
    std::span<const BlochVector> states, double tol) {
  const std::size_t n = states.size();
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});

  for (std::size_t k = 2; k <= std::min<std::size_t>(4, n); ++k) {
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
      std::vector<std::size_t> s;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) s.push_back(i);
      }
      const auto kk = static_cast<Eigen::Index>(k);
      Eigen::MatrixXd w(4, kk);
      for (Eigen::Index c = 0; c < kk; ++c) {
        w.block<3, 1>(0, c) = states[s[static_cast<std::size_t>(c)]];
        w(3, c) = 1.0;
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::VectorXd sv = svd.singularValues();
      if (sv[kk - 1] <= kRankTolerance * sv[0]) continue;
      const Eigen::Vector4d target(0.0, 0.0, 0.0, 1.0);
      const Eigen::VectorXd lambda = svd.solve(target);
      if ((w * lambda - target).norm() > tol) continue;
      if (lambda.minCoeff() < kClampFloor) continue;
      std::vector<double> omega(n, 0.0);
      for (Eigen::Index c = 0; c < kk; ++c) {
        omega[s[static_cast<std::size_t>(c)]] = 2.0 * std::max(lambda[c], 0.0);
      }
      return omega;
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ solve

namespace {

struct Reduction {
  std::vector<std::size_t> representatives;
  std::vector<std::size_t> dropped;
};

// Identical labelled states cannot be told apart; only the likeliest label of
// each group can be worth an outcome.
Reduction reduce_duplicates(const Problem& problem) {
  const std::size_t n = problem.size();
  std::vector<std::size_t> group(n);
  std::iota(group.begin(), group.end(), std::size_t{0});
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (group[i] == i &&
          (problem.state(i) - problem.state(j)).norm() <= problem.tolerance()) {
        group[j] = i;
        break;
      }
    }
  }
  Reduction r;
  for (std::size_t g = 0; g < n; ++g) {
    if (group[g] != g) continue;
    std::size_t best = g;
    for (std::size_t j = g; j < n; ++j) {
      if (group[j] == g && problem.prior(j) > problem.prior(best)) best = j;
    }
    r.representatives.push_back(best);
    for (std::size_t j = g; j < n; ++j) {
      if (group[j] == g && j != best) r.dropped.push_back(j);
    }
  }
  std::sort(r.representatives.begin(), r.representatives.end());
  std::sort(r.dropped.begin(), r.dropped.end());
  return r;
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> subset) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::find(subset.begin(), subset.end(), j) == subset.end()) out.push_back(j);
  }
  return out;
}

bool extras_absorbed(const Povm& povm, const Problem& problem,
                     std::span<const std::size_t> subset) {
  Solution probe;
  probe.povm = povm;
  const auto others = complement(problem.size(), subset);
  for (const auto& r : extension_check(probe, problem, others)) {
    if (!r.absorbed) return false;
  }
  return true;
}

std::optional<Solution> finish(const Problem& problem, Povm povm,
                               bool states_form = false) {
  Solution sol;
  sol.certificate = certify(problem, povm);
  if (!sol.certificate.passed) return std::nullopt;
  sol.p_corr = success_probability(problem, povm);
  sol.classification = classify_povm(povm, states_form);
  sol.povm = std::move(povm);
  return sol;
}

}  // namespace

Solution solve(const Problem& problem, const SolveOptions& options) {
  const Reduction red = reduce_duplicates(problem);
  const auto& reps = red.representatives;
  std::vector<std::string> notes;
  if (!red.dropped.empty()) {
    notes.push_back("duplicate states reduced to their likeliest label; dropped " +
                    subset_string(red.dropped));
  }

  if (reps.size() == 1) {
    std::vector<std::size_t> order(problem.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      return problem.prior(l) > problem.prior(r);
    });
    const std::array<std::size_t, 2> pair{order[0], order[1]};
    Solution two = solve_two(problem.state(pair[0]), problem.state(pair[1]),
                             problem.prior(pair[0]), problem.prior(pair[1]),
                             problem.tolerance());
    Solution sol = embed(two, pair, problem);
    sol.diagnostics.insert(sol.diagnostics.end(), notes.begin(), notes.end());
    if (sol.certificate.passed) return sol;
    throw Error(ErrorKind::SolverFailure, "identical-state solution failed to certify");
  }

  auto accept = [&](Solution sol) {
    sol.diagnostics.insert(sol.diagnostics.begin(), notes.begin(), notes.end());
    return sol;
  };

  // (a) Equal priors: the states themselves may form the optimal POVM.
  bool equal_priors = true;
  for (auto j : reps) {
    equal_priors = equal_priors &&
                   std::abs(problem.prior(j) - problem.prior(reps[0])) <= problem.tolerance();
  }
  if (reps.size() >= 4 && equal_priors) {
    std::vector<BlochVector> states;
    for (auto j : reps) states.push_back(problem.state(j));
    if (auto omega = states_form_povm(states, problem.tolerance())) {
      Povm povm;
      povm.elements.assign(problem.size(), PovmElement{});
      for (std::size_t k = 0; k < reps.size(); ++k) {
        povm[reps[k]] = {(*omega)[k], problem.state(reps[k])};
      }
      if (auto sol = finish(problem, std::move(povm), true)) return accept(*sol);
      notes.push_back("states form a POVM but the certificate failed");
    }
  }

  // (b), (c) Generalized measurements on four and three active states.
  std::size_t rejected = 0;
  std::size_t boundary = 0;
  for (std::size_t m : {std::size_t{4}, std::size_t{3}}) {
    for (const auto& subset : subsets_by_mass(problem, reps, m)) {
      std::vector<CandidateSystem> candidates;
      try {
        candidates = m == 4 ? candidate_systems_m4(problem, subset)
                            : candidate_systems_m3(problem, subset);
      } catch (const Error&) {
        ++rejected;
        continue;
      }
      for (const auto& cand : candidates) {
        if (std::abs(cand.a - max_prior_on(problem, subset)) <= 10 * problem.tolerance()) {
          ++boundary;
        }
        try {
          const auto omega = frequencies_from_candidate(problem, cand);
          Povm povm = povm_from_candidate(problem, cand, omega);
          if (!extras_absorbed(povm, problem, subset)) continue;
          if (auto sol = finish(problem, std::move(povm))) return accept(*sol);
        } catch (const Error&) {
          ++rejected;
        }
      }
    }
  }

  // (d) Projective measurement on a pair, scaled as a subproblem.
  for (const auto& pair : subsets_by_mass(problem, reps, 2)) {
    Solution two = solve_two(problem.state(pair[0]), problem.state(pair[1]),
                             problem.prior(pair[0]), problem.prior(pair[1]),
                             problem.tolerance());
    if (!extras_absorbed(embed(two, pair, problem).povm, problem, pair)) continue;
    Solution sol = embed(two, pair, problem);
    if (sol.certificate.passed) return accept(sol);
  }

  std::ostringstream why;
  why << "cascade found no certified candidate (" << rejected
      << " candidates rejected, " << boundary << " with A at max p_j)";
  notes.push_back(why.str());
  if (options.oracle_fallback) {
    const OracleResult best = oracle_optimize(problem, options.oracle);
    if (auto sol = finish(problem, best.povm)) {
      notes.push_back("solution from oracle fallback");
      return accept(*sol);
    }
    notes.push_back("oracle fallback (p_corr " + std::to_string(best.p_corr) +
                    ") failed to certify");
  }
  std::string msg;
  for (const auto& n : notes) msg += n + "; ";
  throw Error(ErrorKind::SolverFailure, msg);
}

}  // namespace qdisc
