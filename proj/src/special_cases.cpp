#include "qdisc/special_cases.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace qdisc {

namespace {

constexpr double kBoundary = 1e-10;

void require_distinct(std::span<const BlochVector> states, double tol) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      if ((states[i] - states[j]).norm() <= tol) {
        throw Error(ErrorKind::DegenerateInput,
                    "states " + std::to_string(i) + " and " + std::to_string(j) +
                        " coincide",
                    j);
      }
    }
  }
}

Problem equiprobable_problem(std::vector<BlochVector> states, double tol) {
  const double p = 1.0 / static_cast<double>(states.size());
  std::vector<double> priors(states.size(), p);
  return Problem::top_level(std::move(states), std::move(priors), tol);
}

Solution pair_solution(const Problem& problem, std::size_t i, std::size_t j) {
  const std::array<std::size_t, 2> pair{std::min(i, j), std::max(i, j)};
  const Solution two =
      solve_two(problem.state(pair[0]), problem.state(pair[1]), problem.prior(pair[0]),
                problem.prior(pair[1]), problem.tolerance());
  return embed(two, pair, problem);
}

Solution finalize(const Problem& problem, Povm povm) {
  Solution sol;
  sol.p_corr = success_probability(problem, povm);
  sol.certificate = certify(problem, povm);
  sol.classification = classify_povm(povm);
  sol.povm = std::move(povm);
  return sol;
}

void check_prior(double p) {
  if (!(p > 0.0 && p < 0.5)) {
    throw Error(ErrorKind::ConfigMismatch, "p must lie in (0, 1/2)");
  }
}

}  // namespace

// ------------------------------------------------ three equiprobable states

ThreeEqClassification classify_three_equiprobable(const BlochVector& b1,
                                                  const BlochVector& b2,
                                                  const BlochVector& b3,
                                                  double tol) {
  const std::array<BlochVector, 3> s{b1, b2, b3};
  require_distinct(s, tol);
  ThreeEqClassification c;
  c.inequality_values = {(b1 + b2).dot(b3 - b1), (b3 + b1).dot(b2 - b3),
                         (b2 + b3).dot(b1 - b2)};
  const std::array<std::array<std::size_t, 2>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t k = 0; k < 3; ++k) {
    if (c.inequality_values[k] >= -kBoundary) {
      c.kind = ThreeEqKind::ProjectivePair;
      c.pair = pairs[k];
      return c;
    }
  }
  c.kind = ThreeEqKind::Generalized;
  return c;
}

Eigen::Vector3d common_offset_vector(const BlochVector& b1, const BlochVector& b2,
                                     const BlochVector& b3) {
  const Eigen::Vector3d c = (b2 - b1).cross(b3 - b1);
  const double cc = c.squaredNorm();
  if (cc == 0.0) {
    throw Error(ErrorKind::DegenerateInput, "Bloch points are collinear");
  }
  Eigen::Matrix3d m;
  m << b1, b2, b3;
  return c * (m.determinant() / cc);
}

double three_equiprobable_value(const BlochVector& b1, const BlochVector& b2,
                                const BlochVector& b3) {
  const double h2 = common_offset_vector(b1, b2, b3).squaredNorm();
  return (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * h2))) / 3.0;
}

TripleFrame canonical_triple_frame(const BlochVector& b1, const BlochVector& b2,
                                   const BlochVector& b3) {
  const Eigen::Vector3d offset = common_offset_vector(b1, b2, b3);
  Eigen::Vector3d n = (b2 - b1).cross(b3 - b1).normalized();
  if (offset.dot(n) < 0.0) n = -n;
  const double h = offset.dot(n);
  const Eigen::Vector3d q1 = b1 - h * n;
  const Eigen::Vector3d q2 = b2 - h * n;
  const Eigen::Vector3d y = (q1 - q2).normalized();
  Eigen::Vector3d x = q1 + q2;
  x -= x.dot(y) * y;
  x -= x.dot(n) * n;
  if (x.norm() <= 1e-12) {
    x = y.cross(n);
  } else {
    x.normalize();
  }
  TripleFrame f;
  f.axes.row(0) = x.transpose();
  f.axes.row(1) = y.transpose();
  f.axes.row(2) = n.transpose();
  f.offset = h;
  f.local = {f.axes * b1, f.axes * b2, f.axes * b3};
  return f;
}

Solution solve_three_equiprobable(const BlochVector& b1, const BlochVector& b2,
                                  const BlochVector& b3, double tol) {
  const Problem problem = equiprobable_problem({b1, b2, b3}, tol);
  const ThreeEqClassification cls = classify_three_equiprobable(b1, b2, b3, tol);
  if (cls.kind == ThreeEqKind::ProjectivePair) {
    return pair_solution(problem, cls.pair[0], cls.pair[1]);
  }

  const TripleFrame f = canonical_triple_frame(b1, b2, b3);
  // In-plane projections scaled to length 1/2, in frame coordinates.
  std::array<Eigen::Vector3d, 3> g;
  for (std::size_t k = 0; k < 3; ++k) {
    g[k] = Eigen::Vector3d(f.local[k].x(), f.local[k].y(), 0.0);
    g[k] *= kBlochRadius / g[k].norm();
  }
  const double a = g[0].x();
  const double b = g[0].y();
  const double c31 = g[2].x();
  const double c32 = g[2].y();
  const std::array<double, 3> omega{(-a * c32 - b * c31) / (b * (a - c31)),
                                    (a * c32 - b * c31) / (b * (a - c31)),
                                    2.0 * a / (a - c31)};
  Povm povm;
  povm.elements.resize(3);
  for (std::size_t k = 0; k < 3; ++k) {
    povm[k] = {omega[k], f.axes.transpose() * g[k]};
  }
  return finalize(problem, std::move(povm));
}

EquiprobableExtension extend_equiprobable(std::span<const BlochVector, 3> base,
                                          std::span<const BlochVector> extras) {
  const Eigen::Vector3d offset = common_offset_vector(base[0], base[1], base[2]);
  EquiprobableExtension ext;
  for (const auto& beta : extras) {
    const double v = offset.dot(beta - offset);
    ext.values.push_back(v);
    ext.absorbed.push_back(v >= -kBoundary);
  }
  const double n = 3.0 + static_cast<double>(extras.size());
  ext.p_corr = (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * offset.squaredNorm()))) / n;
  return ext;
}

// -------------------------------------------------- N equiprobable states

NequalStructure nequal_structure(std::span<const BlochVector> states, double tol) {
  const std::size_t n = states.size();
  if (n < 4) throw Error(ErrorKind::ShapeError, "need at least four states");
  for (const auto& s : states) {
    if (!is_pure(s, tol)) throw Error(ErrorKind::InvalidState, "state is not pure");
  }
  require_distinct(states, tol);

  NequalStructure out;
  if (auto omega = states_form_povm(states, tol)) {
    out.kind = NequalKind::StatesFormPovm;
    out.omega = std::move(*omega);
    out.p_corr = 2.0 / static_cast<double>(n);
    return out;
  }

  Eigen::MatrixXd diff(static_cast<Eigen::Index>(n - 1), 3);
  for (std::size_t j = 1; j < n; ++j) {
    diff.row(static_cast<Eigen::Index>(j - 1)) = (states[0] - states[j]).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() == 3 && sv[2] <= kBoundary * sv[0]) {
    Eigen::Vector3d dir = svd.matrixV().col(2);
    if (states[0].dot(dir) < 0.0) dir = -dir;
    out.kind = NequalKind::LatitudeReducible;
    out.b_direction = dir;
    return out;
  }
  out.kind = NequalKind::NoNontrivialB;
  return out;
}

// ------------------------------------------- two of three equal priors

ThresholdPair two_of_three_thresholds(const TwoOfThreeConfig& config) {
  if (const auto* m = std::get_if<MirrorSymmetricConfig>(&config)) {
    if (!(m->theta > 0.0 && m->theta <= std::numbers::pi / 4.0 + 1e-15)) {
      throw Error(ErrorKind::ConfigMismatch, "theta must lie in (0, pi/4]");
    }
    const double t2 = 2.0 * m->theta;
    return {0.0, 2.0 / (5.0 + std::cos(t2) + std::sin(t2))};
  }
  const double b = std::get<CzhecConfig>(config).b;
  if (!(b > 0.0 && b < 1.0)) {
    throw Error(ErrorKind::ConfigMismatch, "b must lie in (0, 1)");
  }
  return {(b - 2.0 + std::sqrt(2.0 * b * (1.0 + b))) / (b * b + 6.0 * b - 4.0),
          1.0 / (2.0 + b)};
}

Problem two_of_three_problem(const TwoOfThreeConfig& config, double p, double tol) {
  two_of_three_thresholds(config);
  check_prior(p);
  std::vector<BlochVector> states;
  if (const auto* m = std::get_if<MirrorSymmetricConfig>(&config)) {
    const double s = 0.5 * std::sin(2.0 * m->theta);
    const double c = 0.5 * std::cos(2.0 * m->theta);
    states = {{s, 0.0, c}, {-s, 0.0, c}, {0.0, 0.0, 0.5}};
  } else {
    const double b = std::get<CzhecConfig>(config).b;
    const double z = 0.5 * std::sqrt(1.0 - b * b);
    states = {{0.5 * b, 0.0, z}, {-0.5 * b, 0.0, z}, {0.5, 0.0, 0.0}};
  }
  return Problem::top_level(std::move(states), {p, p, 1.0 - 2.0 * p}, tol);
}

std::array<double, 3> czhec_frequencies(double b, double p) {
  const double d = 1.0 + p * (-6.0 + (8.0 + b * b) * p);
  const double k = (1.0 + p * (4.0 * (p - 1.0) + b * b * (5.0 * p - 2.0))) / (b * d * d);
  const double w1 = k * (-1.0 + p * (4.0 - 4.0 * p + b * (-2.0 + (6.0 + b) * p)));
  const double w2 = -k * (-1.0 + p * (4.0 - 4.0 * p + b * (2.0 + (-6.0 + b) * p)));
  return {w1, w2, 2.0 - w1 - w2};
}

double czhec_value(double b, double p) {
  return 2.0 * p * p * (1.0 - 2.0 * p) * (b * b - 1.0) /
         (1.0 - 6.0 * p + p * p * (8.0 + b * b));
}

double czhec_b_length(double b, double p) {
  return czhec_value(b, p) * (3.0 * p - 1.0) / (2.0 * p * std::sqrt(1.0 - b * b));
}

// ------------------------------------------------ four-state family

namespace {

double four_b12(const FourSymmetricConfig& c) {
  if (!(c.b11 > 0.0 && c.b11 < 0.5) || !(c.b32 >= 0.0) || !(c.b33 > 0.0) ||
      std::abs(c.b32 * c.b32 + c.b33 * c.b33 - 0.25) > 1e-9) {
    throw Error(ErrorKind::ConfigMismatch,
                "need 0 < b11 < 1/2, b32 >= 0, b33 > 0 and b32^2 + b33^2 = 1/4");
  }
  return std::sqrt(0.25 - c.b11 * c.b11);
}

}  // namespace

ThresholdPair four_symmetric_thresholds(const FourSymmetricConfig& c) {
  const double b12 = four_b12(c);
  const double b32 = c.b32;
  const double p_r = (1.0 - 2.0 * b12) / (8.0 * c.b11 * c.b11);
  const double p_l =
      (b12 - b32 + std::sqrt(b12 * (b12 + 2.0 * b32 + 4.0 * b12 * b32 * b32))) /
      (8.0 * b12 - 2.0 * b32 + 8.0 * b12 * b12 * b32);
  return {p_l, p_r};
}

Problem four_symmetric_problem(const FourSymmetricConfig& c, double p, double tol) {
  const double b12 = four_b12(c);
  check_prior(p);
  const double q = 0.5 - p;
  return Problem::top_level({{c.b11, b12, 0.0},
                             {c.b11, -b12, 0.0},
                             {0.0, c.b32, c.b33},
                             {0.0, c.b32, -c.b33}},
                            {p, p, q, q}, tol);
}

FourSymmetricFourElement four_symmetric_four_element(const FourSymmetricConfig& c,
                                                      double p) {
  const double b12 = four_b12(c);
  const double b11 = c.b11;
  FourSymmetricFourElement out;
  out.b1 = 2.0 * p * b11 * (1.0 - 6.0 * p + 8.0 * p * p) /
           (1.0 - 8.0 * p + 16.0 * p * p * (1.0 - b11 * b11));
  out.a = 8.0 * p * b11 / (4.0 * p - 1.0) * out.b1;

  const double num = 1.0 + 4.0 * p * (p - 1.0 + 4.0 * (3.0 * p - 1.0) * b12 * b12);
  const double den = 1.0 + 4.0 * p * (-2.0 + p * (3.0 + 4.0 * b12 * b12));
  const double k = num / (b12 * den * den);
  const double lift = (-1.0 + 4.0 * p * (1.0 - 4.0 * p * b11 * b11)) * c.b32;
  const double cross = 4.0 * p * (4.0 * p - 1.0) * b12;
  const double w1 = k * (cross + lift);
  const double w2 = -k * (-cross + lift);
  const double w3 = 1.0 - 0.5 * (w1 + w2);
  out.omega = {w1, w2, w3, w3};
  return out;
}

std::array<double, 2> four_symmetric_lower_frequencies(const FourSymmetricConfig& c) {
  const double b12 = four_b12(c);
  const double b32 = c.b32;
  const double w3 = (b12 + b32) / (b12 + 2.0 * b32 + 4.0 * b12 * b32 * b32);
  return {2.0 - 2.0 * w3, w3};
}

FourSymmetricSolution four_symmetric_solve(const FourSymmetricConfig& c, double p,
                                           double tol) {
  FourSymmetricSolution out;
  out.thresholds = four_symmetric_thresholds(c);
  const Problem problem = four_symmetric_problem(c, p, tol);

  if (p >= out.thresholds.p_r) {
    out.solution = pair_solution(problem, 0, 1);
    return out;
  }
  if (p > out.thresholds.p_l) {
    const FourSymmetricFourElement fe = four_symmetric_four_element(c, p);
    const std::array<std::size_t, 4> all{0, 1, 2, 3};
    const auto gammas =
        gamma_from_ab(problem, all, fe.a, Eigen::Vector3d(fe.b1, 0.0, 0.0));
    Povm povm;
    povm.elements.resize(4);
    for (std::size_t k = 0; k < 4; ++k) {
      povm[k] = {fe.omega[k], gammas[k].normalized() * kBlochRadius};
    }
    out.solution = finalize(problem, std::move(povm));
    return out;
  }

  // Below p_l the first state drops out; the rest is a three-state problem.
  const std::array<std::size_t, 3> rest{1, 2, 3};
  try {
    for (const auto& cand : candidate_systems_m3(problem, rest)) {
      try {
        const auto omega = frequencies_from_candidate(problem, cand);
        Solution sol = finalize(problem, povm_from_candidate(problem, cand, omega));
        if (sol.certificate.passed) {
          out.solution = std::move(sol);
          return out;
        }
      } catch (const Error&) {
      }
    }
  } catch (const Error&) {
  }
  out.solution = pair_solution(problem, 2, 3);
  return out;
}

}  // namespace qdisc
