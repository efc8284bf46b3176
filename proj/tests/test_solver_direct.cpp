#include <array>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qdisc/solver_direct.hpp"
#include "qdisc/special_cases.hpp"
#include "support.hpp"

using namespace qdisc;
using namespace qdisc::testing;

namespace {

template <typename F>
ErrorKind error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::SolverFailure;
}

const FourSymmetricConfig kFourFamily{1.0 / (2.0 * std::numbers::sqrt2), 0.0, 0.5};

double helstrom(const BlochVector& b1, const BlochVector& b2, double p1, double p2) {
  return 0.5 * (p1 + p2) +
         std::sqrt((p1 * p1 + p2 * p2) / 4.0 - 2.0 * p1 * p2 * b1.dot(b2));
}

std::vector<BlochVector> latitude_states(double z) {
  const double r = std::sqrt(0.25 - z * z);
  std::vector<BlochVector> out;
  for (double t : {0.1, 1.7, 3.0, 4.4}) out.emplace_back(r * std::cos(t), r * std::sin(t), z);
  return out;
}

}  // namespace

TEST(GammaFromAB, ZeroBIsCollinear) {
  const Problem problem = trine_problem();
  const std::array<std::size_t, 3> all{0, 1, 2};
  const auto g = gamma_from_ab(problem, all, 0.9, Eigen::Vector3d::Zero());
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LT((g[j] - problem.state(j) * (1.0 / 3.0) / (0.9 - 1.0 / 3.0)).norm(), 1e-15);
  }
  EXPECT_EQ(error_kind([&] { gamma_from_ab(problem, all, 1.0 / 3.0, Eigen::Vector3d::Zero()); }),
            ErrorKind::DegenerateDenominator);
}

TEST(GammaFromAB, TwoStateCommonB) {
  CounterRng rng = CounterRng::stream(11, 0);
  for (int k = 0; k < 100; ++k) {
    const auto s = random_states(rng, 2);
    const auto p = random_priors(rng, 2);
    const Solution sol = solve_two(s[0], s[1], p[0], p[1]);
    const Problem sub = Problem::subproblem(s, p);
    // B from the first element must reproduce the second one.
    const Eigen::Vector3d b = p[0] * s[0] - (sol.p_corr - p[0]) * sol.povm[0].gamma;
    const std::array<std::size_t, 2> both{0, 1};
    const auto g = gamma_from_ab(sub, both, sol.p_corr, b);
    EXPECT_LT((g[1] - sol.povm[1].gamma).norm(), 1e-12);
    EXPECT_NEAR(g[1].norm(), 0.5, 1e-12);
  }
}

TEST(SolveTwo, Examples) {
  const Solution a = solve_two({0, 0, 0.5}, {0.5, 0, 0}, 0.5, 0.5);
  EXPECT_NEAR(a.p_corr, 0.5 + 0.5 / std::numbers::sqrt2, 1e-15);
  EXPECT_TRUE(a.certificate.passed);
  EXPECT_EQ(a.classification.kind, MeasurementKind::Projective);

  const Solution b = solve_two({0, 0, 0.5}, {0, 0, -0.5}, 0.6, 0.4);
  EXPECT_NEAR(b.p_corr, 1.0, 1e-15);

  const Solution c = solve_two({0.5, 0, 0}, {-0.5, 0, 0}, 0.3, 0.2);
  EXPECT_NEAR(c.p_corr, 0.5, 1e-15);
  EXPECT_TRUE(c.certificate.passed);
}

TEST(SolveTwo, IdenticalStatesAreDegenerate) {
  const Solution s = solve_two({0, 0.5, 0}, {0, 0.5, 0}, 0.3, 0.6);
  EXPECT_TRUE(s.degenerate);
  EXPECT_NEAR(s.p_corr, 0.6, 1e-15);
  EXPECT_TRUE(s.certificate.passed);
}

TEST(SolveTwo, InvalidPriors) {
  EXPECT_EQ(error_kind([] { solve_two({0, 0, 0.5}, {0.5, 0, 0}, 0.7, 0.4); }),
            ErrorKind::InvalidPriors);
  EXPECT_EQ(error_kind([] { solve_two({0, 0, 0.5}, {0.5, 0, 0}, 0.0, 0.4); }),
            ErrorKind::InvalidPriors);
}

TEST(SolveTwo, NearAntipodalFrame) {
  const BlochVector a(0, 0, 0.5);
  const BlochVector b = -a + Eigen::Vector3d(1e-13, 0, 0);
  const Solution s = solve_two(a, b.normalized() * 0.5, 0.5, 0.5);
  EXPECT_NEAR(s.p_corr, 1.0, 1e-12);
  EXPECT_TRUE(s.certificate.passed);
}

TEST(SolveTwo, ScaleInvariance) {
  CounterRng rng = CounterRng::stream(12, 0);
  for (int k = 0; k < 100; ++k) {
    const auto s = random_states(rng, 2);
    const auto p = random_priors(rng, 2);
    const double alpha = 1.0 - rng.uniform();
    const Solution base = solve_two(s[0], s[1], p[0], p[1]);
    const Solution scaled = solve_two(s[0], s[1], alpha * p[0], alpha * p[1]);
    EXPECT_NEAR(scaled.p_corr, alpha * base.p_corr, 1e-12);
    EXPECT_LT((scaled.povm[0].gamma - base.povm[0].gamma).norm(), 1e-12);
  }
}

TEST(ExtensionCheck, TrinePairIsNotOptimal) {
  const Problem problem = trine_problem();
  const std::array<std::size_t, 2> pair{0, 1};
  const std::array<std::size_t, 1> extra{2};
  const Solution base =
      embed(solve_two(problem.state(0), problem.state(1), 1.0 / 3, 1.0 / 3), pair, problem);
  const auto r = extension_check(base, problem, extra).front();
  EXPECT_FALSE(r.absorbed);
  EXPECT_LT(r.det, 0.0);
  EXPECT_NEAR(r.det, *r.closed_form_det, 1e-15);
  EXPECT_NEAR(r.trace, *r.closed_form_trace, 1e-15);
}

TEST(ExtensionCheck, ClosedFormsMatchMatrix) {
  CounterRng rng = CounterRng::stream(13, 0);
  for (int k = 0; k < 500; ++k) {
    const Problem problem = random_problem(rng, 4);
    const std::array<std::size_t, 2> pair{1, 3};
    const std::array<std::size_t, 2> extra{0, 2};
    const Solution base = embed(solve_two(problem.state(1), problem.state(3), problem.prior(1),
                                          problem.prior(3)),
                                pair, problem);
    for (const auto& r : extension_check(base, problem, extra)) {
      EXPECT_NEAR(r.trace, *r.closed_form_trace, 1e-12);
      EXPECT_NEAR(r.det, *r.closed_form_det, 1e-12);
      if (std::abs(r.det) > 1e-9) EXPECT_EQ(r.absorbed, r.det > 0.0 && r.trace > 0.0);
    }
  }
}

TEST(ExtensionCheck, FourFamilyAboveUpperThreshold) {
  const double p = 0.3;
  const Problem problem = four_symmetric_problem(kFourFamily, p);
  const std::array<std::size_t, 2> pair{0, 1};
  const std::array<std::size_t, 2> extra{2, 3};
  const Solution base =
      embed(solve_two(problem.state(0), problem.state(1), p, p), pair, problem);
  for (const auto& r : extension_check(base, problem, extra)) EXPECT_TRUE(r.absorbed);
  EXPECT_TRUE(base.certificate.passed);
}

TEST(CandidateM4, FourFamily) {
  const Problem problem = four_symmetric_problem(kFourFamily, 0.27);
  const std::array<std::size_t, 4> all{0, 1, 2, 3};
  const CandidateSystem c = solve_candidate_m4(problem, all);
  const auto closed = four_symmetric_four_element(kFourFamily, 0.27);
  EXPECT_NEAR(c.a, closed.a, 1e-14);
  EXPECT_LT((c.b - Eigen::Vector3d(closed.b1, 0, 0)).norm(), 1e-14);
}

TEST(CandidateM4, SharedLatitude) {
  const auto s = latitude_states(0.3);
  const Problem problem = Problem::top_level(s, {0.25, 0.25, 0.25, 0.25});
  const std::array<std::size_t, 4> all{0, 1, 2, 3};
  const CandidateSystem c = solve_candidate_m4(problem, all);
  EXPECT_LT((c.b - Eigen::Vector3d(0, 0, 0.25 * 0.3)).norm(), 1e-12);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(0.25 * c.a * c.a - 0.5 * c.a * 0.25 - c.b.squaredNorm() +
                    2.0 * 0.25 * c.b.dot(s[j]),
                0.0, 1e-12);
  }
  EXPECT_EQ(error_kind([&] { frequencies_from_candidate(problem, c); }),
            ErrorKind::SingularSystem);
}

TEST(CandidateM4, InconsistentRankDeficiency) {
  const auto s = latitude_states(0.0);
  const Problem problem = Problem::top_level(s, {0.1, 0.2, 0.3, 0.4});
  const std::array<std::size_t, 4> all{0, 1, 2, 3};
  EXPECT_EQ(error_kind([&] { solve_candidate_m4(problem, all); }), ErrorKind::SingularSystem);
}

TEST(CandidateM3, LiftedTrine) {
  const Problem problem = Problem::top_level(trine_states(0.3), {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const std::array<std::size_t, 3> all{0, 1, 2};
  const CandidateSystem c = solve_candidate_m3(problem, all);
  EXPECT_NEAR(c.a, 0.6, 1e-14);
  EXPECT_LT((c.b - Eigen::Vector3d(0, 0, 0.1)).norm(), 1e-14);
}

TEST(CandidateM3, Trine) {
  const std::array<std::size_t, 3> all{0, 1, 2};
  const CandidateSystem c = solve_candidate_m3(trine_problem(), all);
  EXPECT_NEAR(c.a, 2.0 / 3.0, 1e-14);
  EXPECT_LT(c.b.norm(), 1e-14);
}

TEST(CandidateM3, CzhecConfiguration) {
  const double b = 0.8;
  const double p = 0.35;
  const Problem problem = two_of_three_problem(CzhecConfig{b}, p);
  const std::array<std::size_t, 3> all{0, 1, 2};
  const CandidateSystem c = solve_candidate_m3(problem, all);
  EXPECT_NEAR(c.a, czhec_value(b, p), 1e-12);
  const Eigen::Vector3d axis = (problem.state(0) + problem.state(1)).normalized();
  EXPECT_LT((c.b - czhec_b_length(b, p) * axis).norm(), 1e-8);
}

TEST(CandidateM3, CollinearFallback) {
  // p_j beta_j on one line: the linear route is singular.
  const Eigen::Vector3d origin(0.05, 0.02, 0.1);
  const Eigen::Vector3d dir(0.3, -0.2, 0.1);
  std::vector<BlochVector> states;
  std::vector<double> priors;
  for (double t : {-0.4, 0.1, 0.5}) {
    const Eigen::Vector3d a = origin + t * dir;
    states.push_back(0.5 * a.normalized());
    priors.push_back(a.norm());
  }
  const Problem problem = Problem::subproblem(states, priors);
  const std::array<std::size_t, 3> all{0, 1, 2};
  try {
    for (const auto& c : candidate_systems_m3(problem, all)) {
      for (const auto& g : gamma_from_ab(problem, all, c.a, c.b)) EXPECT_NEAR(g.norm(), 0.5, 1e-9);
    }
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::NoConvergence || e.kind() == ErrorKind::NoAdmissibleRoot);
  }
  EXPECT_TRUE(solve(problem).certificate.passed);
}

TEST(Frequencies, TrineAndFourFamily) {
  const std::array<std::size_t, 3> three{0, 1, 2};
  const auto w = frequencies_from_candidate(trine_problem(),
                                            solve_candidate_m3(trine_problem(), three));
  for (double x : w) EXPECT_NEAR(x, 2.0 / 3.0, 1e-14);

  const Problem problem = four_symmetric_problem(kFourFamily, 0.27);
  const std::array<std::size_t, 4> all{0, 1, 2, 3};
  const auto w4 = frequencies_from_candidate(problem, solve_candidate_m4(problem, all));
  const auto closed = four_symmetric_four_element(kFourFamily, 0.27).omega;
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(w4[j], closed[j], 1e-12);
    EXPECT_GT(w4[j], 0.0);
  }
}

TEST(Frequencies, NegativeAboveUpperThreshold) {
  const Problem problem = four_symmetric_problem(kFourFamily, 0.32);
  const std::array<std::size_t, 4> all{0, 1, 2, 3};
  EXPECT_EQ(error_kind([&] {
              frequencies_from_candidate(problem, solve_candidate_m4(problem, all));
            }),
            ErrorKind::NegativeFrequency);
}

TEST(Solve, Trine) {
  const Solution s = solve(trine_problem());
  EXPECT_NEAR(s.p_corr, 2.0 / 3.0, 1e-14);
  EXPECT_EQ(s.classification.kind, MeasurementKind::Generalized3);
  for (const auto& e : s.povm.elements) EXPECT_NEAR(e.omega, 2.0 / 3.0, 1e-14);
}

TEST(Solve, FourFamily) {
  const Solution a = solve(four_symmetric_problem(kFourFamily, 0.27));
  EXPECT_NEAR(a.p_corr, four_symmetric_four_element(kFourFamily, 0.27).a, 1e-12);
  EXPECT_EQ(a.classification.kind, MeasurementKind::Generalized4);

  const Solution b = solve(four_symmetric_problem(kFourFamily, 0.25));
  EXPECT_NEAR(b.p_corr, 0.5, 1e-12);
  EXPECT_NEAR(b.povm[0].omega, 0.0, 1e-9);
  EXPECT_NEAR(b.povm[1].omega, 0.0, 1e-9);
  EXPECT_NEAR(b.povm[2].omega, 1.0, 1e-9);
  EXPECT_NEAR(b.povm[3].omega, 1.0, 1e-9);
}

TEST(Solve, Tetrahedron) {
  const Solution s = solve(Problem::top_level(tetrahedron_states(), {0.25, 0.25, 0.25, 0.25}));
  EXPECT_NEAR(s.p_corr, 0.5, 1e-12);
  EXPECT_EQ(s.classification.kind, MeasurementKind::PovmOfStates);
  for (const auto& e : s.povm.elements) EXPECT_NEAR(e.omega, 0.5, 1e-12);
}

TEST(Solve, TwoStatesMatchClosedForm) {
  CounterRng rng = CounterRng::stream(14, 0);
  for (int k = 0; k < 200; ++k) {
    const auto s = random_states(rng, 2);
    const auto p = random_priors(rng, 2);
    const Solution sol = solve(Problem::top_level(s, p));
    EXPECT_NEAR(sol.p_corr, solve_two(s[0], s[1], p[0], p[1]).p_corr, 1e-12);
    EXPECT_NEAR(sol.p_corr, helstrom(s[0], s[1], p[0], p[1]), 1e-12);
  }
}

TEST(Solve, CertifiedAndBoundedOnRandomProblems) {
  CounterRng rng = CounterRng::stream(15, 0);
  for (int k = 0; k < 300; ++k) {
    const Problem problem = random_problem(rng, 2 + k % 5);
    const Solution sol = solve(problem);
    EXPECT_TRUE(sol.certificate.passed);
    EXPECT_NEAR(sol.p_corr, success_probability(problem, sol.povm), 1e-12);
    EXPECT_GE(sol.p_corr, problem.max_prior() - 1e-12);
    EXPECT_LE(sol.p_corr, 1.0 + 1e-12);
  }
}

TEST(Solve, RotationInvariance) {
  CounterRng rng = CounterRng::stream(16, 0);
  for (int k = 0; k < 100; ++k) {
    const Problem problem = random_problem(rng, 2 + k % 4);
    const Eigen::Matrix3d r = random_rotation(rng);
    const Solution a = solve(problem);
    const Problem turned = rotated(problem, r);
    EXPECT_NEAR(solve(turned).p_corr, a.p_corr, 1e-10);
    EXPECT_TRUE(certify(turned, rotated(a.povm, r)).passed);
  }
}

TEST(Solve, DuplicateStatesKeepLikeliestLabel) {
  const BlochVector a(0, 0, 0.5);
  const BlochVector b(0.5, 0, 0);
  const Problem problem = Problem::top_level({a, b, a}, {0.2, 0.5, 0.3});
  const Solution s = solve(problem);
  EXPECT_TRUE(s.certificate.passed);
  EXPECT_NEAR(s.p_corr, solve_two(a, b, 0.3, 0.5).p_corr, 1e-12);
  EXPECT_EQ(s.povm[0].omega, 0.0);
  EXPECT_FALSE(s.diagnostics.empty());

  const Problem same = Problem::top_level({a, a, a}, {0.2, 0.5, 0.3});
  const Solution t = solve(same);
  EXPECT_TRUE(t.certificate.passed);
  EXPECT_NEAR(t.p_corr, 0.5, 1e-15);
  EXPECT_TRUE(t.degenerate);
}

TEST(Solve, LatitudeStatesReduceToThree) {
  const Problem problem =
      Problem::top_level(latitude_states(0.3), {0.25, 0.25, 0.25, 0.25});
  const Solution s = solve(problem);
  EXPECT_TRUE(s.certificate.passed);
  EXPECT_LE(s.classification.active.size(), 3u);
}

TEST(Solve, OracleNeverBeatsCertifiedValue) {
  CounterRng rng = CounterRng::stream(17, 0);
  OracleConfig cfg;
  cfg.restarts = 16;
  for (int k = 0; k < 20; ++k) {
    const Problem problem = random_problem(rng, 3 + k % 3);
    EXPECT_LE(oracle_optimize(problem, cfg).p_corr, solve(problem).p_corr + 1e-9);
  }
}

TEST(StatesFormPovm, SimplexSearch) {
  const auto tet = tetrahedron_states();
  const auto w = states_form_povm(tet);
  ASSERT_TRUE(w.has_value());
  for (double x : *w) EXPECT_NEAR(x, 0.5, 1e-14);

  const std::vector<BlochVector> pair{{0, 0, 0.5}, {0.5, 0, 0}, {0, 0, -0.5}};
  const auto wp = states_form_povm(pair);
  ASSERT_TRUE(wp.has_value());
  EXPECT_NEAR((*wp)[0], 1.0, 1e-14);
  EXPECT_NEAR((*wp)[1], 0.0, 1e-14);
  EXPECT_NEAR((*wp)[2], 1.0, 1e-14);

  EXPECT_FALSE(states_form_povm(latitude_states(0.3)).has_value());
}

TEST(ClassifyPovm, ActiveCount) {
  Povm p{{{1.0, {0, 0, 0.5}}, {0.0, {0, 0, 0.5}}, {1.0, {0, 0, -0.5}}}};
  const Classification c = classify_povm(p);
  EXPECT_EQ(c.kind, MeasurementKind::Projective);
  EXPECT_EQ(c.active, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(classify_povm(trine_povm()).kind, MeasurementKind::Generalized3);
  EXPECT_EQ(to_string(MeasurementKind::Generalized4), "generalized4");
}
