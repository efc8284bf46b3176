#include "qdisc/oracle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "qdisc/rng.hpp"

namespace qdisc {

void OracleConfig::validate() const {
  if (max_elements < 2 || max_elements > 8) {
    throw Error(ErrorKind::ShapeError, "max_elements must be in [2, 8]");
  }
  if (restarts < 1) throw Error(ErrorKind::ShapeError, "restarts must be >= 1");
  if (iterations < 0) {
    throw Error(ErrorKind::ShapeError, "iterations must be >= 0");
  }
  if (!(initial_step > 0.0) || !(min_step > 0.0) || !(step_grow >= 1.0) ||
      !(step_shrink > 0.0 && step_shrink < 1.0)) {
    throw Error(ErrorKind::ShapeError, "invalid step schedule");
  }
}

namespace {

// The search runs on v_j = omega_j gamma_j. Then omega_j = 2|v_j| and the
// completeness relations become sum_j v_j = 0 and sum_j |v_j| = 1, both of
// which repair() restores exactly.
using Weights = std::vector<Eigen::Vector3d>;

bool repair(Weights& v) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double total = 0.0;
  for (auto& x : v) {
    x -= mean;
    total += x.norm();
  }
  if (!(total > 0.0) || !std::isfinite(total)) return false;
  for (auto& x : v) x /= total;
  return true;
}

struct Labelled {
  std::vector<std::size_t> labels;
  std::vector<double> priors;
  std::vector<BlochVector> states;

  double value(const Weights& v) const {
    double p = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      p += priors[k] * (v[k].norm() + 2.0 * states[k].dot(v[k]));
    }
    return p;
  }
};

std::vector<std::size_t> choose_labels(const Problem& problem,
                                       std::size_t max_elements, int restart,
                                       CounterRng& rng) {
  std::vector<std::size_t> idx(problem.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (problem.size() <= max_elements) return idx;
  if (restart == 0) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return problem.prior(a) > problem.prior(b);
    });
  } else {
    for (std::size_t i = 0; i < max_elements; ++i) {
      const std::size_t j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
  }
  idx.resize(max_elements);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct RestartResult {
  Weights v;
  std::vector<std::size_t> labels;
  double value = -1.0;
};

RestartResult run_restart(const Problem& problem, const OracleConfig& config,
                          int restart) {
  CounterRng rng = CounterRng::stream(config.seed, static_cast<std::uint64_t>(restart));
  Labelled lab;
  lab.labels = choose_labels(problem,
                             static_cast<std::size_t>(config.max_elements),
                             restart, rng);
  for (auto j : lab.labels) {
    lab.priors.push_back(problem.prior(j));
    lab.states.push_back(problem.state(j));
  }
  const std::size_t m = lab.labels.size();

  Weights v(m);
  do {
    for (auto& x : v) x = {rng.normal(), rng.normal(), rng.normal()};
  } while (!repair(v));
  double best = lab.value(v);
  double step = config.initial_step;

  Weights trial(m);
  std::vector<std::size_t> active;
  for (int it = 0; it < config.iterations; ++it) {
    trial = v;
    const int phase = it % 10;
    if (phase == 0 || m < 2) {
      for (auto& x : trial) {
        x += step * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
      }
    } else {
      // Moves between two elements keep sum v = 0 without touching the
      // others, so elements sitting at zero stay there. Most moves stay
      // inside the current support.
      active.clear();
      for (std::size_t k = 0; k < m; ++k) {
        if (phase == 7 || v[k].squaredNorm() > 0.0) active.push_back(k);
      }
      if (active.size() < 2) {
        active.resize(m);
        std::iota(active.begin(), active.end(), std::size_t{0});
      }
      const std::size_t a = rng.below(active.size());
      const std::size_t b = (a + 1 + rng.below(active.size() - 1)) % active.size();
      const std::size_t i = active[a];
      const std::size_t j = active[b];
      if (phase == 5) {
        trial[j] += trial[i];
        trial[i].setZero();
      } else {
        const Eigen::Vector3d d =
            step * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        trial[i] += d;
        trial[j] -= d;
      }
    }
    if (!repair(trial)) continue;
    const double value = lab.value(trial);
    if (value > best) {
      best = value;
      v.swap(trial);
      step = std::min(step * config.step_grow, 1.0);
    } else {
      step = std::max(step * config.step_shrink, config.min_step);
    }
  }
  return {std::move(v), std::move(lab.labels), best};
}

}  // namespace

OracleResult oracle_optimize(const Problem& problem, const OracleConfig& config) {
  config.validate();
  const int restarts = config.restarts;
  std::vector<RestartResult> results(static_cast<std::size_t>(restarts));

  unsigned threads = config.threads != 0 ? config.threads
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(restarts));
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (int r = static_cast<int>(w); r < restarts; r += static_cast<int>(threads)) {
          results[static_cast<std::size_t>(r)] = run_restart(problem, config, r);
        }
      });
    }
  }

  // Ties go to the lowest restart index.
  int best = 0;
  for (int r = 1; r < restarts; ++r) {
    if (results[static_cast<std::size_t>(r)].value >
        results[static_cast<std::size_t>(best)].value) {
      best = r;
    }
  }
  const RestartResult& winner = results[static_cast<std::size_t>(best)];

  OracleResult out;
  out.best_restart = best;
  out.povm.elements.assign(problem.size(), PovmElement{});
  for (std::size_t k = 0; k < winner.labels.size(); ++k) {
    const double len = winner.v[k].norm();
    auto& e = out.povm[winner.labels[k]];
    if (len > 0.0) {
      e.omega = 2.0 * len;
      e.gamma = winner.v[k] / (2.0 * len);
    }
  }
  out.p_corr = success_probability(problem, out.povm);
  return out;
}

SimReport simulate(const Problem& problem, const Povm& povm,
                   std::uint64_t trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorKind::ShapeError, "trials must be >= 1");
  if (povm.size() != problem.size()) {
    throw Error(ErrorKind::ShapeError, "POVM and problem sizes differ");
  }
  validate_povm(povm, problem.tolerance());

  const std::size_t n = problem.size();
  std::vector<std::vector<double>> outcome_cdf(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto probs = outcome_distribution(problem.state(i), povm);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorKind::CompletenessViolation,
                  "outcome probabilities sum to " + std::to_string(total), i);
    }
    double acc = 0.0;
    for (auto& p : probs) {
      acc += std::max(p, 0.0);
      p = acc;
    }
    outcome_cdf[i] = std::move(probs);
  }
  std::vector<double> prior_cdf(n);
  std::partial_sum(problem.priors().begin(), problem.priors().end(),
                   prior_cdf.begin());

  auto draw = [](const std::vector<double>& cdf, double u) {
    const double scaled = u * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), scaled);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                 cdf.size() - 1);
  };

  CounterRng rng = CounterRng::stream(seed, 0);
  std::uint64_t successes = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::size_t state = draw(prior_cdf, rng.uniform());
    const std::size_t outcome = draw(outcome_cdf[state], rng.uniform());
    successes += (state == outcome) ? 1 : 0;
  }

  SimReport report;
  report.trials = trials;
  report.successes = successes;
  report.empirical_rate =
      static_cast<double>(successes) / static_cast<double>(trials);
  report.std_error = std::sqrt(report.empirical_rate *
                               (1.0 - report.empirical_rate) /
                               static_cast<double>(trials));
  return report;
}

}  // namespace qdisc
