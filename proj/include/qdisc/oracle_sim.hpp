#pragma once

// Independent checks: a derivative-free maximizer of the success probability
// over feasible POVMs, and a Monte-Carlo simulation of a measurement.

#include <cstdint>

#include "qdisc/core.hpp"

namespace qdisc {

struct OracleConfig {
  int max_elements = 4;        // in [2, 8]
  int restarts = 64;           // >= 1
  int iterations = 2000;       // per restart
  std::uint64_t seed = 0x51ED5EEDULL;
  double initial_step = 0.2;
  double step_grow = 1.3;
  double step_shrink = 0.97;
  double min_step = 1e-10;
  unsigned threads = 0;        // 0 = hardware concurrency

  void validate() const;
};

struct OracleResult {
  Povm povm;
  double p_corr = 0.0;
  int best_restart = -1;
};

/// Best feasible POVM found by random-restart hill climbing. Every iterate is
/// an exactly feasible POVM, so p_corr is a lower bound on the optimum.
/// Deterministic given the config (independent of thread count).
OracleResult oracle_optimize(const Problem& problem,
                             const OracleConfig& config = {});

struct SimReport {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double empirical_rate = 0.0;
  double std_error = 0.0;
};

SimReport simulate(const Problem& problem, const Povm& povm,
                   std::uint64_t trials, std::uint64_t seed);

}  // namespace qdisc
