#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

#include "qdisc/core.hpp"
#include "qdisc/rng.hpp"

namespace qdisc::testing {

inline BlochVector random_state(CounterRng& rng) {
  Eigen::Vector3d v;
  do {
    v = {rng.normal(), rng.normal(), rng.normal()};
  } while (v.norm() < 1e-3);
  return 0.5 * v.normalized();
}

inline std::vector<BlochVector> random_states(CounterRng& rng, std::size_t n) {
  std::vector<BlochVector> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_state(rng));
  return out;
}

/// Priors bounded away from zero, summing to `mass`.
inline std::vector<double> random_priors(CounterRng& rng, std::size_t n,
                                         double mass = 1.0) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    x = 0.05 + rng.uniform();
    total += x;
  }
  for (auto& x : p) x *= mass / total;
  return p;
}

inline Problem random_problem(CounterRng& rng, std::size_t n) {
  return Problem::top_level(random_states(rng, n), random_priors(rng, n));
}

inline Eigen::Matrix3d random_rotation(CounterRng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

/// Feasible POVM with m elements from random weighted directions.
inline Povm random_povm(CounterRng& rng, std::size_t m) {
  std::vector<Eigen::Vector3d> v(m);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (auto& x : v) {
    x = {rng.normal(), rng.normal(), rng.normal()};
    mean += x;
  }
  mean /= static_cast<double>(m);
  double total = 0.0;
  for (auto& x : v) {
    x -= mean;
    total += x.norm();
  }
  Povm povm;
  for (auto& x : v) {
    x /= total;
    povm.elements.push_back({2.0 * x.norm(), 0.5 * x.normalized()});
  }
  return povm;
}

inline std::vector<BlochVector> trine_states(double z = 0.0) {
  const double r = std::sqrt(0.25 - z * z);
  std::vector<BlochVector> out;
  for (int k = 0; k < 3; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 3.0;
    out.emplace_back(r * std::cos(t), r * std::sin(t), z);
  }
  return out;
}

inline Problem trine_problem() {
  return Problem::top_level(trine_states(), {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

inline Povm trine_povm() {
  Povm povm;
  for (const auto& g : trine_states()) povm.elements.push_back({2.0 / 3.0, g});
  return povm;
}

inline std::vector<BlochVector> tetrahedron_states() {
  const double s = 0.5 / std::sqrt(3.0);
  return {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
}

}  // namespace qdisc::testing
