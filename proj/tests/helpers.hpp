#pragma once

#include <cmath>
#include <vector>

#include "lru/lattice.hpp"
#include "lru/random.hpp"

namespace test {

inline lru::LatticeSpec dimensionless(int length, double u = 50.0, double w = 0.0) {
  lru::LatticeSpec s;
  s.length = length;
  s.mean_frequency = 0.0;
  s.mean_anharmonicity = u;
  s.hopping = 1.0;
  s.disorder_strength = w;
  return s;
}

// Fig. 1 parameters in rad/us.
inline lru::LatticeSpec figure1(int length) {
  lru::LatticeSpec s;
  s.length = length;
  s.mean_frequency = lru::kTwoPi * 7500.0;
  s.mean_anharmonicity = lru::kTwoPi * 250.0;
  s.hopping = lru::kTwoPi * 5.0;
  s.disorder_strength = lru::kTwoPi * 100.0;
  return s;
}

inline lru::Vector random_state(std::size_t dim, lru::Rng& rng) {
  lru::Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i)
    v(i) = lru::Complex(lru::uniform01(rng) - 0.5, lru::uniform01(rng) - 0.5);
  return v / v.norm();
}

inline double max_abs(const lru::DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace test
