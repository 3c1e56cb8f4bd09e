#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "framelab/space.hpp"

namespace framelab {

// Default seed used by every sampling routine when the caller does not pick
// one; recorded in reports so runs can be reproduced.
inline constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ull;

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Box-Muller on raw engine output; std::normal_distribution is
// implementation-defined, this is not.
inline double normal01(std::mt19937_64& g) {
  double u1 = 0.0;
  do {
    u1 = uniform01(g);
  } while (u1 <= 0.0);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

inline Eigen::VectorXcd random_complex_vector(Eigen::Index dim,
                                              std::mt19937_64& g) {
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = normal01(g);
    const double im = normal01(g);
    v[i] = cxd(re, im);
  }
  return v;
}

inline Eigen::VectorXcd random_unit_vector(const SpaceDesc& s,
                                           std::mt19937_64& g) {
  for (;;) {
    Eigen::VectorXcd v = random_complex_vector(s.dim(), g);
    const double n = norm_raw(s, v);
    if (n > 1e-6) return v / n;
  }
}

} // namespace framelab
