#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "framelab/measure.hpp"
#include "framelab/rng.hpp"
#include "framelab/space.hpp"

namespace framelab {

// Lazily evaluated vector sequence; index n >= 0. Streams must return
// vectors in the space the consumer was handed.
using VectorStream = std::function<Vector(long long)>;

// e_n = exponentials of the measure, sharing one space across calls.
VectorStream exponential_stream(const MeasureSpec& m);
VectorStream exponential_stream(const MeasureSpec& m, SpacePtr s);
VectorStream list_stream(std::vector<Vector> vectors);

// Realized prefix g_0..g_n of the correction sequence
//   classic: g_n = e_n - sum_{k<n} <e_n, e_k> g_k
//   pair:    g_n = phi_n - sum_{k<n} <phi_n, psi_k> g_k
struct AuxiliarySequence {
  std::vector<Eigen::VectorXcd> terms;
  SpacePtr space;

  long long count() const { return static_cast<long long>(terms.size()); }
  const Eigen::VectorXcd& at(long long n) const;
};

// Sources must be unit: |<e_n,e_n> - 1| <= 1e-9, else an error carrying the
// offending index.
AuxiliarySequence auxiliary_sequence(const VectorStream& e, long long n_max,
                                     const SpacePtr& s);
// Pair version; requires <phi_n, psi_n> = 1 to 1e-9.
AuxiliarySequence dual_auxiliary_sequence(const VectorStream& phi,
                                          const VectorStream& psi,
                                          long long n_max, const SpacePtr& s);

// x_n = sum_{k<=n} <x, g_k> target_k.
Vector partial_reconstruction(const Vector& x, const AuxiliarySequence& g,
                              const VectorStream& targets, long long n);

// One-step form x_m = x_{m-1} + <x - x_{m-1}, phi_m> psi_m starting from 0;
// agrees with partial_reconstruction over the pair's correction sequence
// without materializing it.
Vector sequential_update(const Vector& x, const VectorStream& phi,
                         const VectorStream& psi, long long n);

enum class Effectiveness {
  effective_within_tolerance,
  not_effective,
  inconclusive,
};
const char* effectiveness_name(Effectiveness v);

struct EffectivenessReport {
  Effectiveness verdict = Effectiveness::inconclusive;
  int trials = 0;
  long long n_max = 0;
  double tolerance = 0;
  std::uint64_t seed = 0;
  // Worst values over trials at the final index.
  double max_residual = 0;
  double parseval_defect = 0;
  // Decay of log10(residual) per decade of n over [n_max/10, n_max].
  double log_slope_last_decade = 0;
  // Worst-over-trials curves, indexed by n.
  std::vector<double> residual_curve;
  std::vector<double> defect_curve;
};

// Samples `trials` seeded random unit vectors and reconstructs each through
// the pair's correction sequence. Verdict: effective iff the final residual
// is within tol; otherwise inconclusive while the residual still falls
// (slope <= -0.01 per decade), not_effective once it has flattened out.
// The reported Parseval defect |sum |<x,g_k>|^2 - |x|^2| additionally gates
// the verdict for the classic overload, where that identity characterizes
// effectiveness; a dual pair reconstructs while the sum converges to
// <S x, x> of its orbit frame operator instead.
EffectivenessReport effectiveness_test(const VectorStream& phi,
                                       const VectorStream& psi,
                                       const SpacePtr& s, int trials,
                                       long long n_max, double tol,
                                       std::uint64_t seed = kDefaultSeed);
// Classic single-stream system (phi = psi = e, unit-vector check).
EffectivenessReport effectiveness_test(const VectorStream& e,
                                       const SpacePtr& s, int trials,
                                       long long n_max, double tol,
                                       std::uint64_t seed = kDefaultSeed);

struct RowActionResult {
  Eigen::VectorXcd x;
  long long sweeps = 0;
  long long row_updates = 0;
  double residual = 0;
  bool converged = false;
};

// Cyclic row-action projections x <- x + (b_i - <a_i, x>)/|a_i|^2 a_i from
// x = 0 on plain Euclidean coordinates. Returns the lowest-residual iterate
// seen; for consistent systems that is the minimum-norm solution. Rows of
// zeros are rejected with their index.
RowActionResult row_action_solve(const Eigen::MatrixXcd& a,
                                 const Eigen::VectorXcd& b,
                                 long long max_sweeps, double tol);

} // namespace framelab
