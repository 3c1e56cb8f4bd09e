#pragma once

#include <cstdint>
#include <vector>

#include "framelab/frames.hpp"
#include "framelab/kaczmarz.hpp"
#include "framelab/measure.hpp"
#include "framelab/rng.hpp"
#include "framelab/space.hpp"

namespace framelab {

// Which closed form produced the operator matrix.
enum class OrbitConstruction {
  singular_shift,      // L f = e^{2pi i x} f - <f, e^{-2pi i x}> 1
  perturbed_conjugate, // T = V^{-1} M_e V - rank one
  mainsingular,        // T f = e^{2pi i x} f - <e^{2pi i x} f, 1> g0
  explicit_matrix,
};

// Operator together with its designated orbit seed g0; the orbit {T^n g0}
// is the frame the verifiers below test.
struct OrbitOperator {
  LinearMap map;
  Vector g0;
  OrbitConstruction construction = OrbitConstruction::explicit_matrix;
};

// Zero/nonzero status cut used when two defect numbers must agree in kind
// (unitarity defect vs commutator norm).
inline constexpr double kStatusZeroTolerance = 1e-8;

// L over the realization of an atomic probability measure; seed 1.
OrbitOperator build_singular_shift(const MeasureSpec& nu);

// Everything derived from an invertible V over L^2(nu):
//   T = V^{-1} L V (assembled in rank-one form), g0 = V^{-1} 1,
//   S = V^{-1} (V^{-1})^*, U = V S^{1/2} (unitary; the defect is recorded).
struct GenbackwardBundle {
  MeasureSpec nu;
  SpacePtr space;
  LinearMap v;
  LinearMap v_inverse;
  LinearMap s;
  LinearMap s_half;
  LinearMap s_neg_half;
  LinearMap u;
  OrbitOperator t;
  double v_condition = 1.0;   // metric condition number of V
  double unitarity_defect = 0.0; // |U*U - I| at build time
};

GenbackwardBundle build_perturbed_conjugate(const LinearMap& v,
                                            const MeasureSpec& nu);

// T from a seed with <g0, 1> = 1 (checked to 1e-9).
OrbitOperator build_mainsingular(const MeasureSpec& mu, const Vector& g0);

// Builds the orbit two ways: as T^n g0 and as the pointwise product g0 h_n
// with h the correction sequence of exponentials over the reweighted measure
// g0 mu; reports the largest gap, plus the residual of the expansion
// f = sum_n <f, g_n> e^{2pi i n x} on random unit vectors.
struct ProductFormReport {
  long long horizon = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  double construction_gap = 0.0;
  double reconstruction_residual = 0.0;
};
ProductFormReport verify_prop_exist(const MeasureSpec& mu, const Vector& g0,
                                    long long horizon, int trials = 5,
                                    std::uint64_t seed = kDefaultSeed);

// Truncated frame operator of the orbit applied to 1: reports |S_h(1) - g0|,
// the distance of S_h from multiplication by g0 (when g0 is nonnegative),
// and the pairing <S_h(1), 1> (1 in exact arithmetic).
struct MultiplicationReport {
  long long horizon = 0;
  double s_one_defect = 0.0;
  double multiplication_defect = 0.0; // meaningful when g0_nonnegative
  bool g0_nonnegative = false;
  cxd s_one_pairing{0.0, 0.0};
};
MultiplicationReport verify_S1_eq_g0(const OrbitOperator& t, long long horizon);

// Pair (S^{1/2} U* e_n, S^{-1/2} U* e_n): its correction sequence must equal
// the orbit T^n g0, and the pair must be effective.
struct BackwardPairReport {
  long long horizon = 0;
  double orbit_gap = 0.0; // max_n |aux_n - T^n g0|
  EffectivenessReport effectiveness;
};
BackwardPairReport verify_genbackward(const GenbackwardBundle& bundle,
                                      long long horizon, int trials = 5,
                                      double tolerance = 1e-6,
                                      std::uint64_t seed = kDefaultSeed);

// In H' (the renorming of H by S):
//   (a) the orbit {T^n g0} is Parseval,
//   (b) it is the classic correction sequence of {W^n g0},
//       W = S^{1/2} U* M_e U S^{-1/2},
//   (c) W is H-unitary exactly when U S U* commutes with multiplication by
//       e^{-2pi i x}; both defects are reported and their zero/nonzero
//       status compared at kStatusZeroTolerance.
struct RenormingReport {
  long long horizon = 0;
  double parseval_defect = 0.0;  // |S'_h - I| in H'
  double auxiliary_gap = 0.0;    // max_n |aux'_n - T^n g0| in H'
  double unitarity_defect = 0.0; // |W*W - I| in H
  double commutator_norm = 0.0;  // |[U S U*, M_{e^{-2pi i x}}]| in H
  bool equivalence_agrees = false;
};
RenormingReport verify_kaczmarzclass(const GenbackwardBundle& bundle,
                                     long long horizon);

// Orbit x_n = M^n (S^{-1/2} U* 1) with M = S^{-1/2} U* M_e U S^{1/2},
// the expansion f = sum_n <f, T^n g0> x_n on random unit vectors, and the
// partial sums B(M) = sum_{n<=M} |<S^{1/2} U* 1, x_n>|^2, which grow
// linearly for atomic measures instead of converging (the orbit is not a
// Bessel sequence).
struct DualOrbitResult {
  FrameSequence orbit;
  std::vector<double> growth; // B(0..horizon)
  double reconstruction_residual = 0.0;
  long long horizon = 0;
  int trials = 0;
  std::uint64_t seed = 0;
};
DualOrbitResult dextrodual_orbit(const GenbackwardBundle& bundle,
                                 long long horizon, int trials = 5,
                                 std::uint64_t seed = kDefaultSeed);

} // namespace framelab
