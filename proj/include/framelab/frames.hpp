#pragma once

#include <optional>
#include <vector>

#include "framelab/kaczmarz.hpp"
#include "framelab/space.hpp"

namespace framelab {

// Vector sequence analyzed as a (possibly truncated) frame: an explicit
// finite list, a lazily realized stream, the orbit {T^n seed}_{n>=0}, or a
// realized correction sequence. Realized terms are cached.
class FrameSequence {
public:
  static FrameSequence fromList(std::vector<Vector> vectors);
  static FrameSequence fromStream(VectorStream stream, SpacePtr space);
  static FrameSequence fromOrbit(const LinearMap& op, const Vector& seed);
  static FrameSequence fromAuxiliary(const AuxiliarySequence& aux);

  const SpacePtr& space() const { return space_; }
  bool finite() const { return limit_ >= 0; }
  long long size() const; // finite sequences only
  const Eigen::VectorXcd& at(long long n) const;
  // Number of leading terms a horizon-h computation actually uses.
  long long clamp(long long horizon) const;

private:
  FrameSequence() = default;
  SpacePtr space_;
  long long limit_ = -1; // -1: unbounded
  VectorStream stream_;  // unset for orbits and lists
  Eigen::MatrixXcd op_;  // orbit case
  bool orbit_ = false;
  mutable std::vector<Eigen::VectorXcd> cache_;
};

// Truncated frame operator S_h f = sum_{n<h} <f, g_n> g_n; self-adjoint
// positive semidefinite at every horizon.
LinearMap frame_operator(const FrameSequence& fs, long long horizon);

struct FrameReport {
  double lower = 0;  // A: smallest eigenvalue of the truncated frame operator
  double upper = 0;  // B: largest
  long long horizon = 0;
  // Largest relative drift of (A, B) across the last horizon doubling;
  // bounds count as stabilized below 1e-3.
  double tail_indicator = 0;
  bool stable = false;
  bool frame = false;            // A above the 1e-10 floor and B stabilized
  bool bessel = false;           // B stabilized (always true for finite lists)
  bool lower_semi_frame = false; // A above floor regardless of B's drift
  bool tight = false;            // B - A <= 2e-6 B, given frame
  bool parseval = false;         // |A-1|, |B-1| <= 1e-6, given frame
  // Finite explicit lists only: linearly independent spanning system.
  std::optional<bool> riesz_basis_finite;
  // Finite spanning lists only: #vectors - dim.
  std::optional<long long> excess;
};

// Bounds and classification at the horizon, with the tail indicator from
// comparing against the half horizon. Horizon below dim is refused.
FrameReport frame_bounds(const FrameSequence& fs, long long horizon);

// Doubles the horizon from `initial` until (A, B) move less than rel_change
// across a doubling or `cap` is hit; returns the reached horizon.
long long stabilized_horizon(const FrameSequence& fs, long long initial,
                             long long cap, double rel_change = 1e-3);

// Canonical dual {S_h^{-1} g_n} built from the horizon-h frame operator.
// Errors with not_a_frame when the lower bound sits at the 1e-10 floor.
FrameSequence canonical_dual(const FrameSequence& fs, long long horizon);

// #vectors - dim for a finite spanning family (the synthesis kernel
// dimension); non-spanning lists are refused.
long long excess_finite(const std::vector<Vector>& vectors, const SpacePtr& s);

// G[n,k] = <g_n, g_k>, Hermitian positive semidefinite.
Eigen::MatrixXcd gram_matrix(const FrameSequence& fs, long long horizon);

} // namespace framelab
