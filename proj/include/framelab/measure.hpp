#pragma once

#include <string>
#include <utility>
#include <vector>

#include "framelab/space.hpp"

namespace framelab {

// Finite Borel measure on [0,1) in computable form. Atomic measures carry
// finitely many point masses (genuinely singular with respect to Lebesgue
// measure, and realized without truncation error), grid measures a
// piecewise-constant density on K uniform cells, and mixtures the sum of two
// parts realized block-diagonally.
class MeasureSpec {
public:
  enum class Kind { atomic, grid, mixture };

  // Atoms are (position, mass) with positions pairwise distinct in [0,1) and
  // masses strictly positive; stored sorted ascending by position.
  static MeasureSpec atomic(std::vector<std::pair<double, double>> atoms);
  // Cell values >= 0, at least one positive; cell k covers [k/K, (k+1)/K).
  static MeasureSpec grid(std::vector<double> weight);
  static MeasureSpec mixture(MeasureSpec a, MeasureSpec b);

  Kind kind() const { return kind_; }
  const std::vector<std::pair<double, double>>& atoms() const;
  const std::vector<double>& weight() const;
  const MeasureSpec& component(int i) const; // mixture halves, i in {0,1}

private:
  MeasureSpec() = default;
  Kind kind_ = Kind::atomic;
  std::vector<std::pair<double, double>> atoms_;
  std::vector<double> weight_;
  std::vector<MeasureSpec> components_;
};

double total_mass(const MeasureSpec& m);
bool is_probability(const MeasureSpec& m, double tol = 1e-12);

// Dimension of the coordinate realization of L^2(mu): #atoms, K, or the sum
// over mixture components.
Eigen::Index space_dim(const MeasureSpec& m);

// L^2(mu) as a metric space: diagonal metric of atom masses (atomic),
// cell masses weight_k / K (grid), or their block concatenation (mixture).
// Grid cells of weight zero are rejected here (the quotient space drops
// them); dense realizations are capped at dimension 2048.
SpacePtr space_of(const MeasureSpec& m);

// Coordinates of e^{2*pi*i*n*x} in the realization. Atomic coordinates are
// exact point values; grid coordinates are exact cell averages, so inner
// products against piecewise-constant functions match integrals exactly.
Eigen::VectorXcd exp_coords(const MeasureSpec& m, long long n);

struct ExponentialVector {
  long long frequency;
  Vector realization;
};
ExponentialVector exp_vector(const MeasureSpec& m, long long n);
// Overload reusing an already-built space (streams call this in loops).
ExponentialVector exp_vector(const MeasureSpec& m, long long n, SpacePtr s);

// Fourier coefficient mu^(n) = integral of e^{-2*pi*i*n*x} dmu, computed in
// closed form (works for measures whose grid has zero-mass cells too).
cxd fourier_coefficient(const MeasureSpec& m, long long n);

// Level-th middle-thirds iterate: 2^level equal atoms at the left endpoints
// of the surviving intervals, masses 2^{-level}. Level capped at 12
// (4096 atoms).
MeasureSpec cantor_iterate(int level);

// Serialization to/from a JSON document:
//   {"kind":"atomic","atoms":[[x,p],...]}
//   {"kind":"grid","weight":[w0,...]}
//   {"kind":"mixture","components":[A,B]}
// Round-trips exactly (shortest-round-trip decimal doubles).
MeasureSpec parse_measure(const std::string& text);
std::string measure_to_text(const MeasureSpec& m);

} // namespace framelab
