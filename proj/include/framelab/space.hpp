#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>

#include "framelab/error.hpp"

namespace framelab {

using cxd = std::complex<double>;

class SpaceDesc;
using SpacePtr = std::shared_ptr<const SpaceDesc>;

// Finite-dimensional complex Hilbert space: C^dim equipped with a Hermitian
// positive definite metric M. The inner product is
//
//     <u, v> = v^H M u      (linear in u, conjugate-linear in v),
//
// matching <f, g> = integral f conj(g) dmu for coordinate realizations of
// L^2(mu). Frozen after construction; the Cholesky whitener M = W^H W is
// cached so norms, adjoints and eigenproblems reduce to Euclidean ones.
class SpaceDesc {
public:
  // Validates hermiticity (relative 1e-12) and positive definiteness
  // (eigenvalue floor 1e-12 relative to the largest).
  static SpacePtr make(Eigen::MatrixXcd metric);
  static SpacePtr euclidean(Eigen::Index dim);
  static SpacePtr diagonal(const Eigen::VectorXd& masses); // masses > 0

  Eigen::Index dim() const { return dim_; }
  const Eigen::MatrixXcd& metric() const { return metric_; }
  bool diagonalMetric() const { return diagonal_; }

  // Whitened coordinates: whiten(v) = W v with M = W^H W, so that
  // <u,v> = euclidean(whiten u, whiten v).
  Eigen::VectorXcd whiten(const Eigen::VectorXcd& v) const;
  Eigen::VectorXcd unwhiten(const Eigen::VectorXcd& v) const;
  // Conjugate an operator matrix into whitened coordinates: W A W^{-1}.
  Eigen::MatrixXcd whitenOperatorFrom(const Eigen::MatrixXcd& a,
                                      const SpaceDesc& domain) const;

  const Eigen::MatrixXcd& whitener() const { return w_; }
  const Eigen::MatrixXcd& whitenerInverse() const { return winv_; }

private:
  SpaceDesc() = default;
  Eigen::Index dim_ = 0;
  Eigen::MatrixXcd metric_;
  Eigen::MatrixXcd w_;     // upper triangular, M = w^H w
  Eigen::MatrixXcd winv_;
  bool diagonal_ = false;
};

struct Vector {
  Eigen::VectorXcd coords;
  SpacePtr space;
};

// Linear map between metric spaces, stored as a plain coordinate matrix.
struct LinearMap {
  Eigen::MatrixXcd matrix;
  SpacePtr domain;
  SpacePtr codomain;
};

bool same_space(const SpacePtr& a, const SpacePtr& b);

Vector make_vector(Eigen::VectorXcd coords, SpacePtr space);
Vector ones_vector(const SpacePtr& space);

// <u,v> = v^H M u. Raw overloads skip the Vector wrapper for hot loops.
cxd inner(const Vector& u, const Vector& v);
cxd inner_raw(const SpaceDesc& s, const Eigen::VectorXcd& u,
              const Eigen::VectorXcd& v);
double norm(const Vector& v);
double norm_raw(const SpaceDesc& s, const Eigen::VectorXcd& v);

LinearMap identity_map(const SpacePtr& s);
Vector apply(const LinearMap& a, const Vector& v);
LinearMap compose(const LinearMap& a, const LinearMap& b); // a after b
LinearMap map_inverse(const LinearMap& a);

// Metric adjoint: A* = M_dom^{-1} A^H M_cod, the unique map with
// <A u, v>_cod = <u, A* v>_dom.
LinearMap adjoint(const LinearMap& a);

// Largest singular value with respect to the domain/codomain metrics.
double operator_norm(const LinearMap& a);

// Principal square root of a self-adjoint positive definite map (self-adjoint
// with respect to the space metric). Errors name the offending eigenvalue or
// the hermiticity defect.
LinearMap sqrt_spd(const LinearMap& a);

// H' carries <f,g>_{H'} = <S^{-1/2} f, S^{-1/2} g>_H; returns the space with
// metric (S^{-1/2})^H M S^{-1/2} over the same coordinates.
SpacePtr renormed_space(const SpacePtr& s, const LinearMap& sqrt_inverse_of);

// Deterministic Hermitian eigendecomposition: eigenvalues ascending,
// eigenvector phase fixed so the first component of modulus > 1e-8 * colmax
// is real positive. Operates on a plain Hermitian matrix (callers whiten).
struct Eigensystem {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
};
Eigensystem hermitian_eigensystem(const Eigen::MatrixXcd& h);

// Eigendecomposition of a self-adjoint map with respect to its space metric.
// Returned vectors are metric-orthonormal columns in original coordinates.
Eigensystem selfadjoint_eigensystem(const LinearMap& a);

// Rank-one map f -> <f, v> u.
LinearMap rank_one(const Vector& u, const Vector& v);

} // namespace framelab
