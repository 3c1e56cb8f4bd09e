#include "framelab/space.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace framelab {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::not_hermitian: return "not_hermitian";
    case ErrorCode::not_positive_definite: return "not_positive_definite";
    case ErrorCode::not_self_adjoint: return "not_self_adjoint";
    case ErrorCode::not_unit_vector: return "not_unit_vector";
    case ErrorCode::not_normalized_pair: return "not_normalized_pair";
    case ErrorCode::not_a_frame: return "not_a_frame";
    case ErrorCode::not_invertible: return "not_invertible";
    case ErrorCode::ill_conditioned: return "ill_conditioned";
    case ErrorCode::zero_row: return "zero_row";
    case ErrorCode::bad_measure: return "bad_measure";
    case ErrorCode::bad_weight: return "bad_weight";
    case ErrorCode::bad_argument: return "bad_argument";
    case ErrorCode::io_failure: return "io_failure";
    case ErrorCode::parse_failure: return "parse_failure";
  }
  return "unknown";
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

} // namespace

SpacePtr SpaceDesc::make(Eigen::MatrixXcd metric) {
  if (metric.rows() == 0 || metric.rows() != metric.cols())
    throw Error(ErrorCode::bad_argument,
                "metric must be a nonempty square matrix, got " +
                    std::to_string(metric.rows()) + "x" +
                    std::to_string(metric.cols()));
  const double scale = metric.norm();
  if (!(scale > 0) || !std::isfinite(scale))
    throw Error(ErrorCode::bad_argument, "metric has non-finite or zero norm");
  const double herm_defect = (metric - metric.adjoint()).norm() / scale;
  if (herm_defect > 1e-12)
    throw Error(ErrorCode::not_hermitian,
                "metric hermiticity defect " + fmt(herm_defect));
  Eigen::MatrixXcd sym = 0.5 * (metric + metric.adjoint().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym,
                                                     Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 1e-12 * lmax))
    throw Error(ErrorCode::not_positive_definite,
                "metric eigenvalue " + fmt(lmin) + " below floor (max " +
                    fmt(lmax) + ")");

  auto s = std::shared_ptr<SpaceDesc>(new SpaceDesc());
  s->dim_ = sym.rows();
  s->metric_ = sym;
  s->diagonal_ = true;
  for (Eigen::Index i = 0; i < sym.rows() && s->diagonal_; ++i)
    for (Eigen::Index j = 0; j < sym.cols(); ++j)
      if (i != j && std::abs(sym(i, j)) > 1e-15 * lmax) {
        s->diagonal_ = false;
        break;
      }
  if (s->diagonal_) {
    Eigen::VectorXd d = sym.diagonal().real();
    s->w_ = d.cwiseSqrt().cast<cxd>().asDiagonal();
    s->winv_ = d.cwiseSqrt().cwiseInverse().cast<cxd>().asDiagonal();
  } else {
    Eigen::LLT<Eigen::MatrixXcd> llt(sym);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::not_positive_definite,
                  "metric Cholesky factorization failed");
    s->w_ = llt.matrixL().adjoint(); // upper triangular, M = w^H w
    s->winv_ = s->w_.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXcd::Identity(s->dim_, s->dim_));
  }
  return s;
}

SpacePtr SpaceDesc::euclidean(Eigen::Index dim) {
  if (dim <= 0)
    throw Error(ErrorCode::bad_argument,
                "space dimension must be positive, got " + std::to_string(dim));
  return make(Eigen::MatrixXcd::Identity(dim, dim));
}

SpacePtr SpaceDesc::diagonal(const Eigen::VectorXd& masses) {
  if (masses.size() == 0)
    throw Error(ErrorCode::bad_argument, "empty mass vector");
  for (Eigen::Index i = 0; i < masses.size(); ++i)
    if (!(masses[i] > 0) || !std::isfinite(masses[i]))
      throw Error(ErrorCode::not_positive_definite,
                  "mass at index " + std::to_string(i) + " is " +
                      fmt(masses[i]) + ", must be positive");
  // Diagonal metrics skip the generic validation eigensolve; positivity of
  // the masses already settles definiteness.
  auto s = std::shared_ptr<SpaceDesc>(new SpaceDesc());
  s->dim_ = masses.size();
  s->metric_ = masses.cast<cxd>().asDiagonal();
  s->diagonal_ = true;
  s->w_ = masses.cwiseSqrt().cast<cxd>().asDiagonal();
  s->winv_ = masses.cwiseSqrt().cwiseInverse().cast<cxd>().asDiagonal();
  return s;
}

Eigen::VectorXcd SpaceDesc::whiten(const Eigen::VectorXcd& v) const {
  return w_ * v;
}

Eigen::VectorXcd SpaceDesc::unwhiten(const Eigen::VectorXcd& v) const {
  return winv_ * v;
}

Eigen::MatrixXcd SpaceDesc::whitenOperatorFrom(const Eigen::MatrixXcd& a,
                                               const SpaceDesc& domain) const {
  return w_ * a * domain.winv_;
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->dim() != b->dim()) return false;
  return (a->metric() - b->metric()).norm() <=
         1e-12 * std::max(1.0, a->metric().norm());
}

static void require_same(const SpacePtr& a, const SpacePtr& b,
                         const char* ctx) {
  if (!same_space(a, b))
    throw Error(ErrorCode::dimension_mismatch,
                std::string(ctx) + ": vectors/maps belong to different spaces" +
                    (a && b ? " (dims " + std::to_string(a->dim()) + " vs " +
                                  std::to_string(b->dim()) + ")"
                            : ""));
}

Vector make_vector(Eigen::VectorXcd coords, SpacePtr space) {
  if (!space) throw Error(ErrorCode::bad_argument, "null space");
  if (coords.size() != space->dim())
    throw Error(ErrorCode::dimension_mismatch,
                "coordinate length " + std::to_string(coords.size()) +
                    " != space dim " + std::to_string(space->dim()));
  return Vector{std::move(coords), std::move(space)};
}

Vector ones_vector(const SpacePtr& space) {
  if (!space) throw Error(ErrorCode::bad_argument, "null space");
  return Vector{Eigen::VectorXcd::Ones(space->dim()), space};
}

cxd inner_raw(const SpaceDesc& s, const Eigen::VectorXcd& u,
              const Eigen::VectorXcd& v) {
  if (u.size() != s.dim() || v.size() != s.dim())
    throw Error(ErrorCode::dimension_mismatch,
                "inner: got " + std::to_string(u.size()) + ", " +
                    std::to_string(v.size()) + " in dim " +
                    std::to_string(s.dim()));
  if (s.diagonalMetric())
    return v.dot(s.metric().diagonal().cwiseProduct(u));
  return (v.adjoint() * s.metric() * u)(0, 0);
}

cxd inner(const Vector& u, const Vector& v) {
  require_same(u.space, v.space, "inner");
  return inner_raw(*u.space, u.coords, v.coords);
}

double norm_raw(const SpaceDesc& s, const Eigen::VectorXcd& v) {
  return std::sqrt(std::max(0.0, inner_raw(s, v, v).real()));
}

double norm(const Vector& v) {
  if (!v.space) throw Error(ErrorCode::bad_argument, "vector without space");
  return norm_raw(*v.space, v.coords);
}

LinearMap identity_map(const SpacePtr& s) {
  if (!s) throw Error(ErrorCode::bad_argument, "null space");
  return LinearMap{Eigen::MatrixXcd::Identity(s->dim(), s->dim()), s, s};
}

Vector apply(const LinearMap& a, const Vector& v) {
  require_same(a.domain, v.space, "apply");
  return Vector{a.matrix * v.coords, a.codomain};
}

LinearMap compose(const LinearMap& a, const LinearMap& b) {
  require_same(a.domain, b.codomain, "compose");
  return LinearMap{a.matrix * b.matrix, b.domain, a.codomain};
}

LinearMap map_inverse(const LinearMap& a) {
  if (a.matrix.rows() != a.matrix.cols())
    throw Error(ErrorCode::not_invertible, "non-square map");
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(a.matrix);
  if (!lu.isInvertible())
    throw Error(ErrorCode::not_invertible, "map is numerically singular");
  return LinearMap{lu.inverse(), a.codomain, a.domain};
}

LinearMap adjoint(const LinearMap& a) {
  // <A u, v>_cod = <u, A* v>_dom  =>  A* = M_dom^{-1} A^H M_cod.
  const Eigen::MatrixXcd ah = a.matrix.adjoint() * a.codomain->metric();
  Eigen::MatrixXcd astar;
  if (a.domain->diagonalMetric()) {
    astar = a.domain->metric().diagonal().real().cwiseInverse().asDiagonal() *
            ah;
  } else {
    astar = a.domain->metric().ldlt().solve(ah);
  }
  return LinearMap{std::move(astar), a.codomain, a.domain};
}

double operator_norm(const LinearMap& a) {
  const Eigen::MatrixXcd ahat =
      a.codomain->whitenOperatorFrom(a.matrix, *a.domain);
  if (ahat.rows() <= 64 && ahat.cols() <= 64) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ahat);
    return svd.singularValues()(0);
  }
  // Largest eigenvalue of ahat^H ahat; cheaper than full SVD at desk scale.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ahat.adjoint() * ahat,
                                                     Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Eigensystem hermitian_eigensystem(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::bad_argument, "eigensolver failed to converge");
  Eigensystem sys{es.eigenvalues(), es.eigenvectors()};
  // Deterministic phase: first component with modulus > 1e-8 * colmax made
  // real positive.
  for (Eigen::Index c = 0; c < sys.vectors.cols(); ++c) {
    const double colmax = sys.vectors.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < sys.vectors.rows(); ++r) {
      const cxd z = sys.vectors(r, c);
      if (std::abs(z) > 1e-8 * colmax) {
        sys.vectors.col(c) *= std::conj(z) / std::abs(z);
        break;
      }
    }
  }
  return sys;
}

static void require_endomorphism(const LinearMap& a, const char* ctx) {
  require_same(a.domain, a.codomain, ctx);
}

Eigensystem selfadjoint_eigensystem(const LinearMap& a) {
  require_endomorphism(a, "selfadjoint_eigensystem");
  const SpaceDesc& s = *a.domain;
  const Eigen::MatrixXcd ahat = s.whitenOperatorFrom(a.matrix, s);
  const double scale = std::max(1e-300, ahat.norm());
  const double defect = (ahat - ahat.adjoint()).norm() / scale;
  if (defect > 1e-8)
    throw Error(ErrorCode::not_self_adjoint,
                "self-adjointness defect " + fmt(defect));
  Eigensystem sys =
      hermitian_eigensystem(0.5 * (ahat + ahat.adjoint().eval()));
  sys.vectors = s.whitenerInverse() * sys.vectors;
  return sys;
}

LinearMap sqrt_spd(const LinearMap& a) {
  require_endomorphism(a, "sqrt_spd");
  const SpaceDesc& s = *a.domain;
  const Eigen::MatrixXcd ahat = s.whitenOperatorFrom(a.matrix, s);
  const double scale = std::max(1e-300, ahat.norm());
  const double defect = (ahat - ahat.adjoint()).norm() / scale;
  if (defect > 1e-8)
    throw Error(ErrorCode::not_self_adjoint,
                "sqrt_spd: self-adjointness defect " + fmt(defect));
  Eigensystem sys =
      hermitian_eigensystem(0.5 * (ahat + ahat.adjoint().eval()));
  const double lmax = sys.values.maxCoeff();
  for (Eigen::Index i = 0; i < sys.values.size(); ++i)
    if (!(sys.values[i] > 1e-12 * std::max(lmax, 0.0)))
      throw Error(ErrorCode::not_positive_definite,
                  "sqrt_spd: eigenvalue " + fmt(sys.values[i]) +
                      " at index " + std::to_string(i) + " not positive");
  Eigen::MatrixXcd root_hat = sys.vectors *
                              sys.values.cwiseSqrt().asDiagonal() *
                              sys.vectors.adjoint();
  return LinearMap{s.whitenerInverse() * root_hat * s.whitener(), a.domain,
                   a.codomain};
}

SpacePtr renormed_space(const SpacePtr& s, const LinearMap& smap) {
  if (!s) throw Error(ErrorCode::bad_argument, "null space");
  require_same(smap.domain, s, "renormed_space");
  require_endomorphism(smap, "renormed_space");
  const LinearMap root = sqrt_spd(smap);
  const LinearMap root_inv = map_inverse(root);
  Eigen::MatrixXcd mprime =
      root_inv.matrix.adjoint() * s->metric() * root_inv.matrix;
  return SpaceDesc::make(0.5 * (mprime + mprime.adjoint().eval()));
}

LinearMap rank_one(const Vector& u, const Vector& v) {
  if (!u.space || !v.space)
    throw Error(ErrorCode::bad_argument, "rank_one: vector without space");
  // f -> <f, v> u, i.e. u (v^H M_dom).
  Eigen::MatrixXcd m =
      u.coords * (v.coords.adjoint() * v.space->metric());
  return LinearMap{std::move(m), v.space, u.space};
}

} // namespace framelab
