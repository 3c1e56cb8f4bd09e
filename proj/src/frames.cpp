#include "framelab/frames.hpp"

#include <cmath>

namespace framelab {

namespace {
constexpr double kLowerFloor = 1e-10;
constexpr double kStableDrift = 1e-3;
} // namespace

FrameSequence FrameSequence::fromList(std::vector<Vector> vectors) {
  if (vectors.empty())
    throw Error(ErrorCode::bad_argument, "empty vector list");
  FrameSequence fs;
  fs.space_ = vectors.front().space;
  fs.limit_ = static_cast<long long>(vectors.size());
  for (auto& v : vectors) {
    if (!same_space(v.space, fs.space_))
      throw Error(ErrorCode::dimension_mismatch,
                  "list vectors live in different spaces");
    fs.cache_.push_back(std::move(v.coords));
  }
  return fs;
}

FrameSequence FrameSequence::fromStream(VectorStream stream, SpacePtr space) {
  if (!space) throw Error(ErrorCode::bad_argument, "null space");
  FrameSequence fs;
  fs.space_ = std::move(space);
  fs.stream_ = std::move(stream);
  return fs;
}

FrameSequence FrameSequence::fromOrbit(const LinearMap& op,
                                       const Vector& seed) {
  if (!same_space(op.domain, op.codomain) || !same_space(op.domain, seed.space))
    throw Error(ErrorCode::dimension_mismatch,
                "orbit needs an endomorphism and a seed of its space");
  FrameSequence fs;
  fs.space_ = seed.space;
  fs.op_ = op.matrix;
  fs.orbit_ = true;
  fs.cache_.push_back(seed.coords);
  return fs;
}

FrameSequence FrameSequence::fromAuxiliary(const AuxiliarySequence& aux) {
  if (!aux.space || aux.terms.empty())
    throw Error(ErrorCode::bad_argument, "unrealized correction sequence");
  FrameSequence fs;
  fs.space_ = aux.space;
  fs.limit_ = aux.count();
  fs.cache_ = aux.terms;
  return fs;
}

long long FrameSequence::size() const {
  if (limit_ < 0)
    throw Error(ErrorCode::bad_argument, "sequence is not finite");
  return limit_;
}

long long FrameSequence::clamp(long long horizon) const {
  return limit_ >= 0 ? std::min(horizon, limit_) : horizon;
}

const Eigen::VectorXcd& FrameSequence::at(long long n) const {
  if (n < 0 || (limit_ >= 0 && n >= limit_))
    throw Error(ErrorCode::bad_argument,
                "term " + std::to_string(n) + " outside the sequence");
  while (static_cast<long long>(cache_.size()) <= n) {
    if (orbit_) {
      cache_.push_back(op_ * cache_.back());
    } else {
      Vector v = stream_(static_cast<long long>(cache_.size()));
      if (!same_space(v.space, space_))
        throw Error(ErrorCode::dimension_mismatch,
                    "stream term lies in a different space");
      cache_.push_back(std::move(v.coords));
    }
  }
  return cache_[static_cast<std::size_t>(n)];
}

LinearMap frame_operator(const FrameSequence& fs, long long horizon) {
  if (horizon < 1)
    throw Error(ErrorCode::bad_argument, "horizon must be >= 1");
  const SpacePtr& s = fs.space();
  const long long h = fs.clamp(horizon);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(s->dim(), s->dim());
  for (long long n = 0; n < h; ++n) {
    const Eigen::VectorXcd& g = fs.at(n);
    acc.noalias() += g * (g.adjoint() * s->metric());
  }
  return LinearMap{std::move(acc), s, s};
}

namespace {

std::pair<double, double> operator_bounds(const LinearMap& op) {
  Eigensystem sys = selfadjoint_eigensystem(op);
  return {std::max(0.0, sys.values.minCoeff()), sys.values.maxCoeff()};
}

} // namespace

FrameReport frame_bounds(const FrameSequence& fs, long long horizon) {
  const Eigen::Index dim = fs.space()->dim();
  if (horizon < dim)
    throw Error(ErrorCode::bad_argument,
                "horizon " + std::to_string(horizon) + " below dimension " +
                    std::to_string(dim) + ", bounds are meaningless");
  FrameReport rep;
  rep.horizon = horizon;
  auto [a, b] = operator_bounds(frame_operator(fs, horizon));
  rep.lower = a;
  rep.upper = b;

  const long long half = std::max<long long>(1, horizon / 2);
  auto [a2, b2] = operator_bounds(frame_operator(fs, half));
  const double drift_a = std::abs(a - a2) / std::max(a, 1e-300);
  const double drift_b = std::abs(b - b2) / std::max(b, 1e-300);
  rep.tail_indicator = std::max(drift_a, drift_b);
  rep.stable = rep.tail_indicator < kStableDrift;

  rep.lower_semi_frame = rep.lower > kLowerFloor;
  rep.bessel = fs.finite() || drift_b < kStableDrift;
  rep.frame = rep.lower_semi_frame && rep.bessel;
  rep.tight = rep.frame && (rep.upper - rep.lower) <= 2e-6 * rep.upper;
  rep.parseval = rep.frame && std::abs(rep.lower - 1.0) <= 1e-6 &&
                 std::abs(rep.upper - 1.0) <= 1e-6;

  if (fs.finite() && fs.size() <= horizon) {
    const long long n = fs.size();
    if (rep.lower > kLowerFloor) rep.excess = n - dim;
    rep.riesz_basis_finite = (n == dim) && rep.lower > kLowerFloor;
  }
  return rep;
}

long long stabilized_horizon(const FrameSequence& fs, long long initial,
                             long long cap, double rel_change) {
  if (initial < 1 || cap < initial)
    throw Error(ErrorCode::bad_argument, "need 1 <= initial <= cap");
  long long h = std::max<long long>(initial, 2);
  auto [pa, pb] = operator_bounds(frame_operator(fs, h / 2));
  for (;;) {
    auto [a, b] = operator_bounds(frame_operator(fs, h));
    const double drift =
        std::max(std::abs(a - pa) / std::max(a, 1e-300),
                 std::abs(b - pb) / std::max(b, 1e-300));
    if (drift < rel_change || h >= cap || (fs.finite() && h >= fs.size()))
      return h;
    pa = a;
    pb = b;
    h = std::min(cap, 2 * h);
  }
}

FrameSequence canonical_dual(const FrameSequence& fs, long long horizon) {
  LinearMap s_h = frame_operator(fs, horizon);
  auto [a, b] = operator_bounds(s_h);
  if (a <= kLowerFloor)
    throw Error(ErrorCode::not_a_frame,
                "lower bound " + std::to_string(a) + " at horizon " +
                    std::to_string(horizon));
  LinearMap inv = map_inverse(s_h);
  if (fs.finite()) {
    std::vector<Vector> dual;
    const long long n = fs.size();
    dual.reserve(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k)
      dual.push_back(Vector{inv.matrix * fs.at(k), fs.space()});
    return FrameSequence::fromList(std::move(dual));
  }
  // Lazy dual of an unbounded sequence; shares the source's cache.
  auto source = std::make_shared<FrameSequence>(fs);
  auto mat = std::make_shared<Eigen::MatrixXcd>(std::move(inv.matrix));
  SpacePtr space = fs.space();
  return FrameSequence::fromStream(
      [source, mat, space](long long n) {
        return Vector{(*mat) * source->at(n), space};
      },
      space);
}

long long excess_finite(const std::vector<Vector>& vectors,
                        const SpacePtr& s) {
  if (!s) throw Error(ErrorCode::bad_argument, "null space");
  if (vectors.empty())
    throw Error(ErrorCode::not_a_frame, "empty family cannot span");
  Eigen::MatrixXcd synth(s->dim(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (!same_space(vectors[k].space, s))
      throw Error(ErrorCode::dimension_mismatch,
                  "vector " + std::to_string(k) + " lies in a different space");
    synth.col(static_cast<Eigen::Index>(k)) = vectors[k].coords;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(synth);
  const auto& sv = svd.singularValues();
  const double floor = 1e-10 * sv(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > floor) ++rank;
  if (rank < s->dim())
    throw Error(ErrorCode::not_a_frame,
                "family has rank " + std::to_string(rank) + " in dimension " +
                    std::to_string(s->dim()));
  return static_cast<long long>(vectors.size()) - s->dim();
}

Eigen::MatrixXcd gram_matrix(const FrameSequence& fs, long long horizon) {
  if (horizon < 1)
    throw Error(ErrorCode::bad_argument, "horizon must be >= 1");
  const long long h = fs.clamp(horizon);
  const SpaceDesc& s = *fs.space();
  Eigen::MatrixXcd g(h, h);
  for (long long n = 0; n < h; ++n)
    for (long long k = 0; k <= n; ++k) {
      const cxd v = inner_raw(s, fs.at(n), fs.at(k));
      g(n, k) = v;
      g(k, n) = std::conj(v);
    }
  return g;
}

} // namespace framelab
