#include "framelab/orbits.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "framelab/error.hpp"

namespace framelab {

namespace {

void require_atomic(const MeasureSpec& m, const char* who) {
  if (m.kind() != MeasureSpec::Kind::atomic)
    throw Error(ErrorCode::bad_measure,
                std::string(who) + ": atomic measure required");
}

void require_probability(const MeasureSpec& m, const char* who) {
  if (!is_probability(m, 1e-9))
    throw Error(ErrorCode::bad_measure,
                std::string(who) + ": probability measure required, total mass " +
                    std::to_string(total_mass(m)));
}

void require_space(const SpacePtr& got, const SpacePtr& want, const char* who) {
  if (!same_space(got, want))
    throw Error(ErrorCode::dimension_mismatch,
                std::string(who) + ": operand does not live on the realization "
                                   "of the measure");
}

Eigen::VectorXd atom_masses(const MeasureSpec& m) {
  const auto& atoms = m.atoms();
  Eigen::VectorXd w(static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t j = 0; j < atoms.size(); ++j)
    w(static_cast<Eigen::Index>(j)) = atoms[j].second;
  return w;
}

// r_k = m_k e^{2pi i x_k}, so that <f, e_{-1}> = r^T f. Shared by every
// rank-one correction below.
Eigen::VectorXcd coefficient_row(const MeasureSpec& m) {
  return atom_masses(m).cast<cxd>().cwiseProduct(exp_coords(m, 1));
}

// Defect |A*A - I| measured in the metric of `s`.
double isometry_defect(const Eigen::MatrixXcd& a, const SpacePtr& s) {
  LinearMap map{a, s, s};
  Eigen::MatrixXcd gap = adjoint(map).matrix * a;
  gap -= Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  return operator_norm(LinearMap{std::move(gap), s, s});
}

} // namespace

OrbitOperator build_singular_shift(const MeasureSpec& nu) {
  require_atomic(nu, "build_singular_shift");
  require_probability(nu, "build_singular_shift");
  auto h = space_of(nu);
  Eigen::MatrixXcd l = Eigen::MatrixXcd(exp_coords(nu, 1).asDiagonal());
  l.noalias() -= Eigen::MatrixXcd::Ones(h->dim(), 1) *
                 coefficient_row(nu).transpose();
  return OrbitOperator{LinearMap{std::move(l), h, h}, ones_vector(h),
                       OrbitConstruction::singular_shift};
}

GenbackwardBundle build_perturbed_conjugate(const LinearMap& v,
                                            const MeasureSpec& nu) {
  require_atomic(nu, "build_perturbed_conjugate");
  require_probability(nu, "build_perturbed_conjugate");
  auto h = space_of(nu);
  require_space(v.domain, h, "build_perturbed_conjugate");
  require_space(v.codomain, h, "build_perturbed_conjugate");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h->whitenOperatorFrom(v.matrix, *h));
  const auto& sig = svd.singularValues();
  const double smax = sig(0);
  const double smin = sig(sig.size() - 1);
  if (!(smin > 0.0))
    throw Error(ErrorCode::not_invertible,
                "build_perturbed_conjugate: V is singular");
  const double condition = smax / smin;
  if (condition > 1e8)
    throw Error(ErrorCode::ill_conditioned,
                "build_perturbed_conjugate: condition number of V is " +
                    std::to_string(condition));

  LinearMap v_inverse = map_inverse(v);
  const Eigen::MatrixXcd me =
      Eigen::MatrixXcd(exp_coords(nu, 1).asDiagonal());

  // T = V^{-1} M_e V - (V^{-1} 1)(r^T V), the rank-one form. It coincides
  // with the plain similarity V^{-1} L V; assembling the rank-one term
  // explicitly keeps that structure testable.
  Eigen::VectorXcd g0 =
      v_inverse.matrix * Eigen::VectorXcd::Ones(h->dim());
  Eigen::MatrixXcd t = v_inverse.matrix * me * v.matrix;
  t.noalias() -= g0 * (coefficient_row(nu).transpose() * v.matrix);

  LinearMap s = compose(v_inverse, adjoint(v_inverse));
  LinearMap s_half = sqrt_spd(s);
  LinearMap s_neg_half = map_inverse(s_half);
  LinearMap u = compose(v, s_half);
  const double defect = isometry_defect(u.matrix, h);
  if (defect > 1e-6)
    throw Error(ErrorCode::ill_conditioned,
                "build_perturbed_conjugate: U = V S^{1/2} fails the isometry "
                "check with defect " +
                    std::to_string(defect));

  GenbackwardBundle bundle{nu,
                           h,
                           v,
                           std::move(v_inverse),
                           std::move(s),
                           std::move(s_half),
                           std::move(s_neg_half),
                           std::move(u),
                           OrbitOperator{LinearMap{std::move(t), h, h},
                                         make_vector(std::move(g0), h),
                                         OrbitConstruction::perturbed_conjugate},
                           condition,
                           defect};
  return bundle;
}

OrbitOperator build_mainsingular(const MeasureSpec& mu, const Vector& g0) {
  require_atomic(mu, "build_mainsingular");
  auto h = space_of(mu);
  require_space(g0.space, h, "build_mainsingular");
  const cxd pairing = inner(g0, ones_vector(h));
  if (std::abs(pairing - cxd(1.0)) > 1e-9)
    throw Error(ErrorCode::not_normalized_pair,
                "build_mainsingular: <g0, 1> must equal 1, got " +
                    std::to_string(pairing.real()) + " + " +
                    std::to_string(pairing.imag()) + "i");
  Eigen::MatrixXcd t = Eigen::MatrixXcd(exp_coords(mu, 1).asDiagonal());
  t.noalias() -= g0.coords * coefficient_row(mu).transpose();
  return OrbitOperator{LinearMap{std::move(t), h, h},
                       make_vector(g0.coords, h),
                       OrbitConstruction::mainsingular};
}

ProductFormReport verify_prop_exist(const MeasureSpec& mu, const Vector& g0,
                                    long long horizon, int trials,
                                    std::uint64_t seed) {
  require_atomic(mu, "verify_prop_exist");
  require_probability(mu, "verify_prop_exist");
  if (horizon < 0 || trials < 1)
    throw Error(ErrorCode::bad_argument,
                "verify_prop_exist: horizon >= 0 and trials >= 1 required");
  auto h = space_of(mu);
  require_space(g0.space, h, "verify_prop_exist");

  const double scale = std::max(1.0, g0.coords.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < g0.coords.size(); ++j) {
    if (std::abs(g0.coords(j).imag()) > 1e-12 * scale ||
        g0.coords(j).real() <= 1e-12 * scale)
      throw Error(ErrorCode::bad_argument,
                  "verify_prop_exist: g0 must be strictly positive on every "
                  "atom, coordinate " +
                      std::to_string(j) + " is not");
  }

  // Reweighted measure g0 mu; <g0, 1> = 1 makes it a probability measure, so
  // its exponentials are unit vectors and the classic recursion applies.
  const auto& atoms = mu.atoms();
  std::vector<std::pair<double, double>> reweighted(atoms.size());
  for (std::size_t j = 0; j < atoms.size(); ++j)
    reweighted[j] = {atoms[j].first,
                     atoms[j].second *
                         g0.coords(static_cast<Eigen::Index>(j)).real()};
  const MeasureSpec g0mu = MeasureSpec::atomic(std::move(reweighted));
  auto hw = space_of(g0mu);
  const AuxiliarySequence aux =
      auxiliary_sequence(exponential_stream(g0mu, hw), horizon, hw);

  const OrbitOperator t = build_mainsingular(mu, g0);
  const FrameSequence orbit = FrameSequence::fromOrbit(t.map, t.g0);

  ProductFormReport report;
  report.horizon = horizon;
  report.trials = trials;
  report.seed = seed;
  for (long long n = 0; n <= horizon; ++n) {
    const Eigen::VectorXcd product = g0.coords.cwiseProduct(aux.at(n));
    report.construction_gap = std::max(
        report.construction_gap, norm_raw(*h, product - orbit.at(n)));
  }

  // f = sum_{n<=horizon} <f, g_n> e^{2pi i n x} on random unit vectors.
  std::vector<Eigen::VectorXcd> exps(static_cast<std::size_t>(horizon) + 1);
  for (long long n = 0; n <= horizon; ++n)
    exps[static_cast<std::size_t>(n)] = exp_coords(mu, n);
  std::mt19937_64 gen(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::VectorXcd f = random_unit_vector(*h, gen);
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(h->dim());
    for (long long n = 0; n <= horizon; ++n)
      sum += inner_raw(*h, f, orbit.at(n)) * exps[static_cast<std::size_t>(n)];
    report.reconstruction_residual =
        std::max(report.reconstruction_residual, norm_raw(*h, f - sum));
  }
  return report;
}

MultiplicationReport verify_S1_eq_g0(const OrbitOperator& t,
                                     long long horizon) {
  auto h = t.map.domain;
  const FrameSequence orbit = FrameSequence::fromOrbit(t.map, t.g0);
  const LinearMap s_h = frame_operator(orbit, horizon);
  const Vector one = ones_vector(h);
  const Eigen::VectorXcd s_one = s_h.matrix * one.coords;

  MultiplicationReport report;
  report.horizon = horizon;
  report.s_one_defect = norm_raw(*h, s_one - t.g0.coords);
  report.s_one_pairing = inner_raw(*h, s_one, one.coords);

  const double scale = std::max(1.0, t.g0.coords.cwiseAbs().maxCoeff());
  report.g0_nonnegative = true;
  for (Eigen::Index j = 0; j < t.g0.coords.size(); ++j) {
    if (std::abs(t.g0.coords(j).imag()) > 1e-12 * scale ||
        t.g0.coords(j).real() < -1e-12 * scale)
      report.g0_nonnegative = false;
  }
  if (report.g0_nonnegative) {
    Eigen::MatrixXcd gap = s_h.matrix;
    gap -= Eigen::MatrixXcd(t.g0.coords.real().cast<cxd>().asDiagonal());
    report.multiplication_defect =
        operator_norm(LinearMap{std::move(gap), h, h});
  }
  return report;
}

BackwardPairReport verify_genbackward(const GenbackwardBundle& bundle,
                                      long long horizon, int trials,
                                      double tolerance, std::uint64_t seed) {
  if (horizon < 0 || trials < 1)
    throw Error(ErrorCode::bad_argument,
                "verify_genbackward: horizon >= 0 and trials >= 1 required");
  auto h = bundle.space;
  const LinearMap ustar = adjoint(bundle.u);
  const LinearMap to_phi = compose(bundle.s_half, ustar);
  const LinearMap to_psi = compose(bundle.s_neg_half, ustar);
  const VectorStream exps = exponential_stream(bundle.nu, h);
  const VectorStream phi = [to_phi, exps](long long n) {
    return apply(to_phi, exps(n));
  };
  const VectorStream psi = [to_psi, exps](long long n) {
    return apply(to_psi, exps(n));
  };

  const AuxiliarySequence aux = dual_auxiliary_sequence(phi, psi, horizon, h);
  const FrameSequence orbit =
      FrameSequence::fromOrbit(bundle.t.map, bundle.t.g0);

  BackwardPairReport report;
  report.horizon = horizon;
  for (long long n = 0; n <= horizon; ++n)
    report.orbit_gap = std::max(report.orbit_gap,
                                norm_raw(*h, aux.at(n) - orbit.at(n)));
  report.effectiveness =
      effectiveness_test(phi, psi, h, trials, horizon, tolerance, seed);
  return report;
}

RenormingReport verify_kaczmarzclass(const GenbackwardBundle& bundle,
                                     long long horizon) {
  if (horizon < 1)
    throw Error(ErrorCode::bad_argument,
                "verify_kaczmarzclass: horizon >= 1 required");
  auto h = bundle.space;
  const Eigen::Index dim = h->dim();
  auto hp = renormed_space(h, bundle.s);

  // (a) Parseval defect of the orbit in H'.
  const FrameSequence orbit_hp = FrameSequence::fromOrbit(
      LinearMap{bundle.t.map.matrix, hp, hp},
      make_vector(bundle.t.g0.coords, hp));
  Eigen::MatrixXcd defect = frame_operator(orbit_hp, horizon).matrix;
  defect -= Eigen::MatrixXcd::Identity(dim, dim);

  RenormingReport report;
  report.horizon = horizon;
  report.parseval_defect = operator_norm(LinearMap{std::move(defect), hp, hp});

  // (b) the orbit is the classic correction sequence of {W^n g0} in H'.
  const LinearMap ustar = adjoint(bundle.u);
  const Eigen::MatrixXcd me = Eigen::MatrixXcd(
      exp_coords(bundle.nu, 1).asDiagonal());
  const Eigen::MatrixXcd w = bundle.s_half.matrix * ustar.matrix * me *
                             bundle.u.matrix * bundle.s_neg_half.matrix;
  const auto worbit = std::make_shared<FrameSequence>(FrameSequence::fromOrbit(
      LinearMap{w, hp, hp}, make_vector(bundle.t.g0.coords, hp)));
  const VectorStream wstream = [worbit, hp](long long n) {
    return make_vector(worbit->at(n), hp);
  };
  const AuxiliarySequence aux = auxiliary_sequence(wstream, horizon, hp);
  for (long long n = 0; n <= horizon; ++n)
    report.auxiliary_gap = std::max(
        report.auxiliary_gap, norm_raw(*hp, aux.at(n) - orbit_hp.at(n)));

  // (c) unitarity of W in H against the commutator of U S U* with
  // multiplication by e^{-2pi i x}.
  report.unitarity_defect = isometry_defect(w, h);
  const Eigen::MatrixXcd usu =
      bundle.u.matrix * bundle.s.matrix * ustar.matrix;
  const Eigen::MatrixXcd eneg = Eigen::MatrixXcd(
      exp_coords(bundle.nu, -1).asDiagonal());
  report.commutator_norm =
      operator_norm(LinearMap{usu * eneg - eneg * usu, h, h});
  report.equivalence_agrees =
      (report.unitarity_defect <= kStatusZeroTolerance) ==
      (report.commutator_norm <= kStatusZeroTolerance);
  return report;
}

DualOrbitResult dextrodual_orbit(const GenbackwardBundle& bundle,
                                 long long horizon, int trials,
                                 std::uint64_t seed) {
  if (horizon < 0 || trials < 1)
    throw Error(ErrorCode::bad_argument,
                "dextrodual_orbit: horizon >= 0 and trials >= 1 required");
  auto h = bundle.space;
  const LinearMap ustar = adjoint(bundle.u);
  const Eigen::MatrixXcd me = Eigen::MatrixXcd(
      exp_coords(bundle.nu, 1).asDiagonal());
  const Eigen::MatrixXcd m = bundle.s_neg_half.matrix * ustar.matrix * me *
                             bundle.u.matrix * bundle.s_half.matrix;
  const Eigen::VectorXcd ustar_one =
      ustar.matrix * Eigen::VectorXcd::Ones(h->dim());
  FrameSequence dual = FrameSequence::fromOrbit(
      LinearMap{m, h, h},
      make_vector(bundle.s_neg_half.matrix * ustar_one, h));
  const Eigen::VectorXcd analyzer = bundle.s_half.matrix * ustar_one;

  DualOrbitResult out{std::move(dual), {}, 0.0, horizon, trials, seed};
  out.growth.resize(static_cast<std::size_t>(horizon) + 1);
  double running = 0.0;
  for (long long n = 0; n <= horizon; ++n) {
    running += std::norm(inner_raw(*h, analyzer, out.orbit.at(n)));
    out.growth[static_cast<std::size_t>(n)] = running;
  }

  const FrameSequence torbit =
      FrameSequence::fromOrbit(bundle.t.map, bundle.t.g0);
  std::mt19937_64 gen(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::VectorXcd f = random_unit_vector(*h, gen);
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(h->dim());
    for (long long n = 0; n <= horizon; ++n)
      sum += inner_raw(*h, f, torbit.at(n)) * out.orbit.at(n);
    out.reconstruction_residual =
        std::max(out.reconstruction_residual, norm_raw(*h, f - sum));
  }
  return out;
}

} // namespace framelab
