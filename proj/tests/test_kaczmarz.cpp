#include "doctest.h"

#include "framelab/kaczmarz.hpp"
#include "framelab/rng.hpp"

#include <cmath>

using namespace framelab;

namespace {

MeasureSpec two_atom() {
  return MeasureSpec::atomic({{0.0, 0.5}, {0.5, 0.5}});
}

} // namespace

TEST_CASE("two-atom correction sequence terminates exactly") {
  auto m = two_atom();
  auto s = space_of(m);
  auto aux = auxiliary_sequence(exponential_stream(m, s), 6, s);
  REQUIRE(aux.count() == 7);
  CHECK((aux.at(0) - Eigen::VectorXcd::Ones(2)).norm() < 1e-12);
  Eigen::VectorXcd g1(2);
  g1 << 1.0, -1.0;
  CHECK((aux.at(1) - g1).norm() < 1e-12);
  for (long long n = 2; n <= 6; ++n) CHECK(aux.at(n).norm() < 1e-12);
}

TEST_CASE("one-atom and skew-atom sequences") {
  auto dirac = MeasureSpec::atomic({{0.0, 1.0}});
  auto sd = space_of(dirac);
  auto aux = auxiliary_sequence(exponential_stream(dirac, sd), 4, sd);
  CHECK(std::abs(aux.at(0)[0] - cxd(1, 0)) < 1e-15);
  for (long long n = 1; n <= 4; ++n) CHECK(aux.at(n).norm() < 1e-13);

  // Atoms at 0 and 1/3: <e_1, e_0> = (1 + e^{2 pi i/3})/2 = e^{i pi/3}/2.
  auto third = MeasureSpec::atomic({{0.0, 0.5}, {1.0 / 3.0, 0.5}});
  auto st = space_of(third);
  auto a3 = auxiliary_sequence(exponential_stream(third, st), 2, st);
  Eigen::VectorXcd want =
      exp_coords(third, 1) -
      0.5 * std::polar(1.0, M_PI / 3.0) * exp_coords(third, 0);
  CHECK((a3.at(1) - want).norm() < 1e-14);
}

TEST_CASE("recursion consistency against the defining sum") {
  auto m = MeasureSpec::atomic({{0.07, 0.3}, {0.41, 0.25}, {0.68, 0.45}});
  auto s = space_of(m);
  auto e = exponential_stream(m, s);
  const long long n_max = 40;
  auto aux = auxiliary_sequence(e, n_max, s);
  for (long long n = 0; n <= n_max; ++n) {
    Eigen::VectorXcd expect = e(n).coords;
    for (long long k = 0; k < n; ++k)
      expect -= inner_raw(*s, e(n).coords, e(k).coords) * aux.at(k);
    CHECK((aux.at(n) - expect).norm() <= 1e-10);
  }

  // Bessel bound of a Parseval system: |g_n| <= 1 for probability measures.
  for (long long n = 0; n <= n_max; ++n)
    CHECK(norm_raw(*s, aux.at(n)) <= 1.0 + 1e-9);
}

TEST_CASE("pair recursion degenerates to the classic one") {
  auto m = MeasureSpec::atomic({{0.11, 0.5}, {0.79, 0.5}});
  auto s = space_of(m);
  auto e = exponential_stream(m, s);
  auto classic = auxiliary_sequence(e, 30, s);
  auto paired = dual_auxiliary_sequence(e, e, 30, s);
  for (long long n = 0; n <= 30; ++n)
    CHECK((classic.at(n) - paired.at(n)).norm() <= 1e-12);
}

TEST_CASE("cycled orthonormal pair collapses after one period") {
  auto s = SpaceDesc::euclidean(2);
  std::vector<Vector> basis;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(2);
    v[i] = 1.0;
    basis.push_back(make_vector(v, s));
  }
  VectorStream cyc = [basis](long long n) { return basis[n % 2]; };
  auto aux = dual_auxiliary_sequence(cyc, cyc, 5, s);
  CHECK((aux.at(0).coeff(0) - cxd(1, 0)) == cxd(0, 0));
  CHECK((aux.at(1).coeff(1) - cxd(1, 0)) == cxd(0, 0));
  for (long long n = 2; n <= 5; ++n) CHECK(aux.at(n).norm() < 1e-14);
}

TEST_CASE("normalization violations carry the offending index") {
  auto s = SpaceDesc::euclidean(2);
  VectorStream bad = [s](long long n) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(2);
    v[0] = (n == 3) ? 2.0 : 1.0;
    return make_vector(v, s);
  };
  CHECK_THROWS_WITH_AS(auxiliary_sequence(bad, 10, s),
                       doctest::Contains("term 3"), Error);
  try {
    auxiliary_sequence(bad, 10, s);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_unit_vector);
  }
  try {
    dual_auxiliary_sequence(bad, bad, 10, s);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_normalized_pair);
  }
}

TEST_CASE("partial reconstruction is exact once the space is spanned") {
  auto m = two_atom();
  auto s = space_of(m);
  auto e = exponential_stream(m, s);
  auto aux = auxiliary_sequence(e, 3, s);
  std::mt19937_64 gen(7);
  Vector x = make_vector(random_complex_vector(2, gen), s);
  Vector x1 = partial_reconstruction(x, aux, e, 1);
  CHECK((x1.coords - x.coords).norm() < 1e-12);

  Vector x0 = partial_reconstruction(x, aux, e, 0);
  Eigen::VectorXcd want =
      inner_raw(*s, x.coords, aux.at(0)) * e(0).coords;
  CHECK((x0.coords - want).norm() < 1e-14);

  Vector zero = make_vector(Eigen::VectorXcd::Zero(2), s);
  CHECK(partial_reconstruction(zero, aux, e, 3).coords.norm() == 0.0);
}

TEST_CASE("one-step update matches the materialized partial sums") {
  auto m = MeasureSpec::atomic({{0.13, 0.4}, {0.55, 0.35}, {0.91, 0.25}});
  auto s = space_of(m);
  auto e = exponential_stream(m, s);
  std::mt19937_64 gen(11);
  Vector x = make_vector(random_complex_vector(3, gen), s);

  auto aux = auxiliary_sequence(e, 60, s);
  for (long long n : {0LL, 3LL, 20LL, 60LL}) {
    Vector a = partial_reconstruction(x, aux, e, n);
    Vector b = sequential_update(x, e, e, n);
    CHECK((a.coords - b.coords).norm() <= 1e-9 * norm(x));
  }

  // A genuinely two-stream pair with <phi_n, psi_n> = 1.
  std::vector<Vector> phis, psis;
  for (int n = 0; n < 24; ++n) {
    Eigen::VectorXcd a = random_complex_vector(3, gen);
    Eigen::VectorXcd b = random_complex_vector(3, gen);
    const cxd pairing = inner_raw(*s, a, b);
    b /= std::conj(pairing);
    phis.push_back(make_vector(a, s));
    psis.push_back(make_vector(b, s));
  }
  auto phi = list_stream(phis);
  auto psi = list_stream(psis);
  auto pair_aux = dual_auxiliary_sequence(phi, psi, 23, s);
  for (long long n : {0LL, 5LL, 23LL}) {
    Vector a = partial_reconstruction(x, pair_aux, psi, n);
    Vector b = sequential_update(x, phi, psi, n);
    CHECK((a.coords - b.coords).norm() <= 1e-9 * norm(x));
  }

  // Vector already in span{psi_0} with phi_0 = psi_0 unit: one step suffices.
  Vector u = make_vector(e(0).coords * cxd(0.3, -1.2), s);
  Vector u0 = sequential_update(u, e, e, 0);
  CHECK((u0.coords - u.coords).norm() < 1e-12);
}

TEST_CASE("effectiveness verdicts") {
  auto m = two_atom();
  auto s = space_of(m);
  auto rep = effectiveness_test(exponential_stream(m, s), s, 5, 10, 1e-12);
  CHECK(rep.verdict == Effectiveness::effective_within_tolerance);
  CHECK(rep.max_residual <= 1e-12);
  CHECK(rep.residual_curve[1] <= 1e-12);

  auto c3 = cantor_iterate(3);
  auto sc = space_of(c3);
  auto repc =
      effectiveness_test(exponential_stream(c3, sc), sc, 4, 640, 1e-6);
  CHECK(repc.verdict == Effectiveness::effective_within_tolerance);
  // At 500 terms the worst-trial residual sits just above 1e-6 and still
  // falls geometrically, which is exactly the inconclusive verdict.
  auto rep500 =
      effectiveness_test(exponential_stream(c3, sc), sc, 4, 500, 1e-6);
  CHECK(rep500.verdict == Effectiveness::inconclusive);
  CHECK(rep500.max_residual < 2e-6);
  CHECK(rep500.log_slope_last_decade < -1.0);

  // Repeating e_0 forever cannot reconstruct the rest of the space.
  auto e = exponential_stream(m, s);
  VectorStream stuck = [e](long long) { return e(0); };
  auto reps = effectiveness_test(stuck, s, 5, 200, 1e-10);
  CHECK(reps.verdict == Effectiveness::not_effective);
  CHECK(reps.max_residual > 0.1);

  // Classic curves obey |x - x_n|^2 = |x|^2 - sum |<x,g_k>|^2.
  auto rep1 = effectiveness_test(exponential_stream(c3, sc), sc, 1, 120, 1e-6);
  for (std::size_t n = 0; n < rep1.residual_curve.size(); n += 13) {
    CHECK(rep1.residual_curve[n] * rep1.residual_curve[n] ==
          doctest::Approx(rep1.defect_curve[n]).epsilon(1e-6).scale(1.0));
  }

  // Determinism: same seed, same curves.
  auto rep2 = effectiveness_test(exponential_stream(c3, sc), sc, 1, 120, 1e-6);
  CHECK(rep1.residual_curve == rep2.residual_curve);
  CHECK(rep1.seed == kDefaultSeed);
}

TEST_CASE("row action solver") {
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  Eigen::VectorXcd b(2);
  b << 2.0, 3.0;
  auto r = row_action_solve(id, b, 5, 1e-12);
  CHECK(r.converged);
  CHECK(r.sweeps == 1);
  CHECK((r.x - b).norm() < 1e-12);

  Eigen::MatrixXcd a(2, 2);
  a << 1.0, 0.0, 1.0, 1.0;
  Eigen::VectorXcd b2(2);
  b2 << 1.0, 2.0;
  auto r2 = row_action_solve(a, b2, 2000, 1e-10);
  CHECK(r2.converged);
  CHECK(std::abs(r2.x[0] - cxd(1, 0)) < 1e-9);
  CHECK(std::abs(r2.x[1] - cxd(1, 0)) < 1e-9);

  Eigen::MatrixXcd z(2, 2);
  z << 1.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_WITH_AS(row_action_solve(z, b, 5, 1e-8),
                       doctest::Contains("row 1"), Error);

  // Minimum-norm solution of an underdetermined consistent system.
  std::mt19937_64 gen(23);
  Eigen::MatrixXcd u(2, 4);
  for (int i = 0; i < 2; ++i)
    u.row(i) = random_complex_vector(4, gen).transpose();
  Eigen::VectorXcd xs = random_complex_vector(4, gen);
  Eigen::VectorXcd rhs = u * xs;
  auto r3 = row_action_solve(u, rhs, 100000, 1e-11);
  CHECK(r3.converged);
  Eigen::VectorXcd minnorm = u.completeOrthogonalDecomposition().solve(rhs);
  CHECK((r3.x - minnorm).norm() <= 1e-6 * minnorm.norm());

  // Inconsistent system: no convergence, residual near the least-squares one.
  Eigen::MatrixXcd v(3, 2);
  v << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  Eigen::VectorXcd c(3);
  c << 1.0, 1.0, 0.0;
  auto r4 = row_action_solve(v, c, 500, 1e-10);
  CHECK_FALSE(r4.converged);
  const double lsq = (v * v.completeOrthogonalDecomposition().solve(c) - c).norm();
  CHECK(r4.residual >= lsq - 1e-12);
  CHECK(r4.residual <= 2.0 * lsq);
}
