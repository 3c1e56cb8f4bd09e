#include "framelab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace framelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_range(double a, double b) {
  if (!(a >= 0.0 && b <= 1.0 && a <= b))
    throw Error(ErrorCode::bad_argument,
                "interval [" + std::to_string(a) + ", " + std::to_string(b) +
                    "] is not inside [0, 1]");
}

// int_a^b x^q dx, exact; +inf when the lower endpoint 0 is non-integrable.
double power_integral(double q, double a, double b) {
  if (a == b) return 0.0;
  if (a == 0.0 && q <= -1.0) return kInf;
  if (q == -1.0) return std::log(b / a);
  const double e = q + 1.0;
  const double hi = std::pow(b, e);
  const double lo = a == 0.0 ? 0.0 : std::pow(a, e);
  return (hi - lo) / e;
}

double overlap(double a, double b, double lo, double hi) {
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

} // namespace

Weight Weight::grid(std::vector<double> values) {
  if (values.empty())
    throw Error(ErrorCode::bad_weight, "grid weight needs at least one cell");
  bool positive = false;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v = values[k];
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorCode::bad_weight,
                  "cell " + std::to_string(k) + " holds " + std::to_string(v) +
                      "; cell values must be finite and non-negative");
    if (v > 0.0) positive = true;
  }
  if (!positive)
    throw Error(ErrorCode::bad_weight, "weight vanishes everywhere");
  Weight w;
  w.form_ = Form::grid;
  w.values_ = std::move(values);
  return w;
}

Weight Weight::power(double exponent) {
  if (!std::isfinite(exponent))
    throw Error(ErrorCode::bad_weight, "power exponent must be finite");
  Weight w;
  w.form_ = Form::power;
  w.exponent_ = exponent;
  return w;
}

Weight Weight::half_indicator() {
  Weight w;
  w.form_ = Form::half_indicator;
  return w;
}

Weight Weight::preset(const std::string& name) {
  if (name == "constant") return power(0.0);
  if (name == "linear_x") return power(1.0);
  if (name == "inv_sqrt_x") return power(-0.5);
  if (name == "half_indicator") return half_indicator();
  throw Error(ErrorCode::bad_weight,
              "unknown preset '" + name +
                  "'; known presets: constant, linear_x, inv_sqrt_x, "
                  "half_indicator");
}

const std::vector<double>& Weight::values() const {
  if (form_ != Form::grid)
    throw Error(ErrorCode::bad_argument, "weight has no cell values");
  return values_;
}

double Weight::exponent() const {
  if (form_ != Form::power)
    throw Error(ErrorCode::bad_argument, "weight is not a power of x");
  return exponent_;
}

int Weight::cells() const {
  return form_ == Form::grid ? static_cast<int>(values_.size()) : 0;
}

std::string Weight::describe() const {
  switch (form_) {
    case Form::grid:
      return "grid[" + std::to_string(values_.size()) + "]";
    case Form::half_indicator:
      return "half_indicator";
    case Form::power: {
      if (exponent_ == 0.0) return "constant";
      if (exponent_ == 1.0) return "linear_x";
      if (exponent_ == -0.5) return "inv_sqrt_x";
      std::ostringstream out;
      out << "x^" << exponent_;
      return out.str();
    }
  }
  return "weight";
}

double Weight::integral(double a, double b) const {
  require_range(a, b);
  switch (form_) {
    case Form::power:
      return power_integral(exponent_, a, b);
    case Form::half_indicator:
      return overlap(a, b, 0.0, 0.5);
    case Form::grid:
      break;
  }
  const int k = cells();
  const double h = 1.0 / k;
  double sum = 0.0;
  const int first = std::min(k - 1, static_cast<int>(a * k));
  for (int i = first; i < k; ++i) {
    const double len = overlap(a, b, i * h, (i + 1) * h);
    if (len == 0.0 && i * h >= b) break;
    sum += values_[static_cast<std::size_t>(i)] * len;
  }
  return sum;
}

double Weight::integral_inv_support(double a, double b) const {
  require_range(a, b);
  switch (form_) {
    case Form::power:
      return power_integral(-exponent_, a, b);
    case Form::half_indicator:
      return overlap(a, b, 0.0, 0.5);
    case Form::grid:
      break;
  }
  const int k = cells();
  const double h = 1.0 / k;
  double sum = 0.0;
  const int first = std::min(k - 1, static_cast<int>(a * k));
  for (int i = first; i < k; ++i) {
    const double len = overlap(a, b, i * h, (i + 1) * h);
    if (len == 0.0 && i * h >= b) break;
    const double v = values_[static_cast<std::size_t>(i)];
    if (v > 0.0) sum += len / v;
  }
  return sum;
}

double Weight::dead_measure(double a, double b) const {
  require_range(a, b);
  switch (form_) {
    case Form::power:
      return 0.0; // {x^p = 0} is at most a point
    case Form::half_indicator:
      return overlap(a, b, 0.5, 1.0);
    case Form::grid:
      break;
  }
  const int k = cells();
  const double h = 1.0 / k;
  double sum = 0.0;
  const int first = std::min(k - 1, static_cast<int>(a * k));
  for (int i = first; i < k; ++i) {
    const double len = overlap(a, b, i * h, (i + 1) * h);
    if (len == 0.0 && i * h >= b) break;
    if (values_[static_cast<std::size_t>(i)] == 0.0) sum += len;
  }
  return sum;
}

bool Weight::integral_divergent_at_zero() const {
  return form_ == Form::power && exponent_ <= -1.0;
}

bool Weight::inverse_divergent_at_zero() const {
  return form_ == Form::power && exponent_ >= 1.0;
}

Weight Weight::powered(double q) const {
  if (!std::isfinite(q))
    throw Error(ErrorCode::bad_argument, "power must be finite");
  switch (form_) {
    case Form::power:
      return power(exponent_ * q);
    case Form::half_indicator:
      return half_indicator();
    case Form::grid:
      break;
  }
  std::vector<double> out(values_.size(), 0.0);
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] > 0.0) out[i] = std::pow(values_[i], q);
  return grid(std::move(out));
}

Weight Weight::reciprocal() const { return powered(-1.0); }

Weight Weight::realized(int k) const {
  if (k < 1)
    throw Error(ErrorCode::bad_argument, "grid size must be positive");
  if (integral_divergent_at_zero())
    throw Error(ErrorCode::bad_weight,
                describe() + " is not integrable near 0; it has no "
                             "piecewise-constant realization");
  std::vector<double> out(static_cast<std::size_t>(k));
  const double h = 1.0 / k;
  for (int i = 0; i < k; ++i)
    out[static_cast<std::size_t>(i)] = integral(i * h, (i + 1) * h) / h;
  return grid(std::move(out));
}

const std::vector<std::string>& weight_preset_names() {
  static const std::vector<std::string> names = {
      "constant", "linear_x", "inv_sqrt_x", "half_indicator"};
  return names;
}

Weight weight_from_csv_text(const std::string& text) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto from = line.find_first_not_of(" \t\r");
    if (from == std::string::npos) continue;
    const auto to = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(from, to - from + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      values.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse_failure,
                  "line " + std::to_string(lineno) + ": '" + token +
                      "' is not a number");
    }
  }
  return Weight::grid(std::move(values));
}

// ---------------------------------------------------------------------------
// A2 scans

namespace {

struct ScanBest {
  double value = 0.0;
  double a = 0.0;
  double b = 1.0;
};

struct ScanOutcome {
  ScanBest weak;
  ScanBest classical; // over intervals without dead mass
  bool dead_seen = false;
};

struct ScanOptions {
  int depth = 1;
  double max_len = 1.0;
  bool cell_pass = true;
};

void consider(double value, double a, double b, bool dead, ScanOutcome& out) {
  if (value > out.weak.value) out.weak = {value, a, b};
  if (dead)
    out.dead_seen = true;
  else if (value > out.classical.value)
    out.classical = {value, a, b};
}

// Averages of w and of the support-restricted 1/w over [a,b]. Non-integrable
// endpoint singularities are cut at the scan resolution `lambda`, so their
// honest infinity surfaces as growth under refinement instead of a sentinel.
void consider_interval(const Weight& w, double a, double b, double lambda,
                       ScanOutcome& out) {
  const double len = b - a;
  double aw = a;
  double ainv = a;
  if (a == 0.0) {
    if (w.integral_divergent_at_zero()) aw = std::min(b, lambda);
    if (w.inverse_divergent_at_zero()) ainv = std::min(b, lambda);
  }
  const double avg_w = w.integral(aw, b) / len;
  const double avg_inv = w.integral_inv_support(ainv, b) / len;
  consider(avg_w * avg_inv, a, b, w.dead_measure(a, b) > 0.0, out);
}

ScanOutcome scan_intervals(const Weight& w, const ScanOptions& opt) {
  ScanOutcome out;
  const double lambda = std::ldexp(1.0, -opt.depth);
  for (int level = 0; level <= opt.depth; ++level) {
    const double len = std::ldexp(1.0, -level);
    if (len > opt.max_len) continue;
    const long long n = 1LL << level;
    for (long long j = 0; j < n; ++j)
      consider_interval(w, static_cast<double>(j) * len,
                        static_cast<double>(j + 1) * len, lambda, out);
  }
  if (opt.cell_pass && w.form() == Weight::Form::grid) {
    // Every contiguous cell-aligned interval, via prefix sums; the dyadic
    // family alone is biased against grids whose features straddle dyadic
    // cuts.
    const auto& v = w.values();
    const int k = w.cells();
    const double h = 1.0 / k;
    std::vector<double> pw(static_cast<std::size_t>(k) + 1, 0.0);
    std::vector<double> pinv(pw), pdead(pw);
    for (int i = 0; i < k; ++i) {
      const double val = v[static_cast<std::size_t>(i)];
      pw[i + 1] = pw[i] + val * h;
      pinv[i + 1] = pinv[i] + (val > 0.0 ? h / val : 0.0);
      pdead[i + 1] = pdead[i] + (val == 0.0 ? h : 0.0);
    }
    const int max_cells =
        std::max(1, static_cast<int>(std::floor(opt.max_len * k + 1e-9)));
    for (int i = 0; i < k; ++i) {
      const int stop = std::min(k, i + max_cells);
      for (int j = i + 1; j <= stop; ++j) {
        const double len = (j - i) * h;
        const double value =
            ((pw[j] - pw[i]) / len) * ((pinv[j] - pinv[i]) / len);
        consider(value, i * h, j * h, pdead[j] - pdead[i] > 0.0, out);
      }
    }
  }
  return out;
}

void require_depth(int depth) {
  if (depth < 1 || depth > 40)
    throw Error(ErrorCode::bad_argument,
                "scan depth " + std::to_string(depth) +
                    " outside the supported range [1, 40]");
}

enum class Primary { weak, classical };

A2Report scan_report(const Weight& w, int depth, Primary primary) {
  require_depth(depth);
  ScanOptions opt;
  opt.depth = depth;
  const ScanOutcome cur = scan_intervals(w, opt);
  opt.depth = depth - 1;
  const ScanOutcome prev = scan_intervals(w, opt);

  A2Report rep;
  rep.scan_depth = depth;
  rep.weak_a2 = {cur.weak.value, true, false};
  rep.classical_a2 = {cur.classical.value, true, cur.dead_seen};
  const ScanBest& best =
      primary == Primary::weak ? cur.weak : cur.classical;
  rep.argmax_a = best.a;
  rep.argmax_b = best.b;
  rep.previous_value =
      primary == Primary::weak ? prev.weak.value : prev.classical.value;
  const bool grew =
      best.value > rep.previous_value * (1.0 + kTrendGrowthRatio) &&
      best.value > rep.previous_value;
  rep.trend = grew ? RefinementTrend::growing : RefinementTrend::stable;
  return rep;
}

} // namespace

A2Report weak_a2_constant(const Weight& w, int depth) {
  return scan_report(w, depth, Primary::weak);
}

A2Report a2_constant(const Weight& w, int depth) {
  return scan_report(w, depth, Primary::classical);
}

A2Report eps_strengthened_check(const Weight& w, double eps, int depth) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw Error(ErrorCode::bad_argument,
                "eps must be positive, got " + std::to_string(eps));
  A2Report rep = scan_report(w.powered(1.0 + eps), depth, Primary::weak);
  rep.eps = eps;
  rep.eps_weak = rep.weak_a2;
  rep.weak_a2 = A2Bound{};
  rep.classical_a2 = A2Bound{};
  return rep;
}

const std::vector<double>& eps_default_grid() {
  static const std::vector<double> grid = {0.1, 0.25, 0.5, 1.0};
  return grid;
}

// ---------------------------------------------------------------------------
// Dirichlet kernel

double dirichlet_kernel(long long m, double t) {
  if (m < 0)
    throw Error(ErrorCode::bad_argument, "kernel order must be >= 0");
  if (t == std::nearbyint(t)) return static_cast<double>(2 * m + 1);
  return std::sin(M_PI * (2.0 * static_cast<double>(m) + 1.0) * t) /
         std::sin(M_PI * t);
}

DirichletReport check_dirichlet_bound(long long n_max, int samples_per_n) {
  if (n_max < 1)
    throw Error(ErrorCode::bad_argument, "n_max must be >= 1");
  if (samples_per_n < 1)
    throw Error(ErrorCode::bad_argument, "samples_per_n must be >= 1");
  DirichletReport rep;
  rep.n_max = n_max;
  rep.samples_per_n = samples_per_n;
  rep.min_ratio = kInf;
  for (long long n = 1; n <= n_max; ++n) {
    const double half = 1.0 / (8.0 * static_cast<double>(n));
    for (int i = 0; i < samples_per_n; ++i) {
      const double t =
          samples_per_n == 1
              ? 0.0
              : -half + 2.0 * half * static_cast<double>(i) /
                            static_cast<double>(samples_per_n - 1);
      const double ratio =
          dirichlet_kernel(n, t) / static_cast<double>(n);
      if (ratio < rep.min_ratio) {
        rep.min_ratio = ratio;
        rep.argmin_n = n;
        rep.argmin_t = t;
      }
    }
  }
  rep.bound_holds = rep.min_ratio >= 1.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Partial-sum operators

namespace {

// Cell average of e^{2 pi i n x} over [k/K,(k+1)/K) is s_n w^{nk} with
// w = e^{2 pi i / K}; this is the shape factor s_n.
cxd cell_shape(long long n, int kcells) {
  if (n == 0) return cxd(1.0, 0.0);
  const double theta =
      M_PI * static_cast<double>(n) / static_cast<double>(kcells);
  return std::sin(theta) / theta * std::polar(1.0, theta);
}

std::vector<int> support_cells(const std::vector<double>& v) {
  std::vector<int> idx;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] > 0.0) idx.push_back(static_cast<int>(k));
  return idx;
}

const std::vector<double>& require_grid(const Weight& w) {
  if (w.form() != Weight::Form::grid)
    throw Error(ErrorCode::bad_weight,
                w.describe() +
                    " is analytic; realize it on a grid first (realized(K))");
  return w.values();
}

// h * sum_{k in support} f(w_k) e^{2 pi i d k / K} for d = 0..bands, using a
// K-periodic phase table; negatives follow by conjugation since f is real.
Eigen::VectorXcd support_transform(const std::vector<double>& v,
                                   const std::vector<int>& supp,
                                   long long bands, bool inverse) {
  const int k = static_cast<int>(v.size());
  const double h = 1.0 / k;
  std::vector<cxd> phase(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    phase[static_cast<std::size_t>(j)] =
        std::polar(1.0, 2.0 * M_PI * static_cast<double>(j) /
                            static_cast<double>(k));
  Eigen::VectorXcd out(bands + 1);
  for (long long d = 0; d <= bands; ++d) {
    cxd sum(0.0, 0.0);
    for (int cell : supp) {
      const double val = v[static_cast<std::size_t>(cell)];
      const long long j = (d * cell) % k;
      sum += (inverse ? 1.0 / val : val) * phase[static_cast<std::size_t>(j)];
    }
    out[d] = h * sum;
  }
  return out;
}

} // namespace

LinearMap partial_sum_operator(const Weight& w, long long m) {
  const auto& v = require_grid(w);
  const int k = w.cells();
  if (m < 0)
    throw Error(ErrorCode::bad_argument, "band limit must be >= 0");
  if (k < 4 * m)
    throw Error(ErrorCode::bad_argument,
                "grid of " + std::to_string(k) + " cells cannot resolve " +
                    std::to_string(2 * m + 1) + " exponentials; need K >= 4M");
  if (k > 2048)
    throw Error(ErrorCode::bad_argument,
                "refusing to materialize a " + std::to_string(k) +
                    "-cell operator; rm_norm_sweep serves large grids");
  const auto supp = support_cells(v);
  const double h = 1.0 / k;
  Eigen::VectorXd masses(static_cast<Eigen::Index>(supp.size()));
  for (std::size_t i = 0; i < supp.size(); ++i)
    masses[static_cast<Eigen::Index>(i)] =
        v[static_cast<std::size_t>(supp[i])] * h;
  const SpacePtr space = SpaceDesc::diagonal(masses);

  // Analysis against exact cell integrals of e_n composed with the
  // biorthogonal synthesis collapses to h * D_M((k - k')/K): the shape
  // factors cancel, leaving the Dirichlet kernel sampled on the grid.
  std::vector<double> kernel(static_cast<std::size_t>(k));
  for (int d = 0; d < k; ++d)
    kernel[static_cast<std::size_t>(d)] =
        h * dirichlet_kernel(m, static_cast<double>(d) / k);
  const Eigen::Index n = static_cast<Eigen::Index>(supp.size());
  Eigen::MatrixXcd mat(n, n);
  for (Eigen::Index col = 0; col < n; ++col)
    for (Eigen::Index row = 0; row < n; ++row) {
      const int d = std::abs(supp[static_cast<std::size_t>(row)] -
                             supp[static_cast<std::size_t>(col)]);
      mat(row, col) = kernel[static_cast<std::size_t>(d)];
    }
  return LinearMap{std::move(mat), space, space};
}

namespace {

// |R_M| on L^2(w dx) via the (2M+1)-square Grams of the synthesis and
// analysis families: |R_M|^2 = lambda_max(G2^{1/2} G1 G2^{1/2}) with
// G1 = Syn^H D Syn and G2 = C D^{-1} C^H. Both are Toeplitz up to shape
// factors, so one O(M K) pass serves the whole sweep.
double rm_norm_from_bands(const Eigen::VectorXcd& tw,
                          const Eigen::VectorXcd& tinv, long long m, int k) {
  const Eigen::Index n = static_cast<Eigen::Index>(2 * m + 1);
  Eigen::VectorXcd alpha(n), beta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cxd s = cell_shape(i - m, k);
    beta[i] = s;
    alpha[i] = s / std::norm(s);
  }
  Eigen::MatrixXcd g1(n, n), g2(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index d = j - i;
      const cxd band_w = d >= 0 ? tw[d] : std::conj(tw[-d]);
      const cxd band_inv = d >= 0 ? tinv[d] : std::conj(tinv[-d]);
      g1(i, j) = std::conj(alpha[i]) * alpha[j] * band_w;
      g2(i, j) = std::conj(beta[i]) * beta[j] * band_inv;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig2(g2);
  if (eig2.info() != Eigen::Success)
    throw Error(ErrorCode::ill_conditioned, "Gram eigensolve failed");
  const Eigen::VectorXd lam = eig2.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd half =
      eig2.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
      eig2.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(half * g1 * half);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::ill_conditioned, "Gram eigensolve failed");
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

} // namespace

RmSweep rm_norm_sweep(const Weight& w, const std::vector<long long>& ms) {
  const auto& v = require_grid(w);
  const int k = w.cells();
  if (ms.empty())
    throw Error(ErrorCode::bad_argument, "need at least one band limit");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i] < 1)
      throw Error(ErrorCode::bad_argument, "band limits must be >= 1");
    if (i > 0 && ms[i] <= ms[i - 1])
      throw Error(ErrorCode::bad_argument,
                  "band limits must be strictly increasing");
  }
  if (k < 4 * ms.back())
    throw Error(ErrorCode::bad_argument,
                "grid of " + std::to_string(k) + " cells cannot resolve M = " +
                    std::to_string(ms.back()) + "; need K >= 4M");
  const auto supp = support_cells(v);
  const long long bands = 2 * ms.back();
  const Eigen::VectorXcd tw = support_transform(v, supp, bands, false);
  const Eigen::VectorXcd tinv = support_transform(v, supp, bands, true);

  RmSweep sweep;
  sweep.ms = ms;
  sweep.norms.reserve(ms.size());
  for (long long m : ms)
    sweep.norms.push_back(rm_norm_from_bands(tw, tinv, m, k));

  std::size_t j = ms.size() - 1;
  while (j > 0 && ms[j - 1] * 2 >= ms.back()) --j;
  if (j + 1 < ms.size())
    sweep.last_octave_slope = (sweep.norms.back() - sweep.norms[j]) /
                              static_cast<double>(ms.back() - ms[j]);
  sweep.bounded = sweep.last_octave_slope <= kBoundedSlope;
  return sweep;
}

MthmReport mthm_constant_relation(const Weight& w, int depth,
                                  const std::vector<long long>& ms) {
  require_depth(depth);
  ScanOptions opt;
  opt.depth = depth;
  opt.max_len = 0.125;
  opt.cell_pass = false;
  const ScanOutcome cur = scan_intervals(w, opt);
  opt.depth = depth - 1;
  const ScanOutcome prev = scan_intervals(w, opt);
  const RmSweep sweep = rm_norm_sweep(w, ms);

  MthmReport rep;
  rep.depth = depth;
  rep.weak_constant = cur.weak.value;
  rep.weak_growing =
      cur.weak.value > prev.weak.value * (1.0 + kTrendGrowthRatio);
  rep.sup_rm_norm =
      *std::max_element(sweep.norms.begin(), sweep.norms.end());
  rep.bound = 256.0 * rep.sup_rm_norm * rep.sup_rm_norm;
  rep.holds = rep.weak_constant <= rep.bound;
  rep.note =
      "the factor 256 is a checkable sufficient constant, not a sharp one";
  return rep;
}

// ---------------------------------------------------------------------------
// Exponential frame bounds

FrameBoundOracle exp_frame_bound_oracle(const Weight& w) {
  const auto& v = require_grid(w);
  FrameBoundOracle oracle;
  oracle.lower = kInf;
  for (double val : v)
    if (val > 0.0) {
      oracle.lower = std::min(oracle.lower, val);
      oracle.upper = std::max(oracle.upper, val);
    }
  return oracle;
}

MeasuredFrameBounds exp_frame_bound_measured(const Weight& w, long long m) {
  const auto& v = require_grid(w);
  const int k = w.cells();
  if (m < 0)
    throw Error(ErrorCode::bad_argument, "band limit must be >= 0");
  constexpr int kProbeBlocks = 32;
  if (k % kProbeBlocks != 0)
    throw Error(ErrorCode::bad_argument,
                "grid size " + std::to_string(k) + " is not a multiple of " +
                    std::to_string(kProbeBlocks));
  const int block = k / kProbeBlocks;
  const double h = 1.0 / k;

  // Coarse-cell indicators with positive mass; the quadratic form of the
  // truncated frame operator compressed onto them has exact entries because
  // the probes are piecewise constant.
  std::vector<int> live;
  std::vector<double> mass;
  for (int b = 0; b < kProbeBlocks; ++b) {
    double s = 0.0;
    for (int i = b * block; i < (b + 1) * block; ++i)
      s += v[static_cast<std::size_t>(i)] * h;
    if (s > 0.0) {
      live.push_back(b);
      mass.push_back(s);
    }
  }
  const Eigen::Index p = static_cast<Eigen::Index>(live.size());
  const Eigen::Index rows = static_cast<Eigen::Index>(2 * m + 1);
  Eigen::MatrixXcd coef(rows, p);
  for (Eigen::Index col = 0; col < p; ++col) {
    const int b = live[static_cast<std::size_t>(col)];
    for (long long n = -m; n <= m; ++n) {
      cxd sum(0.0, 0.0);
      const cxd shape = cell_shape(n, k);
      for (int i = b * block; i < (b + 1) * block; ++i) {
        const double val = v[static_cast<std::size_t>(i)];
        if (val == 0.0) continue;
        const double frac =
            std::fmod(static_cast<double>(n) * i, static_cast<double>(k));
        sum += val * std::conj(shape * std::polar(1.0, 2.0 * M_PI * frac /
                                                           static_cast<double>(
                                                               k)));
      }
      coef(static_cast<Eigen::Index>(n + m), col) = h * sum;
    }
  }
  Eigen::MatrixXcd q = coef.adjoint() * coef;
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b)
      q(a, b) /= std::sqrt(mass[static_cast<std::size_t>(a)] *
                           mass[static_cast<std::size_t>(b)]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(q);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::ill_conditioned, "probe eigensolve failed");

  MeasuredFrameBounds out;
  out.lower = eig.eigenvalues().minCoeff();
  out.upper = eig.eigenvalues().maxCoeff();
  out.m = m;
  out.probe_cells = static_cast<int>(p);
  return out;
}

} // namespace framelab
