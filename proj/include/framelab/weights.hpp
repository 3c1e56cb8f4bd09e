#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "framelab/space.hpp"

namespace framelab {

// Weight on [0,1): either an explicit piecewise-constant density on K
// uniform cells or one of the analytic presets (powers of x and the
// half-line indicator), which carry closed-form antiderivatives so interval
// integrals stay exact near the singular endpoint. Presets must be realized
// on a grid (cell averages) before the partial-sum machinery applies.
class Weight {
public:
  enum class Form { grid, power, half_indicator };

  static Weight grid(std::vector<double> values); // values >= 0, one positive
  static Weight power(double exponent);           // w(x) = x^exponent
  static Weight half_indicator();                 // w = 1 on [0,1/2), else 0
  // CLI preset names: constant, linear_x, inv_sqrt_x, half_indicator.
  static Weight preset(const std::string& name);

  Form form() const { return form_; }
  const std::vector<double>& values() const; // grid form only
  double exponent() const;                   // power form only
  int cells() const;                         // K for grid form, else 0
  std::string describe() const;

  // Exact integrals over [a,b] subseteq [0,1].
  double integral(double a, double b) const;             // int w
  double integral_inv_support(double a, double b) const; // int (1/w) on {w>0}
  double dead_measure(double a, double b) const;         // |[a,b] cap {w=0}|
  // Divergence of the corresponding integral down to a = 0 (non-integrable
  // power singularity; finite grids never diverge).
  bool integral_divergent_at_zero() const;
  bool inverse_divergent_at_zero() const;

  // w^q with the same support (grids cellwise, powers exactly).
  Weight powered(double q) const;
  // 1/w on {w>0}, 0 on the dead zone.
  Weight reciprocal() const;
  // Piecewise-constant realization by exact cell averages.
  Weight realized(int k) const;

private:
  Weight() = default;
  Form form_ = Form::grid;
  std::vector<double> values_;
  double exponent_ = 0.0;
};

const std::vector<std::string>& weight_preset_names();

// One value per line; blank lines ignored.
Weight weight_from_csv_text(const std::string& text);

// ---------------------------------------------------------------------------
// A2 scans

enum class RefinementTrend { stable, growing };

// One scanned constant. `divergent` marks exact structural divergence (a
// positive-measure dead zone meeting the unrestricted reciprocal); a
// non-integrable endpoint singularity instead shows up as value growth under
// refinement (the supremum is truncated at the scan resolution 2^-depth),
// reported through the trend, never as a sentinel float.
struct A2Bound {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool computed = false;
  bool divergent = false;
};

struct A2Report {
  A2Bound weak_a2;      // reciprocal restricted to {w>0}
  A2Bound classical_a2; // reciprocal unrestricted
  double eps = 0.0;
  A2Bound eps_weak;     // weak constant of w^{1+eps}
  int scan_depth = 0;
  // Interval attaining the op's primary constant, and that constant's value
  // at depth-1 (the refinement trend evidence).
  double argmax_a = 0.0;
  double argmax_b = 1.0;
  double previous_value = 0.0;
  RefinementTrend trend = RefinementTrend::stable;
};

// Relative growth above which a refinement step counts as `growing`.
inline constexpr double kTrendGrowthRatio = 0.01;

// Supremum of (avg_I w)(avg_I (1/w) chi_{w>0}) over dyadic intervals of
// levels 0..depth, plus every cell-aligned interval for grid weights
// (analytic presets have no grid bias to remove). Both the weak and the
// unrestricted constants come out of one scan; the report's argmax and trend
// follow the op's primary constant.
A2Report weak_a2_constant(const Weight& w, int depth);
A2Report a2_constant(const Weight& w, int depth);
// Weak scan of w^{1+eps}.
A2Report eps_strengthened_check(const Weight& w, double eps, int depth);
// Default eps grid for the strengthened-condition diagnostics.
const std::vector<double>& eps_default_grid();

// ---------------------------------------------------------------------------
// Dirichlet kernel

// D_M(t) = sin(pi (2M+1) t) / sin(pi t); at integer t the limit 2M+1.
double dirichlet_kernel(long long m, double t);

struct DirichletReport {
  long long n_max = 0;
  int samples_per_n = 0;
  double min_ratio = 0.0; // min over (N, t) of D_N(t) / N
  long long argmin_n = 0;
  double argmin_t = 0.0;
  bool bound_holds = false; // min_ratio >= 1
};

// Samples t uniformly in [-1/(8N), 1/(8N)] for every N <= n_max and checks
// D_N(t) >= N.
DirichletReport check_dirichlet_bound(long long n_max, int samples_per_n);

// ---------------------------------------------------------------------------
// Partial-sum operators on weighted grids

// Matrix of R_M f = sum_{|n|<=M} <f, chi_{w>0} e_n>_Leb e_n on the support
// cells of a grid weight, in the space with metric diag(w_k / K).
// Coefficients are exact Lebesgue integrals of piecewise-constant inputs;
// synthesis uses the analysis-biorthogonal grid exponentials, which makes
// R_M an exact projection (R_M R_M = R_M, and |R_M| = 1 when w == 1).
// Guards: K >= 4M (resolution), K <= 2048 (materialization; the norm sweep
// below serves larger grids matrix-free).
LinearMap partial_sum_operator(const Weight& w, long long m);

struct RmSweep {
  std::vector<long long> ms;
  std::vector<double> norms; // |R_M| in L^2(w dx)
  // Slope of the (M, |R_M|) curve over the last octave of the sweep. The
  // verdict is a statement about the observed window, not a limit claim:
  // sublinear growth flattens this slope as the window moves out.
  double last_octave_slope = 0.0;
  bool bounded = true; // slope <= kBoundedSlope
};
inline constexpr double kBoundedSlope = 0.01;

// Norms via the (2M+1)-square Gram reduction; never materializes a K-square
// matrix, so K = 4096 grids are fine.
RmSweep rm_norm_sweep(const Weight& w, const std::vector<long long>& ms);

struct MthmReport {
  double weak_constant = 0.0; // sup over dyadic intervals with |I| <= 1/8
  bool weak_growing = false;  // constant still rising under refinement
  double sup_rm_norm = 0.0;
  double bound = 0.0; // 256 * sup^2
  bool holds = false;
  int depth = 0;
  // The 256 comes from N = floor(1/(8|I|)) >= 1/(16|I|) in the underlying
  // derivation; it is a checkable sufficient constant, not a sharp one.
  std::string note;
};

// Checks weak_a2(w) <= 256 * (sup_M |R_M|)^2 over small dyadic intervals.
MthmReport mthm_constant_relation(const Weight& w, int depth,
                                  const std::vector<long long>& ms);

// ---------------------------------------------------------------------------
// Exponential frame bounds over L^2(w dx)

struct FrameBoundOracle {
  double lower = 0.0; // ess-inf of w on its support cells
  double upper = 0.0; // ess-sup of w
};
FrameBoundOracle exp_frame_bound_oracle(const Weight& w);

struct MeasuredFrameBounds {
  double lower = 0.0;
  double upper = 0.0;
  long long m = 0;
  int probe_cells = 0; // coarse probe functions actually used
};

// Rayleigh quotients of the truncated two-sided frame operator
// sum_{|n|<=M} e_n (x) e_n compressed onto coarse-cell indicators (the raw
// truncated operator is rank-deficient whenever 2M+1 < K, so its bottom
// eigenvalue on the full grid is always 0; the compression measures the
// bounds on resolvable inputs and converges to the oracle as M grows).
MeasuredFrameBounds exp_frame_bound_measured(const Weight& w, long long m);

} // namespace framelab
