#include "framelab/measure.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace framelab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr Eigen::Index kDenseCap = 2048;

} // namespace

MeasureSpec MeasureSpec::atomic(std::vector<std::pair<double, double>> atoms) {
  if (atoms.empty())
    throw Error(ErrorCode::bad_measure, "atomic measure needs atoms");
  std::sort(atoms.begin(), atoms.end());
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const auto& [x, p] = atoms[j];
    if (!std::isfinite(x) || x < 0.0 || x >= 1.0)
      throw Error(ErrorCode::bad_measure,
                  "atom position " + std::to_string(x) + " at index " +
                      std::to_string(j) + " outside [0,1)");
    if (!(p > 0.0) || !std::isfinite(p))
      throw Error(ErrorCode::bad_measure,
                  "atom mass at index " + std::to_string(j) +
                      " must be strictly positive");
    if (j > 0 && atoms[j - 1].first == x)
      throw Error(ErrorCode::bad_measure,
                  "duplicate atom position " + std::to_string(x));
  }
  MeasureSpec m;
  m.kind_ = Kind::atomic;
  m.atoms_ = std::move(atoms);
  return m;
}

MeasureSpec MeasureSpec::grid(std::vector<double> weight) {
  if (weight.empty())
    throw Error(ErrorCode::bad_measure, "grid measure needs cells");
  bool any_positive = false;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    if (!std::isfinite(weight[k]) || weight[k] < 0.0)
      throw Error(ErrorCode::bad_measure,
                  "grid cell " + std::to_string(k) +
                      " must be a finite non-negative value");
    any_positive = any_positive || weight[k] > 0.0;
  }
  if (!any_positive)
    throw Error(ErrorCode::bad_measure, "grid measure is identically zero");
  MeasureSpec m;
  m.kind_ = Kind::grid;
  m.weight_ = std::move(weight);
  return m;
}

MeasureSpec MeasureSpec::mixture(MeasureSpec a, MeasureSpec b) {
  MeasureSpec m;
  m.kind_ = Kind::mixture;
  m.components_.push_back(std::move(a));
  m.components_.push_back(std::move(b));
  return m;
}

const std::vector<std::pair<double, double>>& MeasureSpec::atoms() const {
  if (kind_ != Kind::atomic)
    throw Error(ErrorCode::bad_argument, "not an atomic measure");
  return atoms_;
}

const std::vector<double>& MeasureSpec::weight() const {
  if (kind_ != Kind::grid)
    throw Error(ErrorCode::bad_argument, "not a grid measure");
  return weight_;
}

const MeasureSpec& MeasureSpec::component(int i) const {
  if (kind_ != Kind::mixture)
    throw Error(ErrorCode::bad_argument, "not a mixture measure");
  if (i != 0 && i != 1)
    throw Error(ErrorCode::bad_argument, "mixture component index must be 0 or 1");
  return components_[static_cast<std::size_t>(i)];
}

double total_mass(const MeasureSpec& m) {
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic: {
      double s = 0;
      for (const auto& [x, p] : m.atoms()) s += p;
      return s;
    }
    case MeasureSpec::Kind::grid: {
      double s = 0;
      for (double w : m.weight()) s += w;
      return s / static_cast<double>(m.weight().size());
    }
    case MeasureSpec::Kind::mixture:
      return total_mass(m.component(0)) + total_mass(m.component(1));
  }
  return 0;
}

bool is_probability(const MeasureSpec& m, double tol) {
  return std::abs(total_mass(m) - 1.0) <= tol;
}

Eigen::Index space_dim(const MeasureSpec& m) {
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic:
      return static_cast<Eigen::Index>(m.atoms().size());
    case MeasureSpec::Kind::grid:
      return static_cast<Eigen::Index>(m.weight().size());
    case MeasureSpec::Kind::mixture:
      return space_dim(m.component(0)) + space_dim(m.component(1));
  }
  return 0;
}

namespace {

void collect_masses(const MeasureSpec& m, std::vector<double>& out) {
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic:
      for (const auto& [x, p] : m.atoms()) out.push_back(p);
      return;
    case MeasureSpec::Kind::grid: {
      const double k = static_cast<double>(m.weight().size());
      for (std::size_t c = 0; c < m.weight().size(); ++c) {
        if (m.weight()[c] == 0.0)
          throw Error(ErrorCode::bad_measure,
                      "grid cell " + std::to_string(c) +
                          " has zero mass; the realization drops null cells, "
                          "restrict to the support first");
        out.push_back(m.weight()[c] / k);
      }
      return;
    }
    case MeasureSpec::Kind::mixture:
      collect_masses(m.component(0), out);
      collect_masses(m.component(1), out);
      return;
  }
}

// Cell average of e^{2*pi*i*n*x} over [k/K,(k+1)/K) factors as s_n w^{nk}
// with w = e^{2*pi*i/K} and s_n = sin(pi n/K)/(pi n/K) * e^{i pi n/K}.
cxd cell_shape(long long n, long long kcells) {
  if (n == 0) return cxd(1, 0);
  const double theta = M_PI * static_cast<double>(n) /
                       static_cast<double>(kcells);
  const double ratio = std::sin(theta) / theta;
  return ratio * std::polar(1.0, theta);
}

void fill_exp_coords(const MeasureSpec& m, long long n, Eigen::VectorXcd& v,
                     Eigen::Index offset) {
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic: {
      const auto& atoms = m.atoms();
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        const double frac = std::fmod(static_cast<double>(n) * atoms[j].first,
                                      1.0);
        v[offset + static_cast<Eigen::Index>(j)] =
            std::polar(1.0, kTwoPi * frac);
      }
      return;
    }
    case MeasureSpec::Kind::grid: {
      const long long kc = static_cast<long long>(m.weight().size());
      const cxd shape = cell_shape(n, kc);
      const long long r = ((n % kc) + kc) % kc;
      for (long long c = 0; c < kc; ++c) {
        const long long e = (r * c) % kc;
        v[offset + static_cast<Eigen::Index>(c)] =
            shape * std::polar(1.0, kTwoPi * static_cast<double>(e) /
                                        static_cast<double>(kc));
      }
      return;
    }
    case MeasureSpec::Kind::mixture:
      fill_exp_coords(m.component(0), n, v, offset);
      fill_exp_coords(m.component(1), n, v,
                      offset + space_dim(m.component(0)));
      return;
  }
}

} // namespace

SpacePtr space_of(const MeasureSpec& m) {
  const Eigen::Index dim = space_dim(m);
  if (dim > kDenseCap)
    throw Error(ErrorCode::bad_measure,
                "realization dimension " + std::to_string(dim) +
                    " exceeds the dense-space cap " +
                    std::to_string(kDenseCap));
  std::vector<double> masses;
  masses.reserve(static_cast<std::size_t>(dim));
  collect_masses(m, masses);
  return SpaceDesc::diagonal(
      Eigen::Map<const Eigen::VectorXd>(masses.data(),
                                        static_cast<Eigen::Index>(masses.size())));
}

Eigen::VectorXcd exp_coords(const MeasureSpec& m, long long n) {
  Eigen::VectorXcd v(space_dim(m));
  fill_exp_coords(m, n, v, 0);
  return v;
}

ExponentialVector exp_vector(const MeasureSpec& m, long long n) {
  return exp_vector(m, n, space_of(m));
}

ExponentialVector exp_vector(const MeasureSpec& m, long long n, SpacePtr s) {
  return ExponentialVector{n, make_vector(exp_coords(m, n), std::move(s))};
}

cxd fourier_coefficient(const MeasureSpec& m, long long n) {
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic: {
      cxd s(0, 0);
      for (const auto& [x, p] : m.atoms()) {
        const double frac = std::fmod(static_cast<double>(n) * x, 1.0);
        s += p * std::polar(1.0, -kTwoPi * frac);
      }
      return s;
    }
    case MeasureSpec::Kind::grid: {
      const auto& w = m.weight();
      const long long kc = static_cast<long long>(w.size());
      const cxd shape = std::conj(cell_shape(n, kc));
      const long long r = ((n % kc) + kc) % kc;
      cxd s(0, 0);
      for (long long c = 0; c < kc; ++c) {
        const long long e = (r * c) % kc;
        s += w[static_cast<std::size_t>(c)] *
             std::polar(1.0, -kTwoPi * static_cast<double>(e) /
                                 static_cast<double>(kc));
      }
      return shape * s / static_cast<double>(kc);
    }
    case MeasureSpec::Kind::mixture:
      return fourier_coefficient(m.component(0), n) +
             fourier_coefficient(m.component(1), n);
  }
  return cxd(0, 0);
}

MeasureSpec cantor_iterate(int level) {
  if (level < 0 || level > 12)
    throw Error(ErrorCode::bad_measure,
                "cantor level " + std::to_string(level) +
                    " outside [0,12] (atom cap 4096)");
  std::vector<double> left{0.0};
  for (int l = 0; l < level; ++l) {
    std::vector<double> next;
    next.reserve(left.size() * 2);
    for (double x : left) next.push_back(x / 3.0);
    for (double x : left) next.push_back(x / 3.0 + 2.0 / 3.0);
    left = std::move(next);
  }
  const double mass = std::ldexp(1.0, -level);
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(left.size());
  for (double x : left) atoms.emplace_back(x, mass);
  return MeasureSpec::atomic(std::move(atoms));
}

namespace {

nlohmann::json measure_to_json(const MeasureSpec& m) {
  nlohmann::json j;
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic: {
      j["kind"] = "atomic";
      auto arr = nlohmann::json::array();
      for (const auto& [x, p] : m.atoms())
        arr.push_back(nlohmann::json::array({x, p}));
      j["atoms"] = std::move(arr);
      return j;
    }
    case MeasureSpec::Kind::grid:
      j["kind"] = "grid";
      j["weight"] = m.weight();
      return j;
    case MeasureSpec::Kind::mixture:
      j["kind"] = "mixture";
      j["components"] = nlohmann::json::array(
          {measure_to_json(m.component(0)), measure_to_json(m.component(1))});
      return j;
  }
  return j;
}

MeasureSpec measure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw Error(ErrorCode::bad_measure,
                "measure document needs a string field 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "atomic") {
    if (!j.contains("atoms") || !j["atoms"].is_array())
      throw Error(ErrorCode::bad_measure,
                  "atomic measure needs an array field 'atoms'");
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : j["atoms"]) {
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() ||
          !a[1].is_number())
        throw Error(ErrorCode::bad_measure,
                    "each atom must be a [position, mass] number pair");
      atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
    return MeasureSpec::atomic(std::move(atoms));
  }
  if (kind == "grid") {
    if (!j.contains("weight") || !j["weight"].is_array())
      throw Error(ErrorCode::bad_measure,
                  "grid measure needs an array field 'weight'");
    std::vector<double> w;
    for (const auto& c : j["weight"]) {
      if (!c.is_number())
        throw Error(ErrorCode::bad_measure, "grid cells must be numbers");
      w.push_back(c.get<double>());
    }
    return MeasureSpec::grid(std::move(w));
  }
  if (kind == "mixture") {
    if (!j.contains("components") || !j["components"].is_array() ||
        j["components"].size() != 2)
      throw Error(ErrorCode::bad_measure,
                  "mixture needs a two-element array field 'components'");
    return MeasureSpec::mixture(measure_from_json(j["components"][0]),
                                measure_from_json(j["components"][1]));
  }
  throw Error(ErrorCode::bad_measure, "unknown measure kind '" + kind + "'");
}

} // namespace

MeasureSpec parse_measure(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_failure, e.what());
  }
  return measure_from_json(j);
}

std::string measure_to_text(const MeasureSpec& m) {
  return measure_to_json(m).dump();
}

} // namespace framelab
