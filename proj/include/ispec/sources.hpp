#pragma once

// Analytic models of the correlated triple (X0, X1, X2) and their exact
// dyadic quantizations.  Continuous models are evaluated in closed form,
// never by sampling, so downstream convergence checks are exact cell
// computations.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ispec/hpl.hpp"
#include "ispec/measure.hpp"

namespace ispec {

// A finite joint table over alphabets (n0, n1, n2); its own quantization.
struct FiniteTriple {
  std::array<std::size_t, 3> shape;
  std::vector<double> table;  // row-major over shape, sums to 1

  FiniteTriple(std::array<std::size_t, 3> s, std::vector<double> t)
      : shape(s), table(std::move(t)) {
    const std::size_t n = shape[0] * shape[1] * shape[2];
    if (n == 0) throw std::invalid_argument("FiniteTriple: empty alphabet");
    if (table.size() != n)
      throw std::invalid_argument("FiniteTriple: table size mismatch");
    double mass = 0.0;
    for (double w : table) {
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("FiniteTriple: invalid table entry");
      mass += w;
    }
    if (std::abs(mass - 1.0) > kMassTolerance)
      throw std::invalid_argument("FiniteTriple: table does not sum to 1");
  }

  FiniteMeasure joint() const {
    return FiniteMeasure(
        GroundSpace::product({shape[0], shape[1], shape[2]}), table);
  }
};

// X0, X2 degenerate; X1 = p * delta_a + (1-p) * Uniform[0,1).
struct AtomUniformMixture {
  double p;
  double a;

  AtomUniformMixture(double p_, double a_) : p(p_), a(a_) {
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("AtomUniformMixture: p outside (0,1)");
    if (!(a >= 0.0 && a < 1.0))
      throw std::invalid_argument("AtomUniformMixture: a outside [0,1)");
  }
};

// X0 ~ Uniform[0,1), X1 = X0 +- 0.5 equiprobable, X2 degenerate.
struct ShiftCoupled {};

using GroundModel = std::variant<FiniteTriple, AtomUniformMixture, ShiftCoupled>;

// Geometry of one quantized axis: [lo, hi) split into `cells` equal
// left-closed right-open intervals.  `dyadic` axes refine with the level.
struct AxisGeometry {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t cells = 1;
  bool dyadic = false;
};

struct QuantizedTriple {
  int level = 0;
  FiniteMeasure joint;
  std::array<AxisGeometry, 3> axes;
};

namespace detail {
inline std::size_t pow2(int n) { return std::size_t{1} << n; }
}  // namespace detail

// Exact closed-form quantization of a model at dyadic level n.
inline QuantizedTriple quantize_model(const GroundModel& model, int n) {
  if (n < 0) throw std::invalid_argument("quantize_model: negative level");
  if (const auto* ft = std::get_if<FiniteTriple>(&model)) {
    QuantizedTriple q{n, ft->joint(), {}};
    for (int i = 0; i < 3; ++i)
      q.axes[i] = AxisGeometry{0.0, 1.0, ft->shape[i], false};
    return q;
  }
  if (const auto* am = std::get_if<AtomUniformMixture>(&model)) {
    const std::size_t cells = detail::pow2(n);
    const double width = 1.0 / static_cast<double>(cells);
    const auto atom_cell =
        static_cast<std::size_t>(std::floor(am->a / width));
    const double uniform_mass = (1.0 - am->p) * width;
    std::vector<double> w(cells, uniform_mass);
    w[atom_cell] = am->p + uniform_mass;
    FiniteMeasure joint(GroundSpace::product({1, cells, 1}), std::move(w));
    QuantizedTriple q{n, std::move(joint), {}};
    q.axes[0] = AxisGeometry{0.0, 1.0, 1, false};
    q.axes[1] = AxisGeometry{0.0, 1.0, cells, true};
    q.axes[2] = AxisGeometry{0.0, 1.0, 1, false};
    return q;
  }
  // ShiftCoupled: the +-0.5 shift must align with cell boundaries.
  if (n < 1)
    throw std::invalid_argument("quantize_model: ShiftCoupled needs level >= 1");
  const std::size_t n0 = detail::pow2(n);
  const std::size_t n1 = 2 * n0;  // X1 lives on [-0.5, 1.5) at the same width
  const double half_cell_mass = (1.0 / static_cast<double>(n0)) * 0.5;
  std::vector<double> w(n0 * n1, 0.0);
  for (std::size_t k = 0; k < n0; ++k) {
    w[k * n1 + k] = half_cell_mass;        // X0 - 0.5
    w[k * n1 + k + n0] = half_cell_mass;   // X0 + 0.5
  }
  FiniteMeasure joint(GroundSpace::product({n0, n1, 1}), std::move(w));
  QuantizedTriple q{n, std::move(joint), {}};
  q.axes[0] = AxisGeometry{0.0, 1.0, n0, true};
  q.axes[1] = AxisGeometry{-0.5, 1.5, n1, true};
  q.axes[2] = AxisGeometry{0.0, 1.0, 1, false};
  return q;
}

// Regroups fine dyadic cells into the level-m quantization.  Power-of-two
// groups are summed pairwise so dyadic masses stay exact.
inline QuantizedTriple coarsen(const QuantizedTriple& q, int m) {
  if (m > q.level) throw std::invalid_argument("coarsen: m > level");
  if (m < 0) throw std::invalid_argument("coarsen: negative level");
  const int shift = q.level - m;
  if (shift == 0) return q;

  std::array<AxisGeometry, 3> axes = q.axes;
  std::array<std::size_t, 3> coarse_shape{};
  for (int i = 0; i < 3; ++i) {
    if (axes[i].dyadic) {
      if (axes[i].cells % detail::pow2(shift) != 0)
        throw std::invalid_argument("coarsen: level not admitted");
      axes[i].cells >>= shift;
    }
    coarse_shape[i] = axes[i].cells;
  }
  GroundSpace coarse = GroundSpace::product(
      {coarse_shape[0], coarse_shape[1], coarse_shape[2]});

  // Collapse one dyadic axis at a time, halving repeatedly.
  std::array<std::size_t, 3> shape = {q.axes[0].cells, q.axes[1].cells,
                                      q.axes[2].cells};
  std::vector<double> w = q.joint.weights();
  for (int axis = 0; axis < 3; ++axis) {
    if (!q.axes[axis].dyadic) continue;
    for (int step = 0; step < shift; ++step) {
      const std::size_t stride_after =
          (axis == 2 ? 1 : (axis == 1 ? shape[2] : shape[1] * shape[2]));
      const std::size_t half = shape[axis] / 2;
      std::vector<double> next(w.size() / 2);
      std::array<std::size_t, 3> nshape = shape;
      nshape[axis] = half;
      GroundSpace fine_sp =
          GroundSpace::product({shape[0], shape[1], shape[2]});
      GroundSpace next_sp =
          GroundSpace::product({nshape[0], nshape[1], nshape[2]});
      (void)stride_after;
      for (std::size_t cell = 0; cell < w.size(); ++cell) {
        auto idx = fine_sp.unflatten(cell);
        idx[axis] >>= 1;
        next[next_sp.flatten(idx)] += w[cell];
      }
      w = std::move(next);
      shape = nshape;
    }
  }
  return QuantizedTriple{m, FiniteMeasure(coarse, std::move(w)), axes};
}

// The limiting law of T^3 for the continuous models, as HPL points with
// probabilities.
struct SpectrumLaw {
  std::vector<std::pair<HplPoint, double>> points;
};

inline SpectrumLaw true_spectrum(const GroundModel& model) {
  if (const auto* am = std::get_if<AtomUniformMixture>(&model)) {
    return SpectrumLaw{{{hpl_from(1.0, am->p), am->p},
                        {HplPoint::infinity(), 1.0 - am->p}}};
  }
  if (std::holds_alternative<ShiftCoupled>(model)) {
    return SpectrumLaw{{{hpl_from(2.0, 1.0), 1.0}}};
  }
  throw std::invalid_argument(
      "true_spectrum: finite tables have an exact spectrum, no limit law");
}

// ---------------------------------------------------------------------------
// JSON source-spec schema:
//   {"variant": "finite", "shape": [n0,n1,n2], "table": [...]}
//   {"variant": "atom_uniform", "p": <(0,1)>, "a": <[0,1)>}
//   {"variant": "shift_coupled"}

inline GroundModel parse_source_spec(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("variant") || !j["variant"].is_string())
    throw std::invalid_argument("source spec: missing \"variant\" tag");
  const std::string variant = j["variant"];
  if (variant == "shift_coupled") return ShiftCoupled{};
  if (variant == "atom_uniform") {
    if (!j.contains("p") || !j["p"].is_number())
      throw std::invalid_argument("source spec: atom_uniform needs numeric \"p\"");
    if (!j.contains("a") || !j["a"].is_number())
      throw std::invalid_argument("source spec: atom_uniform needs numeric \"a\"");
    return AtomUniformMixture(j["p"].get<double>(), j["a"].get<double>());
  }
  if (variant == "finite") {
    if (!j.contains("shape") || !j["shape"].is_array() ||
        j["shape"].size() != 3)
      throw std::invalid_argument(
          "source spec: finite needs \"shape\" with 3 entries");
    if (!j.contains("table") || !j["table"].is_array())
      throw std::invalid_argument("source spec: finite needs \"table\" array");
    std::array<std::size_t, 3> shape{};
    for (int i = 0; i < 3; ++i) {
      const auto& e = j["shape"][i];
      if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0)
        throw std::invalid_argument(
            "source spec: shape entries must be positive integers");
      shape[i] = e.get<std::size_t>();
    }
    std::vector<double> table;
    table.reserve(j["table"].size());
    for (const auto& e : j["table"]) {
      if (!e.is_number())
        throw std::invalid_argument("source spec: table entries must be numbers");
      table.push_back(e.get<double>());
    }
    return FiniteTriple(shape, std::move(table));
  }
  throw std::invalid_argument("source spec: unknown variant \"" + variant +
                              "\"");
}

inline GroundModel parse_source_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("source spec: parse error: ") +
                                e.what());
  }
  return parse_source_spec(j);
}

}  // namespace ispec
