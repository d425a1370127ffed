#pragma once

// One-shot bounds for separate random number generation from two correlated
// sources with side information: spectrum terms, the A_r region test,
// direct and converse bounds, extractor evaluation, the exhaustive oracle
// and a seeded random-binning search.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ispec/hpl.hpp"
#include "ispec/measure.hpp"
#include "ispec/quantize.hpp"
#include "ispec/sources.hpp"

namespace ispec {

// Per-cell (T1, T2, T3) values: reciprocal conditional probabilities as HPL
// points, defined on the support of the joint.
struct SpectrumTriple {
  HplField t1;
  HplField t2;
  HplField t3;
};

namespace detail {

inline std::array<std::size_t, 3> triple_shape(const FiniteMeasure& joint,
                                               const char* what) {
  if (!joint.space().is_product() || joint.space().factor_shape.size() != 3)
    throw std::invalid_argument(std::string(what) +
                                ": joint must live on a 3-factor product");
  const auto& s = joint.space().factor_shape;
  return {s[0], s[1], s[2]};
}

}  // namespace detail

// T1 = [1 : P(x1|x0)], T2 = [1 : P(x2|x0)], T3 = [1 : P(x1,x2|x0)] on each
// joint-positive cell.  Cells under a null X0 slice stay undefined.
inline SpectrumTriple spectrum_terms(const FiniteMeasure& joint) {
  const auto [n0, n1, n2] = detail::triple_shape(joint, "spectrum_terms");
  if (!joint.is_probability())
    throw std::invalid_argument("spectrum_terms: joint is not a probability");

  std::vector<double> m0(n0, 0.0);
  std::vector<double> m01(n0 * n1, 0.0);
  std::vector<double> m02(n0 * n2, 0.0);
  for (std::size_t x0 = 0; x0 < n0; ++x0)
    for (std::size_t x1 = 0; x1 < n1; ++x1)
      for (std::size_t x2 = 0; x2 < n2; ++x2) {
        const double w = joint.weight((x0 * n1 + x1) * n2 + x2);
        m0[x0] += w;
        m01[x0 * n1 + x1] += w;
        m02[x0 * n2 + x2] += w;
      }

  SpectrumTriple out{HplField(joint.space()), HplField(joint.space()),
                     HplField(joint.space())};
  for (std::size_t x0 = 0; x0 < n0; ++x0) {
    if (m0[x0] == 0.0) continue;
    for (std::size_t x1 = 0; x1 < n1; ++x1)
      for (std::size_t x2 = 0; x2 < n2; ++x2) {
        const std::size_t cell = (x0 * n1 + x1) * n2 + x2;
        if (joint.weight(cell) == 0.0) continue;
        out.t1.set(cell, hpl_from(1.0, m01[x0 * n1 + x1] / m0[x0]));
        out.t2.set(cell, hpl_from(1.0, m02[x0 * n2 + x2] / m0[x0]));
        out.t3.set(cell, hpl_from(1.0, joint.weight(cell) / m0[x0]));
      }
  }
  return out;
}

struct RegionParams {
  double r = 2.0;
  std::size_t y1_size = 2;
  std::size_t y2_size = 2;

  RegionParams(double r_, std::size_t y1, std::size_t y2)
      : r(r_), y1_size(y1), y2_size(y2) {
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("RegionParams: r must be positive finite");
    if (y1_size == 0 || y2_size == 0)
      throw std::invalid_argument("RegionParams: empty output alphabet");
  }

  HplPoint threshold1() const {
    return hpl_from(r * static_cast<double>(y1_size), 1.0);
  }
  HplPoint threshold2() const {
    return hpl_from(r * static_cast<double>(y2_size), 1.0);
  }
  HplPoint threshold3() const {
    return hpl_from(r * static_cast<double>(y1_size * y2_size), 1.0);
  }
};

// Membership in A_r: each T_i strictly inside the open interval
// ( [r|Y...|:1], [1:0] ).
inline bool in_region(const HplPoint& t1, const HplPoint& t2,
                      const HplPoint& t3, const RegionParams& params) {
  const auto inside = [](const HplPoint& t, const HplPoint& lo) {
    return hpl_less(lo, t) && !t.is_infinite();
  };
  return inside(t1, params.threshold1()) && inside(t2, params.threshold2()) &&
         inside(t3, params.threshold3());
}

struct RegionMasses {
  double outside = 0.0;
  // Mass of cells with some T exactly on an interval endpoint; flagged in
  // output rather than silently classified.
  double boundary = 0.0;
};

inline RegionMasses region_masses(const FiniteMeasure& joint,
                                  const RegionParams& params) {
  const SpectrumTriple t = spectrum_terms(joint);
  RegionMasses out;
  for (std::size_t cell = 0; cell < joint.space().cell_count; ++cell) {
    if (joint.weight(cell) == 0.0) continue;
    const HplPoint& a = t.t1.at(cell);
    const HplPoint& b = t.t2.at(cell);
    const HplPoint& c = t.t3.at(cell);
    if (!in_region(a, b, c, params)) out.outside += joint.weight(cell);
    if (a == params.threshold1() || b == params.threshold2() ||
        c == params.threshold3() || a.is_infinite() || b.is_infinite() ||
        c.is_infinite())
      out.boundary += joint.weight(cell);
  }
  return out;
}

// P{ (T^i)_{i=1}^3 not in A_r }, exactly.
inline double outside_prob(const FiniteMeasure& joint,
                           const RegionParams& params) {
  return region_masses(joint, params).outside;
}

// (sqrt(3)/2) r^{-1/2}; written so that r = 3 yields exactly 0.5.
inline double direct_slack(double r) {
  return (std::sqrt(3.0) / 2.0) / std::sqrt(r);
}

// Upper bound on the best achievable d(X|phi), valid for r > 1.
inline double direct_bound(const FiniteMeasure& joint,
                           const RegionParams& params) {
  if (!(params.r > 1.0))
    throw std::invalid_argument("direct_bound: requires r > 1");
  return outside_prob(joint, params) + direct_slack(params.r);
}

// Lower bound on every d(X|phi), valid for 0 < r < 1.  May be negative;
// reported as-is.
inline double converse_bound(const FiniteMeasure& joint,
                             const RegionParams& params) {
  if (!(params.r > 0.0 && params.r < 1.0))
    throw std::invalid_argument("converse_bound: requires 0 < r < 1");
  return outside_prob(joint, params) - 3.0 * params.r;
}

struct ExtractorPair {
  std::vector<std::size_t> phi1;  // X1 cell -> Y1 symbol
  std::vector<std::size_t> phi2;  // X2 cell -> Y2 symbol
};

// d(X|phi): statistical distance between the extracted output (with side
// information X0) and X0 times independent uniforms.
inline double eval_extractor(const FiniteMeasure& joint,
                             const ExtractorPair& phi,
                             const RegionParams& params) {
  const auto [n0, n1, n2] = detail::triple_shape(joint, "eval_extractor");
  if (phi.phi1.size() != n1 || phi.phi2.size() != n2)
    throw std::invalid_argument("eval_extractor: extractor domain mismatch");
  for (std::size_t v : phi.phi1)
    if (v >= params.y1_size)
      throw std::invalid_argument("eval_extractor: phi1 range mismatch");
  for (std::size_t v : phi.phi2)
    if (v >= params.y2_size)
      throw std::invalid_argument("eval_extractor: phi2 range mismatch");

  const std::size_t y1 = params.y1_size, y2 = params.y2_size;
  GroundSpace target = GroundSpace::product({n0, y1, y2});
  std::vector<std::size_t> map(joint.space().cell_count);
  std::vector<double> m0(n0, 0.0);
  for (std::size_t x0 = 0; x0 < n0; ++x0)
    for (std::size_t x1 = 0; x1 < n1; ++x1)
      for (std::size_t x2 = 0; x2 < n2; ++x2) {
        const std::size_t cell = (x0 * n1 + x1) * n2 + x2;
        map[cell] = (x0 * y1 + phi.phi1[x1]) * y2 + phi.phi2[x2];
        m0[x0] += joint.weight(cell);
      }
  const FiniteMeasure output = push_forward(joint, map, target);

  const double u = 1.0 / static_cast<double>(y1 * y2);
  std::vector<double> ref(target.cell_count);
  for (std::size_t x0 = 0; x0 < n0; ++x0)
    for (std::size_t yy = 0; yy < y1 * y2; ++yy)
      ref[x0 * y1 * y2 + yy] = m0[x0] * u;
  return stat_distance(output, FiniteMeasure(target, std::move(ref)));
}

struct OracleResult {
  ExtractorPair best;
  double value = 0.0;
};

namespace detail {

// Lexicographic successor of a base-`radix` digit string, most significant
// digit first.  Returns false after the last map.
inline bool next_map(std::vector<std::size_t>& digits, std::size_t radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix) return true;
    digits[i] = 0;
  }
  return false;
}

inline double pair_count(std::size_t n1, std::size_t y1, std::size_t n2,
                         std::size_t y2) {
  return std::pow(static_cast<double>(y1), static_cast<double>(n1)) *
         std::pow(static_cast<double>(y2), static_cast<double>(n2));
}

}  // namespace detail

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 20;

// Exhaustive minimum of eval_extractor over all pairs; ties broken by the
// lexicographically smallest (phi1, phi2) encoding.
inline OracleResult best_extractor(
    const FiniteMeasure& joint, const RegionParams& params,
    std::uint64_t cap = kDefaultEnumerationCap) {
  const auto [n0, n1, n2] = detail::triple_shape(joint, "best_extractor");
  (void)n0;
  if (detail::pair_count(n1, params.y1_size, n2, params.y2_size) >
      static_cast<double>(cap))
    throw std::invalid_argument(
        "best_extractor: instance exceeds enumeration cap");

  OracleResult result;
  bool first = true;
  ExtractorPair phi{std::vector<std::size_t>(n1, 0),
                    std::vector<std::size_t>(n2, 0)};
  do {
    phi.phi2.assign(n2, 0);
    do {
      const double d = eval_extractor(joint, phi, params);
      if (first || d < result.value) {
        result.best = phi;
        result.value = d;
        first = false;
      }
    } while (detail::next_map(phi.phi2, params.y2_size));
  } while (detail::next_map(phi.phi1, params.y1_size));
  return result;
}

// Best of `trials` uniformly random extractor pairs from a seeded
// generator; reproducible given (seed, trials).
inline OracleResult random_binning_search(const FiniteMeasure& joint,
                                          const RegionParams& params,
                                          std::uint64_t trials,
                                          std::uint64_t seed) {
  const auto [n0, n1, n2] = detail::triple_shape(joint, "random_binning_search");
  (void)n0;
  if (trials == 0)
    throw std::invalid_argument("random_binning_search: trials must be >= 1");
  std::mt19937_64 gen(seed);
  OracleResult result;
  bool first = true;
  for (std::uint64_t t = 0; t < trials; ++t) {
    ExtractorPair phi{std::vector<std::size_t>(n1),
                      std::vector<std::size_t>(n2)};
    // Modulo keeps the draw bit-stable across standard libraries.
    for (auto& v : phi.phi1) v = gen() % params.y1_size;
    for (auto& v : phi.phi2) v = gen() % params.y2_size;
    const double d = eval_extractor(joint, phi, params);
    if (first || d < result.value) {
      result.best = std::move(phi);
      result.value = d;
      first = false;
    }
  }
  return result;
}

struct BoundRow {
  double r = 0.0;
  double outside = 0.0;
  double bound = 0.0;
  bool direct = false;     // direct (r > 1) vs converse (r < 1)
  double boundary = 0.0;   // flagged threshold-boundary mass
};

struct BoundSweep {
  std::vector<BoundRow> rows;
  double min_direct = std::numeric_limits<double>::quiet_NaN();
  double max_converse = std::numeric_limits<double>::quiet_NaN();
};

inline BoundSweep bound_sweep(const FiniteMeasure& joint, std::size_t y1,
                              std::size_t y2,
                              const std::vector<double>& r_grid) {
  BoundSweep sweep;
  for (double r : r_grid) {
    if (r == 1.0)
      throw std::invalid_argument("bound_sweep: r = 1 is covered by neither bound");
    RegionParams params(r, y1, y2);
    const RegionMasses masses = region_masses(joint, params);
    BoundRow row;
    row.r = r;
    row.outside = masses.outside;
    row.boundary = masses.boundary;
    row.direct = r > 1.0;
    row.bound = row.direct ? masses.outside + direct_slack(r)
                           : masses.outside - 3.0 * r;
    if (row.direct) {
      if (std::isnan(sweep.min_direct) || row.bound < sweep.min_direct)
        sweep.min_direct = row.bound;
    } else {
      if (std::isnan(sweep.max_converse) || row.bound > sweep.max_converse)
        sweep.max_converse = row.bound;
    }
    sweep.rows.push_back(row);
  }
  return sweep;
}

// Exceedance mass of the quantized T^3 field against the model's limiting
// spectrum, per level.  Exact closed-form comparison, no sampling.
inline ConvergenceReport spectrum_convergence(const GroundModel& model,
                                              const std::vector<int>& levels,
                                              double eps) {
  if (std::holds_alternative<FiniteTriple>(model))
    throw std::invalid_argument(
        "spectrum_convergence: finite tables need no limit comparison");
  if (levels.empty())
    throw std::invalid_argument("spectrum_convergence: empty level list");
  if (!(eps > 0.0))
    throw std::invalid_argument("spectrum_convergence: eps must be > 0");

  ConvergenceReport report{"spectrum", levels, {}, eps};
  for (int n : levels) {
    const QuantizedTriple q = quantize_model(model, n);
    const SpectrumTriple terms = spectrum_terms(q.joint);
    double mass = 0.0;
    for (std::size_t cell = 0; cell < q.joint.space().cell_count; ++cell) {
      if (q.joint.weight(cell) == 0.0) continue;
      HplPoint limit = HplPoint::infinity();
      if (const auto* am = std::get_if<AtomUniformMixture>(&model)) {
        const auto idx = q.joint.space().unflatten(cell);
        const double width = 1.0 / static_cast<double>(q.axes[1].cells);
        const auto atom_cell =
            static_cast<std::size_t>(std::floor(am->a / width));
        limit = idx[1] == atom_cell ? hpl_from(1.0, am->p)
                                    : HplPoint::infinity();
      } else {
        limit = hpl_from(2.0, 1.0);
      }
      if (hpl_dist(terms.t3.at(cell), limit) >= eps)
        mass += q.joint.weight(cell);
    }
    report.errors.push_back(mass);
  }
  return report;
}

}  // namespace ispec
