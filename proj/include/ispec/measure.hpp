#pragma once

// Finite measurable spaces: partitions (finite sub sigma-algebras as
// cell -> atom labelings), finite measures, kernels, products, conditional
// expectations, statistical distance and likelihood-ratio fields.
//
// Everything here is a plain immutable value; all operations are pure
// functions, safe for concurrent use.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ispec/hpl.hpp"

namespace ispec {

inline constexpr double kMassTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Spaces

struct GroundSpace {
  std::size_t cell_count = 1;
  // Nonempty iff the space is a declared product X1 x X2 x ... with
  // row-major cell indexing; the entries multiply to cell_count.
  std::vector<std::size_t> factor_shape;

  static GroundSpace simple(std::size_t n) {
    if (n == 0) throw std::invalid_argument("GroundSpace: empty space");
    GroundSpace s;
    s.cell_count = n;
    return s;
  }

  static GroundSpace product(std::vector<std::size_t> shape) {
    if (shape.empty())
      throw std::invalid_argument("GroundSpace: empty product shape");
    std::size_t n = 1;
    for (std::size_t f : shape) {
      if (f == 0) throw std::invalid_argument("GroundSpace: zero-size factor");
      n *= f;
    }
    GroundSpace s;
    s.cell_count = n;
    s.factor_shape = std::move(shape);
    return s;
  }

  bool is_product() const { return !factor_shape.empty(); }

  // Factor sizes, treating a non-product space as a single factor.
  std::vector<std::size_t> factors() const {
    if (is_product()) return factor_shape;
    return {cell_count};
  }

  std::size_t flatten(std::span<const std::size_t> idx) const {
    const auto f = factors();
    if (idx.size() != f.size())
      throw std::invalid_argument("GroundSpace::flatten: rank mismatch");
    std::size_t cell = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (idx[i] >= f[i])
        throw std::out_of_range("GroundSpace::flatten: index out of range");
      cell = cell * f[i] + idx[i];
    }
    return cell;
  }

  std::vector<std::size_t> unflatten(std::size_t cell) const {
    if (cell >= cell_count)
      throw std::out_of_range("GroundSpace::unflatten: cell out of range");
    const auto f = factors();
    std::vector<std::size_t> idx(f.size());
    for (std::size_t i = f.size(); i-- > 0;) {
      idx[i] = cell % f[i];
      cell /= f[i];
    }
    return idx;
  }

  friend bool operator==(const GroundSpace& a, const GroundSpace& b) {
    return a.cell_count == b.cell_count && a.factor_shape == b.factor_shape;
  }
};

inline void require_same_space(const GroundSpace& a, const GroundSpace& b,
                               const char* what) {
  if (!(a == b))
    throw std::invalid_argument(std::string(what) + ": space mismatch");
}

// ---------------------------------------------------------------------------
// Partitions

// A finite sub sigma-algebra, represented by its atoms: a total surjective
// labeling cell -> atom.  Labels are normalized to first-occurrence order,
// so two partitions are equal iff their label arrays are equal.
class Partition {
 public:
  Partition(GroundSpace space, std::vector<std::size_t> atom_of)
      : space_(std::move(space)), atom_of_(std::move(atom_of)) {
    if (atom_of_.size() != space_.cell_count)
      throw std::invalid_argument("Partition: labeling not total");
    normalize();
  }

  static Partition finest(const GroundSpace& space) {
    std::vector<std::size_t> labels(space.cell_count);
    std::iota(labels.begin(), labels.end(), std::size_t{0});
    return Partition(space, std::move(labels));
  }

  static Partition trivial(const GroundSpace& space) {
    return Partition(space, std::vector<std::size_t>(space.cell_count, 0));
  }

  const GroundSpace& space() const { return space_; }
  std::size_t atom_count() const { return atom_count_; }
  std::size_t atom_of(std::size_t cell) const { return atom_of_.at(cell); }
  const std::vector<std::size_t>& labels() const { return atom_of_; }

  // True iff every atom of *this lies inside a single atom of coarser.
  bool refines(const Partition& coarser) const {
    require_same_space(space_, coarser.space_, "Partition::refines");
    std::vector<std::optional<std::size_t>> image(atom_count_);
    for (std::size_t cell = 0; cell < atom_of_.size(); ++cell) {
      auto& img = image[atom_of_[cell]];
      if (!img) {
        img = coarser.atom_of_[cell];
      } else if (*img != coarser.atom_of_[cell]) {
        return false;
      }
    }
    return true;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.space_ == b.space_ && a.atom_of_ == b.atom_of_;
  }

 private:
  void normalize() {
    std::unordered_map<std::size_t, std::size_t> seen;
    for (auto& label : atom_of_) {
      auto [it, inserted] = seen.emplace(label, seen.size());
      label = it->second;
    }
    atom_count_ = seen.size();
  }

  GroundSpace space_;
  std::vector<std::size_t> atom_of_;
  std::size_t atom_count_ = 0;
};

// Common refinement: atoms are the nonempty intersections of F-atoms with
// G-atoms.
inline Partition join_partitions(const Partition& f, const Partition& g) {
  require_same_space(f.space(), g.space(), "join_partitions");
  const std::size_t n = f.space().cell_count;
  std::vector<std::size_t> labels(n);
  for (std::size_t cell = 0; cell < n; ++cell)
    labels[cell] = f.atom_of(cell) * g.atom_count() + g.atom_of(cell);
  return Partition(f.space(), std::move(labels));
}

// Partition of the product space X x Y whose atom at (a,b) is the pair of
// the C-atom of a and the D-atom of b.
inline Partition product_partition(const Partition& c, const Partition& d) {
  GroundSpace xy = GroundSpace::product({c.space().cell_count,
                                         d.space().cell_count});
  std::vector<std::size_t> labels(xy.cell_count);
  for (std::size_t a = 0; a < c.space().cell_count; ++a)
    for (std::size_t b = 0; b < d.space().cell_count; ++b)
      labels[a * d.space().cell_count + b] =
          c.atom_of(a) * d.atom_count() + d.atom_of(b);
  return Partition(std::move(xy), std::move(labels));
}

// ---------------------------------------------------------------------------
// Measures, functions, kernels

class FiniteMeasure {
 public:
  FiniteMeasure(GroundSpace space, std::vector<double> weight)
      : space_(std::move(space)), weight_(std::move(weight)) {
    if (weight_.size() != space_.cell_count)
      throw std::invalid_argument("FiniteMeasure: weight size mismatch");
    for (std::size_t i = 0; i < weight_.size(); ++i) {
      if (!std::isfinite(weight_[i]) || weight_[i] < 0.0)
        throw std::invalid_argument("FiniteMeasure: invalid weight at cell " +
                                    std::to_string(i));
    }
  }

  static FiniteMeasure uniform(const GroundSpace& space) {
    return FiniteMeasure(space, std::vector<double>(
                                    space.cell_count,
                                    1.0 / static_cast<double>(space.cell_count)));
  }

  static FiniteMeasure point_mass(const GroundSpace& space, std::size_t cell,
                                  double mass = 1.0) {
    std::vector<double> w(space.cell_count, 0.0);
    w.at(cell) = mass;
    return FiniteMeasure(space, std::move(w));
  }

  const GroundSpace& space() const { return space_; }
  double weight(std::size_t cell) const { return weight_.at(cell); }
  const std::vector<double>& weights() const { return weight_; }

  double total_mass() const {
    return std::accumulate(weight_.begin(), weight_.end(), 0.0);
  }

  bool is_probability() const {
    return std::abs(total_mass() - 1.0) <= kMassTolerance;
  }

 private:
  GroundSpace space_;
  std::vector<double> weight_;
};

struct MeasurableFunction {
  GroundSpace space;
  std::vector<double> value;

  MeasurableFunction(GroundSpace s, std::vector<double> v)
      : space(std::move(s)), value(std::move(v)) {
    if (value.size() != space.cell_count)
      throw std::invalid_argument("MeasurableFunction: size mismatch");
    for (double x : value)
      if (!std::isfinite(x))
        throw std::invalid_argument("MeasurableFunction: non-finite value");
  }
};

// Per-source-cell measures on a common target space.
class Kernel {
 public:
  Kernel(GroundSpace source, GroundSpace target,
         std::vector<std::vector<double>> rows)
      : source_(std::move(source)), target_(std::move(target)) {
    if (rows.size() != source_.cell_count)
      throw std::invalid_argument("Kernel: row count mismatch");
    rows_.reserve(rows.size());
    for (auto& r : rows) rows_.emplace_back(target_, std::move(r));
  }

  const GroundSpace& source() const { return source_; }
  const GroundSpace& target() const { return target_; }
  const FiniteMeasure& row(std::size_t x) const { return rows_.at(x); }

  bool is_probability_kernel() const {
    for (const auto& r : rows_)
      if (!r.is_probability()) return false;
    return true;
  }

 private:
  GroundSpace source_;
  GroundSpace target_;
  std::vector<FiniteMeasure> rows_;
};

// A partial HPL-valued field: defined exactly on its support.
class HplField {
 public:
  explicit HplField(GroundSpace space)
      : space_(std::move(space)), point_(space_.cell_count) {}

  const GroundSpace& space() const { return space_; }

  void set(std::size_t cell, HplPoint p) { point_.at(cell) = p; }
  bool defined(std::size_t cell) const { return point_.at(cell).has_value(); }
  const HplPoint& at(std::size_t cell) const {
    const auto& p = point_.at(cell);
    if (!p)
      throw std::out_of_range("HplField: undefined at cell " +
                              std::to_string(cell));
    return *p;
  }

 private:
  GroundSpace space_;
  std::vector<std::optional<HplPoint>> point_;
};

// ---------------------------------------------------------------------------
// Operations

// sup_C |mu(C) - nu(C)| over all cell subsets C, valid for general finite
/// measures: max of the positive and negative parts of mu - nu.
inline double stat_distance(const FiniteMeasure& mu, const FiniteMeasure& nu) {
  require_same_space(mu.space(), nu.space(), "stat_distance");
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < mu.space().cell_count; ++i) {
    const double d = mu.weight(i) - nu.weight(i);
    if (d > 0.0)
      pos += d;
    else
      neg -= d;
  }
  return std::max(pos, neg);
}

// Atom-wise average of f under mu; 0 on mu-null atoms (a fixed version).
inline MeasurableFunction cond_expect(const MeasurableFunction& f,
                                      const FiniteMeasure& mu,
                                      const Partition& part) {
  require_same_space(f.space, mu.space(), "cond_expect");
  require_same_space(f.space, part.space(), "cond_expect");
  std::vector<double> mass(part.atom_count(), 0.0);
  std::vector<double> integral(part.atom_count(), 0.0);
  // When f is mu-a.s. constant on an atom the average is that value exactly,
  // with no division round-off; `uniform` tracks this case.
  constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> uniform(part.atom_count(), kUnset);
  std::vector<bool> mixed(part.atom_count(), false);
  for (std::size_t cell = 0; cell < f.space.cell_count; ++cell) {
    const std::size_t a = part.atom_of(cell);
    mass[a] += mu.weight(cell);
    integral[a] += f.value[cell] * mu.weight(cell);
    if (mu.weight(cell) > 0.0) {
      if (std::isnan(uniform[a]))
        uniform[a] = f.value[cell];
      else if (uniform[a] != f.value[cell])
        mixed[a] = true;
    }
  }
  std::vector<double> out(f.space.cell_count);
  for (std::size_t cell = 0; cell < f.space.cell_count; ++cell) {
    const std::size_t a = part.atom_of(cell);
    if (mass[a] <= 0.0)
      out[cell] = 0.0;
    else
      out[cell] = mixed[a] ? integral[a] / mass[a] : uniform[a];
  }
  return MeasurableFunction(f.space, std::move(out));
}

// Restriction of mu to the sub sigma-algebra: one weight per atom.
inline FiniteMeasure restrict(const FiniteMeasure& mu, const Partition& part) {
  require_same_space(mu.space(), part.space(), "restrict");
  std::vector<double> w(part.atom_count(), 0.0);
  for (std::size_t cell = 0; cell < mu.space().cell_count; ++cell)
    w[part.atom_of(cell)] += mu.weight(cell);
  return FiniteMeasure(GroundSpace::simple(part.atom_count()), std::move(w));
}

// The likelihood ratio [d mu : d nu]: the point [mu(x):nu(x)] on the
// support of mu + nu, undefined elsewhere.  Exists without absolute
// continuity.
inline HplField likelihood_ratio(const FiniteMeasure& mu,
                                 const FiniteMeasure& nu) {
  require_same_space(mu.space(), nu.space(), "likelihood_ratio");
  HplField field(mu.space());
  for (std::size_t cell = 0; cell < mu.space().cell_count; ++cell) {
    const double m = mu.weight(cell), n = nu.weight(cell);
    if (m + n > 0.0) field.set(cell, hpl_from(m, n));
  }
  return field;
}

// Conditional expectation of the ratio [f:g]: the per-atom point
// [E f : E g], defined on mu-positive atoms.  Requires [f:g] admissible
// on supp(mu).
inline HplField cond_ratio(const MeasurableFunction& f,
                           const MeasurableFunction& g,
                           const FiniteMeasure& mu, const Partition& part) {
  require_same_space(f.space, g.space, "cond_ratio");
  require_same_space(f.space, mu.space(), "cond_ratio");
  require_same_space(f.space, part.space(), "cond_ratio");
  for (std::size_t cell = 0; cell < f.space.cell_count; ++cell) {
    if (mu.weight(cell) == 0.0) continue;
    if (f.value[cell] < 0.0 || g.value[cell] < 0.0 ||
        (f.value[cell] == 0.0 && g.value[cell] == 0.0))
      throw std::invalid_argument("cond_ratio: [f:g] inadmissible at cell " +
                                  std::to_string(cell));
  }
  std::vector<double> mass(part.atom_count(), 0.0);
  std::vector<double> fi(part.atom_count(), 0.0), gi(part.atom_count(), 0.0);
  for (std::size_t cell = 0; cell < f.space.cell_count; ++cell) {
    const std::size_t a = part.atom_of(cell);
    mass[a] += mu.weight(cell);
    fi[a] += f.value[cell] * mu.weight(cell);
    gi[a] += g.value[cell] * mu.weight(cell);
  }
  HplField field(GroundSpace::simple(part.atom_count()));
  for (std::size_t a = 0; a < part.atom_count(); ++a)
    if (mass[a] > 0.0) field.set(a, hpl_from(fi[a], gi[a]));
  return field;
}

// The joint measure lambda x kernel on the product space: weight of (a,b)
// is lambda(a) * mu_a(b).  Reduces to the product measure for a constant
// kernel.
inline FiniteMeasure kernel_product(const FiniteMeasure& lambda,
                                    const Kernel& mu) {
  require_same_space(lambda.space(), mu.source(), "kernel_product");
  auto shape = lambda.space().factors();
  for (std::size_t f : mu.target().factors()) shape.push_back(f);
  GroundSpace prod = GroundSpace::product(std::move(shape));
  const std::size_t tc = mu.target().cell_count;
  std::vector<double> w(prod.cell_count);
  for (std::size_t a = 0; a < lambda.space().cell_count; ++a)
    for (std::size_t b = 0; b < tc; ++b)
      w[a * tc + b] = lambda.weight(a) * mu.row(a).weight(b);
  return FiniteMeasure(std::move(prod), std::move(w));
}

struct Disintegration {
  FiniteMeasure marginal;
  Kernel kernel;
};

// Splits a probability measure on a product space into the marginal over
// the first lead_factors factors and the conditional kernel to the rest.
// Rows at marginal-null points are uniform (fixed version).
inline Disintegration disintegrate(const FiniteMeasure& joint,
                                   std::size_t lead_factors = 1) {
  if (!joint.space().is_product())
    throw std::invalid_argument("disintegrate: not a product space");
  if (!joint.is_probability())
    throw std::invalid_argument("disintegrate: joint is not a probability");
  const auto& shape = joint.space().factor_shape;
  if (lead_factors == 0 || lead_factors >= shape.size())
    throw std::invalid_argument("disintegrate: bad factor split");

  std::vector<std::size_t> xshape(shape.begin(), shape.begin() + lead_factors);
  std::vector<std::size_t> yshape(shape.begin() + lead_factors, shape.end());
  GroundSpace xspace = xshape.size() == 1 ? GroundSpace::simple(xshape[0])
                                          : GroundSpace::product(xshape);
  GroundSpace yspace = yshape.size() == 1 ? GroundSpace::simple(yshape[0])
                                          : GroundSpace::product(yshape);
  const std::size_t nx = xspace.cell_count, ny = yspace.cell_count;

  std::vector<double> marg(nx, 0.0);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) marg[a] += joint.weight(a * ny + b);

  std::vector<std::vector<double>> rows(nx);
  for (std::size_t a = 0; a < nx; ++a) {
    rows[a].resize(ny);
    if (marg[a] > 0.0) {
      for (std::size_t b = 0; b < ny; ++b)
        rows[a][b] = joint.weight(a * ny + b) / marg[a];
    } else {
      std::fill(rows[a].begin(), rows[a].end(),
                1.0 / static_cast<double>(ny));
    }
  }
  return Disintegration{FiniteMeasure(xspace, std::move(marg)),
                        Kernel(xspace, yspace, std::move(rows))};
}

// d mu / d nu when mu << nu cellwise: mu(x)/nu(x) on supp(nu), 0 elsewhere.
inline MeasurableFunction rn_derivative(const FiniteMeasure& mu,
                                        const FiniteMeasure& nu) {
  require_same_space(mu.space(), nu.space(), "rn_derivative");
  std::vector<double> out(mu.space().cell_count, 0.0);
  for (std::size_t cell = 0; cell < mu.space().cell_count; ++cell) {
    if (nu.weight(cell) > 0.0) {
      out[cell] = mu.weight(cell) / nu.weight(cell);
    } else if (mu.weight(cell) > 0.0) {
      throw std::invalid_argument(
          "rn_derivative: absolute continuity fails at cell " +
          std::to_string(cell));
    }
  }
  return MeasurableFunction(mu.space(), std::move(out));
}

// Image measure under a cellwise map into target.
inline FiniteMeasure push_forward(const FiniteMeasure& mu,
                                  std::span<const std::size_t> map,
                                  const GroundSpace& target) {
  if (map.size() != mu.space().cell_count)
    throw std::invalid_argument("push_forward: map not total");
  std::vector<double> w(target.cell_count, 0.0);
  for (std::size_t cell = 0; cell < mu.space().cell_count; ++cell) {
    if (map[cell] >= target.cell_count)
      throw std::out_of_range("push_forward: map value out of range at cell " +
                              std::to_string(cell));
    w[map[cell]] += mu.weight(cell);
  }
  return FiniteMeasure(target, std::move(w));
}

// Integral mu(f).
inline double integrate(const MeasurableFunction& f, const FiniteMeasure& mu) {
  require_same_space(f.space, mu.space(), "integrate");
  double s = 0.0;
  for (std::size_t cell = 0; cell < f.space.cell_count; ++cell)
    s += f.value[cell] * mu.weight(cell);
  return s;
}

}  // namespace ispec
