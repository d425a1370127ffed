#pragma once

// Refinement experiments: exact approximation errors of conditional
// expectations, kernels and likelihood ratios along chains of finite sub
// sigma-algebras, reported per level.

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ispec/format.hpp"
#include "ispec/measure.hpp"
#include "ispec/sources.hpp"

namespace ispec {

// Nested partitions of a fixed fine ground space, one per dyadic level.
// The finest level equals the ground space.
struct RefinementChain {
  GroundSpace fine_space;
  std::vector<int> levels;          // strictly increasing
  std::vector<Partition> partitions;  // same order as levels

  void validate() const {
    if (levels.size() != partitions.size() || levels.empty())
      throw std::invalid_argument("RefinementChain: level/partition mismatch");
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
      if (levels[i] >= levels[i + 1])
        throw std::invalid_argument("RefinementChain: levels not increasing");
      if (!partitions[i + 1].refines(partitions[i]))
        throw std::invalid_argument("RefinementChain: not a refinement chain");
    }
    if (!(partitions.back() == Partition::finest(fine_space)))
      throw std::invalid_argument(
          "RefinementChain: finest level must be the ground space");
  }

  // Dyadic chain on a single axis of 2^max cells: level n groups cells
  // into blocks of 2^(max - n).
  static RefinementChain on_line(const std::vector<int>& levels) {
    if (levels.empty())
      throw std::invalid_argument("RefinementChain: empty level list");
    const int finest = levels.back();
    GroundSpace space = GroundSpace::simple(detail::pow2(finest));
    RefinementChain chain{space, levels, {}};
    for (int n : levels) {
      const int shift = finest - n;
      std::vector<std::size_t> labels(space.cell_count);
      for (std::size_t cell = 0; cell < space.cell_count; ++cell)
        labels[cell] = cell >> shift;
      chain.partitions.emplace_back(space, std::move(labels));
    }
    chain.validate();
    return chain;
  }
};

struct ConvergenceReport {
  std::string quantity;   // which error chain produced this report
  std::vector<int> levels;
  std::vector<double> errors;
  double eps = 0.0;       // threshold used by exceedance-style chains

  // CSV columns: level,error,eps (header row always emitted).
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

inline std::string ConvergenceReport::to_csv() const {
  std::ostringstream out;
  out << "level,error,eps\n";
  for (std::size_t i = 0; i < levels.size(); ++i)
    out << levels[i] << ',' << detail::format_double(errors[i]) << ','
        << detail::format_double(eps) << '\n';
  return out.str();
}

inline nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < levels.size(); ++i)
    rows.push_back({{"level", levels[i]}, {"error", errors[i]}});
  return {{"quantity", quantity}, {"eps", eps}, {"rows", rows}};
}

// Per level: mu|E[f|F_n] - f|, exactly.
inline ConvergenceReport l1_error_chain(const MeasurableFunction& f,
                                        const FiniteMeasure& mu,
                                        const RefinementChain& chain) {
  require_same_space(f.space, chain.fine_space, "l1_error_chain");
  require_same_space(mu.space(), chain.fine_space, "l1_error_chain");
  ConvergenceReport report{"l1", chain.levels, {}, 0.0};
  for (const Partition& part : chain.partitions) {
    const MeasurableFunction g = cond_expect(f, mu, part);
    double err = 0.0;
    for (std::size_t cell = 0; cell < f.space.cell_count; ++cell)
      err += std::abs(g.value[cell] - f.value[cell]) * mu.weight(cell);
    report.errors.push_back(err);
  }
  return report;
}

// Weighted L2 error along the chain; nonincreasing by the projection
// property, unlike the L1 sequence.
inline ConvergenceReport l2_error_chain(const MeasurableFunction& f,
                                        const FiniteMeasure& mu,
                                        const RefinementChain& chain) {
  require_same_space(f.space, chain.fine_space, "l2_error_chain");
  require_same_space(mu.space(), chain.fine_space, "l2_error_chain");
  ConvergenceReport report{"l2", chain.levels, {}, 0.0};
  for (const Partition& part : chain.partitions) {
    const MeasurableFunction g = cond_expect(f, mu, part);
    double err = 0.0;
    for (std::size_t cell = 0; cell < f.space.cell_count; ++cell) {
      const double d = g.value[cell] - f.value[cell];
      err += d * d * mu.weight(cell);
    }
    report.errors.push_back(err);
  }
  return report;
}

// Per level: nu{ |E_mu[f|F_n] - f| >= eps }, exactly, for nu << mu.
inline ConvergenceReport in_measure_error_chain(const MeasurableFunction& f,
                                                const FiniteMeasure& mu,
                                                const FiniteMeasure& nu,
                                                double eps,
                                                const RefinementChain& chain) {
  require_same_space(f.space, chain.fine_space, "in_measure_error_chain");
  require_same_space(mu.space(), chain.fine_space, "in_measure_error_chain");
  require_same_space(nu.space(), chain.fine_space, "in_measure_error_chain");
  if (!(eps > 0.0))
    throw std::invalid_argument("in_measure_error_chain: eps must be > 0");
  for (std::size_t cell = 0; cell < nu.space().cell_count; ++cell)
    if (mu.weight(cell) == 0.0 && nu.weight(cell) > 0.0)
      throw std::invalid_argument(
          "in_measure_error_chain: nu not absolutely continuous w.r.t. mu "
          "at cell " + std::to_string(cell));
  ConvergenceReport report{"in_measure", chain.levels, {}, eps};
  for (const Partition& part : chain.partitions) {
    const MeasurableFunction g = cond_expect(f, mu, part);
    double mass = 0.0;
    for (std::size_t cell = 0; cell < f.space.cell_count; ++cell)
      if (std::abs(g.value[cell] - f.value[cell]) >= eps)
        mass += nu.weight(cell);
    report.errors.push_back(mass);
  }
  return report;
}

// Per level: E_lambda D( atom-averaged kernel row, mu_x ), exactly.
inline ConvergenceReport kernel_error_chain(const FiniteMeasure& lambda,
                                            const Kernel& mu,
                                            const RefinementChain& chain) {
  require_same_space(lambda.space(), chain.fine_space, "kernel_error_chain");
  require_same_space(mu.source(), chain.fine_space, "kernel_error_chain");
  if (!lambda.is_probability() || !mu.is_probability_kernel())
    throw std::invalid_argument(
        "kernel_error_chain: requires probability lambda and kernel");
  const std::size_t ny = mu.target().cell_count;
  ConvergenceReport report{"kernel", chain.levels, {}, 0.0};
  for (const Partition& part : chain.partitions) {
    std::vector<double> atom_mass(part.atom_count(), 0.0);
    std::vector<std::vector<double>> atom_row(
        part.atom_count(), std::vector<double>(ny, 0.0));
    // When every lambda-positive cell of an atom carries the same row, the
    // conditional row is that row exactly, with no division round-off.
    std::vector<std::ptrdiff_t> rep(part.atom_count(), -1);
    std::vector<bool> mixed(part.atom_count(), false);
    for (std::size_t x = 0; x < lambda.space().cell_count; ++x) {
      const std::size_t a = part.atom_of(x);
      atom_mass[a] += lambda.weight(x);
      for (std::size_t y = 0; y < ny; ++y)
        atom_row[a][y] += lambda.weight(x) * mu.row(x).weight(y);
      if (lambda.weight(x) > 0.0) {
        if (rep[a] < 0) {
          rep[a] = static_cast<std::ptrdiff_t>(x);
        } else if (!mixed[a]) {
          const auto r = static_cast<std::size_t>(rep[a]);
          for (std::size_t y = 0; y < ny; ++y)
            if (mu.row(x).weight(y) != mu.row(r).weight(y)) {
              mixed[a] = true;
              break;
            }
        }
      }
    }
    double err = 0.0;
    for (std::size_t x = 0; x < lambda.space().cell_count; ++x) {
      if (lambda.weight(x) == 0.0) continue;
      const std::size_t a = part.atom_of(x);
      double pos = 0.0, neg = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        const double cond =
            mixed[a] ? atom_row[a][y] / atom_mass[a]
                     : mu.row(static_cast<std::size_t>(rep[a])).weight(y);
        const double d = cond - mu.row(x).weight(y);
        if (d > 0.0)
          pos += d;
        else
          neg -= d;
      }
      err += lambda.weight(x) * std::max(pos, neg);
    }
    report.errors.push_back(err);
  }
  return report;
}

// Per level: xi{ d_H( [d mu|F_n : d nu|F_n] at the containing atom,
//                     [d mu : d nu] at the cell ) >= eps }, for
// xi << mu + nu.
inline ConvergenceReport hpl_error_chain(const FiniteMeasure& mu,
                                         const FiniteMeasure& nu,
                                         const FiniteMeasure& xi, double eps,
                                         const RefinementChain& chain) {
  require_same_space(mu.space(), chain.fine_space, "hpl_error_chain");
  require_same_space(nu.space(), chain.fine_space, "hpl_error_chain");
  require_same_space(xi.space(), chain.fine_space, "hpl_error_chain");
  if (!(eps > 0.0))
    throw std::invalid_argument("hpl_error_chain: eps must be > 0");
  for (std::size_t cell = 0; cell < xi.space().cell_count; ++cell)
    if (mu.weight(cell) + nu.weight(cell) == 0.0 && xi.weight(cell) > 0.0)
      throw std::invalid_argument(
          "hpl_error_chain: xi not absolutely continuous w.r.t. mu + nu "
          "at cell " + std::to_string(cell));
  const HplField fine_ratio = likelihood_ratio(mu, nu);
  ConvergenceReport report{"hpl", chain.levels, {}, eps};
  for (const Partition& part : chain.partitions) {
    const FiniteMeasure mu_f = restrict(mu, part);
    const FiniteMeasure nu_f = restrict(nu, part);
    const HplField atom_ratio = likelihood_ratio(mu_f, nu_f);
    double mass = 0.0;
    for (std::size_t cell = 0; cell < mu.space().cell_count; ++cell) {
      if (!fine_ratio.defined(cell)) continue;  // xi-null by absolute continuity
      const std::size_t a = part.atom_of(cell);
      if (hpl_dist(atom_ratio.at(a), fine_ratio.at(cell)) >= eps)
        mass += xi.weight(cell);
    }
    report.errors.push_back(mass);
  }
  return report;
}

// Dyadic refinement chain on a model's quantization grid: the finest level
// is the ground space; coarser partitions regroup each dyadic axis.
// Consistent with coarsen().
struct DyadicChain {
  RefinementChain chain;
  std::vector<QuantizedTriple> per_level;  // same order as chain.levels
};

inline DyadicChain dyadic_chain(const GroundModel& model,
                                const std::vector<int>& levels) {
  if (levels.empty())
    throw std::invalid_argument("dyadic_chain: empty level list");
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    if (levels[i] >= levels[i + 1])
      throw std::invalid_argument("dyadic_chain: levels not increasing");
  const int min_level = std::holds_alternative<ShiftCoupled>(model) ? 1 : 0;
  if (levels.front() < min_level)
    throw std::invalid_argument("dyadic_chain: level below the model minimum");
  const int finest = levels.back();
  QuantizedTriple fine = quantize_model(model, finest);
  const GroundSpace& space = fine.joint.space();

  DyadicChain out;
  out.chain.fine_space = space;
  out.chain.levels = levels;
  for (int n : levels) {
    out.per_level.push_back(n == finest ? fine : coarsen(fine, n));
    const int shift = finest - n;
    const auto& coarse = out.per_level.back();
    std::array<std::size_t, 3> cshape = {coarse.axes[0].cells,
                                         coarse.axes[1].cells,
                                         coarse.axes[2].cells};
    GroundSpace cspace =
        GroundSpace::product({cshape[0], cshape[1], cshape[2]});
    std::vector<std::size_t> labels(space.cell_count);
    for (std::size_t cell = 0; cell < space.cell_count; ++cell) {
      auto idx = space.unflatten(cell);
      for (int axis = 0; axis < 3; ++axis)
        if (fine.axes[axis].dyadic) idx[axis] >>= shift;
      labels[cell] = cspace.flatten(idx);
    }
    out.chain.partitions.emplace_back(space, std::move(labels));
  }
  out.chain.validate();
  return out;
}

}  // namespace ispec
