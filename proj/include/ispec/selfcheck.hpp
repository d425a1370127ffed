#pragma once

// Self-contained randomized verification suites behind the CLI `check`
// command: HPL axioms, the kernel-ratio and statistical-distance identities,
// conditional-expectation laws, and the direct/converse sandwich on small
// random instances.  Deterministic per seed.

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ispec/hpl.hpp"
#include "ispec/measure.hpp"
#include "ispec/rng.hpp"

namespace ispec {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool passed() const { return failures == 0; }
};

// Test-mode hook: when `fault` names a suite, that suite's comparison is
// deliberately corrupted so callers can verify failure reporting.
struct CheckConfig {
  std::uint64_t seed = 0;
  std::size_t hpl_cases = 10000;
  std::size_t identity_cases = 100;
  std::size_t cond_expect_cases = 100;
  std::size_t sandwich_cases = 50;
  std::string fault;
};

namespace detail {

inline double fault_offset(const CheckConfig& cfg, const char* suite) {
  return cfg.fault == suite ? 1e-6 : 0.0;
}

inline std::vector<double> random_prob_vector(std::mt19937_64& gen,
                                              std::size_t n,
                                              double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = (zero_fraction > 0.0 && unif(gen) < zero_fraction) ? 0.0 : unif(gen);
    total += x;
  }
  if (total == 0.0) {
    w[gen() % n] = 1.0;
    total = 1.0;
  }
  for (auto& x : w) x /= total;
  return w;
}

inline HplPoint random_hpl_point(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (gen() % 8) {
    case 0: return HplPoint::infinity();
    case 1: return HplPoint::zero();
    default: return hpl_from(unif(gen), unif(gen));
  }
}

template <typename Fail>
inline void record(SuiteResult& res, bool ok, Fail&& describe) {
  ++res.cases;
  if (!ok) {
    ++res.failures;
    if (res.first_failure.empty()) res.first_failure = describe();
  }
}

}  // namespace detail

// Metric axioms, total order, kappa compatibility, scale invariance and
// log monotonicity over random point triples.
inline SuiteResult check_hpl_axioms(const CheckConfig& cfg) {
  SuiteResult res{"hpl"};
  std::mt19937_64 gen(cfg.seed ^ 0x68706cULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-6, 1e6);
  const double off = detail::fault_offset(cfg, "hpl");
  for (std::size_t i = 0; i < cfg.hpl_cases; ++i) {
    const HplPoint p = detail::random_hpl_point(gen);
    const HplPoint q = detail::random_hpl_point(gen);
    const HplPoint w = detail::random_hpl_point(gen);
    const double dpq = hpl_dist(p, q) + off;
    bool ok = dpq >= 0.0 && dpq <= 1.0;
    ok = ok && hpl_dist(p, q) == hpl_dist(q, p);  // symmetry
    ok = ok && hpl_dist(p, p) == 0.0;
    ok = ok && hpl_dist(p, q) <= hpl_dist(p, w) + hpl_dist(w, q) + 1e-12;
    ok = ok && (hpl_leq(p, q) || hpl_leq(q, p));  // totality
    ok = ok && (!(hpl_leq(p, q) && hpl_leq(q, p)) || hpl_dist(p, q) == 0.0);
    ok = ok && hpl_leq(p, q) == (p.kappa() <= q.kappa());
    ok = ok && hpl_leq(p, HplPoint::infinity()) &&
         hpl_leq(HplPoint::zero(), p);
    // Scale invariance of the construction.
    const double r = unif(gen), s = unif(gen), t = scale(gen);
    if (r + s > 0.0) {
      const HplPoint a = hpl_from(r, s);
      const HplPoint b = hpl_from(t * r, t * s);
      ok = ok && hpl_dist(a, b) <= 1e-12;
    }
    // hpl_log strictly increasing on distinct interior points.
    if (p.kappa() > 0.0 && p.kappa() < 1.0 && q.kappa() > 0.0 &&
        q.kappa() < 1.0 && p.kappa() != q.kappa()) {
      ok = ok && ((p.kappa() < q.kappa()) == (hpl_log(p) < hpl_log(q)));
    }
    ok = ok && hpl_log(HplPoint::one()) == 0.0;
    detail::record(res, ok, [&] {
      std::ostringstream msg;
      msg << "hpl axiom violated for kappa triple (" << p.kappa() << ", "
          << q.kappa() << ", " << w.kappa() << ")";
      return msg.str();
    });
  }
  return res;
}

namespace detail {

struct KernelTripleInstance {
  FiniteMeasure lambda;
  Kernel mu;
  Kernel nu;
};

// Random probability lambda and rowwise mu << nu probability kernels.
inline KernelTripleInstance random_kernel_triple(std::mt19937_64& gen) {
  const std::size_t nx = 2 + gen() % 3;
  const std::size_t ny = 2 + gen() % 3;
  GroundSpace xs = GroundSpace::simple(nx);
  GroundSpace ys = GroundSpace::simple(ny);
  FiniteMeasure lambda(xs, random_prob_vector(gen, nx, 0.2));
  std::vector<std::vector<double>> mu_rows, nu_rows;
  for (std::size_t x = 0; x < nx; ++x) {
    auto nu_row = random_prob_vector(gen, ny, 0.3);
    auto mu_row = random_prob_vector(gen, ny, 0.2);
    // Force mu << nu cellwise, then renormalize mu.
    double total = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      if (nu_row[y] == 0.0) mu_row[y] = 0.0;
      total += mu_row[y];
    }
    if (total == 0.0) {
      for (std::size_t y = 0; y < ny; ++y)
        if (nu_row[y] > 0.0) {
          mu_row[y] = 1.0;
          total = 1.0;
          break;
        }
    }
    for (auto& v : mu_row) v /= total;
    nu_rows.push_back(std::move(nu_row));
    mu_rows.push_back(std::move(mu_row));
  }
  return {std::move(lambda), Kernel(xs, ys, std::move(mu_rows)),
          Kernel(xs, ys, std::move(nu_rows))};
}

}  // namespace detail

// Identity d(lambda mu)/d(lambda nu) = d mu_x / d nu_x on lambda-positive
// rows, for random rowwise absolutely continuous kernel triples.
inline SuiteResult check_kernel_ratio_identity(const CheckConfig& cfg) {
  SuiteResult res{"kernel_ratio"};
  std::mt19937_64 gen(cfg.seed ^ 0x74683033ULL);
  const double off = detail::fault_offset(cfg, "kernel_ratio");
  for (std::size_t i = 0; i < cfg.identity_cases; ++i) {
    const auto inst = detail::random_kernel_triple(gen);
    const FiniteMeasure lm = kernel_product(inst.lambda, inst.mu);
    const FiniteMeasure ln = kernel_product(inst.lambda, inst.nu);
    const MeasurableFunction joint_ratio = rn_derivative(lm, ln);
    const std::size_t ny = inst.mu.target().cell_count;
    double max_dev = off;
    for (std::size_t x = 0; x < inst.lambda.space().cell_count; ++x) {
      if (inst.lambda.weight(x) == 0.0) continue;
      const MeasurableFunction row_ratio =
          rn_derivative(inst.mu.row(x), inst.nu.row(x));
      for (std::size_t y = 0; y < ny; ++y) {
        if (inst.nu.row(x).weight(y) == 0.0) continue;
        max_dev = std::max(max_dev, std::abs(joint_ratio.value[x * ny + y] -
                                             row_ratio.value[y]));
      }
    }
    detail::record(res, max_dev < 1e-12, [&] {
      std::ostringstream msg;
      msg << "joint vs rowwise ratio deviation " << max_dev << " on instance "
          << i;
      return msg.str();
    });
  }
  return res;
}

// Identity D(lambda mu, lambda nu) = E_lambda D(mu_x, nu_x) for random
// probability kernel pairs.
inline SuiteResult check_stat_distance_identity(const CheckConfig& cfg) {
  SuiteResult res{"stat_distance"};
  std::mt19937_64 gen(cfg.seed ^ 0x636f3232ULL);
  const double off = detail::fault_offset(cfg, "stat_distance");
  for (std::size_t i = 0; i < cfg.identity_cases; ++i) {
    const auto inst = detail::random_kernel_triple(gen);
    const double joint =
        stat_distance(kernel_product(inst.lambda, inst.mu),
                      kernel_product(inst.lambda, inst.nu)) + off;
    double expected = 0.0;
    for (std::size_t x = 0; x < inst.lambda.space().cell_count; ++x)
      expected += inst.lambda.weight(x) *
                  stat_distance(inst.mu.row(x), inst.nu.row(x));
    detail::record(res, std::abs(joint - expected) < 1e-12, [&] {
      std::ostringstream msg;
      msg << "statistical distance mismatch |" << joint << " - " << expected
          << "| on instance " << i;
      return msg.str();
    });
  }
  return res;
}

// Averaging identity, tower law and L1 contraction for random measures,
// functions and nested partitions.
inline SuiteResult check_cond_expect_laws(const CheckConfig& cfg) {
  SuiteResult res{"cond_expect"};
  std::mt19937_64 gen(cfg.seed ^ 0x6365ULL);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const double off = detail::fault_offset(cfg, "cond_expect");
  for (std::size_t i = 0; i < cfg.cond_expect_cases; ++i) {
    const std::size_t n = 4 + gen() % 9;
    GroundSpace space = GroundSpace::simple(n);
    FiniteMeasure mu(space, detail::random_prob_vector(gen, n, 0.2));
    std::vector<double> fv(n);
    for (auto& v : fv) v = unif(gen);
    MeasurableFunction f(space, fv);

    // Coarse partition F, finer partition G = F join random.
    std::vector<std::size_t> coarse(n), extra(n);
    for (std::size_t c = 0; c < n; ++c) {
      coarse[c] = gen() % 2;
      extra[c] = gen() % 3;
    }
    Partition part_f(space, coarse);
    Partition part_g = join_partitions(part_f, Partition(space, extra));

    const MeasurableFunction ef = cond_expect(f, mu, part_f);
    const MeasurableFunction eg = cond_expect(f, mu, part_g);
    const MeasurableFunction tower = cond_expect(eg, mu, part_f);

    bool ok = true;
    // Averaging identity per positive F-atom.
    for (std::size_t a = 0; a < part_f.atom_count(); ++a) {
      double mass = 0.0, lhs = 0.0, rhs = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        if (part_f.atom_of(c) != a) continue;
        mass += mu.weight(c);
        lhs += ef.value[c] * mu.weight(c);
        rhs += f.value[c] * mu.weight(c);
      }
      if (mass > 0.0) ok = ok && std::abs(lhs - rhs) < 1e-12;
    }
    // Tower law on supp(mu).
    for (std::size_t c = 0; c < n; ++c)
      if (mu.weight(c) > 0.0)
        ok = ok && std::abs(tower.value[c] - ef.value[c]) < 1e-12 - off;
    // L1 contraction.
    double l1_f = 0.0, l1_ef = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      l1_f += std::abs(f.value[c]) * mu.weight(c);
      l1_ef += std::abs(ef.value[c]) * mu.weight(c);
    }
    ok = ok && l1_ef <= l1_f + 1e-12;
    detail::record(res, ok, [&] {
      std::ostringstream msg;
      msg << "conditional expectation law violated on instance " << i
          << " (space size " << n << ")";
      return msg.str();
    });
  }
  return res;
}

namespace detail {

inline FiniteTriple random_finite_triple(std::mt19937_64& gen) {
  const std::size_t n0 = 1 + gen() % 2;
  const std::size_t n1 = 1 + gen() % 4;
  const std::size_t n2 = 1 + gen() % 4;
  return FiniteTriple({n0, n1, n2},
                      random_prob_vector(gen, n0 * n1 * n2, 0.2));
}

}  // namespace detail

// converse_bound(r) <= best extractor value <= direct_bound(r') on random
// small instances, at slack 1e-9.
inline SuiteResult check_sandwich(const CheckConfig& cfg) {
  SuiteResult res{"sandwich"};
  std::mt19937_64 gen(cfg.seed ^ 0x73616e64ULL);
  const double off = detail::fault_offset(cfg, "sandwich");
  const std::vector<double> direct_rs = {1.5, 2.0, 4.0};
  const std::vector<double> converse_rs = {0.05, 0.1, 0.3};
  for (std::size_t i = 0; i < cfg.sandwich_cases; ++i) {
    const FiniteTriple model = detail::random_finite_triple(gen);
    const FiniteMeasure joint = model.joint();
    const RegionParams base(2.0, 2, 2);
    const OracleResult oracle = best_extractor(joint, base);
    bool ok = true;
    double worst = 0.0;
    for (double r : direct_rs) {
      const double ub = direct_bound(joint, RegionParams(r, 2, 2));
      worst = std::min(worst, ub - oracle.value);
      ok = ok && oracle.value <= ub + 1e-9 - off;
    }
    for (double r : converse_rs) {
      const double lb = converse_bound(joint, RegionParams(r, 2, 2));
      worst = std::min(worst, oracle.value - lb);
      ok = ok && lb <= oracle.value + 1e-9 - off;
    }
    detail::record(res, ok, [&] {
      std::ostringstream msg;
      msg << "sandwich violated by " << -worst << " on instance " << i
          << " with shape (" << model.shape[0] << "," << model.shape[1] << ","
          << model.shape[2] << ")";
      return msg.str();
    });
  }
  return res;
}

inline std::vector<SuiteResult> run_all_checks(const CheckConfig& cfg) {
  return {check_hpl_axioms(cfg), check_kernel_ratio_identity(cfg),
          check_stat_distance_identity(cfg), check_cond_expect_laws(cfg),
          check_sandwich(cfg)};
}

}  // namespace ispec
