#include <random>

#include <catch_amalgamated.hpp>

#include "ispec/quantize.hpp"
#include "ispec/selfcheck.hpp"

using namespace ispec;

namespace {

// Independent oracle: sup over all cell subsets by direct enumeration.
double brute_force_stat_distance(const FiniteMeasure& mu,
                                 const FiniteMeasure& nu) {
  const std::size_t n = mu.space().cell_count;
  REQUIRE(n <= 20);
  double best = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double diff = 0.0;
    for (std::size_t c = 0; c < n; ++c)
      if (mask & (std::size_t{1} << c)) diff += mu.weight(c) - nu.weight(c);
    best = std::max(best, std::abs(diff));
  }
  return best;
}

}  // namespace

TEST_CASE("stat_distance matches the subset-enumeration oracle") {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 30; ++i) {
    const std::size_t n = 2 + gen() % 7;
    GroundSpace space = GroundSpace::simple(n);
    FiniteMeasure mu(space, detail::random_prob_vector(gen, n, 0.2));
    FiniteMeasure nu(space, detail::random_prob_vector(gen, n, 0.2));
    REQUIRE(stat_distance(mu, nu) ==
            Catch::Approx(brute_force_stat_distance(mu, nu)).margin(1e-14));
  }
}

TEST_CASE("l1 error chain on the ramp") {
  const auto chain = RefinementChain::on_line({0, 1, 3});
  GroundSpace space = chain.fine_space;
  REQUIRE(space.cell_count == 8);
  std::vector<double> ramp(8);
  for (int c = 0; c < 8; ++c) ramp[c] = c / 7.0;
  MeasurableFunction f(space, ramp);
  FiniteMeasure mu = FiniteMeasure::uniform(space);

  const auto report = l1_error_chain(f, mu, chain);
  REQUIRE(report.errors.size() == 3);
  // Two-atom level: per-atom mean deviations (3,1,1,3)/14 weighted 1/8.
  CHECK(report.errors[1] == Catch::Approx(1.0 / 7.0).margin(1e-15));
  CHECK(report.errors[2] == 0.0);

  MeasurableFunction constant(space, std::vector<double>(8, 0.4));
  for (double err : l1_error_chain(constant, mu, chain).errors)
    CHECK(err == 0.0);
}

TEST_CASE("in-measure error chain on the ramp") {
  const auto chain = RefinementChain::on_line({0, 1, 3});
  GroundSpace space = chain.fine_space;
  std::vector<double> ramp(8);
  for (int c = 0; c < 8; ++c) ramp[c] = c / 7.0;
  MeasurableFunction f(space, ramp);
  FiniteMeasure mu = FiniteMeasure::uniform(space);

  const auto report = in_measure_error_chain(f, mu, mu, 0.2, chain);
  // Deviations at the 2-atom level are (3,1,1,3)/14 per half; cells with
  // deviation >= 0.2 are the outer pair of each atom.
  CHECK(report.errors[1] == 0.5);
  CHECK(report.errors[2] == 0.0);
  CHECK(report.eps == 0.2);

  for (double err : report.errors) {
    CHECK(err >= 0.0);
    CHECK(err <= mu.total_mass());
  }

  FiniteMeasure not_ac(space, {0, 0, 0, 0, 0, 0, 0, 1});
  FiniteMeasure mu_gap(space, {0.2, 0.2, 0.2, 0.2, 0.1, 0.05, 0.05, 0.0});
  CHECK_THROWS_AS(in_measure_error_chain(f, mu_gap, not_ac, 0.2, chain),
                  std::invalid_argument);
}

TEST_CASE("kernel error chain examples") {
  const auto chain = RefinementChain::on_line({0, 1});
  GroundSpace xs = chain.fine_space;
  REQUIRE(xs.cell_count == 2);
  GroundSpace ys = GroundSpace::simple(2);
  FiniteMeasure lambda = FiniteMeasure::uniform(xs);

  Kernel point_rows(xs, ys, {{1.0, 0.0}, {0.0, 1.0}});
  const auto report = kernel_error_chain(lambda, point_rows, chain);
  // Trivial partition averages the rows to (0.5,0.5), distance 0.5 to each.
  CHECK(report.errors[0] == 0.5);
  CHECK(report.errors[1] == 0.0);

  Kernel constant(xs, ys, {{0.3, 0.7}, {0.3, 0.7}});
  for (double err : kernel_error_chain(lambda, constant, chain).errors)
    CHECK(err == 0.0);

  Kernel subprob(xs, ys, {{0.5, 0.0}, {0.0, 1.0}});
  CHECK_THROWS_AS(kernel_error_chain(lambda, subprob, chain),
                  std::invalid_argument);
}

TEST_CASE("hpl error chain example") {
  const auto chain = RefinementChain::on_line({1, 2});
  GroundSpace space = chain.fine_space;
  REQUIRE(space.cell_count == 4);
  FiniteMeasure mu(space, {1, 0, 0, 0});
  FiniteMeasure nu = FiniteMeasure::uniform(space);

  const auto report = hpl_error_chain(mu, nu, nu, 0.1, chain);
  // Left atom [1:0.5] (kappa 2/3) vs cells [1:0.25] (4/5) and [0:0.25] (0);
  // both deviate by >= 0.1, right atom matches its cells exactly.
  CHECK(report.errors[0] == 0.5);
  CHECK(report.errors[1] == 0.0);

  const auto same = hpl_error_chain(nu, nu, nu, 0.1, chain);
  for (double err : same.errors) CHECK(err == 0.0);
}

TEST_CASE("error chains hit zero at the finest level for random data") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto chain = RefinementChain::on_line({0, 2, 4, 6});
  GroundSpace space = chain.fine_space;
  FiniteMeasure mu(space,
                   detail::random_prob_vector(gen, space.cell_count, 0.1));
  std::vector<double> fv(space.cell_count);
  for (auto& v : fv) v = unif(gen);
  MeasurableFunction f(space, fv);

  CHECK(l1_error_chain(f, mu, chain).errors.back() == 0.0);
  CHECK(l2_error_chain(f, mu, chain).errors.back() == 0.0);
  CHECK(in_measure_error_chain(f, mu, mu, 0.01, chain).errors.back() == 0.0);

  FiniteMeasure nu(space,
                   detail::random_prob_vector(gen, space.cell_count, 0.1));
  CHECK(hpl_error_chain(mu, nu, mu, 0.01, chain).errors.back() == 0.0);

  // The L2 sequence is nonincreasing; L1 is not asserted monotone.
  const auto l2 = l2_error_chain(f, mu, chain);
  for (std::size_t i = 0; i + 1 < l2.errors.size(); ++i)
    CHECK(l2.errors[i + 1] <= l2.errors[i] + 1e-15);
}

TEST_CASE("dyadic_chain grouping arithmetic") {
  const GroundModel model = AtomUniformMixture(0.5, 1.0 / 3.0);
  const auto dc = dyadic_chain(model, {1, 2, 3});
  REQUIRE(dc.chain.fine_space.cell_count == 8);
  REQUIRE(dc.per_level.size() == 3);

  // Level-1 atom k contains fine x1 cells {4k,...,4k+3}.
  const Partition& level1 = dc.chain.partitions[0];
  for (std::size_t cell = 0; cell < 8; ++cell)
    CHECK(level1.atom_of(cell) == level1.atom_of(4 * (cell / 4)));
  CHECK(level1.atom_count() == 2);

  // Per-level joints agree with direct quantization.
  for (std::size_t i = 0; i < dc.chain.levels.size(); ++i) {
    const auto direct = quantize_model(model, dc.chain.levels[i]);
    CHECK(dc.per_level[i].joint.weights() == direct.joint.weights());
  }

  // Restriction of the fine joint along the chain matches coarse joints.
  for (std::size_t i = 0; i < dc.chain.levels.size(); ++i) {
    const auto restricted =
        restrict(dc.per_level.back().joint, dc.chain.partitions[i]);
    CHECK(restricted.total_mass() == Catch::Approx(1.0).margin(1e-15));
  }

  const auto single = dyadic_chain(model, {2});
  CHECK(single.chain.partitions.size() == 1);
  CHECK_THROWS_AS(dyadic_chain(model, std::vector<int>{3, 2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(dyadic_chain(GroundModel(ShiftCoupled{}),
                               std::vector<int>{0, 1}),
                  std::invalid_argument);
}

TEST_CASE("quantized atom ratio approaches the limit monotonically") {
  // d_H([1 : p+(1-p)2^-n], [1:p]) is strictly decreasing in n.
  const double p = 0.5;
  double prev = 1.0;
  for (int n = 0; n <= 12; ++n) {
    const double mass = p + (1.0 - p) * std::ldexp(1.0, -n);
    const double d = hpl_dist(hpl_from(1.0, mass), hpl_from(1.0, p));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("convergence report serialization") {
  ConvergenceReport report{"l1", {1, 2}, {0.5, 0.0}, 0.01};
  CHECK(report.to_csv() == "level,error,eps\n1,0.5,0.01\n2,0,0.01\n");
  const auto j = report.to_json();
  CHECK(j["quantity"] == "l1");
  CHECK(j["rows"].size() == 2);
}
