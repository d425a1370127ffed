#include <catch_amalgamated.hpp>

#include "ispec/sources.hpp"

using namespace ispec;

TEST_CASE("atom-uniform quantization closed form") {
  const GroundModel model = AtomUniformMixture(0.5, 1.0 / 3.0);
  const auto q = quantize_model(model, 1);
  // Atom at 1/3 falls in cell 0 of the two-cell grid.
  CHECK(q.joint.space().factor_shape == std::vector<std::size_t>{1, 2, 1});
  CHECK(q.joint.weight(0) == 0.75);
  CHECK(q.joint.weight(1) == 0.25);
  CHECK(q.joint.is_probability());
}

TEST_CASE("shift-coupled quantization has exact half conditionals") {
  const GroundModel model = ShiftCoupled{};
  for (int n = 1; n <= 6; ++n) {
    const auto q = quantize_model(model, n);
    const std::size_t n0 = q.axes[0].cells;
    const std::size_t n1 = q.axes[1].cells;
    REQUIRE(n1 == 2 * n0);
    REQUIRE(q.joint.is_probability());
    for (std::size_t k = 0; k < n0; ++k) {
      double row_mass = 0.0;
      std::size_t support = 0;
      for (std::size_t j = 0; j < n1; ++j) {
        const double w = q.joint.weight(k * n1 + j);
        row_mass += w;
        if (w > 0.0) {
          ++support;
          // Conditional mass is exactly one half.
          REQUIRE(w * 2.0 * static_cast<double>(n0) == 1.0);
        }
      }
      REQUIRE(support == 2);
      REQUIRE(row_mass * static_cast<double>(n0) == 1.0);
    }
  }
  CHECK_THROWS_AS(quantize_model(model, 0), std::invalid_argument);
}

TEST_CASE("finite triples are their own quantization") {
  const FiniteTriple table({1, 2, 1}, {0.6, 0.4});
  const GroundModel model = table;
  const auto q = quantize_model(model, 5);
  CHECK(q.joint.weights() == table.table);
}

TEST_CASE("coarsening consistency across all level pairs") {
  const std::vector<GroundModel> models = {
      AtomUniformMixture(0.5, 1.0 / 3.0), AtomUniformMixture(0.25, 0.7),
      ShiftCoupled{}};
  for (const auto& model : models) {
    const bool shift = std::holds_alternative<ShiftCoupled>(model);
    const int lo = shift ? 1 : 0;
    const int hi = shift ? 8 : 12;
    for (int n = lo; n <= hi; ++n) {
      const auto fine = quantize_model(model, n);
      for (int m = lo; m <= n; ++m) {
        const auto coarse = coarsen(fine, m);
        const auto direct = quantize_model(model, m);
        REQUIRE(coarse.joint.space() == direct.joint.space());
        for (std::size_t cell = 0; cell < coarse.joint.space().cell_count;
             ++cell)
          REQUIRE(coarse.joint.weight(cell) == direct.joint.weight(cell));
      }
    }
  }
}

TEST_CASE("coarsen rejects bad levels") {
  const auto q = quantize_model(AtomUniformMixture(0.5, 0.1), 3);
  CHECK_THROWS_AS(coarsen(q, 4), std::invalid_argument);
  CHECK(coarsen(q, 3).joint.weights() == q.joint.weights());
}

TEST_CASE("atom cell mass decreases to p") {
  const AtomUniformMixture am(0.5, 1.0 / 3.0);
  const GroundModel model = am;
  double prev = 1.0 + 1.0;
  for (int n = 0; n <= 12; ++n) {
    const auto q = quantize_model(model, n);
    const auto atom_cell = static_cast<std::size_t>(
        std::floor(am.a * static_cast<double>(q.axes[1].cells)));
    const double mass = q.joint.weight(atom_cell);
    REQUIRE(mass < prev);
    REQUIRE(mass > am.p);
    prev = mass;
  }
  CHECK(prev == Catch::Approx(0.5).margin(1e-3));
}

TEST_CASE("true_spectrum limit laws") {
  const auto two_point = true_spectrum(AtomUniformMixture(0.5, 0.3));
  REQUIRE(two_point.points.size() == 2);
  CHECK(two_point.points[0].first == hpl_from(2, 1));
  CHECK(two_point.points[0].second == 0.5);
  CHECK(two_point.points[1].first == HplPoint::infinity());
  CHECK(two_point.points[1].second == 0.5);

  const auto quarter = true_spectrum(AtomUniformMixture(0.25, 0.3));
  CHECK(quarter.points[0].first == hpl_from(4, 1));
  CHECK(quarter.points[0].second == 0.25);
  CHECK(quarter.points[1].second == 0.75);

  const auto shift = true_spectrum(ShiftCoupled{});
  REQUIRE(shift.points.size() == 1);
  CHECK(shift.points[0].first == hpl_from(2, 1));
  CHECK(shift.points[0].second == 1.0);

  CHECK_THROWS_AS(true_spectrum(FiniteTriple({1, 2, 1}, {0.5, 0.5})),
                  std::invalid_argument);
}

TEST_CASE("parse_source_spec accepts the documented schema") {
  CHECK(std::holds_alternative<ShiftCoupled>(
      parse_source_spec(std::string(R"({"variant":"shift_coupled"})"))));

  const auto am = parse_source_spec(
      std::string(R"({"variant":"atom_uniform","p":0.5,"a":0.3333})"));
  REQUIRE(std::holds_alternative<AtomUniformMixture>(am));
  CHECK(std::get<AtomUniformMixture>(am).p == 0.5);

  const auto ft = parse_source_spec(std::string(
      R"({"variant":"finite","shape":[1,2,1],"table":[0.6,0.4]})"));
  REQUIRE(std::holds_alternative<FiniteTriple>(ft));
}

TEST_CASE("parse_source_spec rejects bad documents") {
  CHECK_THROWS_AS(parse_source_spec(std::string("not json")),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_source_spec(std::string(R"({"variant":"nope"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      parse_source_spec(std::string(R"({"variant":"atom_uniform","p":1.5,"a":0})")),
      std::invalid_argument);
  CHECK_THROWS_AS(
      parse_source_spec(std::string(R"({"variant":"atom_uniform","p":0.5})")),
      std::invalid_argument);
  // Table mass check.
  CHECK_THROWS_AS(
      parse_source_spec(std::string(
          R"({"variant":"finite","shape":[1,2,1],"table":[0.6,0.6]})")),
      std::invalid_argument);
}
