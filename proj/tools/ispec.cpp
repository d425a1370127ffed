// Command-line surface: bound sweeps, the exhaustive extractor oracle,
// quantization convergence experiments, and the self-check suites.
// Reruns with identical configuration produce byte-identical output.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ispec/format.hpp"
#include "ispec/measure.hpp"
#include "ispec/quantize.hpp"
#include "ispec/rng.hpp"
#include "ispec/selfcheck.hpp"
#include "ispec/serialize.hpp"
#include "ispec/sources.hpp"

namespace {

using ispec::detail::format_double;

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  const auto range_pos = text.find("..");
  if (range_pos != std::string::npos) {
    const int lo = std::stoi(text.substr(0, range_pos));
    const int hi = std::stoi(text.substr(range_pos + 2));
    if (lo > hi) throw std::invalid_argument("levels: empty range " + text);
    for (int n = lo; n <= hi; ++n) levels.push_back(n);
    return levels;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) levels.push_back(std::stoi(item));
  if (levels.empty()) throw std::invalid_argument("levels: empty list");
  return levels;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
  return grid;
}

ispec::GroundModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ispec::parse_source_spec(buf.str());
}

void write_output(const std::optional<std::string>& path,
                  const std::string& content) {
  if (!path) {
    std::cout << content;
    return;
  }
  std::ofstream out(*path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + *path);
  out << content;
}

std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

struct CommonOpts {
  std::string input;
  std::optional<std::string> output;
  std::string format = "csv";
  std::string r_grid_text;
  std::string levels_text;
  double eps = 0.01;
  std::size_t y1 = 2;
  std::size_t y2 = 2;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::uint64_t cap = ispec::kDefaultEnumerationCap;
};

// Quantizes a continuous model at `level`; finite tables pass through.
ispec::FiniteMeasure model_joint(const ispec::GroundModel& model, int level,
                                 std::string& level_tag) {
  if (const auto* ft = std::get_if<ispec::FiniteTriple>(&model)) {
    level_tag = "exact";
    return ft->joint();
  }
  level_tag = std::to_string(level);
  return ispec::quantize_model(model, level).joint;
}

int cmd_bounds(const CommonOpts& opt) {
  const ispec::GroundModel model = load_model(opt.input);
  const std::vector<double> grid = parse_grid(opt.r_grid_text);
  const int level = opt.levels_text.empty() ? 3 : parse_levels(opt.levels_text).back();
  std::string level_tag;
  const ispec::FiniteMeasure joint = model_joint(model, level, level_tag);
  const ispec::BoundSweep sweep = ispec::bound_sweep(joint, opt.y1, opt.y2, grid);

  for (const auto& row : sweep.rows)
    if (row.boundary > 0.0)
      std::cerr << "warning: spectrum value exactly on a threshold at r="
                << format_double(row.r) << " (mass "
                << format_double(row.boundary) << ")\n";

  if (opt.format == "json") {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : sweep.rows)
      rows.push_back({{"r", row.r},
                      {"outside_prob", row.outside},
                      {"kind", row.direct ? "direct" : "converse"},
                      {"bound", row.bound},
                      {"boundary_mass", row.boundary}});
    nlohmann::json j = {{"command", "bounds"},
                        {"level", level_tag},
                        {"y1", opt.y1},
                        {"y2", opt.y2},
                        {"rows", rows}};
    if (!std::isnan(sweep.min_direct)) j["min_direct"] = sweep.min_direct;
    if (!std::isnan(sweep.max_converse)) j["max_converse"] = sweep.max_converse;
    write_output(opt.output, j.dump(2) + "\n");
  } else {
    std::ostringstream out;
    out << "# command=bounds level=" << level_tag << " y1=" << opt.y1
        << " y2=" << opt.y2 << "\n";
    out << "r,outside_prob,kind,bound,boundary_mass\n";
    for (const auto& row : sweep.rows)
      out << format_double(row.r) << ',' << format_double(row.outside) << ','
          << (row.direct ? "direct" : "converse") << ','
          << format_double(row.bound) << ',' << format_double(row.boundary)
          << '\n';
    if (!std::isnan(sweep.min_direct))
      out << "# min_direct=" << format_double(sweep.min_direct) << "\n";
    if (!std::isnan(sweep.max_converse))
      out << "# max_converse=" << format_double(sweep.max_converse) << "\n";
    write_output(opt.output, out.str());
  }
  return 0;
}

int cmd_oracle(const CommonOpts& opt) {
  const ispec::GroundModel model = load_model(opt.input);
  const int level = opt.levels_text.empty() ? 3 : parse_levels(opt.levels_text).back();
  std::string level_tag;
  const ispec::FiniteMeasure joint = model_joint(model, level, level_tag);
  const auto shape = joint.space().factor_shape;

  ispec::RegionParams base(2.0, opt.y1, opt.y2);
  ispec::OracleResult result;
  std::string method;
  const double pairs = std::pow(static_cast<double>(opt.y1),
                                static_cast<double>(shape[1])) *
                       std::pow(static_cast<double>(opt.y2),
                                static_cast<double>(shape[2]));
  if (pairs <= static_cast<double>(opt.cap)) {
    result = ispec::best_extractor(joint, base, opt.cap);
    method = "exhaustive";
  } else if (opt.trials > 0) {
    std::cerr << "warning: instance exceeds enumeration cap; falling back to "
                 "random binning with " << opt.trials << " trials\n";
    result = ispec::random_binning_search(joint, base, opt.trials, opt.seed);
    method = "random_binning";
  } else {
    std::cerr << "error: instance exceeds enumeration cap and --trials is "
                 "not configured\n";
    return 1;
  }

  // Sandwich verdict against the configured r grid.  Random binning only
  // upper-bounds the optimum, so the direct side is not checked there.
  bool pass = true;
  std::vector<double> grid =
      opt.r_grid_text.empty() ? std::vector<double>{} : parse_grid(opt.r_grid_text);
  for (double r : grid) {
    if (r == 1.0) {
      std::cerr << "error: r = 1 is covered by neither bound\n";
      return 1;
    }
    if (r > 1.0) {
      if (method == "exhaustive" &&
          result.value > ispec::direct_bound(joint, ispec::RegionParams(r, opt.y1, opt.y2)) + 1e-9)
        pass = false;
    } else {
      if (ispec::converse_bound(joint, ispec::RegionParams(r, opt.y1, opt.y2)) >
          result.value + 1e-9)
        pass = false;
    }
  }

  if (opt.format == "json") {
    nlohmann::json j = {{"command", "oracle"},
                        {"level", level_tag},
                        {"method", method},
                        {"value", result.value},
                        {"extractor", ispec::to_json(result.best)},
                        {"verdict", pass ? "PASS" : "FAIL"}};
    write_output(opt.output, j.dump(2) + "\n");
  } else {
    std::ostringstream out;
    out << "# command=oracle level=" << level_tag << " method=" << method
        << "\n";
    out << "value,phi1,phi2,verdict\n";
    out << format_double(result.value) << ",\"" << join_indices(result.best.phi1)
        << "\",\"" << join_indices(result.best.phi2) << "\","
        << (pass ? "PASS" : "FAIL") << '\n';
    write_output(opt.output, out.str());
  }
  return pass ? 0 : 1;
}

// Demonstration instantiations of the generic error chains on a model's
// finest quantization grid (see README for the exact choices).
void append_extra_chains(const ispec::GroundModel& model,
                         const std::vector<int>& levels, double eps,
                         const std::vector<std::string>& chains,
                         std::ostringstream& csv, nlohmann::json& extra) {
  const ispec::DyadicChain dc = ispec::dyadic_chain(model, levels);
  const ispec::QuantizedTriple& fine = dc.per_level.back();
  const ispec::SpectrumTriple terms = ispec::spectrum_terms(fine.joint);

  // kappa coordinate of T^3, extended by 0 off the support.
  std::vector<double> kappa(fine.joint.space().cell_count, 0.0);
  for (std::size_t cell = 0; cell < kappa.size(); ++cell)
    if (terms.t3.defined(cell)) kappa[cell] = terms.t3.at(cell).kappa();
  const ispec::MeasurableFunction f(fine.joint.space(), kappa);

  std::vector<ispec::ConvergenceReport> reports;
  for (const std::string& name : chains) {
    if (name == "l1") {
      reports.push_back(ispec::l1_error_chain(f, fine.joint, dc.chain));
    } else if (name == "inmeasure") {
      reports.push_back(
          ispec::in_measure_error_chain(f, fine.joint, fine.joint, eps, dc.chain));
    } else if (name == "kernel") {
      // Conditional-kernel chain on the X0 axis.
      const auto dis = ispec::disintegrate(fine.joint, 1);
      const int finest = levels.back();
      ispec::RefinementChain x0_chain{dis.marginal.space(), levels, {}};
      for (int n : levels) {
        const int shift = fine.axes[0].dyadic ? finest - n : 0;
        std::vector<std::size_t> labels(dis.marginal.space().cell_count);
        for (std::size_t c = 0; c < labels.size(); ++c) labels[c] = c >> shift;
        x0_chain.partitions.emplace_back(dis.marginal.space(), std::move(labels));
      }
      x0_chain.validate();
      reports.push_back(ispec::kernel_error_chain(dis.marginal, dis.kernel, x0_chain));
    } else if (name == "hpl") {
      // Joint against the product of its marginals, exceedance under the joint.
      const auto dis = ispec::disintegrate(fine.joint, 1);
      std::vector<double> yw(dis.kernel.target().cell_count, 0.0);
      for (std::size_t x = 0; x < dis.marginal.space().cell_count; ++x)
        for (std::size_t y = 0; y < yw.size(); ++y)
          yw[y] += dis.marginal.weight(x) * dis.kernel.row(x).weight(y);
      std::vector<std::vector<double>> rows(dis.marginal.space().cell_count, yw);
      ispec::Kernel constant(dis.marginal.space(), dis.kernel.target(), rows);
      ispec::FiniteMeasure indep = ispec::kernel_product(dis.marginal, constant);
      ispec::FiniteMeasure indep_on_grid(fine.joint.space(), indep.weights());
      reports.push_back(ispec::hpl_error_chain(fine.joint, indep_on_grid,
                                               fine.joint, eps, dc.chain));
    } else {
      throw std::invalid_argument("unknown chain \"" + name + "\"");
    }
  }
  for (const auto& report : reports) {
    csv << "# chain=" << report.quantity << "\n" << report.to_csv();
    extra.push_back(report.to_json());
  }
}

int cmd_quantize_convergence(const CommonOpts& opt,
                             const std::vector<std::string>& chains) {
  const ispec::GroundModel model = load_model(opt.input);
  if (std::holds_alternative<ispec::FiniteTriple>(model)) {
    std::cerr << "error: quantize-convergence requires a continuous model\n";
    return 1;
  }
  if (opt.levels_text.empty()) {
    std::cerr << "error: --levels is required\n";
    return 1;
  }
  const std::vector<int> levels = parse_levels(opt.levels_text);
  const ispec::ConvergenceReport report =
      ispec::spectrum_convergence(model, levels, opt.eps);

  std::ostringstream csv;
  csv << "# command=quantize-convergence eps=" << format_double(opt.eps)
      << "\n";
  csv << report.to_csv();
  nlohmann::json extra = nlohmann::json::array();
  if (!chains.empty())
    append_extra_chains(model, levels, opt.eps, chains, csv, extra);

  if (opt.format == "json") {
    nlohmann::json j = {{"command", "quantize-convergence"},
                        {"spectrum", report.to_json()}};
    if (!extra.empty()) j["chains"] = extra;
    write_output(opt.output, j.dump(2) + "\n");
  } else {
    write_output(opt.output, csv.str());
  }
  return 0;
}

int cmd_check(std::uint64_t seed, const std::string& fault) {
  ispec::CheckConfig cfg;
  cfg.seed = seed;
  cfg.fault = fault;
  const auto results = ispec::run_all_checks(cfg);
  bool all_pass = true;
  for (const auto& res : results) {
    std::cout << "suite " << res.name << ": " << res.cases << " cases, "
              << res.failures << " failures ["
              << (res.passed() ? "PASS" : "FAIL") << "]\n";
    if (!res.passed()) {
      all_pass = false;
      std::cout << "  first failure: " << res.first_failure << "\n";
    }
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-shot information-spectrum toolkit"};
  app.require_subcommand(1);

  CommonOpts opt;
  std::vector<std::string> chains;
  std::string fault;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    auto* in = cmd->add_option("--input", opt.input, "source spec (JSON)");
    if (needs_input) in->required();
    cmd->add_option("--output", opt.output, "output file (default: stdout)");
    cmd->add_option("--format", opt.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--r-grid", opt.r_grid_text, "comma list of r values");
    cmd->add_option("--levels", opt.levels_text,
                    "comma list or a..b range of dyadic levels");
    cmd->add_option("--eps", opt.eps, "exceedance threshold");
    cmd->add_option("--y1", opt.y1, "output alphabet size |Y1|");
    cmd->add_option("--y2", opt.y2, "output alphabet size |Y2|");
    cmd->add_option("--trials", opt.trials, "random binning trial count");
    cmd->add_option("--seed", opt.seed, "random seed");
    cmd->add_option("--cap", opt.cap, "exhaustive enumeration cap");
  };

  auto* bounds = app.add_subcommand("bounds", "direct/converse bound sweep");
  add_common(bounds, true);
  bounds->get_option("--r-grid")->required();

  auto* oracle = app.add_subcommand("oracle", "exhaustive extractor oracle");
  add_common(oracle, true);

  auto* conv = app.add_subcommand("quantize-convergence",
                                  "per-level convergence reports");
  add_common(conv, true);
  conv->add_option("--chains", chains,
                   "extra error chains: l1, inmeasure, kernel, hpl")
      ->delimiter(',');

  auto* check = app.add_subcommand("check", "randomized verification suites");
  add_common(check, false);
  check->add_option("--inject-fault", fault,
                    "test mode: corrupt the named suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bounds->parsed()) return cmd_bounds(opt);
    if (oracle->parsed()) return cmd_oracle(opt);
    if (conv->parsed()) return cmd_quantize_convergence(opt, chains);
    if (check->parsed()) return cmd_check(opt.seed, fault);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
