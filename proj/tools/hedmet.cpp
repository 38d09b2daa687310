// Command-line front end for the demand-system toolkit: hedonic regressions,
// distance construction, system estimation, synthetic data and fit
// comparison.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hedmet/csv.hpp"
#include "hedmet/demand.hpp"
#include "hedmet/error.hpp"
#include "hedmet/estimator.hpp"
#include "hedmet/hedonic.hpp"
#include "hedmet/metrics.hpp"
#include "hedmet/panel.hpp"
#include "hedmet/pipeline.hpp"
#include "hedmet/synth.hpp"

namespace fs = std::filesystem;
using namespace hedmet;

namespace {

std::vector<std::string> calibration_types(const std::string& path) {
  std::vector<std::string> types;
  for (const auto& c : panel::load_calibration(path)) types.push_back(c.type);
  return types;
}

int cmd_hedonic(const std::string& input, const std::string& calibration,
                const std::string& form_name, const std::string& output) {
  const auto types = calibration_types(calibration);
  const auto purchases = panel::load_purchases(input, types);
  const auto fit = hedonic::fit_hedonic(purchases, hedonic::parse_form(form_name));
  hedonic::write_fit_csv(output, fit);
  std::cout << "wrote " << output << " (adjusted R2 " << fit.adjusted_r2 << ", N "
            << fit.n_obs << ")\n";
  return 0;
}

int cmd_distances(const std::string& purchases_path, const std::string& panel_path,
                  const std::string& calibration, const std::string& form_name,
                  const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto types = calibration_types(calibration);
  const auto purchases = panel::load_purchases(purchases_path, types);
  const auto mkt = panel::load_panel(panel_path);
  const auto inputs =
      pipeline::derive_inputs(mkt, purchases, hedonic::parse_form(form_name));
  for (const auto& name : inputs.distances.names()) {
    const std::string path = (fs::path(out_dir) / ("distance_" + name + ".csv")).string();
    metrics::write_matrix_csv(path, inputs.distances.get(name));
    std::cout << "wrote " << path << "\n";
  }
  std::vector<std::string> header = {"type", "closeness_index"};
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < inputs.features.types.size(); ++i)
    rows.push_back({inputs.features.types[i],
                    csv::fmt(inputs.closeness[static_cast<int>(i)])});
  const std::string chi_path = (fs::path(out_dir) / "closeness_index.csv").string();
  csv::write_file(chi_path, header, rows);
  std::cout << "wrote " << chi_path << "\n";
  return 0;
}

int cmd_estimate(const std::string& panel_path, const std::string& purchases_path,
                 const std::string& calibration, const std::string& model,
                 const std::vector<std::string>& distance_names,
                 const std::string& form_name, const std::string& baseline_path,
                 const std::string& drop_label, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto mkt = panel::load_panel(panel_path);
  const auto types = calibration_types(calibration);
  const auto purchases = panel::load_purchases(purchases_path, types);
  const auto inputs =
      pipeline::derive_inputs(mkt, purchases, hedonic::parse_form(form_name));

  int drop = -1;  // default: the last type, matching the usual convention
  if (!drop_label.empty()) {
    drop = type_index(mkt.types, drop_label);
    if (drop < 0) fail("cli: unknown type '", drop_label, "' for --drop");
  }

  demand::FitBundle bundle;
  bundle.variant = model;
  bundle.mean_share = inputs.mean_share;
  switch (demand::parse_variant(model)) {
    case demand::Variant::original:
      bundle.fit = demand::fit_original(mkt, drop);
      break;
    case demand::Variant::dm:
      bundle.fit = demand::fit_dm(
          mkt, inputs.distances,
          pipeline::dm_ownprice_chars(inputs, {"share", "fat", "organic"}),
          distance_names, drop);
      break;
    case demand::Variant::hm:
      bundle.fit =
          demand::fit_hm(mkt, inputs.distances.get("HEDONIC"),
                         inputs.distances.get("NN_H"), inputs.features.share,
                         inputs.closeness, drop);
      break;
  }

  const std::string fit_path = (fs::path(out_dir) / ("fit_" + model + ".json")).string();
  demand::save_fit(fit_path, bundle);
  pipeline::write_coef_csv(
      (fs::path(out_dir) / ("coefficients_" + model + ".csv")).string(), bundle.fit);
  pipeline::write_diagnostics_csv(
      (fs::path(out_dir) / ("diagnostics_" + model + ".csv")).string(), bundle.fit);
  const auto report = demand::elasticities(bundle.fit, bundle.mean_share);
  demand::write_elasticity_csv(
      (fs::path(out_dir) / ("elasticities_" + model + ".csv")).string(), report);

  if (!baseline_path.empty()) {
    const auto base = demand::load_fit(baseline_path);
    const auto base_rep = demand::elasticities(base.fit, base.mean_share);
    const auto marks = demand::ci_containment(report, base_rep);
    pipeline::write_marks_csv(
        (fs::path(out_dir) / ("compare_" + model + ".csv")).string(), marks, report,
        base_rep);
    pipeline::write_stats_csv(
        (fs::path(out_dir) / ("stats_" + model + ".csv")).string(), bundle.fit,
        base.fit);
    std::cout << pipeline::format_summary(model + " (vs baseline)", bundle.fit,
                                          report, &marks);
  } else {
    std::cout << pipeline::format_summary(model, bundle.fit, report, nullptr);
  }
  std::cout << "wrote " << fit_path << "\n";
  return 0;
}

int cmd_simulate(const std::string& calibration_path, const std::string& truth_path,
                 int weeks, int records, std::uint64_t seed,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto calibration = panel::load_calibration(calibration_path);
  synth::GroundTruth truth = truth_path.empty()
                                 ? synth::default_truth(calibration, seed)
                                 : synth::load_truth(truth_path);
  truth.seed = seed;

  const auto mkt = synth::gen_panel(truth, weeks, calibration);
  const std::string panel_path = (fs::path(out_dir) / "panel.csv").string();
  panel::write_panel(panel_path, mkt);
  std::cout << "wrote " << panel_path << "\n";

  const auto purchases = synth::gen_purchases(truth, records, calibration);
  const std::string purchases_path = (fs::path(out_dir) / "purchases.csv").string();
  panel::write_purchases(purchases_path, purchases);
  std::cout << "wrote " << purchases_path << "\n";

  const std::string truth_out = (fs::path(out_dir) / "truth.json").string();
  synth::save_truth(truth_out, truth);
  std::cout << "wrote " << truth_out << "\n";
  return 0;
}

int cmd_compare(const std::string& candidate, const std::string& baseline,
                const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string marks = (fs::path(out_dir) / "compare_marks.csv").string();
  const std::string stats = (fs::path(out_dir) / "compare_stats.csv").string();
  pipeline::compare_files(candidate, baseline, marks, stats);

  const auto cand = demand::load_fit(candidate);
  const auto base = demand::load_fit(baseline);
  const auto cand_rep = demand::elasticities(cand.fit, cand.mean_share);
  const auto base_rep = demand::elasticities(base.fit, base.mean_share);
  const auto m = demand::ci_containment(cand_rep, base_rep);
  std::cout << pipeline::format_summary(cand.variant + " (vs " + base.variant + ")",
                                        cand.fit, cand_rep, &m);
  std::cout << m.n_inside() << "/" << m.n_checked()
            << " elasticities within the baseline's 95% interval\n";
  std::cout << "wrote " << marks << " and " << stats << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demand-system estimation with distance- and hedonic-metric "
               "approximations"};
  app.require_subcommand(1);

  // hedonic
  std::string h_input, h_calibration, h_form = "linear", h_output = "hedonic.csv";
  auto* sc_hedonic = app.add_subcommand("hedonic", "Fit a hedonic price regression");
  sc_hedonic->add_option("--input", h_input, "Purchases CSV")->required();
  sc_hedonic->add_option("--calibration", h_calibration, "Calibration table CSV")
      ->required();
  sc_hedonic->add_option("--form", h_form, "linear or semilog");
  sc_hedonic->add_option("--output", h_output, "Coefficient table CSV");

  // distances
  std::string d_purchases, d_panel, d_calibration, d_form = "linear", d_out = "out";
  auto* sc_dist = app.add_subcommand("distances", "Emit all closeness matrices");
  sc_dist->add_option("--purchases", d_purchases, "Purchases CSV")->required();
  sc_dist->add_option("--panel", d_panel, "Panel CSV")->required();
  sc_dist->add_option("--calibration", d_calibration, "Calibration table CSV")
      ->required();
  sc_dist->add_option("--hedonic-form", d_form, "linear or semilog");
  sc_dist->add_option("--output-dir", d_out, "Output directory");

  // estimate
  std::string e_panel, e_purchases, e_calibration, e_model = "original";
  std::string e_form = "linear", e_baseline, e_drop, e_out = "out";
  std::vector<std::string> e_distances = {"FAT", "ORGANIC", "NN_FO"};
  auto* sc_est = app.add_subcommand("estimate", "Fit a demand system");
  sc_est->add_option("--panel", e_panel, "Panel CSV")->required();
  sc_est->add_option("--purchases", e_purchases, "Purchases CSV")->required();
  sc_est->add_option("--calibration", e_calibration, "Calibration table CSV")
      ->required();
  sc_est->add_option("--model", e_model, "original, dm or hm");
  sc_est->add_option("--distances", e_distances,
                     "Distance names for the dm model (comma separated)")
      ->delimiter(',');
  sc_est->add_option("--hedonic-form", e_form, "linear or semilog");
  sc_est->add_option("--baseline", e_baseline, "Baseline fit JSON for comparison");
  sc_est->add_option("--drop", e_drop,
                     "Type label of the equation to drop (default: the last)");
  sc_est->add_option("--output-dir", e_out, "Output directory");

  // simulate
  std::string s_calibration, s_truth, s_out = "out";
  int s_weeks = 209, s_records = 2000;
  std::uint64_t s_seed = 42;
  auto* sc_sim = app.add_subcommand("simulate", "Generate synthetic data");
  sc_sim->add_option("--calibration", s_calibration, "Calibration table CSV")
      ->required();
  sc_sim->add_option("--truth", s_truth, "Ground-truth JSON (default from calibration)");
  sc_sim->add_option("--weeks", s_weeks, "Panel length");
  sc_sim->add_option("--records", s_records, "Purchase record count");
  sc_sim->add_option("--seed", s_seed, "RNG seed");
  sc_sim->add_option("--output-dir", s_out, "Output directory");

  // compare
  std::string c_candidate, c_baseline, c_out = "out";
  auto* sc_cmp = app.add_subcommand("compare", "Compare two serialized fits");
  sc_cmp->add_option("--candidate", c_candidate, "Candidate fit JSON")->required();
  sc_cmp->add_option("--baseline", c_baseline, "Baseline fit JSON")->required();
  sc_cmp->add_option("--output-dir", c_out, "Output directory");

  // run
  std::string r_config;
  auto* sc_run = app.add_subcommand("run", "Run the configured pipeline end to end");
  sc_run->add_option("--config", r_config, "Run config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc_hedonic->parsed())
      return cmd_hedonic(h_input, h_calibration, h_form, h_output);
    if (sc_dist->parsed())
      return cmd_distances(d_purchases, d_panel, d_calibration, d_form, d_out);
    if (sc_est->parsed())
      return cmd_estimate(e_panel, e_purchases, e_calibration, e_model, e_distances,
                          e_form, e_baseline, e_drop, e_out);
    if (sc_sim->parsed())
      return cmd_simulate(s_calibration, s_truth, s_weeks, s_records, s_seed, s_out);
    if (sc_cmp->parsed()) return cmd_compare(c_candidate, c_baseline, c_out);
    if (sc_run->parsed()) {
      pipeline::run(pipeline::load_config(r_config));
      std::cout << "pipeline complete\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
