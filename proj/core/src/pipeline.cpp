#include "hedmet/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hedmet/csv.hpp"
#include "hedmet/error.hpp"
#include "hedmet/estimator.hpp"
#include "hedmet/panel.hpp"

namespace hedmet::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("pipeline: cannot open config '", path, "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("pipeline: invalid config '", path, "': ", e.what());
  }

  RunConfig cfg;
  cfg.calibration_path = j.at("calibration").get<std::string>();
  if (j.contains("purchases")) cfg.purchases_path = j["purchases"].get<std::string>();
  if (j.contains("panel")) cfg.panel_path = j["panel"].get<std::string>();
  if (j.contains("truth")) cfg.truth_path = j["truth"].get<std::string>();
  if (j.contains("weeks")) cfg.weeks = j["weeks"].get<int>();
  if (j.contains("records")) cfg.records = j["records"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("noise_sd")) cfg.noise_sd = j["noise_sd"].get<double>();
  if (j.contains("fill")) cfg.fill = j["fill"].get<std::string>();
  if (j.contains("price_average"))
    cfg.price_average = j["price_average"].get<std::string>();
  if (j.contains("hedonic_form")) cfg.hedonic_form = j["hedonic_form"].get<std::string>();
  if (j.contains("models")) cfg.models = j["models"].get<std::vector<std::string>>();
  if (j.contains("dm_distances"))
    cfg.dm_distances = j["dm_distances"].get<std::vector<std::string>>();
  if (j.contains("dm_ownprice"))
    cfg.dm_ownprice = j["dm_ownprice"].get<std::vector<std::string>>();
  if (j.contains("baseline")) cfg.baseline = j["baseline"].get<std::string>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  return cfg;
}

DerivedInputs derive_inputs(const MarketPanel& panel, const PurchaseTable& purchases,
                            hedonic::Form form) {
  DerivedInputs d;
  d.profiles = panel::attribute_profile(purchases);
  d.mean_share = estimator::build_rows(panel).mean_share();
  d.features = metrics::features_from_profiles(d.profiles, d.mean_share);
  d.distances = metrics::build_distance_set(d.features);

  d.hedonic_fit = hedonic::fit_hedonic(purchases, form);
  const Eigen::VectorXd mean_prices = panel::type_mean_prices(purchases);
  d.values = hedonic::value_added(d.hedonic_fit, d.profiles, mean_prices);
  metrics::ClosenessMatrix hed = metrics::hedonic_distance(d.values.types, d.values.v);
  metrics::ClosenessMatrix nn = metrics::nearest_neighbor(hed);
  nn.name = "NN_H";
  d.closeness = metrics::closeness_index(hed);
  d.distances.add(std::move(hed));
  d.distances.add(std::move(nn));
  return d;
}

demand::OwnPriceChars dm_ownprice_chars(const DerivedInputs& inputs,
                                        const std::vector<std::string>& names) {
  const int n = static_cast<int>(inputs.features.types.size());
  demand::OwnPriceChars chars;
  chars.names = names;
  chars.values.resize(n, static_cast<int>(names.size()));
  for (size_t c = 0; c < names.size(); ++c) {
    const std::string& name = names[c];
    Eigen::VectorXd col;
    if (name == "share")
      col = inputs.features.share;
    else if (name == "fat")
      col = inputs.features.fat;
    else if (name == "organic")
      col = inputs.features.organic;
    else if (name == "size")
      col = inputs.features.size;
    else if (name == "closeness")
      col = inputs.closeness;
    else
      fail("pipeline: unknown own-price characteristic '", name, "'");
    chars.values.col(static_cast<int>(c)) = col;
  }
  return chars;
}

namespace {

std::string output_directory(const RunConfig& cfg) {
  if (const char* env = std::getenv("HEDMET_OUTPUT_DIR"); env && *env)
    return env;
  return cfg.output_dir;
}

std::string mark(bool inside) { return inside ? "yes" : "no"; }

}  // namespace

void write_marks_csv(const std::string& path, const demand::ContainmentMarks& marks,
                     const demand::ElasticityReport& candidate,
                     const demand::ElasticityReport& baseline) {
  std::vector<std::string> header = {"block",    "row",      "col",
                                     "candidate", "baseline", "baseline_se",
                                     "within_95ci"};
  std::vector<std::vector<std::string>> rows;
  const int n = static_cast<int>(marks.types.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rows.push_back({"marshallian", marks.types[i], marks.types[j],
                      csv::fmt(candidate.marshallian(i, j)),
                      csv::fmt(baseline.marshallian(i, j)),
                      csv::fmt(baseline.marshallian_se(i, j)),
                      mark(marks.marshallian(i, j))});
  for (int i = 0; i < n; ++i)
    rows.push_back({"expenditure", marks.types[i], "",
                    csv::fmt(candidate.expenditure[i]),
                    csv::fmt(baseline.expenditure[i]),
                    csv::fmt(baseline.expenditure_se[i]), mark(marks.expenditure[i])});
  csv::write_file(path, header, rows);
}

void write_stats_csv(const std::string& path, const estimator::SystemFit& candidate,
                     const estimator::SystemFit& baseline) {
  // statistics in reporting order
  std::vector<std::string> header = {"statistic", "candidate", "baseline"};
  std::vector<std::vector<std::string>> rows = {
      {"LogL", csv::fmt(candidate.loglik), csv::fmt(baseline.loglik)},
      {"Parameters Estimated", std::to_string(candidate.n_free),
       std::to_string(baseline.n_free)},
      {"N", std::to_string(candidate.n_obs), std::to_string(baseline.n_obs)},
      {"AIC", csv::fmt(candidate.aic), csv::fmt(baseline.aic)},
      {"BIC", csv::fmt(candidate.bic), csv::fmt(baseline.bic)}};
  csv::write_file(path, header, rows);
}

void write_coef_csv(const std::string& path, const estimator::SystemFit& fit) {
  std::vector<std::string> header = {"parameter", "estimate", "std_error"};
  std::vector<std::vector<std::string>> rows;
  for (int j = 0; j < fit.free_params.size(); ++j)
    rows.push_back({fit.free_names[j], csv::fmt(fit.free_params[j]),
                    csv::fmt(std::sqrt(std::max(0.0, fit.free_cov(j, j))))});
  csv::write_file(path, header, rows);
}

void write_diagnostics_csv(const std::string& path, const estimator::SystemFit& fit) {
  std::vector<std::string> header = {"statistic", "value"};
  std::vector<std::vector<std::string>> rows = {
      {"LogL", csv::fmt(fit.loglik)},
      {"Parameters Estimated", std::to_string(fit.n_free)},
      {"N", std::to_string(fit.n_obs)},
      {"AIC", csv::fmt(fit.aic)},
      {"BIC", csv::fmt(fit.bic)},
      {"Iterations", std::to_string(fit.iterations)},
      {"Dropped Equation", fit.dropped >= 0 ? fit.types[fit.dropped] : ""}};
  for (size_t e = 0; e < fit.types.size(); ++e)
    rows.push_back({"DW " + fit.types[e],
                    csv::fmt(fit.durbin_watson[static_cast<int>(e)])});
  csv::write_file(path, header, rows);
}

void compare_files(const std::string& candidate_path, const std::string& baseline_path,
                   const std::string& marks_csv, const std::string& stats_csv) {
  const demand::FitBundle cand = demand::load_fit(candidate_path);
  const demand::FitBundle base = demand::load_fit(baseline_path);
  require(cand.fit.types == base.fit.types,
          "pipeline: fits cover different type lists");
  const auto cand_rep = demand::elasticities(cand.fit, cand.mean_share);
  const auto base_rep = demand::elasticities(base.fit, base.mean_share);
  const auto marks = demand::ci_containment(cand_rep, base_rep);
  write_marks_csv(marks_csv, marks, cand_rep, base_rep);
  write_stats_csv(stats_csv, cand.fit, base.fit);
}

namespace {

void append_matrix_block(std::ostringstream& os, const std::string& title,
                         const std::vector<std::string>& types,
                         const Eigen::MatrixXd& est, const Eigen::MatrixXd& se,
                         const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>* marks) {
  const int n = static_cast<int>(types.size());
  os << title << "\n";
  os << "  " << std::string(12, ' ');
  for (const auto& t : types) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%16s", t.c_str());
    os << buf;
  }
  os << "\n";
  for (int i = 0; i < n; ++i) {
    char head[32];
    std::snprintf(head, sizeof(head), "  %-12s", types[i].c_str());
    os << head;
    for (int j = 0; j < n; ++j) {
      char cell[48];
      std::snprintf(cell, sizeof(cell), "%9.4f (%5.3f)", est(i, j), se(i, j));
      os << cell;
      if (marks) os << ((*marks)(i, j) ? "*" : "x");
      else os << " ";
    }
    os << "\n";
  }
}

}  // namespace

std::string format_summary(const std::string& title, const estimator::SystemFit& fit,
                           const demand::ElasticityReport& report,
                           const demand::ContainmentMarks* marks) {
  std::ostringstream os;
  os << "== " << title << " ==\n\n";
  os << "Parameter estimates\n";
  for (int k = 0; k < fit.free_params.size(); ++k) {
    char line[96];
    std::snprintf(line, sizeof(line), "  %-24s %12.6f  (%.6f)\n",
                  fit.free_names[k].c_str(), fit.free_params[k],
                  std::sqrt(std::max(0.0, fit.free_cov(k, k))));
    os << line;
  }
  os << "\nStatistics\n";
  char stat[64];
  std::snprintf(stat, sizeof(stat), "  LogL %.3f\n", fit.loglik);
  os << stat;
  os << "  Parameters Estimated " << fit.n_free << "\n";
  os << "  N " << fit.n_obs << "\n";
  std::snprintf(stat, sizeof(stat), "  AIC %.3f\n", fit.aic);
  os << stat;
  std::snprintf(stat, sizeof(stat), "  BIC %.3f\n", fit.bic);
  os << stat;
  os << "  Durbin-Watson:";
  for (int e = 0; e < fit.durbin_watson.size(); ++e) {
    std::snprintf(stat, sizeof(stat), " %s=%.3f", fit.types[e].c_str(),
                  fit.durbin_watson[e]);
    os << stat;
  }
  os << "\n\n";

  append_matrix_block(os, "Hicksian (compensated) elasticities (se)", report.types,
                      report.hicksian, report.hicksian_se, nullptr);
  os << "\n";
  append_matrix_block(os, "Marshallian (uncompensated) elasticities (se)",
                      report.types, report.marshallian, report.marshallian_se,
                      marks ? &marks->marshallian : nullptr);
  os << "\nExpenditure elasticities (se)\n";
  for (size_t i = 0; i < report.types.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof(line), "  %-12s %9.4f (%5.3f)",
                  report.types[i].c_str(), report.expenditure[static_cast<int>(i)],
                  report.expenditure_se[static_cast<int>(i)]);
    os << line;
    if (marks) os << (marks->expenditure[static_cast<int>(i)] ? "*" : "x");
    os << "\n";
  }
  if (marks)
    os << "\n  (* = within the baseline's 95% confidence interval, x = outside)\n";
  os << "\n";
  return os.str();
}

void run(const RunConfig& config) {
  const CalibrationTable calibration = panel::load_calibration(config.calibration_path);
  const std::string out_dir = output_directory(config);
  fs::create_directories(out_dir);
  auto out_path = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  synth::GroundTruth truth = config.truth_path.empty()
                                 ? synth::default_truth(calibration, config.seed)
                                 : synth::load_truth(config.truth_path);
  truth.seed = config.seed;
  if (config.noise_sd >= 0) truth.noise_sd = config.noise_sd;

  std::vector<std::string> types;
  for (const auto& c : calibration) types.push_back(c.type);

  // ingest or simulate
  PurchaseTable purchases;
  if (config.purchases_path.empty()) {
    purchases = synth::gen_purchases(truth, config.records, calibration);
    panel::write_purchases(out_path("purchases.csv"), purchases);
  } else {
    purchases = panel::load_purchases(config.purchases_path, types);
  }

  panel::GapPolicy gaps;
  if (config.fill == "error") gaps = panel::GapPolicy::error;
  else if (config.fill == "carry") gaps = panel::GapPolicy::carry;
  else fail("pipeline: unknown fill policy '", config.fill, "'");
  panel::PriceAverage averaging;
  if (config.price_average == "quantity")
    averaging = panel::PriceAverage::quantity_weighted;
  else if (config.price_average == "simple")
    averaging = panel::PriceAverage::simple;
  else
    fail("pipeline: unknown price averaging '", config.price_average, "'");

  MarketPanel mkt;
  // on simulated data the budget-absorber equation is the one to drop;
  // on real panels the convention is the last (soy) equation
  int drop = -1;
  if (!config.panel_path.empty()) {
    mkt = panel::load_panel(config.panel_path);
  } else if (!config.purchases_path.empty()) {
    mkt = panel::aggregate_weekly(purchases, gaps, averaging);
  } else {
    mkt = synth::gen_panel(truth, config.weeks, calibration);
    drop = synth::resolve_absorber(truth, calibration);
  }
  panel::write_panel(out_path("panel.csv"), mkt);

  // hedonic stage and the distance objects
  const hedonic::Form form = hedonic::parse_form(config.hedonic_form);
  DerivedInputs inputs = derive_inputs(mkt, purchases, form);
  hedonic::write_fit_csv(out_path("hedonic_" + config.hedonic_form + ".csv"),
                         inputs.hedonic_fit);
  for (const auto& name : inputs.distances.names())
    metrics::write_matrix_csv(out_path("distance_" + name + ".csv"),
                              inputs.distances.get(name));
  {
    std::vector<std::string> header = {"type", "closeness_index"};
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < inputs.features.types.size(); ++i)
      rows.push_back({inputs.features.types[i],
                      csv::fmt(inputs.closeness[static_cast<int>(i)])});
    csv::write_file(out_path("closeness_index.csv"), header, rows);
  }

  // fits
  std::vector<std::pair<std::string, demand::FitBundle>> fits;
  for (const auto& model : config.models) {
    demand::ModelSpec spec;
    spec.variant = demand::parse_variant(model);
    spec.drop = drop;
    demand::OwnPriceChars chars;
    if (spec.variant == demand::Variant::dm) {
      spec.distance_names = config.dm_distances;
      spec.ownprice_names = config.dm_ownprice;
      chars = dm_ownprice_chars(inputs, config.dm_ownprice);
    } else if (spec.variant == demand::Variant::hm) {
      spec.ownprice_names = {"share", "closeness"};
      chars = dm_ownprice_chars(inputs, {"share", "closeness"});
    }

    demand::FitBundle bundle;
    bundle.variant = model;
    bundle.mean_share = inputs.mean_share;
    bundle.fit = demand::fit_model(mkt, spec, inputs.distances, chars);
    demand::save_fit(out_path("fit_" + model + ".json"), bundle);
    write_coef_csv(out_path("coefficients_" + model + ".csv"), bundle.fit);
    write_diagnostics_csv(out_path("diagnostics_" + model + ".csv"), bundle.fit);
    demand::write_elasticity_csv(out_path("elasticities_" + model + ".csv"),
                                 demand::elasticities(bundle.fit, bundle.mean_share));
    fits.emplace_back(model, std::move(bundle));
  }

  // baseline comparison and the text report
  const demand::FitBundle* baseline = nullptr;
  demand::FitBundle baseline_storage;
  for (const auto& [model, bundle] : fits)
    if (model == config.baseline) baseline = &bundle;
  if (!baseline && !config.baseline.empty() && fs::exists(config.baseline)) {
    baseline_storage = demand::load_fit(config.baseline);
    baseline = &baseline_storage;
  }

  std::ofstream summary(out_path("summary.txt"));
  if (!summary) fail("pipeline: cannot write summary");
  demand::ElasticityReport base_rep;
  if (baseline) base_rep = demand::elasticities(baseline->fit, baseline->mean_share);

  for (const auto& [model, bundle] : fits) {
    const auto rep = demand::elasticities(bundle.fit, bundle.mean_share);
    if (baseline && model != baseline->variant) {
      const auto marks = demand::ci_containment(rep, base_rep);
      write_marks_csv(out_path("compare_" + model + "_vs_" + baseline->variant + ".csv"),
                      marks, rep, base_rep);
      write_stats_csv(out_path("stats_" + model + "_vs_" + baseline->variant + ".csv"),
                      bundle.fit, baseline->fit);
      summary << format_summary(model + " (vs " + baseline->variant + ")", bundle.fit,
                                rep, &marks);
    } else {
      summary << format_summary(model, bundle.fit, rep, nullptr);
    }
  }
}

}  // namespace hedmet::pipeline
