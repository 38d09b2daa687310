#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hedmet/demand.hpp"
#include "hedmet/hedonic.hpp"
#include "hedmet/metrics.hpp"
#include "hedmet/synth.hpp"
#include "hedmet/types.hpp"

namespace hedmet::pipeline {

// Config for the end-to-end run: ingest (or simulate) -> hedonic ->
// distances -> estimate -> compare -> report.
struct RunConfig {
  std::string calibration_path;  // per-type profile table
  std::string purchases_path;    // empty: simulate from the calibration
  std::string panel_path;        // empty: aggregate the purchases if given,
                                 // else simulate from the calibration
  std::string truth_path;        // empty: default truth
  int weeks = 209;
  int records = 2000;
  std::uint64_t seed = 42;
  double noise_sd = -1;  // override the truth's equation noise when >= 0
  std::string fill = "error";            // empty-cell policy: error | carry
  std::string price_average = "quantity";  // quantity | simple
  std::string hedonic_form = "semilog";
  std::vector<std::string> models = {"original", "dm", "hm"};
  std::vector<std::string> dm_distances = {"FAT", "ORGANIC", "NN_FO"};
  std::vector<std::string> dm_ownprice = {"share", "fat", "organic"};
  std::string baseline = "original";  // model name or fit file path
  std::string output_dir = "out";
};

RunConfig load_config(const std::string& path);

// Everything the demand fits consume, derived from a panel and a purchase
// table: profiles, features, the full distance set (standard dimensions plus
// HEDONIC and NN_H), the hedonic fit and the closeness index.
struct DerivedInputs {
  std::vector<TypeProfile> profiles;
  metrics::TypeFeatures features;
  metrics::DistanceSet distances;
  hedonic::HedonicFit hedonic_fit;
  hedonic::ValueAddedMatrix values;
  Eigen::VectorXd closeness;   // hedonic closeness index per type
  Eigen::VectorXd mean_share;  // sample-mean two-period average shares
};

DerivedInputs derive_inputs(const MarketPanel& panel, const PurchaseTable& purchases,
                            hedonic::Form form);

demand::OwnPriceChars dm_ownprice_chars(const DerivedInputs& inputs,
                                        const std::vector<std::string>& names);

// Runs the configured pipeline and writes all artifacts under the output
// directory (HEDMET_OUTPUT_DIR overrides the configured one). Identical
// config and seed produce byte-identical outputs.
void run(const RunConfig& config);

// Loads two serialized fits, rebuilds their elasticity reports and writes
// the containment marks plus a side-by-side statistics table.
void compare_files(const std::string& candidate_path, const std::string& baseline_path,
                   const std::string& marks_csv, const std::string& stats_csv);

void write_marks_csv(const std::string& path, const demand::ContainmentMarks& marks,
                     const demand::ElasticityReport& candidate,
                     const demand::ElasticityReport& baseline);
void write_stats_csv(const std::string& path, const estimator::SystemFit& candidate,
                     const estimator::SystemFit& baseline);
void write_coef_csv(const std::string& path, const estimator::SystemFit& fit);
void write_diagnostics_csv(const std::string& path, const estimator::SystemFit& fit);

// Plain-text report of a fitted model: coefficient estimates, the statistics
// block and the elasticity tables, with containment marks when a baseline is
// given.
std::string format_summary(const std::string& title, const estimator::SystemFit& fit,
                           const demand::ElasticityReport& report,
                           const demand::ContainmentMarks* marks);

}  // namespace hedmet::pipeline
