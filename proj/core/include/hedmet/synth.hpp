#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hedmet/hedonic.hpp"
#include "hedmet/types.hpp"

namespace hedmet::synth {

// Ground-truth parameters for the synthetic generators. The demand block
// mirrors the Rotterdam coefficient layout; the hedonic block drives
// purchase-level price generation.
struct GroundTruth {
  std::vector<std::string> types;
  Eigen::VectorXd intercept;  // sums to zero
  Eigen::VectorXd b;          // sums to one
  Eigen::MatrixXd c;          // n x n price coefficient matrix

  // Residual sd of the largest-share equation; the other equations scale in
  // proportion to their calibrated shares so quantity noise is comparable
  // across types.
  double noise_sd = 0.0015;

  // Equation whose quantity absorbs the budget identity instead of following
  // the demand system; fits on generated panels should drop it. -1 resolves
  // to the largest calibrated share.
  int absorber = -1;

  // stationary AR(1) processes in logs around the calibrated means
  double price_rho = 0.9;
  double price_step_sd = 0.02;
  double expenditure_rho = 0.9;
  double expenditure_step_sd = 0.02;

  hedonic::Form hedonic_form = hedonic::Form::linear;
  double hedonic_intercept = 0;
  AttributeVector hedonic_beta;
  double hedonic_noise_sd = 0;

  std::uint64_t seed = 1;
};

// Default truth calibrated to a profile table: expenditure coefficients equal
// mean shares, the price coefficient matrix is symmetric with zero row sums
// and negative diagonal, the hedonic block carries published-scale values.
GroundTruth default_truth(const CalibrationTable& calibration, std::uint64_t seed);

// Swaps in the published hedonic coefficient scale for the given form.
void set_published_hedonic(GroundTruth& truth, hedonic::Form form);

// Deterministic standard normal draw (Box-Muller, one value per call).
double gauss(std::mt19937_64& rng);

// Per-replication seed derivation for Monte-Carlo runs.
std::uint64_t replication_seed(std::uint64_t base, int replication);

// Generates a weekly panel whose non-absorber equations satisfy the
// ground-truth demand system exactly (up to the drawn noise). Prices and
// total expenditure follow stationary log AR(1) paths around the calibrated
// means; the absorber's quantity closes the budget so shares sum to one.
MarketPanel gen_panel(const GroundTruth& truth, int weeks,
                      const CalibrationTable& calibration);

int resolve_absorber(const GroundTruth& truth, const CalibrationTable& calibration);

// Generates item-level purchases with attributes drawn around the calibrated
// per-type profiles and prices from the ground-truth hedonic form.
PurchaseTable gen_purchases(const GroundTruth& truth, int records,
                            const CalibrationTable& calibration);

void save_truth(const std::string& path, const GroundTruth& truth);
GroundTruth load_truth(const std::string& path);

}  // namespace hedmet::synth
