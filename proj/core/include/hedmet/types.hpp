#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace hedmet {

// The label attributes carried by every purchase record. Binary claims are
// 0/1, nutritional contents are grams per serving, DRI fields are percentages
// of the per-serving daily recommended intake.
struct AttributeVector {
  double organic = 0;
  double soy = 0;
  double promotion = 0;
  double lfcf = 0;          // lactose/cholesterol-free claim
  double vitmin_label = 0;  // vitamin-mineral enhancement claim
  double protein_g = 0;
  double carb_g = 0;
  double fat_g = 0;
  double cholesterol_dri = 0;
  double sodium_dri = 0;
  double vitmin_dri = 0;  // combined vitamin-mineral DRI index, sodium excluded
  double servings_per_package = 0;

  static constexpr int count = 12;
  static const std::array<std::string, count>& names();

  double get(int i) const;
  void set(int i, double v);
  Eigen::VectorXd to_vector() const;
};

struct PurchaseRecord {
  int week = 0;              // 0-based week index
  std::string product_type;  // one of the configured type labels
  std::string upc;
  double price_per_serving = 0;  // cents per serving
  double servings = 0;           // quantity purchased x servings per package
  AttributeVector attributes;
};

struct PurchaseTable {
  std::vector<std::string> types;  // configured type labels, fixed order
  std::vector<PurchaseRecord> records;
};

// Weekly product-type panel: quantity-weighted prices, total servings,
// expenditure shares. Shares sum to one within every week.
struct MarketPanel {
  std::vector<std::string> types;
  Eigen::MatrixXd price;     // T x n, cents per serving
  Eigen::MatrixXd quantity;  // T x n, servings
  Eigen::MatrixXd share;     // T x n, expenditure shares
  Eigen::VectorXd expenditure;  // T, cents

  int weeks() const { return static_cast<int>(price.rows()); }
  int n_types() const { return static_cast<int>(types.size()); }
};

// Per-type summary of a purchase table: attribute means and population
// standard deviations plus the number of distinct UPCs seen.
struct TypeProfile {
  std::string type;
  AttributeVector mean;
  AttributeVector sd;
  int upc_count = 0;
};

// One row of the bundled calibration table: per-type attribute means and
// dispersions together with price/quantity/share statistics. Drives the
// synthetic generators and the standard distance dimensions.
struct TypeCalibration {
  std::string type;
  AttributeVector attr_mean;
  AttributeVector attr_sd;
  int upc_count = 0;
  double price_mean = 0, price_sd = 0;
  double quantity_mean = 0, quantity_sd = 0;
  double share_mean = 0, share_sd = 0;
};

using CalibrationTable = std::vector<TypeCalibration>;

int type_index(const std::vector<std::string>& types, const std::string& label);

}  // namespace hedmet
