#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hedmet/types.hpp"

namespace hedmet::panel {

// Maps logical field names to CSV column names. Defaults to the canonical
// header produced by this project's own writers.
struct PurchaseSchema {
  std::map<std::string, std::string> columns;

  static PurchaseSchema standard();
  const std::string& column(const std::string& field) const;
};

// Reads an item-level purchase CSV. Every row must parse under the schema and
// carry a known product type; errors cite the 1-based data row and column.
PurchaseTable load_purchases(const std::string& path,
                             const std::vector<std::string>& types,
                             const PurchaseSchema& schema = PurchaseSchema::standard());

void write_purchases(const std::string& path, const PurchaseTable& table,
                     const PurchaseSchema& schema = PurchaseSchema::standard());

// Converts raw per-serving vitamin/mineral amounts into DRI percentages.
// Non-sodium nutrients are averaged (unweighted) into a single index; sodium
// is returned separately.
struct DriResult {
  double vitmin_index = 0;  // mean DRI percent over non-sodium nutrients
  double sodium = 0;        // DRI percent, 0 if sodium absent
};
DriResult dri_transform(const std::vector<std::pair<std::string, double>>& amounts,
                        const std::map<std::string, double>& reference_intakes);

enum class GapPolicy { error, carry };

// Weekly price per (week, type) cell: weighted by servings sold, or the
// unweighted mean over the cell's records.
enum class PriceAverage { quantity_weighted, simple };

// Aggregates purchases to the weekly type panel: cell prices per the chosen
// averaging rule, summed servings, derived expenditure and shares. Empty
// (week,type) cells are an error by default; GapPolicy::carry copies the
// prior week's price with zero quantity.
MarketPanel aggregate_weekly(const PurchaseTable& purchases,
                             GapPolicy gaps = GapPolicy::error,
                             PriceAverage averaging = PriceAverage::quantity_weighted);

// Per-type attribute means, population standard deviations, unique UPC counts.
std::vector<TypeProfile> attribute_profile(const PurchaseTable& purchases);

// Quantity-weighted mean price per type over the whole table.
Eigen::VectorXd type_mean_prices(const PurchaseTable& purchases);

// Panel CSV: one row per week with price_<type>, qty_<type>, share_<type>
// columns. Values round-trip exactly.
void write_panel(const std::string& path, const MarketPanel& panel);
MarketPanel load_panel(const std::string& path);

// Bundled calibration table (per-type attribute and market statistics).
CalibrationTable load_calibration(const std::string& path);
void write_calibration(const std::string& path, const CalibrationTable& table);

}  // namespace hedmet::panel
