#include "hedmet/panel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hedmet/csv.hpp"
#include "hedmet/error.hpp"

namespace hedmet::panel {

PurchaseSchema PurchaseSchema::standard() {
  PurchaseSchema s;
  s.columns = {{"week", "week"},
               {"type", "type"},
               {"upc", "upc"},
               {"price", "price"},
               {"servings", "servings"}};
  for (const auto& name : AttributeVector::names()) s.columns[name] = name;
  return s;
}

const std::string& PurchaseSchema::column(const std::string& field) const {
  auto it = columns.find(field);
  if (it == columns.end()) fail("panel: schema has no mapping for field '", field, "'");
  return it->second;
}

PurchaseTable load_purchases(const std::string& path,
                             const std::vector<std::string>& types,
                             const PurchaseSchema& schema) {
  csv::Table t = csv::read_file(path);
  auto col = [&](const std::string& field) {
    return t.col_required(schema.column(field), path);
  };
  const int c_week = col("week");
  const int c_type = col("type");
  const int c_upc = col("upc");
  const int c_price = col("price");
  const int c_servings = col("servings");
  std::array<int, AttributeVector::count> c_attr;
  for (int i = 0; i < AttributeVector::count; ++i)
    c_attr[i] = col(AttributeVector::names()[i]);

  PurchaseTable out;
  out.types = types;
  out.records.reserve(t.rows.size());
  int row = 0;
  for (const auto& cells : t.rows) {
    ++row;
    PurchaseRecord r;
    r.week = static_cast<int>(
        csv::to_long(cells[c_week], path, row, schema.column("week")));
    if (r.week < 0) fail(path, ": row ", row, ": negative week index");
    r.product_type = cells[c_type];
    if (type_index(types, r.product_type) < 0)
      fail(path, ": row ", row, ": column '", schema.column("type"),
           "': unknown product type '", r.product_type, "'");
    r.upc = cells[c_upc];
    r.price_per_serving =
        csv::to_double(cells[c_price], path, row, schema.column("price"));
    if (r.price_per_serving <= 0)
      fail(path, ": row ", row, ": nonpositive price");
    r.servings =
        csv::to_double(cells[c_servings], path, row, schema.column("servings"));
    if (r.servings <= 0) fail(path, ": row ", row, ": nonpositive servings");
    for (int i = 0; i < AttributeVector::count; ++i)
      r.attributes.set(i, csv::to_double(cells[c_attr[i]], path, row,
                                         schema.column(AttributeVector::names()[i])));
    out.records.push_back(std::move(r));
  }
  return out;
}

void write_purchases(const std::string& path, const PurchaseTable& table,
                     const PurchaseSchema& schema) {
  std::vector<std::string> header = {
      schema.column("week"), schema.column("type"), schema.column("upc"),
      schema.column("price"), schema.column("servings")};
  for (const auto& name : AttributeVector::names())
    header.push_back(schema.column(name));
  std::vector<std::vector<std::string>> rows;
  rows.reserve(table.records.size());
  for (const auto& r : table.records) {
    std::vector<std::string> row = {std::to_string(r.week), r.product_type, r.upc,
                                    csv::fmt(r.price_per_serving),
                                    csv::fmt(r.servings)};
    for (int i = 0; i < AttributeVector::count; ++i)
      row.push_back(csv::fmt(r.attributes.get(i)));
    rows.push_back(std::move(row));
  }
  csv::write_file(path, header, rows);
}

DriResult dri_transform(const std::vector<std::pair<std::string, double>>& amounts,
                        const std::map<std::string, double>& reference_intakes) {
  DriResult out;
  double sum = 0;
  int n = 0;
  for (const auto& [nutrient, amount] : amounts) {
    auto it = reference_intakes.find(nutrient);
    if (it == reference_intakes.end())
      fail("panel: no reference intake for nutrient '", nutrient, "'");
    if (it->second <= 0)
      fail("panel: nonpositive reference intake for nutrient '", nutrient, "'");
    const double pct = 100.0 * amount / it->second;
    if (nutrient == "sodium") {
      out.sodium = pct;
    } else {
      sum += pct;
      ++n;
    }
  }
  out.vitmin_index = n > 0 ? sum / n : 0.0;
  return out;
}

MarketPanel aggregate_weekly(const PurchaseTable& purchases, GapPolicy gaps,
                             PriceAverage averaging) {
  const int n = static_cast<int>(purchases.types.size());
  require(n > 0, "panel: no product types configured");
  require(!purchases.records.empty(), "panel: empty purchase table");

  int weeks = 0;
  for (const auto& r : purchases.records) weeks = std::max(weeks, r.week + 1);

  Eigen::MatrixXd spend = Eigen::MatrixXd::Zero(weeks, n);
  Eigen::MatrixXd qty = Eigen::MatrixXd::Zero(weeks, n);
  Eigen::MatrixXd price_sum = Eigen::MatrixXd::Zero(weeks, n);
  Eigen::MatrixXd rec_count = Eigen::MatrixXd::Zero(weeks, n);
  for (const auto& r : purchases.records) {
    const int i = type_index(purchases.types, r.product_type);
    spend(r.week, i) += r.price_per_serving * r.servings;
    qty(r.week, i) += r.servings;
    price_sum(r.week, i) += r.price_per_serving;
    rec_count(r.week, i) += 1;
  }

  MarketPanel panel;
  panel.types = purchases.types;
  panel.price.resize(weeks, n);
  panel.quantity = qty;
  panel.share.resize(weeks, n);
  panel.expenditure.resize(weeks);

  std::ostringstream gap_list;
  bool has_gaps = false;
  for (int t = 0; t < weeks; ++t) {
    for (int i = 0; i < n; ++i) {
      if (qty(t, i) > 0) {
        panel.price(t, i) = averaging == PriceAverage::quantity_weighted
                                ? spend(t, i) / qty(t, i)
                                : price_sum(t, i) / rec_count(t, i);
      } else if (gaps == GapPolicy::carry && t > 0) {
        panel.price(t, i) = panel.price(t - 1, i);
        panel.quantity(t, i) = 0;
      } else {
        if (has_gaps) gap_list << ", ";
        gap_list << "(week " << t << ", " << purchases.types[i] << ")";
        has_gaps = true;
        panel.price(t, i) = 0;
      }
    }
  }
  if (has_gaps)
    fail("panel: empty cells with no aggregation policy: ", gap_list.str());

  for (int t = 0; t < weeks; ++t) {
    double total = 0;
    for (int i = 0; i < n; ++i) total += panel.price(t, i) * panel.quantity(t, i);
    require(total > 0, "panel: zero expenditure in week ", t);
    panel.expenditure[t] = total;
    for (int i = 0; i < n; ++i)
      panel.share(t, i) = panel.price(t, i) * panel.quantity(t, i) / total;
  }
  return panel;
}

std::vector<TypeProfile> attribute_profile(const PurchaseTable& purchases) {
  require(!purchases.records.empty(), "panel: empty purchase table");
  const int n = static_cast<int>(purchases.types.size());
  std::vector<TypeProfile> profiles(n);
  std::vector<int> counts(n, 0);
  std::vector<std::set<std::string>> upcs(n);
  std::vector<Eigen::VectorXd> sum(n, Eigen::VectorXd::Zero(AttributeVector::count));
  std::vector<Eigen::VectorXd> sumsq(n, Eigen::VectorXd::Zero(AttributeVector::count));

  for (const auto& r : purchases.records) {
    const int i = type_index(purchases.types, r.product_type);
    ++counts[i];
    upcs[i].insert(r.upc);
    const Eigen::VectorXd a = r.attributes.to_vector();
    sum[i] += a;
    sumsq[i] += a.cwiseProduct(a);
  }

  for (int i = 0; i < n; ++i) {
    profiles[i].type = purchases.types[i];
    profiles[i].upc_count = static_cast<int>(upcs[i].size());
    if (counts[i] == 0) continue;
    for (int k = 0; k < AttributeVector::count; ++k) {
      const double mean = sum[i][k] / counts[i];
      const double var = std::max(0.0, sumsq[i][k] / counts[i] - mean * mean);
      profiles[i].mean.set(k, mean);
      profiles[i].sd.set(k, std::sqrt(var));  // population sd
    }
  }
  return profiles;
}

Eigen::VectorXd type_mean_prices(const PurchaseTable& purchases) {
  const int n = static_cast<int>(purchases.types.size());
  Eigen::VectorXd spend = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qty = Eigen::VectorXd::Zero(n);
  for (const auto& r : purchases.records) {
    const int i = type_index(purchases.types, r.product_type);
    spend[i] += r.price_per_serving * r.servings;
    qty[i] += r.servings;
  }
  Eigen::VectorXd price(n);
  for (int i = 0; i < n; ++i) {
    require(qty[i] > 0, "panel: no purchases for type '", purchases.types[i], "'");
    price[i] = spend[i] / qty[i];
  }
  return price;
}

void write_panel(const std::string& path, const MarketPanel& panel) {
  std::vector<std::string> header = {"week"};
  for (const auto& t : panel.types) header.push_back("price_" + t);
  for (const auto& t : panel.types) header.push_back("qty_" + t);
  for (const auto& t : panel.types) header.push_back("share_" + t);
  std::vector<std::vector<std::string>> rows;
  for (int t = 0; t < panel.weeks(); ++t) {
    std::vector<std::string> row = {std::to_string(t)};
    for (int i = 0; i < panel.n_types(); ++i) row.push_back(csv::fmt(panel.price(t, i)));
    for (int i = 0; i < panel.n_types(); ++i)
      row.push_back(csv::fmt(panel.quantity(t, i)));
    for (int i = 0; i < panel.n_types(); ++i) row.push_back(csv::fmt(panel.share(t, i)));
    rows.push_back(std::move(row));
  }
  csv::write_file(path, header, rows);
}

MarketPanel load_panel(const std::string& path) {
  csv::Table t = csv::read_file(path);
  std::vector<std::string> types;
  for (const auto& h : t.header)
    if (h.rfind("price_", 0) == 0) types.push_back(h.substr(6));
  require(!types.empty(), path, ": no price_<type> columns found");

  MarketPanel panel;
  panel.types = types;
  const int n = static_cast<int>(types.size());
  const int T = static_cast<int>(t.rows.size());
  require(T > 0, path, ": no data rows");
  panel.price.resize(T, n);
  panel.quantity.resize(T, n);
  panel.share.resize(T, n);
  panel.expenditure.resize(T);

  std::vector<int> cp(n), cq(n), cs(n);
  for (int i = 0; i < n; ++i) {
    cp[i] = t.col_required("price_" + types[i], path);
    cq[i] = t.col_required("qty_" + types[i], path);
    cs[i] = t.col_required("share_" + types[i], path);
  }
  for (int r = 0; r < T; ++r) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      panel.price(r, i) = csv::to_double(t.rows[r][cp[i]], path, r + 1, "price_" + types[i]);
      panel.quantity(r, i) =
          csv::to_double(t.rows[r][cq[i]], path, r + 1, "qty_" + types[i]);
      panel.share(r, i) =
          csv::to_double(t.rows[r][cs[i]], path, r + 1, "share_" + types[i]);
      total += panel.price(r, i) * panel.quantity(r, i);
    }
    panel.expenditure[r] = total;
    double closure = 0;
    for (int i = 0; i < n; ++i) closure += panel.share(r, i);
    if (std::abs(closure - 1.0) > 1e-9)
      fail(path, ": row ", r + 1, ": shares sum to ", closure, ", expected 1");
  }
  return panel;
}

CalibrationTable load_calibration(const std::string& path) {
  csv::Table t = csv::read_file(path);
  const int c_type = t.col_required("type", path);
  const int c_upc = t.col_required("upc_count", path);
  auto stat_col = [&](const std::string& base, const std::string& suffix) {
    return t.col_required(base + "_" + suffix, path);
  };

  CalibrationTable out;
  int row = 0;
  for (const auto& cells : t.rows) {
    ++row;
    TypeCalibration c;
    c.type = cells[c_type];
    c.upc_count = static_cast<int>(csv::to_long(cells[c_upc], path, row, "upc_count"));
    c.price_mean = csv::to_double(cells[stat_col("price", "mean")], path, row, "price_mean");
    c.price_sd = csv::to_double(cells[stat_col("price", "sd")], path, row, "price_sd");
    c.quantity_mean =
        csv::to_double(cells[stat_col("quantity", "mean")], path, row, "quantity_mean");
    c.quantity_sd =
        csv::to_double(cells[stat_col("quantity", "sd")], path, row, "quantity_sd");
    c.share_mean = csv::to_double(cells[stat_col("share", "mean")], path, row, "share_mean");
    c.share_sd = csv::to_double(cells[stat_col("share", "sd")], path, row, "share_sd");
    for (int i = 0; i < AttributeVector::count; ++i) {
      const std::string& name = AttributeVector::names()[i];
      c.attr_mean.set(i, csv::to_double(cells[stat_col(name, "mean")], path, row,
                                        name + "_mean"));
      c.attr_sd.set(i, csv::to_double(cells[stat_col(name, "sd")], path, row,
                                      name + "_sd"));
    }
    out.push_back(std::move(c));
  }
  require(!out.empty(), path, ": empty calibration table");
  return out;
}

void write_calibration(const std::string& path, const CalibrationTable& table) {
  std::vector<std::string> header = {"type",        "upc_count",   "price_mean",
                                     "price_sd",    "quantity_mean", "quantity_sd",
                                     "share_mean",  "share_sd"};
  for (const auto& name : AttributeVector::names()) {
    header.push_back(name + "_mean");
    header.push_back(name + "_sd");
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : table) {
    std::vector<std::string> row = {c.type,
                                    std::to_string(c.upc_count),
                                    csv::fmt(c.price_mean),
                                    csv::fmt(c.price_sd),
                                    csv::fmt(c.quantity_mean),
                                    csv::fmt(c.quantity_sd),
                                    csv::fmt(c.share_mean),
                                    csv::fmt(c.share_sd)};
    for (int i = 0; i < AttributeVector::count; ++i) {
      row.push_back(csv::fmt(c.attr_mean.get(i)));
      row.push_back(csv::fmt(c.attr_sd.get(i)));
    }
    rows.push_back(std::move(row));
  }
  csv::write_file(path, header, rows);
}

}  // namespace hedmet::panel
