#include "hedmet/hedonic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hedmet/csv.hpp"
#include "hedmet/error.hpp"

namespace hedmet::hedonic {

Form parse_form(const std::string& name) {
  if (name == "linear") return Form::linear;
  if (name == "semilog") return Form::semilog;
  fail("hedonic: unknown form '", name, "' (expected linear or semilog)");
}

std::string form_name(Form f) {
  return f == Form::linear ? "linear" : "semilog";
}

HedonicFit fit_hedonic(const PurchaseTable& purchases, Form form) {
  return fit_hedonic(purchases, form,
                     {AttributeVector::names().begin(), AttributeVector::names().end()});
}

HedonicFit fit_hedonic(const PurchaseTable& purchases, Form form,
                       const std::vector<std::string>& attributes) {
  const int n_attr = static_cast<int>(attributes.size());
  const int p = n_attr + 1;  // intercept first
  const int n = static_cast<int>(purchases.records.size());
  require(n >= p + 1, "hedonic: need at least ", p + 1, " observations, got ", n);

  std::vector<int> attr_idx;
  for (const auto& name : attributes) {
    int idx = -1;
    for (int k = 0; k < AttributeVector::count; ++k)
      if (AttributeVector::names()[k] == name) idx = k;
    require(idx >= 0, "hedonic: unknown attribute '", name, "'");
    attr_idx.push_back(idx);
  }

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    const auto& rec = purchases.records[r];
    x(r, 0) = 1.0;
    for (int k = 0; k < n_attr; ++k) x(r, k + 1) = rec.attributes.get(attr_idx[k]);
    if (form == Form::semilog) {
      if (rec.price_per_serving <= 0)
        fail("hedonic: row ", r + 1, ": nonpositive price under semilog form");
      y[r] = std::log(rec.price_per_serving);
    } else {
      y[r] = rec.price_per_serving;
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    // the trailing pivots name the columns that add no independent variation
    std::ostringstream cols;
    const auto perm = qr.colsPermutation().indices();
    bool first = true;
    for (int k = qr.rank(); k < p; ++k) {
      const int col = perm[k];
      if (!first) cols << ", ";
      cols << (col == 0 ? std::string("intercept") : attributes[col - 1]);
      first = false;
    }
    fail("hedonic: design matrix is rank deficient; collinear columns: ", cols.str());
  }

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const double rss = resid.squaredNorm();
  const double sigma2 = rss / (n - p);

  const Eigen::MatrixXd xtx_inv =
      (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::VectorXd se = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();

  const double tss = (y.array() - y.mean()).square().sum();
  const double r2 = tss > 0 ? 1.0 - rss / tss : 1.0;

  HedonicFit fit;
  fit.form = form;
  fit.attributes = attributes;
  fit.intercept = beta[0];
  fit.intercept_se = se[0];
  fit.coef = beta.tail(n_attr);
  fit.coef_se = se.tail(n_attr);
  fit.adjusted_r2 = 1.0 - (1.0 - r2) * (n - 1) / double(n - p);
  fit.residual_variance = sigma2;
  fit.n_obs = n;
  return fit;
}

Eigen::VectorXd implicit_prices(const HedonicFit& fit, double product_price) {
  if (fit.form == Form::linear) return fit.coef;
  require(product_price >= 0, "hedonic: negative product price ", product_price);
  return fit.coef * product_price;
}

ValueAddedMatrix value_added(const HedonicFit& fit,
                             const std::vector<TypeProfile>& profiles,
                             const Eigen::VectorXd& mean_prices) {
  require(static_cast<int>(profiles.size()) == mean_prices.size(),
          "hedonic: profile/price count mismatch");

  // profiles carry the full attribute set; verify it matches the fit
  std::set<std::string> fit_attrs(fit.attributes.begin(), fit.attributes.end());
  std::set<std::string> profile_attrs(AttributeVector::names().begin(),
                                      AttributeVector::names().end());
  if (fit_attrs != profile_attrs) {
    std::ostringstream diff;
    bool first = true;
    for (const auto& a : fit_attrs)
      if (!profile_attrs.count(a)) {
        diff << (first ? "" : ", ") << a;
        first = false;
      }
    for (const auto& a : profile_attrs)
      if (!fit_attrs.count(a)) {
        diff << (first ? "" : ", ") << a;
        first = false;
      }
    fail("hedonic: attribute sets differ between fit and profiles: ", diff.str());
  }

  const int n = static_cast<int>(profiles.size());
  ValueAddedMatrix out;
  out.attributes = fit.attributes;
  out.v.resize(n, AttributeVector::count);
  for (int i = 0; i < n; ++i) {
    out.types.push_back(profiles[i].type);
    const Eigen::VectorXd prices = implicit_prices(fit, mean_prices[i]);
    for (int k = 0; k < AttributeVector::count; ++k)
      out.v(i, k) = profiles[i].mean.get(k) * prices[k];
  }
  return out;
}

void write_fit_csv(const std::string& path, const HedonicFit& fit) {
  std::vector<std::string> header = {"attribute", "estimate", "std_error"};
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"intercept", csv::fmt(fit.intercept), csv::fmt(fit.intercept_se)});
  for (size_t k = 0; k < fit.attributes.size(); ++k)
    rows.push_back({fit.attributes[k], csv::fmt(fit.coef[static_cast<int>(k)]),
                    csv::fmt(fit.coef_se[static_cast<int>(k)])});
  rows.push_back({"adjusted_r2", csv::fmt(fit.adjusted_r2), ""});
  rows.push_back({"n_obs", std::to_string(fit.n_obs), ""});
  csv::write_file(path, header, rows);
}

}  // namespace hedmet::hedonic
