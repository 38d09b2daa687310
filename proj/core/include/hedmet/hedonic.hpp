#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hedmet/types.hpp"

namespace hedmet::hedonic {

enum class Form { linear, semilog };

Form parse_form(const std::string& name);
std::string form_name(Form f);

// OLS fit of price (linear) or log price (semilog) on the attribute set plus
// an intercept. Coefficients are the implicit attribute prices.
struct HedonicFit {
  Form form = Form::linear;
  std::vector<std::string> attributes;  // coefficient order, intercept excluded
  double intercept = 0;
  double intercept_se = 0;
  Eigen::VectorXd coef;     // one per attribute
  Eigen::VectorXd coef_se;
  double adjusted_r2 = 0;
  double residual_variance = 0;
  int n_obs = 0;
};

// Fits on the full attribute set by default; a subset (possibly empty, for an
// intercept-only regression) can be configured.
HedonicFit fit_hedonic(const PurchaseTable& purchases, Form form);
HedonicFit fit_hedonic(const PurchaseTable& purchases, Form form,
                       const std::vector<std::string>& attributes);

// Implicit attribute prices at a given product price: the coefficients
// themselves under the linear form, scaled by the price under semilog.
Eigen::VectorXd implicit_prices(const HedonicFit& fit, double product_price);

// Value of attribute j embodied in type i: attribute quantity times implicit
// price. Rows follow `profiles`, columns follow `fit.attributes`.
struct ValueAddedMatrix {
  std::vector<std::string> types;
  std::vector<std::string> attributes;
  Eigen::MatrixXd v;  // types x attributes, cents
};

ValueAddedMatrix value_added(const HedonicFit& fit,
                             const std::vector<TypeProfile>& profiles,
                             const Eigen::VectorXd& mean_prices);

void write_fit_csv(const std::string& path, const HedonicFit& fit);

}  // namespace hedmet::hedonic
