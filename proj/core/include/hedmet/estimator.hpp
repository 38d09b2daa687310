#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "hedmet/types.hpp"

namespace hedmet::estimator {

// Share-weighted quantity changes, price log-changes and the Divisia real
// expenditure term, one row per week transition (the first week is dropped).
struct RotterdamRows {
  std::vector<std::string> types;
  Eigen::MatrixXd lhs;         // (T-1) x n : avg share x d log quantity
  Eigen::MatrixXd dlog_price;  // (T-1) x n
  Eigen::VectorXd divisia;     // (T-1)   : d log X - sum_j avg share x d log p
  Eigen::MatrixXd avg_share;   // (T-1) x n : two-period average shares

  int n_obs() const { return static_cast<int>(lhs.rows()); }
  Eigen::VectorXd mean_share() const { return avg_share.colwise().mean(); }
};

RotterdamRows build_rows(const MarketPanel& panel);

// Linear equality constraints R theta = r over a named parameter vector,
// together with a designated set of free coordinates. Solving for the
// dependent coordinates yields the substitution theta = expand * phi + offset
// used to impose the constraints in estimation.
struct RestrictionSet {
  std::vector<std::string> names;                 // defines the dimension
  std::vector<std::vector<std::pair<int, double>>> rows;  // sparse R
  std::vector<double> rhs;                        // r
  std::vector<int> free_index;

  int dim() const { return static_cast<int>(names.size()); }
  int n_constraints() const { return static_cast<int>(rows.size()); }
  void add(std::vector<std::pair<int, double>> terms, double value);

  Eigen::MatrixXd dense() const;
  // max |R theta - r|, for post-fit verification
  double violation(const Eigen::VectorXd& theta) const;
};

struct Substitution {
  std::vector<std::string> names;       // extended parameter names
  std::vector<std::string> free_names;  // k of them
  std::vector<int> free_index;
  Eigen::MatrixXd expand;  // dim x k
  Eigen::VectorXd offset;  // dim

  int dim() const { return static_cast<int>(expand.rows()); }
  int free_count() const { return static_cast<int>(expand.cols()); }
};

// Eliminates the dependent coordinates. Requires R to have full row rank and
// the designated free set to leave an invertible dependent block.
Substitution solve_substitution(const RestrictionSet& restrictions);

// One equation per product type; the stacked coefficient vector is the
// concatenation of the per-equation blocks, in order. The substitution may
// extend the vector with auxiliary shared parameters beyond the blocks.
struct SurDesign {
  std::vector<std::string> equations;
  std::vector<Eigen::MatrixXd> x;  // per equation: N x p_e
  Eigen::MatrixXd y;               // N x n

  int n_equations() const { return static_cast<int>(x.size()); }
  int coef_dim() const;
};

struct SurOptions {
  double tol = 1e-8;   // max element change of the residual covariance
  int max_iter = 100;
  // residual scale below which the fit counts as exact and iteration stops
  double exact_fit_scale = 1e-10;
};

struct SystemFit {
  std::vector<std::string> types;  // equation labels
  int dropped = -1;

  std::vector<std::string> free_names;
  Eigen::VectorXd free_params;  // k
  Eigen::MatrixXd free_cov;     // k x k

  std::vector<std::string> param_names;  // expanded vector, incl. auxiliaries
  Eigen::VectorXd params;
  Eigen::MatrixXd param_cov;

  std::vector<int> block_offset;  // start of each equation's coefficient block
  std::vector<int> block_size;

  Eigen::MatrixXd sigma;  // residual covariance of retained equations (MLE)
  double loglik = 0;
  double aic = 0;
  double bic = 0;
  Eigen::VectorXd durbin_watson;  // per equation; NaN when residuals vanish
  int n_free = 0;
  int n_obs = 0;
  int iterations = 0;

  double coef(int equation, int offset_in_block) const;
  double coef_var(int eq_a, int off_a, int eq_b, int off_b) const;
};

// Iterated feasible GLS with the restrictions imposed by substitution:
// equationwise OLS seeds the residual covariance, then restricted GLS and
// covariance updates alternate until the covariance settles. The dropped
// equation is excluded from estimation; its coefficients come from the
// substitution's expansion and its covariance is propagated linearly.
SystemFit sur_fit(const SurDesign& design, const Substitution& subst, int drop,
                  const SurOptions& options = {});

// Gaussian system log-likelihood from an MLE residual covariance.
double gaussian_loglik(const Eigen::MatrixXd& sigma_mle, int n_obs);
double aic(double loglik, int n_free);
double bic(double loglik, int n_free, int n_obs);

struct FitStats {
  double loglik, aic, bic;
};
FitStats system_loglik(const SystemFit& fit);

double durbin_watson(const Eigen::VectorXd& residuals);

}  // namespace hedmet::estimator
