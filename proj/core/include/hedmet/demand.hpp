#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hedmet/estimator.hpp"
#include "hedmet/metrics.hpp"
#include "hedmet/types.hpp"

namespace hedmet::demand {

enum class Variant { original, dm, hm };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

// Which distances parametrize the cross-price coefficients and which
// per-type characteristics parametrize the own-price coefficients. The hm
// variant is pinned to the {HEDONIC, NN_H} matrices and the
// {share, closeness} characteristics, i.e. exactly
// {lambda_h, lambda_nn, beta_0, beta_1, beta_2} plus the per-equation terms.
struct ModelSpec {
  Variant variant = Variant::original;
  std::vector<std::string> distance_names;  // dm only
  std::vector<std::string> ownprice_names = {"share", "fat", "organic"};
  int drop = -1;  // equation to drop; -1 = last
};

// Per-type values of the own-price characteristics, column order matching
// `names`.
struct OwnPriceChars {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // n x C
};

// Coefficient layout shared by all variants: each equation's block is
// [intercept, expenditure coefficient b, price coefficients c_0..c_{n-1}],
// followed by any auxiliary shared parameters (lambda, beta).
struct Layout {
  int n = 0;
  int block() const { return n + 2; }
  int intercept(int i) const { return i * block(); }
  int expenditure(int i) const { return i * block() + 1; }
  int price(int i, int j) const { return i * block() + 2 + j; }
  int coef_dim() const { return n * block(); }
};

// Restriction structures (data-free): these determine the free parameter
// count of each variant.
estimator::RestrictionSet original_structure(const std::vector<std::string>& types,
                                             int drop);
estimator::RestrictionSet approx_structure(
    const std::vector<std::string>& types, int drop,
    const std::vector<const metrics::ClosenessMatrix*>& distances,
    const std::vector<std::string>& distance_labels, const OwnPriceChars& chars);

// Fit the unrestricted-coefficient Rotterdam system with adding-up,
// homogeneity and symmetry imposed; the dropped equation is recovered from
// the restrictions.
estimator::SystemFit fit_original(const MarketPanel& panel, int drop = -1,
                                  const estimator::SurOptions& options = {});

// Distance-metric approximation: cross-price coefficients are shared lambdas
// on the named distances, own-price coefficients are a shared linear form in
// the own-price characteristics.
estimator::SystemFit fit_dm(const MarketPanel& panel,
                            const metrics::DistanceSet& distances,
                            const OwnPriceChars& chars,
                            const std::vector<std::string>& distance_names,
                            int drop = -1, const estimator::SurOptions& options = {});

// Hedonic-metric approximation: one lambda on the hedonic closeness matrix,
// one on its nearest-neighbor matrix; own-price coefficients from market
// share and the hedonic closeness index.
estimator::SystemFit fit_hm(const MarketPanel& panel,
                            const metrics::ClosenessMatrix& hedonic,
                            const metrics::ClosenessMatrix& nn,
                            const Eigen::VectorXd& shares,
                            const Eigen::VectorXd& closeness_index, int drop = -1,
                            const estimator::SurOptions& options = {});

// Dispatch on the model spec's variant. `distances` must hold every matrix the
// spec names (HEDONIC and NN_H for hm); `chars` must carry the
// spec's own-price characteristic columns, which for hm are exactly
// {share, closeness}.
estimator::SystemFit fit_model(const MarketPanel& panel, const ModelSpec& spec,
                               const metrics::DistanceSet& distances,
                               const OwnPriceChars& chars,
                               const estimator::SurOptions& options = {});

// Extracted coefficient views.
Eigen::MatrixXd price_coef_matrix(const estimator::SystemFit& fit);
Eigen::VectorXd expenditure_coef(const estimator::SystemFit& fit);
Eigen::VectorXd intercepts(const estimator::SystemFit& fit);

struct ElasticityReport {
  std::vector<std::string> types;
  Eigen::VectorXd mean_share;
  Eigen::MatrixXd hicksian, hicksian_se;
  Eigen::MatrixXd marshallian, marshallian_se;
  Eigen::VectorXd expenditure, expenditure_se;
};

// Elasticities at sample-mean shares with linearly propagated standard
// errors (shares treated as constants).
ElasticityReport elasticities(const estimator::SystemFit& fit,
                              const Eigen::VectorXd& mean_share);

// Slutsky conversion: marshallian_ij = hicksian_ij - expenditure_i * share_j.
Eigen::MatrixXd marshallian_from(const Eigen::MatrixXd& hicksian,
                                 const Eigen::VectorXd& expenditure,
                                 const Eigen::VectorXd& share);

// Containment of candidate point estimates in the baseline's 95% interval
// (estimate +- 1.96 se, closed at the boundary).
struct ContainmentMarks {
  std::vector<std::string> types;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> marshallian;
  Eigen::Matrix<bool, Eigen::Dynamic, 1> expenditure;

  int n_checked() const;
  int n_inside() const;
};

ContainmentMarks ci_containment(const ElasticityReport& candidate,
                                const ElasticityReport& baseline);

// A fit plus what is needed to rebuild its elasticity report; serialized as
// JSON so saved fits can serve as comparison baselines.
struct FitBundle {
  std::string variant;
  estimator::SystemFit fit;
  Eigen::VectorXd mean_share;
};

void save_fit(const std::string& path, const FitBundle& bundle);
FitBundle load_fit(const std::string& path);

void write_elasticity_csv(const std::string& path, const ElasticityReport& report);

}  // namespace hedmet::demand
