#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "hedmet/types.hpp"

namespace hedmet::metrics {

enum class MatrixKind { continuous, discrete };

// Symmetric pairwise closeness over product types. Off-diagonal entries lie
// in (0,1] for continuous matrices and {0,1} for discrete (nearest-neighbor)
// matrices. The diagonal is unused by the demand models and held at 0.
struct ClosenessMatrix {
  std::string name;
  MatrixKind kind = MatrixKind::continuous;
  std::vector<std::string> types;
  Eigen::MatrixXd d;

  int size() const { return static_cast<int>(d.rows()); }
};

// Named collection of closeness matrices; names are the stable identifiers
// the demand configuration refers to.
struct DistanceSet {
  std::map<std::string, ClosenessMatrix> matrices;

  void add(ClosenessMatrix m);
  const ClosenessMatrix& get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<std::string> names() const;
};

// The four content dimensions the standard distances are built from.
enum class Dim { share, fat, organic, size };

std::string dim_name(Dim d);
char dim_initial(Dim d);  // W, F, O, S

// Per-type values of the standard dimensions.
struct TypeFeatures {
  std::vector<std::string> types;
  Eigen::VectorXd share;    // mean expenditure share
  Eigen::VectorXd fat;      // grams per serving
  Eigen::VectorXd organic;  // organic purchase share in [0,1]
  Eigen::VectorXd size;     // servings per package

  const Eigen::VectorXd& values(Dim d) const;
};

TypeFeatures features_from_calibration(const CalibrationTable& calibration);
TypeFeatures features_from_profiles(const std::vector<TypeProfile>& profiles,
                                    const Eigen::VectorXd& mean_shares);

// Content difference scaled by the maximum content available in any type.
double content_delta(double x_i, double x_j, double x_max);

// Inverse Euclidean closeness: 1 / (1 + sqrt(sum of squared deltas)).
double closeness(const Eigen::VectorXd& deltas);

// One continuous closeness matrix per requested dimension subset. The scale
// of each dimension is the maximum of its per-type values.
std::vector<ClosenessMatrix> build_continuous_set(
    const TypeFeatures& features, const std::vector<std::vector<Dim>>& dimension_sets);

// The eight standard subsets: four single dimensions, the three fat/organic/
// size pairs, and the fat-organic-size triple.
std::vector<std::vector<Dim>> standard_dimension_sets();

// Discrete nearest-neighbor matrix: row i marks the type with the highest
// closeness to i (ties broken by lowest type index), then the indicator is
// symmetrized with an elementwise max so the result can carry a shared
// cross-price coefficient.
ClosenessMatrix nearest_neighbor(const ClosenessMatrix& continuous);

// Closeness in hedonic space: Euclidean distances between value-added rows,
// rescaled by the maximal pair distance, then inverted.
ClosenessMatrix hedonic_distance(const std::vector<std::string>& types,
                                 const Eigen::MatrixXd& value_added);

// Total closeness per type: the sum of its off-diagonal closeness entries.
Eigen::VectorXd closeness_index(const ClosenessMatrix& m);

// All standard continuous matrices plus NN_FO, NN_FS and NN_FOS.
DistanceSet build_distance_set(const TypeFeatures& features);

void write_matrix_csv(const std::string& path, const ClosenessMatrix& m);
ClosenessMatrix read_matrix_csv(const std::string& path);

}  // namespace hedmet::metrics
