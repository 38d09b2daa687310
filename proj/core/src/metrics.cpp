#include "hedmet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "hedmet/csv.hpp"
#include "hedmet/error.hpp"

namespace hedmet::metrics {

void DistanceSet::add(ClosenessMatrix m) {
  require(!m.name.empty(), "metrics: distance matrix needs a name");
  matrices[m.name] = std::move(m);
}

const ClosenessMatrix& DistanceSet::get(const std::string& name) const {
  auto it = matrices.find(name);
  if (it == matrices.end()) fail("metrics: unknown distance '", name, "'");
  return it->second;
}

bool DistanceSet::has(const std::string& name) const {
  return matrices.count(name) > 0;
}

std::vector<std::string> DistanceSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, m] : matrices) out.push_back(name);
  return out;
}

std::string dim_name(Dim d) {
  switch (d) {
    case Dim::share: return "SHARE";
    case Dim::fat: return "FAT";
    case Dim::organic: return "ORGANIC";
    case Dim::size: return "SIZE";
  }
  fail("metrics: bad dimension");
}

char dim_initial(Dim d) {
  switch (d) {
    case Dim::share: return 'W';
    case Dim::fat: return 'F';
    case Dim::organic: return 'O';
    case Dim::size: return 'S';
  }
  fail("metrics: bad dimension");
}

const Eigen::VectorXd& TypeFeatures::values(Dim d) const {
  switch (d) {
    case Dim::share: return share;
    case Dim::fat: return fat;
    case Dim::organic: return organic;
    case Dim::size: return size;
  }
  fail("metrics: bad dimension");
}

TypeFeatures features_from_calibration(const CalibrationTable& calibration) {
  TypeFeatures f;
  const int n = static_cast<int>(calibration.size());
  f.share.resize(n);
  f.fat.resize(n);
  f.organic.resize(n);
  f.size.resize(n);
  for (int i = 0; i < n; ++i) {
    f.types.push_back(calibration[i].type);
    f.share[i] = calibration[i].share_mean;
    f.fat[i] = calibration[i].attr_mean.fat_g;
    f.organic[i] = calibration[i].attr_mean.organic;
    f.size[i] = calibration[i].attr_mean.servings_per_package;
  }
  return f;
}

TypeFeatures features_from_profiles(const std::vector<TypeProfile>& profiles,
                                    const Eigen::VectorXd& mean_shares) {
  const int n = static_cast<int>(profiles.size());
  require(mean_shares.size() == n, "metrics: share vector size mismatch");
  TypeFeatures f;
  f.share = mean_shares;
  f.fat.resize(n);
  f.organic.resize(n);
  f.size.resize(n);
  for (int i = 0; i < n; ++i) {
    f.types.push_back(profiles[i].type);
    f.fat[i] = profiles[i].mean.fat_g;
    f.organic[i] = profiles[i].mean.organic;
    f.size[i] = profiles[i].mean.servings_per_package;
  }
  return f;
}

double content_delta(double x_i, double x_j, double x_max) {
  require(x_max > 0, "metrics: content scale must be positive, got ", x_max);
  return (x_i - x_j) / x_max;
}

double closeness(const Eigen::VectorXd& deltas) {
  return 1.0 / (1.0 + deltas.norm());
}

std::vector<std::vector<Dim>> standard_dimension_sets() {
  using enum Dim;
  return {{share},
          {fat},
          {organic},
          {size},
          {fat, organic},
          {fat, size},
          {organic, size},
          {fat, organic, size}};
}

namespace {

std::string subset_name(const std::vector<Dim>& dims) {
  std::string name;
  for (size_t k = 0; k < dims.size(); ++k) {
    if (k) name += '-';
    name += dim_name(dims[k]);
  }
  return name;
}

}  // namespace

std::vector<ClosenessMatrix> build_continuous_set(
    const TypeFeatures& features, const std::vector<std::vector<Dim>>& dimension_sets) {
  const int n = static_cast<int>(features.types.size());
  require(n >= 2, "metrics: need at least two product types");
  std::vector<ClosenessMatrix> out;
  for (const auto& dims : dimension_sets) {
    require(!dims.empty(), "metrics: empty dimension subset");
    std::vector<double> scale;
    for (Dim d : dims) {
      const double mx = features.values(d).maxCoeff();
      require(mx > 0, "metrics: dimension ", dim_name(d), " has nonpositive maximum");
      scale.push_back(mx);
    }
    ClosenessMatrix m;
    m.name = subset_name(dims);
    m.kind = MatrixKind::continuous;
    m.types = features.types;
    m.d = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd deltas(static_cast<int>(dims.size()));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (size_t k = 0; k < dims.size(); ++k) {
          const auto& v = features.values(dims[k]);
          deltas[static_cast<int>(k)] = content_delta(v[i], v[j], scale[k]);
        }
        const double c = closeness(deltas);
        m.d(i, j) = c;
        m.d(j, i) = c;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

ClosenessMatrix nearest_neighbor(const ClosenessMatrix& continuous) {
  const int n = continuous.size();
  require(n >= 2, "metrics: nearest neighbor needs at least two types");

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_val = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (continuous.d(i, j) > best_val) {
        best_val = continuous.d(i, j);
        best = j;
      }
    }
    raw(i, best) = 1;  // each raw row sums to exactly one
  }

  ClosenessMatrix nn;
  nn.name = "NN_" + continuous.name;
  nn.kind = MatrixKind::discrete;
  nn.types = continuous.types;
  nn.d = raw.cwiseMax(raw.transpose());
  return nn;
}

ClosenessMatrix hedonic_distance(const std::vector<std::string>& types,
                                 const Eigen::MatrixXd& value_added) {
  const int n = static_cast<int>(value_added.rows());
  require(n >= 2, "metrics: hedonic distance needs at least two types");
  require(static_cast<int>(types.size()) == n, "metrics: type/value row mismatch");

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  double max_dist = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = (value_added.row(i) - value_added.row(j)).norm();
      raw(i, j) = dist;
      raw(j, i) = dist;
      max_dist = std::max(max_dist, dist);
    }
  }
  require(max_dist > 0,
          "metrics: degenerate hedonic space, all value-added rows identical");

  ClosenessMatrix m;
  m.name = "HEDONIC";
  m.kind = MatrixKind::continuous;
  m.types = types;
  m.d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) m.d(i, j) = 1.0 / (1.0 + raw(i, j) / max_dist);
  return m;
}

Eigen::VectorXd closeness_index(const ClosenessMatrix& m) {
  const int n = m.size();
  require((m.d - m.d.transpose()).cwiseAbs().maxCoeff() < 1e-12,
          "metrics: closeness index needs a symmetric matrix");
  Eigen::VectorXd chi(n);
  for (int i = 0; i < n; ++i) {
    double sum = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) sum += m.d(i, j);
    chi[i] = sum;
  }
  return chi;
}

DistanceSet build_distance_set(const TypeFeatures& features) {
  DistanceSet set;
  auto continuous = build_continuous_set(features, standard_dimension_sets());
  std::map<std::string, ClosenessMatrix> by_name;
  for (auto& m : continuous) by_name[m.name] = m;
  for (auto& m : continuous) set.add(std::move(m));

  // Nearest-neighbor spaces for the FO, FS and FOS combinations. NN over
  // organic-size duplicates the fat-size allocation and is left out.
  auto add_nn = [&](const std::string& source, const std::string& initials) {
    ClosenessMatrix nn = nearest_neighbor(by_name.at(source));
    nn.name = "NN_" + initials;
    set.add(std::move(nn));
  };
  add_nn("FAT-ORGANIC", "FO");
  add_nn("FAT-SIZE", "FS");
  add_nn("FAT-ORGANIC-SIZE", "FOS");
  return set;
}

void write_matrix_csv(const std::string& path, const ClosenessMatrix& m) {
  std::vector<std::string> header = {"type"};
  for (const auto& t : m.types) header.push_back(t);
  header.push_back("kind");
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < m.size(); ++i) {
    std::vector<std::string> row = {m.types[i]};
    for (int j = 0; j < m.size(); ++j) row.push_back(csv::fmt(m.d(i, j)));
    row.push_back(m.kind == MatrixKind::discrete ? "discrete" : "continuous");
    rows.push_back(std::move(row));
  }
  csv::write_file(path, header, rows);
}

ClosenessMatrix read_matrix_csv(const std::string& path) {
  csv::Table t = csv::read_file(path);
  require(t.header.size() >= 3 && t.header.front() == "type" &&
              t.header.back() == "kind",
          path, ": not a closeness matrix file");
  const int n = static_cast<int>(t.header.size()) - 2;
  require(static_cast<int>(t.rows.size()) == n, path, ": expected ", n, " rows");

  ClosenessMatrix m;
  for (int j = 0; j < n; ++j) m.types.push_back(t.header[j + 1]);
  m.d.resize(n, n);
  for (int i = 0; i < n; ++i) {
    require(t.rows[i][0] == m.types[i], path, ": row/column type order mismatch");
    for (int j = 0; j < n; ++j)
      m.d(i, j) = csv::to_double(t.rows[i][j + 1], path, i + 1, m.types[j]);
  }
  m.kind = t.rows[0].back() == "discrete" ? MatrixKind::discrete
                                          : MatrixKind::continuous;
  return m;
}

}  // namespace hedmet::metrics
