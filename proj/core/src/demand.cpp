#include "hedmet/demand.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hedmet/csv.hpp"
#include "hedmet/error.hpp"

namespace hedmet::demand {

using estimator::RestrictionSet;
using estimator::SurDesign;
using estimator::SystemFit;

Variant parse_variant(const std::string& name) {
  if (name == "original") return Variant::original;
  if (name == "dm") return Variant::dm;
  if (name == "hm") return Variant::hm;
  fail("demand: unknown model variant '", name, "'");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::original: return "original";
    case Variant::dm: return "dm";
    case Variant::hm: return "hm";
  }
  fail("demand: bad variant");
}

namespace {

std::vector<std::string> block_names(const std::vector<std::string>& types) {
  std::vector<std::string> names;
  for (const auto& t : types) {
    names.push_back("alpha[" + t + "]");
    names.push_back("b[" + t + "]");
    for (const auto& u : types) names.push_back("c[" + t + "][" + u + "]");
  }
  return names;
}

int resolve_drop(int drop, int n) {
  if (drop < 0) return n - 1;
  require(drop < n, "demand: drop index ", drop, " out of range for ", n, " types");
  return drop;
}

// adding-up over intercepts and expenditure coefficients; the dropped
// equation's values follow from the retained ones
void add_adding_up(RestrictionSet& rs, const Layout& lay) {
  std::vector<std::pair<int, double>> sum_alpha, sum_b;
  for (int i = 0; i < lay.n; ++i) {
    sum_alpha.push_back({lay.intercept(i), 1.0});
    sum_b.push_back({lay.expenditure(i), 1.0});
  }
  rs.add(std::move(sum_alpha), 0.0);
  rs.add(std::move(sum_b), 1.0);
}

void designate_free_alpha_b(RestrictionSet& rs, const Layout& lay, int drop) {
  for (int i = 0; i < lay.n; ++i) {
    if (i == drop) continue;
    rs.free_index.push_back(lay.intercept(i));
    rs.free_index.push_back(lay.expenditure(i));
  }
}

SurDesign rotterdam_design(const estimator::RotterdamRows& rows) {
  const int n = static_cast<int>(rows.types.size());
  const int N = rows.n_obs();
  Eigen::MatrixXd x(N, n + 2);
  x.col(0).setOnes();
  x.col(1) = rows.divisia;
  x.rightCols(n) = rows.dlog_price;

  SurDesign design;
  design.equations = rows.types;
  design.x.assign(n, x);
  design.y = rows.lhs;
  return design;
}

}  // namespace

RestrictionSet original_structure(const std::vector<std::string>& types, int drop) {
  const int n = static_cast<int>(types.size());
  require(n >= 2, "demand: need at least two types");
  drop = resolve_drop(drop, n);
  Layout lay{n};

  RestrictionSet rs;
  rs.names = block_names(types);
  add_adding_up(rs, lay);
  for (int i = 0; i < n; ++i) {  // homogeneity: every row of c sums to zero
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) row.push_back({lay.price(i, j), 1.0});
    rs.add(std::move(row), 0.0);
  }
  for (int i = 0; i < n; ++i)  // symmetry
    for (int j = i + 1; j < n; ++j)
      rs.add({{lay.price(i, j), 1.0}, {lay.price(j, i), -1.0}}, 0.0);

  designate_free_alpha_b(rs, lay, drop);
  for (int i = 0; i < n; ++i) {
    if (i == drop) continue;
    for (int j = i; j < n; ++j) {
      if (j == drop) continue;
      rs.free_index.push_back(lay.price(i, j));
    }
  }
  return rs;
}

RestrictionSet approx_structure(
    const std::vector<std::string>& types, int drop,
    const std::vector<const metrics::ClosenessMatrix*>& distances,
    const std::vector<std::string>& distance_labels, const OwnPriceChars& chars) {
  const int n = static_cast<int>(types.size());
  require(n >= 2, "demand: need at least two types");
  require(distances.size() == distance_labels.size(),
          "demand: distance label count mismatch");
  drop = resolve_drop(drop, n);
  Layout lay{n};

  RestrictionSet rs;
  rs.names = block_names(types);
  const int n_dist = static_cast<int>(distances.size());
  const int n_char = static_cast<int>(chars.names.size());
  require(chars.values.rows() == n, "demand: own-price characteristics need ", n,
          " rows");
  require(chars.values.cols() == n_char, "demand: own-price column count mismatch");

  std::vector<int> lambda_idx, beta_idx;
  for (const auto& label : distance_labels) {
    lambda_idx.push_back(rs.dim());
    rs.names.push_back("lambda[" + label + "]");
  }
  const int beta0_idx = rs.dim();
  rs.names.push_back("beta0");
  for (const auto& name : chars.names) {
    beta_idx.push_back(rs.dim());
    rs.names.push_back("beta[" + name + "]");
  }

  for (int l = 0; l < n_dist; ++l) {
    const auto& m = *distances[l];
    require(m.size() == n, "demand: distance '", distance_labels[l],
            "' has wrong dimension");
    require((m.d - m.d.transpose()).cwiseAbs().maxCoeff() < 1e-12,
            "demand: distance '", distance_labels[l], "' is not symmetric");
  }

  add_adding_up(rs, lay);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // cross-price coefficients carry the lambdas
      std::vector<std::pair<int, double>> row = {{lay.price(i, j), 1.0}};
      for (int l = 0; l < n_dist; ++l)
        row.push_back({lambda_idx[l], -distances[l]->d(i, j)});
      rs.add(std::move(row), 0.0);
    }
  for (int i = 0; i < n; ++i) {  // own-price coefficients carry the betas
    std::vector<std::pair<int, double>> row = {{lay.price(i, i), 1.0},
                                               {beta0_idx, -1.0}};
    for (int c = 0; c < n_char; ++c) row.push_back({beta_idx[c], -chars.values(i, c)});
    rs.add(std::move(row), 0.0);
  }

  designate_free_alpha_b(rs, lay, drop);
  for (int idx : lambda_idx) rs.free_index.push_back(idx);
  rs.free_index.push_back(beta0_idx);
  for (int idx : beta_idx) rs.free_index.push_back(idx);
  return rs;
}

SystemFit fit_original(const MarketPanel& panel, int drop,
                       const estimator::SurOptions& options) {
  const auto rows = estimator::build_rows(panel);
  drop = resolve_drop(drop, panel.n_types());
  const auto subst = estimator::solve_substitution(original_structure(panel.types, drop));
  return estimator::sur_fit(rotterdam_design(rows), subst, drop, options);
}

SystemFit fit_dm(const MarketPanel& panel, const metrics::DistanceSet& distances,
                 const OwnPriceChars& chars,
                 const std::vector<std::string>& distance_names, int drop,
                 const estimator::SurOptions& options) {
  require(!distance_names.empty(), "demand: no distances selected");
  std::vector<const metrics::ClosenessMatrix*> mats;
  for (const auto& name : distance_names) mats.push_back(&distances.get(name));

  const auto rows = estimator::build_rows(panel);
  drop = resolve_drop(drop, panel.n_types());
  const auto subst = estimator::solve_substitution(
      approx_structure(panel.types, drop, mats, distance_names, chars));
  return estimator::sur_fit(rotterdam_design(rows), subst, drop, options);
}

SystemFit fit_hm(const MarketPanel& panel, const metrics::ClosenessMatrix& hedonic,
                 const metrics::ClosenessMatrix& nn, const Eigen::VectorXd& shares,
                 const Eigen::VectorXd& closeness_index, int drop,
                 const estimator::SurOptions& options) {
  const int n = panel.n_types();
  require(shares.size() == n && closeness_index.size() == n,
          "demand: share/closeness vectors need ", n, " entries");
  for (int i = 0; i < n; ++i)
    require(closeness_index[i] > 0, "demand: closeness index must be positive");

  OwnPriceChars chars;
  chars.names = {"share", "closeness"};
  chars.values.resize(n, 2);
  chars.values.col(0) = shares;
  chars.values.col(1) = closeness_index;

  const auto rows = estimator::build_rows(panel);
  drop = resolve_drop(drop, n);
  const auto subst = estimator::solve_substitution(approx_structure(
      panel.types, drop, {&hedonic, &nn}, {hedonic.name, nn.name}, chars));
  return estimator::sur_fit(rotterdam_design(rows), subst, drop, options);
}

SystemFit fit_model(const MarketPanel& panel, const ModelSpec& spec,
                    const metrics::DistanceSet& distances, const OwnPriceChars& chars,
                    const estimator::SurOptions& options) {
  switch (spec.variant) {
    case Variant::original:
      return fit_original(panel, spec.drop, options);
    case Variant::dm:
      require(chars.names == spec.ownprice_names,
              "demand: own-price characteristics do not match the model spec");
      return fit_dm(panel, distances, chars, spec.distance_names, spec.drop, options);
    case Variant::hm: {
      require(spec.distance_names.empty() ||
                  spec.distance_names == std::vector<std::string>{"HEDONIC", "NN_H"},
              "demand: the hm variant uses exactly the HEDONIC and NN_H matrices");
      require(chars.names == std::vector<std::string>{"share", "closeness"},
              "demand: the hm variant uses exactly the share and closeness "
              "characteristics");
      return fit_hm(panel, distances.get("HEDONIC"), distances.get("NN_H"),
                    chars.values.col(0), chars.values.col(1), spec.drop, options);
    }
  }
  fail("demand: bad variant");
}

namespace {

Layout fit_layout(const SystemFit& fit) {
  const int n = static_cast<int>(fit.types.size());
  Layout lay{n};
  require(!fit.block_size.empty() && fit.block_size[0] == lay.block(),
          "demand: fit does not use the Rotterdam coefficient layout");
  return lay;
}

}  // namespace

Eigen::MatrixXd price_coef_matrix(const SystemFit& fit) {
  const Layout lay = fit_layout(fit);
  Eigen::MatrixXd c(lay.n, lay.n);
  for (int i = 0; i < lay.n; ++i)
    for (int j = 0; j < lay.n; ++j) c(i, j) = fit.params[lay.price(i, j)];
  return c;
}

Eigen::VectorXd expenditure_coef(const SystemFit& fit) {
  const Layout lay = fit_layout(fit);
  Eigen::VectorXd b(lay.n);
  for (int i = 0; i < lay.n; ++i) b[i] = fit.params[lay.expenditure(i)];
  return b;
}

Eigen::VectorXd intercepts(const SystemFit& fit) {
  const Layout lay = fit_layout(fit);
  Eigen::VectorXd a(lay.n);
  for (int i = 0; i < lay.n; ++i) a[i] = fit.params[lay.intercept(i)];
  return a;
}

ElasticityReport elasticities(const SystemFit& fit, const Eigen::VectorXd& mean_share) {
  const Layout lay = fit_layout(fit);
  const int n = lay.n;
  require(mean_share.size() == n, "demand: share vector needs ", n, " entries");
  for (int i = 0; i < n; ++i)
    require(mean_share[i] > 0, "demand: zero mean share for type '", fit.types[i], "'");

  ElasticityReport rep;
  rep.types = fit.types;
  rep.mean_share = mean_share;
  rep.hicksian.resize(n, n);
  rep.hicksian_se.resize(n, n);
  rep.marshallian.resize(n, n);
  rep.marshallian_se.resize(n, n);
  rep.expenditure.resize(n);
  rep.expenditure_se.resize(n);

  for (int i = 0; i < n; ++i) {
    const double w_i = mean_share[i];
    const int b_i = lay.expenditure(i);
    rep.expenditure[i] = fit.params[b_i] / w_i;
    rep.expenditure_se[i] = std::sqrt(std::max(0.0, fit.param_cov(b_i, b_i))) / w_i;
    for (int j = 0; j < n; ++j) {
      const int c_ij = lay.price(i, j);
      const double w_j = mean_share[j];
      rep.hicksian(i, j) = fit.params[c_ij] / w_i;
      rep.hicksian_se(i, j) =
          std::sqrt(std::max(0.0, fit.param_cov(c_ij, c_ij))) / w_i;
      // marshallian_ij = (c_ij - w_j b_i) / w_i, linear in the parameters
      rep.marshallian(i, j) = (fit.params[c_ij] - w_j * fit.params[b_i]) / w_i;
      const double var = fit.param_cov(c_ij, c_ij) +
                         w_j * w_j * fit.param_cov(b_i, b_i) -
                         2.0 * w_j * fit.param_cov(c_ij, b_i);
      rep.marshallian_se(i, j) = std::sqrt(std::max(0.0, var)) / w_i;
    }
  }
  return rep;
}

Eigen::MatrixXd marshallian_from(const Eigen::MatrixXd& hicksian,
                                 const Eigen::VectorXd& expenditure,
                                 const Eigen::VectorXd& share) {
  const int n = static_cast<int>(hicksian.rows());
  require(hicksian.cols() == n && expenditure.size() == n && share.size() == n,
          "demand: dimension mismatch in Slutsky conversion");
  return hicksian - expenditure * share.transpose();
}

int ContainmentMarks::n_checked() const {
  return static_cast<int>(marshallian.size() + expenditure.size());
}

int ContainmentMarks::n_inside() const {
  int count = 0;
  for (int i = 0; i < marshallian.rows(); ++i)
    for (int j = 0; j < marshallian.cols(); ++j)
      if (marshallian(i, j)) ++count;
  for (int i = 0; i < expenditure.size(); ++i)
    if (expenditure[i]) ++count;
  return count;
}

ContainmentMarks ci_containment(const ElasticityReport& candidate,
                                const ElasticityReport& baseline) {
  require(candidate.types == baseline.types,
          "demand: candidate and baseline cover different type lists");
  const int n = static_cast<int>(candidate.types.size());

  ContainmentMarks marks;
  marks.types = candidate.types;
  marks.marshallian.resize(n, n);
  marks.expenditure.resize(n);
  auto inside = [](double cand, double base, double se) {
    return std::abs(cand - base) <= 1.96 * se;  // closed interval
  };
  for (int i = 0; i < n; ++i) {
    marks.expenditure[i] = inside(candidate.expenditure[i], baseline.expenditure[i],
                                  baseline.expenditure_se[i]);
    for (int j = 0; j < n; ++j)
      marks.marshallian(i, j) =
          inside(candidate.marshallian(i, j), baseline.marshallian(i, j),
                 baseline.marshallian_se(i, j));
  }
  return marks;
}

namespace {

using json = nlohmann::ordered_json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void save_fit(const std::string& path, const FitBundle& bundle) {
  const auto& f = bundle.fit;
  json j;
  j["variant"] = bundle.variant;
  j["types"] = f.types;
  j["dropped"] = f.dropped;
  j["free_names"] = f.free_names;
  j["free_params"] = vector_to_json(f.free_params);
  j["free_cov"] = matrix_to_json(f.free_cov);
  j["param_names"] = f.param_names;
  j["params"] = vector_to_json(f.params);
  j["param_cov"] = matrix_to_json(f.param_cov);
  j["block_offset"] = f.block_offset;
  j["block_size"] = f.block_size;
  j["sigma"] = matrix_to_json(f.sigma);
  j["loglik"] = f.loglik;
  j["aic"] = f.aic;
  j["bic"] = f.bic;
  j["durbin_watson"] = vector_to_json(f.durbin_watson);
  j["n_free"] = f.n_free;
  j["n_obs"] = f.n_obs;
  j["iterations"] = f.iterations;
  j["mean_share"] = vector_to_json(bundle.mean_share);

  std::ofstream out(path);
  if (!out) fail("demand: cannot write fit file '", path, "'");
  out << j.dump(1) << '\n';
}

FitBundle load_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("demand: cannot open fit file '", path, "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("demand: invalid fit file '", path, "': ", e.what());
  }

  FitBundle bundle;
  bundle.variant = j.at("variant").get<std::string>();
  auto& f = bundle.fit;
  f.types = j.at("types").get<std::vector<std::string>>();
  f.dropped = j.at("dropped").get<int>();
  f.free_names = j.at("free_names").get<std::vector<std::string>>();
  f.free_params = vector_from_json(j.at("free_params"));
  f.free_cov = matrix_from_json(j.at("free_cov"));
  f.param_names = j.at("param_names").get<std::vector<std::string>>();
  f.params = vector_from_json(j.at("params"));
  f.param_cov = matrix_from_json(j.at("param_cov"));
  f.block_offset = j.at("block_offset").get<std::vector<int>>();
  f.block_size = j.at("block_size").get<std::vector<int>>();
  f.sigma = matrix_from_json(j.at("sigma"));
  f.loglik = j.at("loglik").get<double>();
  f.aic = j.at("aic").get<double>();
  f.bic = j.at("bic").get<double>();
  f.durbin_watson = vector_from_json(j.at("durbin_watson"));
  f.n_free = j.at("n_free").get<int>();
  f.n_obs = j.at("n_obs").get<int>();
  f.iterations = j.at("iterations").get<int>();
  bundle.mean_share = vector_from_json(j.at("mean_share"));
  return bundle;
}

void write_elasticity_csv(const std::string& path, const ElasticityReport& rep) {
  std::vector<std::string> header = {"block", "row", "col", "estimate", "std_error"};
  std::vector<std::vector<std::string>> rows;
  const int n = static_cast<int>(rep.types.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rows.push_back({"hicksian", rep.types[i], rep.types[j],
                      csv::fmt(rep.hicksian(i, j)), csv::fmt(rep.hicksian_se(i, j))});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rows.push_back({"marshallian", rep.types[i], rep.types[j],
                      csv::fmt(rep.marshallian(i, j)),
                      csv::fmt(rep.marshallian_se(i, j))});
  for (int i = 0; i < n; ++i)
    rows.push_back({"expenditure", rep.types[i], "", csv::fmt(rep.expenditure[i]),
                    csv::fmt(rep.expenditure_se[i])});
  csv::write_file(path, header, rows);
}

}  // namespace hedmet::demand
