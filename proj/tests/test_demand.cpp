#include <doctest.h>

#include <cmath>

#include "hedmet/demand.hpp"
#include "hedmet/error.hpp"
#include "hedmet/hedonic.hpp"
#include "hedmet/metrics.hpp"
#include "hedmet/panel.hpp"
#include "hedmet/synth.hpp"

using namespace hedmet;

namespace {

const CalibrationTable& milk_calibration() {
  static const CalibrationTable c = panel::load_calibration("data/milk_profiles.csv");
  return c;
}

metrics::TypeFeatures milk_features() {
  return metrics::features_from_calibration(milk_calibration());
}

std::vector<std::string> milk_types() {
  std::vector<std::string> t;
  for (const auto& c : milk_calibration()) t.push_back(c.type);
  return t;
}

double free_param(const estimator::SystemFit& fit, const std::string& name) {
  for (size_t i = 0; i < fit.free_names.size(); ++i)
    if (fit.free_names[i] == name) return fit.free_params[static_cast<int>(i)];
  FAIL("no free parameter named " << name);
  return 0;
}

// hedonic closeness objects built from the calibration table itself
struct HedonicSpace {
  metrics::ClosenessMatrix hedonic;
  metrics::ClosenessMatrix nn;
  Eigen::VectorXd chi;
};

HedonicSpace milk_hedonic_space() {
  const auto& calibration = milk_calibration();
  std::vector<TypeProfile> profiles(calibration.size());
  Eigen::VectorXd prices(static_cast<int>(calibration.size()));
  for (size_t i = 0; i < calibration.size(); ++i) {
    profiles[i].type = calibration[i].type;
    profiles[i].mean = calibration[i].attr_mean;
    prices[static_cast<int>(i)] = calibration[i].price_mean;
  }
  hedonic::HedonicFit fit;
  fit.form = hedonic::Form::linear;
  fit.attributes.assign(AttributeVector::names().begin(),
                        AttributeVector::names().end());
  synth::GroundTruth published = synth::default_truth(milk_calibration(), 1);
  fit.coef = published.hedonic_beta.to_vector();
  fit.coef_se = Eigen::VectorXd::Zero(AttributeVector::count);
  fit.intercept = published.hedonic_intercept;

  const auto values = hedonic::value_added(fit, profiles, prices);
  HedonicSpace space;
  space.hedonic = metrics::hedonic_distance(values.types, values.v);
  space.nn = metrics::nearest_neighbor(space.hedonic);
  space.nn.name = "NN_H";
  space.chi = metrics::closeness_index(space.hedonic);
  return space;
}

}  // namespace

TEST_CASE("restriction structures count the free parameters") {
  SUBCASE("two goods leave one free price coefficient") {
    const auto rs = demand::original_structure({"a", "b"}, 1);
    const auto s = estimator::solve_substitution(rs);
    CHECK(s.free_count() == 3);  // alpha, b and a single c
    int free_c = 0;
    for (const auto& name : s.free_names)
      if (name.rfind("c[", 0) == 0) ++free_c;
    CHECK(free_c == 1);
  }
  SUBCASE("five-good original model has 18") {
    const auto s =
        estimator::solve_substitution(demand::original_structure(milk_types(), 4));
    CHECK(s.free_count() == 18);
  }

  const auto features = milk_features();
  const auto set = metrics::build_distance_set(features);
  demand::OwnPriceChars chars;
  chars.names = {"share", "fat", "organic"};
  chars.values.resize(5, 3);
  chars.values.col(0) = features.share;
  chars.values.col(1) = features.fat;
  chars.values.col(2) = features.organic;

  SUBCASE("full distance set gives 23") {
    const std::vector<std::string> names = {
        "SHARE",       "FAT",      "ORGANIC",      "SIZE",
        "FAT-ORGANIC", "FAT-SIZE", "ORGANIC-SIZE", "FAT-ORGANIC-SIZE",
        "NN_FO",       "NN_FS",    "NN_FOS"};
    std::vector<const metrics::ClosenessMatrix*> mats;
    for (const auto& n : names) mats.push_back(&set.get(n));
    const auto s = estimator::solve_substitution(
        demand::approx_structure(milk_types(), 4, mats, names, chars));
    CHECK(s.free_count() == 23);
  }
  SUBCASE("fat/organic/NN_FO version gives 15") {
    const std::vector<std::string> names = {"FAT", "ORGANIC", "NN_FO"};
    std::vector<const metrics::ClosenessMatrix*> mats;
    for (const auto& n : names) mats.push_back(&set.get(n));
    const auto s = estimator::solve_substitution(
        demand::approx_structure(milk_types(), 4, mats, names, chars));
    CHECK(s.free_count() == 15);
  }
  SUBCASE("hedonic-metric structure gives 13") {
    const auto space = milk_hedonic_space();
    demand::OwnPriceChars hm_chars;
    hm_chars.names = {"share", "closeness"};
    hm_chars.values.resize(5, 2);
    hm_chars.values.col(0) = features.share;
    hm_chars.values.col(1) = space.chi;
    const auto s = estimator::solve_substitution(demand::approx_structure(
        milk_types(), 4, {&space.hedonic, &space.nn},
        {space.hedonic.name, space.nn.name}, hm_chars));
    CHECK(s.free_count() == 13);
  }
}

TEST_CASE("fit_original recovers a zero-noise panel exactly") {
  auto truth = synth::default_truth(milk_calibration(), 7);
  truth.noise_sd = 0.0;
  const auto panel = synth::gen_panel(truth, 80, milk_calibration());
  const auto fit = demand::fit_original(panel, 0);

  CHECK(fit.n_free == 18);
  CHECK(fit.n_obs == 79);
  const auto c = demand::price_coef_matrix(fit);
  const auto b = demand::expenditure_coef(fit);
  CHECK((c - truth.c).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((b - truth.b).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(demand::intercepts(fit).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("N is reported as one less than the panel length") {
  auto truth = synth::default_truth(milk_calibration(), 3);
  const auto panel = synth::gen_panel(truth, 209, milk_calibration());
  const auto fit = demand::fit_original(panel, 0);
  CHECK(fit.n_obs == 208);
}

TEST_CASE("fit_dm recovers structure-true lambda and beta") {
  const auto features = milk_features();
  const auto set = metrics::build_distance_set(features);
  const std::vector<std::string> names = {"FAT", "ORGANIC", "NN_FO"};

  demand::OwnPriceChars chars;
  chars.names = {"share", "fat", "organic"};
  chars.values.resize(5, 3);
  chars.values.col(0) = features.share;
  chars.values.col(1) = features.fat;
  chars.values.col(2) = features.organic;

  const double lam_fat = 0.02, lam_org = 0.04, lam_nn = -0.02;
  const double beta0 = -0.10, beta_s = -0.30, beta_f = 0.005, beta_o = -0.05;

  // truth built here, independent of the estimator's expansion machinery
  auto truth = synth::default_truth(milk_calibration(), 19);
  truth.noise_sd = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i == j) continue;
      truth.c(i, j) = lam_fat * set.get("FAT").d(i, j) +
                      lam_org * set.get("ORGANIC").d(i, j) +
                      lam_nn * set.get("NN_FO").d(i, j);
    }
    truth.c(i, i) = beta0 + beta_s * chars.values(i, 0) +
                    beta_f * chars.values(i, 1) + beta_o * chars.values(i, 2);
    CHECK(truth.c(i, i) < 0);
  }

  const auto panel = synth::gen_panel(truth, 120, milk_calibration());
  const auto fit = demand::fit_dm(panel, set, chars, names, 0);

  CHECK(fit.n_free == 15);
  CHECK(free_param(fit, "lambda[FAT]") == doctest::Approx(lam_fat).epsilon(1e-8));
  CHECK(free_param(fit, "lambda[ORGANIC]") == doctest::Approx(lam_org).epsilon(1e-8));
  CHECK(free_param(fit, "lambda[NN_FO]") == doctest::Approx(lam_nn).epsilon(1e-8));
  CHECK(free_param(fit, "beta0") == doctest::Approx(beta0).epsilon(1e-8));
  CHECK(free_param(fit, "beta[share]") == doctest::Approx(beta_s).epsilon(1e-8));
  CHECK(free_param(fit, "beta[organic]") == doctest::Approx(beta_o).epsilon(1e-6));

  SUBCASE("the expanded price matrix is symmetric by construction") {
    const auto c = demand::price_coef_matrix(fit);
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("expenditure coefficients close the adding-up identity") {
    CHECK(std::abs(demand::expenditure_coef(fit).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("fit_hm recovers structure-true parameters") {
  const auto features = milk_features();
  const auto space = milk_hedonic_space();

  const double lam_h = 0.05, lam_nn = -0.03;
  // beta picked so every own-price coefficient stays negative
  const double beta0 = 0.05, beta_s = 0.02, beta_c = -0.06;

  auto truth = synth::default_truth(milk_calibration(), 23);
  truth.noise_sd = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i == j) continue;
      truth.c(i, j) = lam_h * space.hedonic.d(i, j) + lam_nn * space.nn.d(i, j);
    }
    truth.c(i, i) = beta0 + beta_s * features.share[i] + beta_c * space.chi[i];
    CHECK(truth.c(i, i) < 0);
  }

  const auto panel = synth::gen_panel(truth, 120, milk_calibration());
  const auto fit =
      demand::fit_hm(panel, space.hedonic, space.nn, features.share, space.chi, 0);

  CHECK(fit.n_free == 13);
  CHECK(free_param(fit, "lambda[HEDONIC]") == doctest::Approx(lam_h).epsilon(1e-7));
  CHECK(free_param(fit, "lambda[NN_H]") == doctest::Approx(lam_nn).epsilon(1e-7));
  CHECK(free_param(fit, "beta0") == doctest::Approx(beta0).epsilon(1e-6));
  CHECK(free_param(fit, "beta[closeness]") == doctest::Approx(beta_c).epsilon(1e-6));
}

TEST_CASE("fit_model dispatches on the model spec and enforces its shape") {
  const auto features = milk_features();
  auto set = metrics::build_distance_set(features);
  const auto space = milk_hedonic_space();
  set.add(space.hedonic);
  set.add(space.nn);

  auto truth = synth::default_truth(milk_calibration(), 37);
  truth.noise_sd = 0.001;
  const auto panel = synth::gen_panel(truth, 80, milk_calibration());

  demand::OwnPriceChars dm_chars;
  dm_chars.names = {"share", "fat", "organic"};
  dm_chars.values.resize(5, 3);
  dm_chars.values.col(0) = features.share;
  dm_chars.values.col(1) = features.fat;
  dm_chars.values.col(2) = features.organic;

  demand::ModelSpec spec;
  spec.variant = demand::Variant::dm;
  spec.distance_names = {"FAT", "ORGANIC", "NN_FO"};
  spec.drop = 0;
  const auto via_spec = demand::fit_model(panel, spec, set, dm_chars);
  const auto direct = demand::fit_dm(panel, set, dm_chars, spec.distance_names, 0);
  CHECK((via_spec.free_params - direct.free_params).cwiseAbs().maxCoeff() < 1e-12);

  SUBCASE("hm rejects own-price characteristics other than share/closeness") {
    spec.variant = demand::Variant::hm;
    spec.distance_names = {};
    CHECK_THROWS_WITH_AS(demand::fit_model(panel, spec, set, dm_chars),
                         doctest::Contains("share and closeness"), Error);
  }
  SUBCASE("hm accepts exactly the pinned structure") {
    spec.variant = demand::Variant::hm;
    spec.distance_names = {};
    demand::OwnPriceChars hm_chars;
    hm_chars.names = {"share", "closeness"};
    hm_chars.values.resize(5, 2);
    hm_chars.values.col(0) = features.share;
    hm_chars.values.col(1) = space.chi;
    const auto fit = demand::fit_model(panel, spec, set, hm_chars);
    CHECK(fit.n_free == 13);
  }
}

TEST_CASE("fit_dm errors on a missing distance name") {
  const auto features = milk_features();
  const auto set = metrics::build_distance_set(features);
  demand::OwnPriceChars chars;
  chars.names = {"share"};
  chars.values = features.share;

  auto truth = synth::default_truth(milk_calibration(), 5);
  const auto panel = synth::gen_panel(truth, 30, milk_calibration());
  CHECK_THROWS_WITH_AS(demand::fit_dm(panel, set, chars, {"NOPE"}),
                       doctest::Contains("NOPE"), Error);
}

TEST_CASE("all-zero distances degenerate to an own-price-only system") {
  const auto features = milk_features();
  metrics::DistanceSet set;
  metrics::ClosenessMatrix zero;
  zero.name = "ZERO";
  zero.types = milk_types();
  zero.d = Eigen::MatrixXd::Zero(5, 5);
  set.add(zero);

  demand::OwnPriceChars chars;
  chars.names = {"share"};
  chars.values = features.share;

  auto truth = synth::default_truth(milk_calibration(), 29);
  truth.noise_sd = 0.001;
  const auto panel = synth::gen_panel(truth, 80, milk_calibration());
  const auto fit = demand::fit_dm(panel, set, chars, {"ZERO"}, 0);

  CHECK(free_param(fit, "lambda[ZERO]") == 0.0);
  const auto c = demand::price_coef_matrix(fit);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) CHECK(c(i, j) == 0.0);
}

TEST_CASE("elasticity report on a noisy original fit") {
  auto truth = synth::default_truth(milk_calibration(), 31);
  truth.noise_sd = 0.0015;
  const auto panel = synth::gen_panel(truth, 209, milk_calibration());
  const auto fit = demand::fit_original(panel, 0);
  const auto rows = estimator::build_rows(panel);
  const Eigen::VectorXd wbar = rows.mean_share();
  const auto rep = demand::elasticities(fit, wbar);

  SUBCASE("the Slutsky identity holds cellwise as computed") {
    const Eigen::MatrixXd expected =
        demand::marshallian_from(rep.hicksian, rep.expenditure, wbar);
    CHECK((rep.marshallian - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("Engel aggregation is exact") {
    double sum = 0;
    for (int i = 0; i < 5; ++i) sum += wbar[i] * rep.expenditure[i];
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
  SUBCASE("Hicksian symmetry is exact in share-weighted form") {
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        CHECK(std::abs(wbar[i] * rep.hicksian(i, j) - wbar[j] * rep.hicksian(j, i)) <
              1e-12);
  }
  SUBCASE("own-price elasticities are negative") {
    for (int i = 0; i < 5; ++i) CHECK(rep.hicksian(i, i) < 0);
  }
  SUBCASE("zero shares are rejected") {
    Eigen::VectorXd bad = wbar;
    bad[2] = 0.0;
    CHECK_THROWS_AS(demand::elasticities(fit, bad), Error);
  }
  SUBCASE("fit bundles round-trip through JSON") {
    demand::FitBundle bundle{"original", fit, wbar};
    const std::string path = "/tmp/hedmet_fit_rt.json";
    demand::save_fit(path, bundle);
    const auto back = demand::load_fit(path);
    CHECK(back.variant == "original");
    CHECK(back.fit.types == fit.types);
    CHECK((back.fit.params - fit.params).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.fit.param_cov - fit.param_cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.fit.loglik == doctest::Approx(fit.loglik).epsilon(1e-12));
    const auto rep2 = demand::elasticities(back.fit, back.mean_share);
    CHECK((rep2.marshallian - rep.marshallian).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("marshallian_from reproduces the published own-price cells") {
  // Hicksian own-price, expenditure elasticity and mean share per type
  Eigen::MatrixXd hicksian = Eigen::MatrixXd::Zero(2, 2);
  hicksian(0, 0) = -0.4781;  // 2%
  hicksian(1, 1) = -0.575;   // skim
  Eigen::VectorXd expenditure(2);
  expenditure << 0.9993, 1.1366;
  Eigen::VectorXd share(2);
  share << 0.3400, 0.2713;

  const auto m = demand::marshallian_from(hicksian, expenditure, share);
  CHECK(m(0, 0) == doctest::Approx(-0.8179).epsilon(5e-4));
  CHECK(m(1, 1) == doctest::Approx(-0.8832).epsilon(5e-4));

  SUBCASE("zero expenditure elasticity leaves the row Hicksian") {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    const auto m2 = demand::marshallian_from(hicksian, zero, share);
    CHECK((m2 - hicksian).cwiseAbs().maxCoeff() == 0.0);
  }
}

namespace {

demand::ElasticityReport tiny_report(double value, double se) {
  demand::ElasticityReport rep;
  rep.types = {"a", "b"};
  rep.mean_share = Eigen::VectorXd::Constant(2, 0.5);
  rep.hicksian = Eigen::MatrixXd::Constant(2, 2, value);
  rep.hicksian_se = Eigen::MatrixXd::Constant(2, 2, se);
  rep.marshallian = rep.hicksian;
  rep.marshallian_se = rep.hicksian_se;
  rep.expenditure = Eigen::VectorXd::Constant(2, 1.0);
  rep.expenditure_se = Eigen::VectorXd::Constant(2, se);
  return rep;
}

}  // namespace

TEST_CASE("ci_containment marks") {
  SUBCASE("a fit compared with itself is fully contained") {
    const auto rep = tiny_report(0.3, 0.05);
    const auto marks = demand::ci_containment(rep, rep);
    CHECK(marks.n_inside() == marks.n_checked());
  }
  SUBCASE("the published full-model cell falls outside") {
    auto base = tiny_report(0.0, 1.0);
    auto cand = base;
    base.marshallian(0, 1) = 0.1523;
    base.marshallian_se(0, 1) = 0.084;
    cand.marshallian(0, 1) = 0.3173;
    const auto marks = demand::ci_containment(cand, base);
    CHECK_FALSE(marks.marshallian(0, 1));
  }
  SUBCASE("the interval is closed at the boundary") {
    auto base = tiny_report(0.0, 1.0);
    base.marshallian(1, 0) = 0.10;
    base.marshallian_se(1, 0) = 0.05;
    auto cand = base;
    cand.marshallian(1, 0) = 0.10 + 1.96 * 0.05;
    const auto marks = demand::ci_containment(cand, base);
    CHECK(marks.marshallian(1, 0));
  }
  SUBCASE("type mismatch is rejected") {
    auto a = tiny_report(0.1, 0.1);
    auto b = a;
    b.types = {"a", "c"};
    CHECK_THROWS_AS(demand::ci_containment(a, b), Error);
  }
}
