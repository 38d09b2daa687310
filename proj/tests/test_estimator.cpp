#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hedmet/demand.hpp"
#include "hedmet/error.hpp"
#include "hedmet/estimator.hpp"

using namespace hedmet;
using estimator::RestrictionSet;
using estimator::SurDesign;
using estimator::SurOptions;

namespace {

MarketPanel constant_panel(int weeks) {
  MarketPanel p;
  p.types = {"a", "b"};
  p.price = Eigen::MatrixXd::Constant(weeks, 2, 10.0);
  p.price.col(1).setConstant(20.0);
  p.quantity = Eigen::MatrixXd::Constant(weeks, 2, 5.0);
  p.expenditure.resize(weeks);
  p.share.resize(weeks, 2);
  for (int t = 0; t < weeks; ++t) {
    const double x = 10.0 * 5 + 20.0 * 5;
    p.expenditure[t] = x;
    p.share(t, 0) = 50.0 / x;
    p.share(t, 1) = 100.0 / x;
  }
  return p;
}

}  // namespace

TEST_CASE("build_rows on a constant panel is identically zero") {
  const auto rows = estimator::build_rows(constant_panel(5));
  CHECK(rows.n_obs() == 4);
  CHECK(rows.lhs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rows.dlog_price.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rows.divisia.cwiseAbs().maxCoeff() == 0.0);
  for (int t = 0; t < rows.n_obs(); ++t)
    CHECK(rows.avg_share.row(t).sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("build_rows log changes") {
  auto p = constant_panel(3);
  p.price(1, 0) = 20.0;  // doubles, then stays
  p.price(2, 0) = 20.0;
  for (int t = 1; t < 3; ++t) {
    const double x = 20.0 * 5 + 20.0 * 5;
    p.expenditure[t] = x;
    p.share(t, 0) = 100.0 / x;
    p.share(t, 1) = 100.0 / x;
  }
  const auto rows = estimator::build_rows(p);
  CHECK(rows.dlog_price(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(rows.dlog_price(0, 1) == 0.0);
  CHECK(rows.dlog_price(1, 0) == 0.0);
}

TEST_CASE("build_rows divisia matches a hand computation") {
  MarketPanel p;
  p.types = {"a", "b"};
  p.price.resize(3, 2);
  p.price << 10, 20,
             11, 19,
             12, 21;
  p.quantity.resize(3, 2);
  p.quantity << 4, 3,
                5, 2,
                4, 4;
  p.expenditure.resize(3);
  p.share.resize(3, 2);
  for (int t = 0; t < 3; ++t) {
    p.expenditure[t] = p.price(t, 0) * p.quantity(t, 0) + p.price(t, 1) * p.quantity(t, 1);
    for (int i = 0; i < 2; ++i)
      p.share(t, i) = p.price(t, i) * p.quantity(t, i) / p.expenditure[t];
  }
  const auto rows = estimator::build_rows(p);

  // spreadsheet-style recomputation for t = 1
  const double w0 = 0.5 * (p.share(1, 0) + p.share(0, 0));
  const double w1 = 0.5 * (p.share(1, 1) + p.share(0, 1));
  const double dx = std::log(p.expenditure[1] / p.expenditure[0]);
  const double dp0 = std::log(11.0 / 10.0), dp1 = std::log(19.0 / 20.0);
  CHECK(rows.divisia[0] ==
        doctest::Approx(dx - w0 * dp0 - w1 * dp1).epsilon(1e-14));
  CHECK(rows.lhs(0, 0) == doctest::Approx(w0 * std::log(5.0 / 4.0)).epsilon(1e-14));
}

TEST_CASE("build_rows rejects nonpositive cells and short panels") {
  auto p = constant_panel(3);
  p.price(1, 1) = 0.0;
  CHECK_THROWS_WITH_AS(estimator::build_rows(p), doctest::Contains("week 1"), Error);
  CHECK_THROWS_AS(estimator::build_rows(constant_panel(2)), Error);
}

TEST_CASE("solve_substitution eliminates dependent coordinates") {
  RestrictionSet rs;
  rs.names = {"x", "y", "z"};
  rs.add({{0, 1.0}, {1, 1.0}, {2, 1.0}}, 1.0);  // x + y + z = 1
  rs.add({{0, 1.0}, {1, -1.0}}, 0.0);           // x = y
  rs.free_index = {0};
  const auto s = estimator::solve_substitution(rs);
  REQUIRE(s.free_count() == 1);
  Eigen::VectorXd phi(1);
  phi << 0.2;
  const Eigen::VectorXd theta = s.expand * phi + s.offset;
  CHECK(theta[0] == doctest::Approx(0.2));
  CHECK(theta[1] == doctest::Approx(0.2));
  CHECK(theta[2] == doctest::Approx(0.6));
  CHECK(rs.violation(theta) < 1e-14);
}

TEST_CASE("solve_substitution rejects bad systems") {
  SUBCASE("rank-deficient restrictions") {
    RestrictionSet rs;
    rs.names = {"x", "y"};
    rs.add({{0, 1.0}, {1, 1.0}}, 1.0);
    rs.add({{0, 2.0}, {1, 2.0}}, 2.0);  // duplicate
    rs.free_index = {};
    CHECK_THROWS_WITH_AS(estimator::solve_substitution(rs),
                         doctest::Contains("full row rank"), Error);
  }
  SUBCASE("free choice leaving a singular dependent block") {
    RestrictionSet rs;
    rs.names = {"x", "y", "z"};
    rs.add({{0, 1.0}, {1, 1.0}}, 1.0);  // does not involve z
    rs.free_index = {0, 1};             // dependent {z} not determined
    CHECK_THROWS_AS(estimator::solve_substitution(rs), Error);
  }
  SUBCASE("count mismatch") {
    RestrictionSet rs;
    rs.names = {"x", "y"};
    rs.free_index = {0};
    CHECK_THROWS_AS(estimator::solve_substitution(rs), Error);
  }
}

namespace {

estimator::Substitution identity_subst(int p, const std::string& prefix) {
  RestrictionSet rs;
  for (int i = 0; i < p; ++i) {
    rs.names.push_back(prefix + std::to_string(i));
    rs.free_index.push_back(i);
  }
  return estimator::solve_substitution(rs);
}

}  // namespace

TEST_CASE("single-equation GLS equals OLS") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int N = 60;
  Eigen::MatrixXd x(N, 3);
  Eigen::VectorXd y(N);
  for (int t = 0; t < N; ++t) {
    x(t, 0) = 1.0;
    x(t, 1) = gauss(rng);
    x(t, 2) = gauss(rng);
    y[t] = 0.5 + 1.5 * x(t, 1) - 0.7 * x(t, 2) + 0.1 * gauss(rng);
  }

  SurDesign design;
  design.equations = {"only"};
  design.x = {x};
  design.y = y;
  const auto fit = estimator::sur_fit(design, identity_subst(3, "t"), -1);

  const Eigen::VectorXd ols =
      (x.transpose() * x).ldlt().solve(x.transpose() * y);
  CHECK((fit.free_params - ols).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.n_free == 3);
  CHECK(fit.n_obs == N);
}

namespace {

// Rotterdam-shaped system with exact adding-up: regressors are common across
// equations, the truth satisfies all restrictions, and noise sums to zero
// across equations so the full system is singular.
struct SingularSystem {
  SurDesign design;
  Eigen::VectorXd truth;  // stacked per-equation blocks
  std::vector<std::string> types;
};

SingularSystem make_singular_system(int n, int N, double noise_sd,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::VectorXd alpha(n), b(n);
  for (int i = 0; i < n; ++i) {
    alpha[i] = 0.01 * gauss(rng);
    b[i] = 1.0 / n + 0.05 * gauss(rng);
  }
  alpha.array() -= alpha.mean();
  b.array() -= (b.sum() - 1.0) / n;

  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = 0.05 * gauss(rng);
      c(i, j) = v;
      c(j, i) = v;
    }
  // double-centering keeps symmetry and zeroes every row and column sum
  const Eigen::VectorXd rm = c.rowwise().mean();
  const double gm = c.mean();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) += gm - rm[i] - rm[j];

  Eigen::MatrixXd x(N, n + 2);
  Eigen::MatrixXd y(N, n);
  for (int t = 0; t < N; ++t) {
    x(t, 0) = 1.0;
    x(t, 1) = 0.05 * gauss(rng);  // divisia-like regressor
    for (int j = 0; j < n; ++j) x(t, 2 + j) = 0.03 * gauss(rng);
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e[i] = noise_sd * gauss(rng);
    e.array() -= e.mean();  // errors sum to zero: the system is singular
    for (int i = 0; i < n; ++i) {
      double v = alpha[i] + b[i] * x(t, 1) + e[i];
      for (int j = 0; j < n; ++j) v += c(i, j) * x(t, 2 + j);
      y(t, i) = v;
    }
  }

  SingularSystem s;
  for (int i = 0; i < n; ++i) s.types.push_back("g" + std::to_string(i));
  s.design.equations = s.types;
  s.design.x.assign(n, x);
  s.design.y = y;
  s.truth.resize(n * (n + 2));
  for (int i = 0; i < n; ++i) {
    s.truth[i * (n + 2)] = alpha[i];
    s.truth[i * (n + 2) + 1] = b[i];
    for (int j = 0; j < n; ++j) s.truth[i * (n + 2) + 2 + j] = c(i, j);
  }
  return s;
}

}  // namespace

TEST_CASE("zero-noise system is recovered exactly") {
  const auto sys = make_singular_system(4, 50, 0.0, 11);
  const auto rs = demand::original_structure(sys.types, 3);
  const auto fit = estimator::sur_fit(sys.design, estimator::solve_substitution(rs), 3);
  CHECK((fit.params.head(sys.truth.size()) - sys.truth).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(fit.free_cov.cwiseAbs().maxCoeff() < 1e-16);  // exact fit, vanishing covariance
}

TEST_CASE("noisy fit satisfies the restrictions and the FGLS fixed point") {
  const auto sys = make_singular_system(4, 120, 0.01, 17);
  auto rs = demand::original_structure(sys.types, 3);
  const auto subst = estimator::solve_substitution(rs);
  SurOptions opts;
  opts.tol = 1e-14;
  opts.max_iter = 500;
  const auto fit = estimator::sur_fit(sys.design, subst, 3, opts);

  SUBCASE("restrictions hold at 1e-10") {
    CHECK(rs.violation(fit.params) < 1e-10);
  }

  SUBCASE("adding-up holds exactly on the expanded system") {
    const auto c = demand::price_coef_matrix(fit);
    const auto b = demand::expenditure_coef(fit);
    CHECK(std::abs(b.sum() - 1.0) < 1e-12);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(c.col(j).sum()) < 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(c.row(i).sum()) < 1e-12);
  }

  SUBCASE("one more GLS pass with the converged covariance is a no-op") {
    // independent reimplementation of a single GLS step
    const int m = 3;
    std::vector<int> retained = {0, 1, 2};
    const int k = subst.free_count();
    const Eigen::MatrixXd w = fit.sigma.llt().solve(Eigen::MatrixXd::Identity(m, m));
    std::vector<Eigen::MatrixXd> mapped(m);
    std::vector<Eigen::VectorXd> shifted(m);
    for (int a = 0; a < m; ++a) {
      const int e = retained[a];
      const int off = e * 6, size = 6;
      mapped[a] = sys.design.x[e] * subst.expand.middleRows(off, size);
      shifted[a] =
          sys.design.y.col(e) - sys.design.x[e] * subst.offset.segment(off, size);
    }
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    for (int a = 0; a < m; ++a)
      for (int bq = 0; bq < m; ++bq) {
        normal += w(a, bq) * (mapped[a].transpose() * mapped[bq]);
        rhs += w(a, bq) * (mapped[a].transpose() * shifted[bq]);
      }
    const Eigen::VectorXd phi2 = normal.ldlt().solve(rhs);
    CHECK((phi2 - fit.free_params).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("estimates are invariant to which equation is dropped") {
  const auto sys = make_singular_system(4, 100, 0.008, 23);
  SurOptions opts;
  opts.tol = 1e-13;
  opts.max_iter = 1000;

  const auto fit_a = estimator::sur_fit(
      sys.design,
      estimator::solve_substitution(demand::original_structure(sys.types, 3)), 3,
      opts);
  const auto fit_b = estimator::sur_fit(
      sys.design,
      estimator::solve_substitution(demand::original_structure(sys.types, 0)), 0,
      opts);
  CHECK((fit_a.params.head(24) - fit_b.params.head(24)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("identical equations make the residual covariance singular") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int N = 40;
  Eigen::MatrixXd x(N, 2);
  Eigen::MatrixXd y(N, 2);
  for (int t = 0; t < N; ++t) {
    x(t, 0) = 1.0;
    x(t, 1) = gauss(rng);
    y(t, 0) = 1.0 + x(t, 1) + 0.2 * gauss(rng);
    y(t, 1) = y(t, 0);  // duplicated equation
  }
  SurDesign design;
  design.equations = {"a", "b"};
  design.x = {x, x};
  design.y = y;
  CHECK_THROWS_WITH_AS(estimator::sur_fit(design, identity_subst(4, "p"), -1),
                       doctest::Contains("singular"), Error);
}

TEST_CASE("durbin_watson") {
  Eigen::VectorXd alt(4);
  alt << 1, -1, 1, -1;
  CHECK(estimator::durbin_watson(alt) == doctest::Approx(3.0).epsilon(1e-14));

  Eigen::VectorXd flat(4);
  flat << 1, 1, 1, 1;
  CHECK(estimator::durbin_watson(flat) == doctest::Approx(0.0));

  CHECK_THROWS_AS(estimator::durbin_watson(Eigen::VectorXd::Zero(5)), Error);
  CHECK_THROWS_AS(estimator::durbin_watson(Eigen::VectorXd::Ones(1)), Error);

  // white noise sits near 2
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd white(2000);
  for (int i = 0; i < white.size(); ++i) white[i] = gauss(rng);
  CHECK(estimator::durbin_watson(white) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("information criteria identities") {
  CHECK(estimator::aic(2740.689, 23) == doctest::Approx(-5435.378).epsilon(1e-12));
  CHECK(estimator::aic(2734.468, 15) == doctest::Approx(-5438.936).epsilon(1e-12));
  CHECK(estimator::aic(2733.933, 13) == doctest::Approx(-5441.866).epsilon(1e-12));
  CHECK(estimator::aic(100.0, 0) == doctest::Approx(-200.0));
  CHECK(estimator::bic(100.0, 3, 50) ==
        doctest::Approx(3 * std::log(50.0) - 200.0).epsilon(1e-12));
}

TEST_CASE("gaussian log-likelihood matches the closed form") {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 2.0, 0.3,
           0.3, 1.0;
  const int N = 100;
  const double logdet = std::log(sigma.determinant());
  const double expected =
      -0.5 * N * (2 * (1.0 + std::log(2.0 * std::numbers::pi)) + logdet);
  CHECK(estimator::gaussian_loglik(sigma, N) == doctest::Approx(expected).epsilon(1e-12));
}
