#include "hedmet/estimator.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "hedmet/error.hpp"

namespace hedmet::estimator {

RotterdamRows build_rows(const MarketPanel& panel) {
  const int T = panel.weeks();
  const int n = panel.n_types();
  require(T >= 3, "estimator: need at least 3 weeks, got ", T);

  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      if (panel.price(t, i) <= 0)
        fail("estimator: nonpositive price at (week ", t, ", ", panel.types[i], ")");
      if (panel.quantity(t, i) <= 0)
        fail("estimator: nonpositive quantity at (week ", t, ", ", panel.types[i], ")");
    }

  RotterdamRows rows;
  rows.types = panel.types;
  rows.lhs.resize(T - 1, n);
  rows.dlog_price.resize(T - 1, n);
  rows.divisia.resize(T - 1);
  rows.avg_share.resize(T - 1, n);

  for (int t = 1; t < T; ++t) {
    const int r = t - 1;
    double price_index = 0;
    for (int i = 0; i < n; ++i) {
      const double w = 0.5 * (panel.share(t, i) + panel.share(t - 1, i));
      const double dp = std::log(panel.price(t, i)) - std::log(panel.price(t - 1, i));
      const double dq =
          std::log(panel.quantity(t, i)) - std::log(panel.quantity(t - 1, i));
      rows.avg_share(r, i) = w;
      rows.dlog_price(r, i) = dp;
      rows.lhs(r, i) = w * dq;
      price_index += w * dp;
    }
    const double dx =
        std::log(panel.expenditure[t]) - std::log(panel.expenditure[t - 1]);
    rows.divisia[r] = dx - price_index;
  }
  return rows;
}

void RestrictionSet::add(std::vector<std::pair<int, double>> terms, double value) {
  for (const auto& [idx, c] : terms)
    require(idx >= 0 && idx < dim(), "estimator: constraint index ", idx,
            " out of range");
  rows.push_back(std::move(terms));
  rhs.push_back(value);
}

Eigen::MatrixXd RestrictionSet::dense() const {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n_constraints(), dim());
  for (int i = 0; i < n_constraints(); ++i)
    for (const auto& [idx, c] : rows[i]) r(i, idx) += c;
  return r;
}

double RestrictionSet::violation(const Eigen::VectorXd& theta) const {
  double worst = 0;
  for (int i = 0; i < n_constraints(); ++i) {
    double sum = -rhs[i];
    for (const auto& [idx, c] : rows[i]) sum += c * theta[idx];
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

Substitution solve_substitution(const RestrictionSet& restrictions) {
  const int dim = restrictions.dim();
  const int m = restrictions.n_constraints();
  const int k = static_cast<int>(restrictions.free_index.size());
  require(m + k == dim, "estimator: ", m, " constraints and ", k,
          " free parameters do not span dimension ", dim);

  std::vector<bool> is_free(dim, false);
  for (int idx : restrictions.free_index) {
    require(idx >= 0 && idx < dim, "estimator: free index out of range");
    require(!is_free[idx], "estimator: duplicate free index ", idx);
    is_free[idx] = true;
  }
  std::vector<int> dep_index;
  for (int i = 0; i < dim; ++i)
    if (!is_free[i]) dep_index.push_back(i);

  Substitution s;
  s.names = restrictions.names;
  s.free_index = restrictions.free_index;
  for (int idx : restrictions.free_index) s.free_names.push_back(restrictions.names[idx]);
  s.expand = Eigen::MatrixXd::Zero(dim, k);
  s.offset = Eigen::VectorXd::Zero(dim);
  for (int j = 0; j < k; ++j) s.expand(restrictions.free_index[j], j) = 1.0;
  if (m == 0) return s;

  const Eigen::MatrixXd r_full = restrictions.dense();
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(r_full.transpose());
    qr.setThreshold(1e-10);
    require(qr.rank() == m,
            "estimator: restriction matrix is not full row rank (rank ", qr.rank(),
            " of ", m, ")");
  }

  Eigen::MatrixXd r_dep(m, m), r_free(m, k);
  for (int j = 0; j < m; ++j) r_dep.col(j) = r_full.col(dep_index[j]);
  for (int j = 0; j < k; ++j) r_free.col(j) = r_full.col(restrictions.free_index[j]);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(r_dep);
  require(lu.isInvertible(),
          "estimator: chosen free set leaves a singular dependent block");

  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) rhs[i] = restrictions.rhs[i];
  const Eigen::MatrixXd dep_map = -lu.solve(r_free);  // theta_dep = dep_map*phi + dep_off
  const Eigen::VectorXd dep_off = lu.solve(rhs);

  for (int i = 0; i < m; ++i) {
    s.expand.row(dep_index[i]) = dep_map.row(i);
    s.offset[dep_index[i]] = dep_off[i];
  }
  return s;
}

int SurDesign::coef_dim() const {
  int total = 0;
  for (const auto& xe : x) total += static_cast<int>(xe.cols());
  return total;
}

double SystemFit::coef(int equation, int offset_in_block) const {
  return params[block_offset[equation] + offset_in_block];
}

double SystemFit::coef_var(int eq_a, int off_a, int eq_b, int off_b) const {
  return param_cov(block_offset[eq_a] + off_a, block_offset[eq_b] + off_b);
}

namespace {

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  require(llt.info() == Eigen::Success, "estimator: ", what, " is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

}  // namespace

SystemFit sur_fit(const SurDesign& design, const Substitution& subst, int drop,
                  const SurOptions& options) {
  const int n = design.n_equations();
  require(n >= 1, "estimator: no equations");
  require(design.y.cols() == n, "estimator: lhs column count mismatch");
  const int N = static_cast<int>(design.y.rows());
  const int coef_dim = design.coef_dim();
  require(subst.dim() >= coef_dim, "estimator: substitution dimension ", subst.dim(),
          " smaller than coefficient dimension ", coef_dim);
  require(drop < n, "estimator: drop index ", drop, " out of range");

  std::vector<int> block_offset(n), block_size(n);
  {
    int off = 0;
    for (int e = 0; e < n; ++e) {
      block_offset[e] = off;
      block_size[e] = static_cast<int>(design.x[e].cols());
      require(design.x[e].rows() == N, "estimator: equation ", e, " row count mismatch");
      off += block_size[e];
    }
  }

  std::vector<int> retained;
  for (int e = 0; e < n; ++e)
    if (e != drop) retained.push_back(e);
  const int m = static_cast<int>(retained.size());
  require(m >= 1, "estimator: all equations dropped");

  const int k = subst.free_count();

  // Per-equation design mapped through the substitution.
  std::vector<Eigen::MatrixXd> mapped(m);  // N x k
  std::vector<Eigen::VectorXd> shifted(m);  // y - X*offset
  for (int a = 0; a < m; ++a) {
    const int e = retained[a];
    require(N > block_size[e], "estimator: equation ", design.equations[e],
            " has too few observations (", N, " rows, ", block_size[e],
            " regressors)");
    const auto expand_block = subst.expand.middleRows(block_offset[e], block_size[e]);
    const auto offset_block = subst.offset.segment(block_offset[e], block_size[e]);
    mapped[a] = design.x[e] * expand_block;
    shifted[a] = design.y.col(e) - design.x[e] * offset_block;
  }

  // Free parameters whose mapped regressors vanish identically (for example a
  // lambda on an all-zero distance) carry no information; they are pinned to
  // zero with zero variance and the system solves on the remaining ones.
  std::vector<int> active;
  {
    Eigen::VectorXd col_norm = Eigen::VectorXd::Zero(k);
    for (int a = 0; a < m; ++a) col_norm += mapped[a].colwise().squaredNorm();
    const double max_norm = k > 0 ? col_norm.maxCoeff() : 0.0;
    for (int j = 0; j < k; ++j)
      if (col_norm[j] > max_norm * 1e-24) active.push_back(j);
    if (static_cast<int>(active.size()) < k)
      for (int a = 0; a < m; ++a) {
        Eigen::MatrixXd shrunk(N, static_cast<int>(active.size()));
        for (size_t j = 0; j < active.size(); ++j) shrunk.col(j) = mapped[a].col(active[j]);
        mapped[a] = std::move(shrunk);
      }
  }
  const int ka = static_cast<int>(active.size());

  const double y_scale =
      std::max(1.0, design.y.cwiseAbs().maxCoeff());

  // Stage 1: unrestricted equationwise OLS residuals seed the covariance.
  Eigen::MatrixXd resid(N, m);
  for (int a = 0; a < m; ++a) {
    const int e = retained[a];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.x[e]);
    resid.col(a) = design.y.col(e) - design.x[e] * qr.solve(design.y.col(e));
  }
  Eigen::MatrixXd sigma = resid.transpose() * resid / N;

  // A residual covariance counts as usable when its Cholesky factor is well
  // conditioned; otherwise the system either fits exactly or is degenerate.
  auto well_conditioned = [](const Eigen::LLT<Eigen::MatrixXd>& llt, int rows) {
    if (llt.info() != Eigen::Success) return false;
    const Eigen::MatrixXd chol = llt.matrixL();
    double lo = chol(0, 0), hi = chol(0, 0);
    for (int i = 1; i < rows; ++i) {
      lo = std::min(lo, chol(i, i));
      hi = std::max(hi, chol(i, i));
    }
    return lo > hi * 1e-6;
  };

  Eigen::VectorXd phi;
  Eigen::MatrixXd normal(ka, ka);
  bool exact_fit = false;
  bool converged = false;
  int iter = 0;

  for (iter = 1; iter <= options.max_iter; ++iter) {
    Eigen::MatrixXd weight;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (well_conditioned(llt, m)) {
      weight = llt.solve(Eigen::MatrixXd::Identity(m, m));
    } else if (resid.cwiseAbs().maxCoeff() <= options.exact_fit_scale * y_scale) {
      // residuals vanish: any weighting reproduces the exact solution
      weight = Eigen::MatrixXd::Identity(m, m);
      exact_fit = true;
    } else {
      fail("estimator: residual covariance is singular at iteration ", iter);
    }

    normal.setZero();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ka);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        if (weight(a, b) == 0.0) continue;
        normal.noalias() += weight(a, b) * (mapped[a].transpose() * mapped[b]);
        rhs.noalias() += weight(a, b) * (mapped[a].transpose() * shifted[b]);
      }

    {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      require(hi > 0 && lo > hi * 1e-13,
              "estimator: stacked design is rank deficient; regressors or "
              "distance measures are collinear");
    }
    phi = normal.ldlt().solve(rhs);

    for (int a = 0; a < m; ++a) resid.col(a) = shifted[a] - mapped[a] * phi;
    const Eigen::MatrixXd sigma_new = resid.transpose() * resid / N;
    if (exact_fit) {
      sigma = sigma_new;
      break;
    }
    const double delta = (sigma_new - sigma).cwiseAbs().maxCoeff();
    if (delta < options.tol) {
      converged = true;  // keep sigma: phi is the exact GLS solution under it
      break;
    }
    sigma = sigma_new;
  }
  if (!exact_fit && !converged)
    fail("estimator: FGLS did not converge in ", options.max_iter, " iterations");

  // scatter the active solution back into the full free-parameter space
  Eigen::VectorXd phi_full = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd cov_full = Eigen::MatrixXd::Zero(k, k);
  {
    const Eigen::MatrixXd cov_active =
        exact_fit ? Eigen::MatrixXd::Zero(ka, ka)
                  : invert_spd(normal, "GLS normal matrix");
    for (int i = 0; i < ka; ++i) {
      phi_full[active[i]] = phi[i];
      for (int j = 0; j < ka; ++j) cov_full(active[i], active[j]) = cov_active(i, j);
    }
  }

  SystemFit fit;
  fit.types = design.equations;
  fit.dropped = drop;
  fit.free_names = subst.free_names;
  fit.free_params = phi_full;
  fit.free_cov = cov_full;
  fit.param_names = subst.names;
  fit.params = subst.expand * phi_full + subst.offset;
  fit.param_cov = subst.expand * fit.free_cov * subst.expand.transpose();
  fit.block_offset = block_offset;
  fit.block_size = block_size;
  fit.sigma = sigma;
  fit.n_free = k;
  fit.n_obs = N;
  fit.iterations = iter;
  if (exact_fit) {
    // the Gaussian likelihood is unbounded for an exact fit
    fit.loglik = std::numeric_limits<double>::quiet_NaN();
    fit.aic = fit.loglik;
    fit.bic = fit.loglik;
  } else {
    fit.loglik = gaussian_loglik(sigma, N);
    fit.aic = aic(fit.loglik, k);
    fit.bic = bic(fit.loglik, k, N);
  }

  // Residual diagnostics for every equation, the dropped one included via
  // its recovered coefficients.
  fit.durbin_watson.resize(n);
  for (int e = 0; e < n; ++e) {
    const Eigen::VectorXd theta_e = fit.params.segment(block_offset[e], block_size[e]);
    const Eigen::VectorXd res_e = design.y.col(e) - design.x[e] * theta_e;
    if (res_e.cwiseAbs().maxCoeff() <= options.exact_fit_scale * y_scale)
      fit.durbin_watson[e] = std::numeric_limits<double>::quiet_NaN();
    else
      fit.durbin_watson[e] = durbin_watson(res_e);
  }
  return fit;
}

double gaussian_loglik(const Eigen::MatrixXd& sigma_mle, int n_obs) {
  const int m = static_cast<int>(sigma_mle.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_mle);
  require(llt.info() == Eigen::Success,
          "estimator: residual covariance is singular, log-likelihood undefined");
  const Eigen::MatrixXd chol = llt.matrixL();
  double logdet = 0;
  for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(chol(i, i));
  return -0.5 * n_obs * (m * (1.0 + std::log(2.0 * std::numbers::pi)) + logdet);
}

double aic(double loglik, int n_free) { return 2.0 * n_free - 2.0 * loglik; }

double bic(double loglik, int n_free, int n_obs) {
  return n_free * std::log(double(n_obs)) - 2.0 * loglik;
}

FitStats system_loglik(const SystemFit& fit) {
  return {fit.loglik, fit.aic, fit.bic};
}

double durbin_watson(const Eigen::VectorXd& residuals) {
  const int n = static_cast<int>(residuals.size());
  require(n >= 2, "estimator: Durbin-Watson needs at least 2 residuals");
  const double denom = residuals.squaredNorm();
  require(denom > 0, "estimator: Durbin-Watson undefined for all-zero residuals");
  double num = 0;
  for (int t = 1; t < n; ++t) {
    const double d = residuals[t] - residuals[t - 1];
    num += d * d;
  }
  return num / denom;
}

}  // namespace hedmet::estimator
