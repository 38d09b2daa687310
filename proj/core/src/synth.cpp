#include "hedmet/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "hedmet/error.hpp"

namespace hedmet::synth {

double gauss(std::mt19937_64& rng) {
  // Box-Muller on explicit uniforms; one value per call keeps the stream
  // independent of call patterns.
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * scale;
  const double u2 = (static_cast<double>(rng() >> 11) + 0.5) * scale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t replication_seed(std::uint64_t base, int replication) {
  // splitmix64 step over base + index
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (replication + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GroundTruth default_truth(const CalibrationTable& calibration, std::uint64_t seed) {
  const int n = static_cast<int>(calibration.size());
  require(n >= 2, "synth: calibration needs at least two types");

  GroundTruth truth;
  truth.seed = seed;
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    truth.types.push_back(calibration[i].type);
    w[i] = calibration[i].share_mean;
  }
  require(std::abs(w.sum() - 1.0) < 1e-6, "synth: calibration shares must sum to 1");

  truth.intercept = Eigen::VectorXd::Zero(n);
  truth.b = w;  // unit expenditure elasticities, adding-up exact

  // symmetric, zero row sums, negative diagonal: own-price elasticities near
  // -0.7 (1 - w_i), cross-price responses proportional to the partner share
  const double strength = 0.72;
  truth.c.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      truth.c(i, j) = i == j ? -strength * w[i] * (1.0 - w[i]) : strength * w[i] * w[j];

  set_published_hedonic(truth, hedonic::Form::linear);
  return truth;
}

void set_published_hedonic(GroundTruth& truth, hedonic::Form form) {
  truth.hedonic_form = form;
  auto& hb = truth.hedonic_beta;
  if (form == hedonic::Form::linear) {
    truth.hedonic_intercept = -20.627;
    hb.organic = 10.962;
    hb.soy = -9.351;
    hb.promotion = -1.583;
    hb.lfcf = 23.537;
    hb.vitmin_label = 4.497;
    hb.protein_g = 2.734;
    hb.carb_g = 0.991;
    hb.fat_g = 0.861;
    hb.cholesterol_dri = -0.358;
    hb.sodium_dri = -2.010;
    hb.vitmin_dri = 0.789;
    hb.servings_per_package = -0.106;
    truth.hedonic_noise_sd = 0.5;
  } else {
    truth.hedonic_intercept = 1.667;
    hb.organic = 0.428;
    hb.soy = -0.367;
    hb.promotion = -0.100;
    hb.lfcf = 0.857;
    hb.vitmin_label = 0.140;
    hb.protein_g = 0.085;
    hb.carb_g = 0.033;
    hb.fat_g = 0.032;
    hb.cholesterol_dri = -0.011;
    hb.sodium_dri = -0.060;
    hb.vitmin_dri = 0.020;
    hb.servings_per_package = -0.005;
    truth.hedonic_noise_sd = 0.03;
  }
}

int resolve_absorber(const GroundTruth& truth, const CalibrationTable& calibration) {
  if (truth.absorber >= 0) {
    require(truth.absorber < static_cast<int>(calibration.size()),
            "synth: absorber index out of range");
    return truth.absorber;
  }
  int best = 0;
  for (size_t i = 1; i < calibration.size(); ++i)
    if (calibration[i].share_mean > calibration[best].share_mean)
      best = static_cast<int>(i);
  return best;
}

MarketPanel gen_panel(const GroundTruth& truth, int weeks,
                      const CalibrationTable& calibration) {
  const int n = static_cast<int>(truth.types.size());
  require(static_cast<int>(calibration.size()) == n,
          "synth: truth/calibration type count mismatch");
  require(weeks >= 10, "synth: need at least 10 weeks, got ", weeks);
  require(truth.b.size() == n && truth.c.rows() == n && truth.c.cols() == n,
          "synth: truth dimensions inconsistent");

  Eigen::VectorXd price_mean(n), share_mean(n), qty_mean(n);
  for (int i = 0; i < n; ++i) {
    price_mean[i] = calibration[i].price_mean;
    share_mean[i] = calibration[i].share_mean;
    qty_mean[i] = calibration[i].quantity_mean;
    require(price_mean[i] > 0, "synth: nonpositive calibrated price");
    require(share_mean[i] > 0, "synth: nonpositive calibrated share");
  }
  require(std::abs(share_mean.sum() - 1.0) < 1e-6,
          "synth: calibration shares must sum to 1");

  const int absorber = resolve_absorber(truth, calibration);
  const double max_share = share_mean.maxCoeff();
  std::mt19937_64 rng(truth.seed);

  MarketPanel panel;
  panel.types = truth.types;
  panel.price.resize(weeks, n);
  panel.quantity.resize(weeks, n);
  panel.share.resize(weeks, n);
  panel.expenditure.resize(weeks);

  double x_mean = (price_mean.array() * qty_mean.array()).sum();
  if (x_mean <= 0) x_mean = 1.0e4;  // calibration without quantity levels

  // week 0 at the calibrated point
  double x_t = x_mean;
  panel.expenditure[0] = x_t;
  for (int i = 0; i < n; ++i) {
    panel.price(0, i) = price_mean[i];
    panel.quantity(0, i) = share_mean[i] * x_t / price_mean[i];
    panel.share(0, i) = share_mean[i];
  }

  Eigen::VectorXd dlogp(n), noise(n);
  for (int t = 1; t < weeks; ++t) {
    for (int i = 0; i < n; ++i) {
      const double log_dev = std::log(panel.price(t - 1, i) / price_mean[i]);
      const double log_new = std::log(price_mean[i]) + truth.price_rho * log_dev +
                             truth.price_step_sd * gauss(rng);
      panel.price(t, i) = std::exp(log_new);
      dlogp[i] = log_new - std::log(panel.price(t - 1, i));
    }
    {
      const double log_dev = std::log(panel.expenditure[t - 1] / x_mean);
      x_t = std::exp(std::log(x_mean) + truth.expenditure_rho * log_dev +
                     truth.expenditure_step_sd * gauss(rng));
    }
    for (int i = 0; i < n; ++i)
      noise[i] = i == absorber
                     ? 0.0
                     : truth.noise_sd * (share_mean[i] / max_share) * gauss(rng);

    const double dlogx = std::log(x_t) - std::log(panel.expenditure[t - 1]);

    // Solve for quantities such that every non-absorber equation holds at the
    // realized two-period average shares; the absorber closes the budget.
    Eigen::VectorXd w_prev = panel.share.row(t - 1).transpose();
    Eigen::VectorXd w_cur = w_prev;
    Eigen::VectorXd qty(n);
    bool converged = false;
    for (int pass = 0; pass < 500; ++pass) {
      const Eigen::VectorXd w_avg = 0.5 * (w_cur + w_prev);
      const double divisia = dlogx - w_avg.dot(dlogp);
      double spent = 0;
      for (int i = 0; i < n; ++i) {
        if (i == absorber) continue;
        const double rhs = truth.intercept[i] + truth.b[i] * divisia +
                           truth.c.row(i).dot(dlogp) + noise[i];
        const double dlogq = rhs / w_avg[i];
        qty[i] = panel.quantity(t - 1, i) * std::exp(dlogq);
        spent += panel.price(t, i) * qty[i];
      }
      const double remainder = x_t - spent;
      require(remainder > 0, "synth: infeasible path, absorber expenditure ",
              remainder, " at week ", t, " (reduce noise or step sizes)");
      qty[absorber] = remainder / panel.price(t, absorber);

      Eigen::VectorXd w_new(n);
      for (int i = 0; i < n; ++i) w_new[i] = panel.price(t, i) * qty[i] / x_t;
      const double move = (w_new - w_cur).cwiseAbs().maxCoeff();
      w_cur = w_new;
      if (move < 1e-15) {
        converged = true;
        break;
      }
    }
    require(converged, "synth: share fixed point did not converge at week ", t);

    panel.expenditure[t] = x_t;
    for (int i = 0; i < n; ++i) {
      panel.quantity(t, i) = qty[i];
      panel.share(t, i) = w_cur[i];
    }
  }
  return panel;
}

PurchaseTable gen_purchases(const GroundTruth& truth, int records,
                            const CalibrationTable& calibration) {
  const int n = static_cast<int>(calibration.size());
  require(records >= AttributeVector::count + 2, "synth: need at least ",
          AttributeVector::count + 2, " records");

  std::mt19937_64 rng(truth.seed ^ 0xA5A5A5A5A5A5A5A5ull);
  PurchaseTable table;
  for (const auto& c : calibration) table.types.push_back(c.type);
  table.records.reserve(records);

  auto bernoulli = [&](double p) {
    constexpr double scale = 1.0 / 9007199254740992.0;
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * scale;
    return u < p ? 1.0 : 0.0;
  };

  for (int r = 0; r < records; ++r) {
    const int i = r % n;
    const auto& cal = calibration[i];
    PurchaseRecord rec;
    rec.product_type = cal.type;
    rec.week = (r / n) % 52;
    rec.upc = cal.type + "-" + std::to_string(r / n % 40);

    auto& a = rec.attributes;
    for (int k = 0; k < AttributeVector::count; ++k) {
      const std::string& name = AttributeVector::names()[k];
      const bool binary = name == "organic" || name == "soy" || name == "promotion" ||
                          name == "lfcf" || name == "vitmin_label";
      if (binary)
        a.set(k, bernoulli(cal.attr_mean.get(k)));
      else
        a.set(k, std::max(0.0, cal.attr_mean.get(k) + cal.attr_sd.get(k) * gauss(rng)));
    }

    double value = truth.hedonic_intercept;
    for (int k = 0; k < AttributeVector::count; ++k)
      value += truth.hedonic_beta.get(k) * a.get(k);
    const double noise = truth.hedonic_noise_sd * gauss(rng);
    if (truth.hedonic_form == hedonic::Form::linear)
      rec.price_per_serving = std::max(0.01, value + noise);
    else
      rec.price_per_serving = std::exp(value + noise);

    const int packages = 1 + static_cast<int>(rng() % 3);
    rec.servings = packages * std::max(1.0, std::round(a.servings_per_package));
    table.records.push_back(std::move(rec));
  }
  return table;
}

namespace {

using json = nlohmann::ordered_json;

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vec_from(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void save_truth(const std::string& path, const GroundTruth& truth) {
  json j;
  j["types"] = truth.types;
  j["intercept"] = vec_json(truth.intercept);
  j["b"] = vec_json(truth.b);
  json c = json::array();
  for (int i = 0; i < truth.c.rows(); ++i) c.push_back(vec_json(truth.c.row(i)));
  j["c"] = std::move(c);
  j["noise_sd"] = truth.noise_sd;
  j["absorber"] = truth.absorber;
  j["price_rho"] = truth.price_rho;
  j["price_step_sd"] = truth.price_step_sd;
  j["expenditure_rho"] = truth.expenditure_rho;
  j["expenditure_step_sd"] = truth.expenditure_step_sd;
  j["hedonic_form"] = hedonic::form_name(truth.hedonic_form);
  j["hedonic_intercept"] = truth.hedonic_intercept;
  json hb;
  for (int k = 0; k < AttributeVector::count; ++k)
    hb[AttributeVector::names()[k]] = truth.hedonic_beta.get(k);
  j["hedonic_beta"] = std::move(hb);
  j["hedonic_noise_sd"] = truth.hedonic_noise_sd;
  j["seed"] = truth.seed;

  std::ofstream out(path);
  if (!out) fail("synth: cannot write truth file '", path, "'");
  out << j.dump(1) << '\n';
}

GroundTruth load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("synth: cannot open truth file '", path, "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("synth: invalid truth file '", path, "': ", e.what());
  }

  GroundTruth t;
  t.types = j.at("types").get<std::vector<std::string>>();
  t.intercept = vec_from(j.at("intercept"));
  t.b = vec_from(j.at("b"));
  const auto& c = j.at("c");
  const int n = static_cast<int>(c.size());
  t.c.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) t.c(i, k) = c[i][k].get<double>();
  t.noise_sd = j.at("noise_sd").get<double>();
  if (j.contains("absorber")) t.absorber = j["absorber"].get<int>();
  t.price_rho = j.at("price_rho").get<double>();
  t.price_step_sd = j.at("price_step_sd").get<double>();
  t.expenditure_rho = j.at("expenditure_rho").get<double>();
  t.expenditure_step_sd = j.at("expenditure_step_sd").get<double>();
  t.hedonic_form = hedonic::parse_form(j.at("hedonic_form").get<std::string>());
  t.hedonic_intercept = j.at("hedonic_intercept").get<double>();
  for (int k = 0; k < AttributeVector::count; ++k)
    t.hedonic_beta.set(k, j.at("hedonic_beta").at(AttributeVector::names()[k]).get<double>());
  t.hedonic_noise_sd = j.at("hedonic_noise_sd").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();

  // the generators assume these identities
  require(std::abs(t.b.sum() - 1.0) < 1e-8, path, ": b must sum to 1");
  require(std::abs(t.intercept.sum()) < 1e-8, path, ": intercepts must sum to 0");
  return t;
}

}  // namespace hedmet::synth
