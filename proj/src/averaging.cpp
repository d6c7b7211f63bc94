#include "folavg/averaging.hpp"

#include "folavg/parallel.hpp"
#include "folavg/sde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace folavg {

using std::numbers::pi;

std::string_view drift_mode_name(DriftMode mode) {
  switch (mode) {
    case DriftMode::gauss_bonnet_raw: return "gauss-bonnet-raw";
    case DriftMode::gauss_bonnet_normalized: return "gauss-bonnet-normalized";
    case DriftMode::monte_carlo_table: return "monte-carlo-table";
  }
  return "unknown";
}

DriftMode parse_drift_mode(std::string_view name) {
  if (name == "gauss-bonnet-raw" || name == "raw") return DriftMode::gauss_bonnet_raw;
  if (name == "gauss-bonnet-normalized" || name == "normalized") return DriftMode::gauss_bonnet_normalized;
  if (name == "monte-carlo-table" || name == "table") return DriftMode::monte_carlo_table;
  throw ConfigError("unknown model mode '" + std::string(name) +
                    "' (expected gauss-bonnet-raw, gauss-bonnet-normalized or monte-carlo-table)");
}

AveragedModel AveragedModel::gauss_bonnet_raw(const FoliationChart& chart) {
  return AveragedModel(DriftMode::gauss_bonnet_raw, chart);
}

AveragedModel AveragedModel::gauss_bonnet_normalized(const FoliationChart& chart, std::size_t area_samples,
                                                     std::uint64_t seed) {
  AveragedModel m(DriftMode::gauss_bonnet_normalized, chart);
  m.moments_ = base_leaf_moments(chart, area_samples, seed);
  return m;
}

AveragedModel AveragedModel::monte_carlo_table(const FoliationChart& chart, std::vector<DriftTableRow> rows) {
  if (rows.size() < 2) throw std::invalid_argument("monte-carlo-table needs at least two rows");
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.v < b.v; });
  AveragedModel m(DriftMode::monte_carlo_table, chart);
  m.table_ = std::move(rows);
  return m;
}

double AveragedModel::drift_extended(double v) const {
  const double gb = 2.0 * pi * chart_.euler_characteristic();
  switch (mode_) {
    case DriftMode::gauss_bonnet_raw: return gb;
    case DriftMode::gauss_bonnet_normalized: return gb / moments_.area_at(v);
    case DriftMode::monte_carlo_table: {
      if (v <= table_.front().v) return table_.front().q;
      if (v >= table_.back().v) return table_.back().q;
      const auto hi = std::upper_bound(table_.begin(), table_.end(), v,
                                       [](double x, const DriftTableRow& r) { return x < r.v; });
      const auto lo = hi - 1;
      const double w = (v - lo->v) / (hi->v - lo->v);
      return (1.0 - w) * lo->q + w * hi->q;
    }
  }
  return 0.0;
}

double AveragedModel::drift(double v) const {
  if (!(std::abs(v) < chart_.half_width())) {
    throw OutOfChart("averaged drift requested outside the chart at v = " + std::to_string(v));
  }
  return drift_extended(v);
}

double averaged_drift(const AveragedModel& model, double v) { return model.drift(v); }

ErgodicEstimate ergodic_drift(const FoliationChart& chart, double v, double t_fast, double dt,
                              std::size_t replicas, std::uint64_t seed, unsigned threads) {
  if (replicas < 2) throw std::invalid_argument("ergodic_drift needs at least two replicas");
  ErgodicEstimate est;
  est.replicas.resize(replicas);
  parallel_for(replicas, threads, [&](std::size_t i) {
    RngStream rng(seed, i, 0x4552474f);
    const Point3 x0 = sample_leaf_point(chart, v, rng);
    est.replicas[i] = unperturbed_time_average(chart, x0, t_fast, dt, rng);
  });
  double sum = 0.0;
  for (double r : est.replicas) sum += r;
  est.mean = sum / static_cast<double>(replicas);
  double ss = 0.0;
  for (double r : est.replicas) ss += (r - est.mean) * (r - est.mean);
  est.std_error = std::sqrt(ss / static_cast<double>(replicas - 1) / static_cast<double>(replicas));
  return est;
}

std::vector<double> drift_table_leaves(const FoliationChart& chart) {
  std::vector<double> vs(9);
  for (int i = 0; i < 9; ++i) vs[i] = chart.half_width() * (-0.8 + 0.2 * i);
  return vs;
}

std::vector<DriftTableRow> build_drift_table(const FoliationChart& chart, double t_fast, double dt,
                                             std::size_t replicas, std::uint64_t seed, unsigned threads) {
  std::vector<DriftTableRow> rows;
  const auto vs = drift_table_leaves(chart);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const auto est = ergodic_drift(chart, vs[i], t_fast, dt, replicas, splitmix64(seed + i), threads);
    rows.push_back({vs[i], est.mean, est.std_error});
  }
  return rows;
}

double ODESolution::value_at(double s) const {
  if (grid.empty()) throw std::logic_error("empty ODE solution");
  if (s <= grid.front()) return values.front();
  if (s >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double h = grid[k + 1] - grid[k];
  const double u = (s - grid[k]) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  return h00 * values[k] + h10 * h * slopes[k] + h01 * values[k + 1] + h11 * h * slopes[k + 1];
}

double ODESolution::first_time_at_level(double level) const {
  if (std::abs(values.front()) >= level) return grid.front();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (std::abs(values[k]) < level) continue;
    double lo = grid[k - 1], hi = grid[k];
    for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (std::abs(value_at(mid)) >= level ? hi : lo) = mid;
    }
    return hi;
  }
  return std::numeric_limits<double>::infinity();
}

ODESolution solve_averaged_ode(const AveragedModel& model, double horizon_slow, double dt_ode) {
  if (!(horizon_slow > 0.0) || !(dt_ode > 0.0)) throw std::invalid_argument("solve_averaged_ode: horizon and dt must be positive");
  const double a = model.chart().half_width();
  auto f = [&](double v) { return model.drift_extended(v); };

  ODESolution sol;
  sol.mode = model.mode();
  sol.grid.push_back(0.0);
  sol.values.push_back(0.0);
  sol.slopes.push_back(f(0.0));

  const std::size_t n = step_count(horizon_slow, dt_ode);
  double v = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s0 = sol.grid.back();
    const double h = k + 1 == n ? horizon_slow - s0 : dt_ode;
    const double k1 = f(v);
    const double k2 = f(v + 0.5 * h * k1);
    const double k3 = f(v + 0.5 * h * k2);
    const double k4 = f(v + h * k3);
    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sol.grid.push_back(k + 1 == n ? horizon_slow : s0 + h);
    sol.values.push_back(v);
    sol.slopes.push_back(f(v));
    if (!(std::abs(v) < a)) {
      sol.hit_boundary = true;
      sol.boundary_time = sol.first_time_at_level(a);
      break;
    }
  }
  return sol;
}

RateFit ergodic_rate_fit(const FoliationChart& chart, double v, const std::vector<double>& t_grid,
                         std::size_t replicas, double dt, std::uint64_t seed, unsigned threads) {
  if (t_grid.size() < 4) throw std::invalid_argument("ergodic_rate_fit needs at least 4 horizons");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) ||
      std::adjacent_find(t_grid.begin(), t_grid.end()) != t_grid.end() || !(t_grid.front() > 0.0)) {
    throw std::invalid_argument("ergodic_rate_fit needs a strictly increasing positive horizon grid");
  }
  if (replicas < 50) throw std::invalid_argument("ergodic_rate_fit needs at least 50 replicas");

  RateFit fit;
  fit.times = t_grid;
  fit.reference = AveragedModel::gauss_bonnet_normalized(chart).drift(v);

  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const auto est = ergodic_drift(chart, v, t_grid[i], dt, replicas, splitmix64(seed ^ (i + 1)), threads);
    double ss = 0.0;
    for (double r : est.replicas) ss += (r - fit.reference) * (r - fit.reference);
    fit.errors.push_back(std::sqrt(ss / static_cast<double>(replicas)));
  }

  // Error at the level of projection tolerance relative to the integrand
  // scale: the time average is exact and no rate is defined.
  const double scale = std::max(1.0, std::abs(fit.reference));
  if (*std::max_element(fit.errors.begin(), fit.errors.end()) < 1e-8 * scale) {
    fit.degenerate = true;
    return fit;
  }

  const std::size_t n = t_grid.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(t_grid[i]);
    const double y = std::log(fit.errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  fit.exponent = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  const double intercept = (sy - fit.exponent * sx) / dn;
  fit.constant = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::log(fit.errors[i]) - (intercept + fit.exponent * std::log(t_grid[i]));
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / dn);
  return fit;
}

double averaging_error_bound(double c1, double c2, double alpha, double beta, double q, double t, double epsilon,
                             double c_eta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::domain_error("epsilon must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 0.5)) throw std::domain_error("beta must lie in (0, 1/2)");
  if (!(q >= 2.0) || !std::isfinite(q)) throw std::domain_error("q must be >= 2");
  if (!(t > 0.0)) throw std::domain_error("t must be positive");

  const double bias = c1 * std::pow(epsilon, alpha);
  if (c2 == 0.0) return bias;
  const double abs_log = std::abs(std::log(epsilon));
  // eps within one ulp of 1: the ergodic term has no finite value left to report.
  if (abs_log <= std::numeric_limits<double>::epsilon()) return std::numeric_limits<double>::infinity();
  const double log_term = std::pow(abs_log, 2.0 * beta / q);
  const double arg = t * log_term;
  if (!(arg > 0.0)) return std::numeric_limits<double>::infinity();
  const double value = bias + c2 * c_eta / std::sqrt(arg);
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

}  // namespace folavg
