#include "folavg/experiments.hpp"

#include "folavg/leaf_quadrature.hpp"
#include "folavg/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

namespace folavg {

using std::numbers::pi;

namespace {

SimConfig sim_config(const ExperimentSpec& spec, double epsilon, double horizon, double dt) {
  SimConfig cfg;
  cfg.dt = dt;
  cfg.epsilon = epsilon;
  cfg.horizon_slow = horizon;
  cfg.record_grid = spec.record_grid;
  cfg.master_seed = spec.seed;
  return cfg;
}

double ode_step(const ExperimentSpec& spec, double horizon) { return std::min(spec.ode_dt, horizon / 1000.0); }

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double moment_root(const std::vector<double>& xs, double q) {
  double s = 0.0;
  for (double x : xs) s += std::pow(x, q);
  return std::pow(s / static_cast<double>(xs.size()), 1.0 / q);
}

}  // namespace

std::uint64_t epsilon_subsequence(double epsilon) {
  return splitmix64(std::bit_cast<std::uint64_t>(epsilon) ^ 0x636f6e76ULL);
}

std::vector<PathSample> simulate_ensemble(const FoliationChart& chart, const SimConfig& cfg,
                                          std::size_t n_paths, std::uint64_t subsequence, unsigned threads) {
  validate_sim_config(cfg, chart);
  std::vector<PathSample> paths(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream rng(cfg.master_seed, i, subsequence);
    const Point3 x0 = sample_leaf_point(chart, 0.0, rng);
    paths[i] = simulate_rescaled_path(chart, x0, cfg, rng);
  });
  return paths;
}

double sup_deviation(const PathSample& path, const ODESolution& ode, double t_eval) {
  double sup = 0.0;
  const double cutoff = t_eval * (1.0 + 1e-12);
  for (std::size_t j = 0; j < path.slow_times.size(); ++j) {
    if (path.slow_times[j] > cutoff) break;
    sup = std::max(sup, std::abs(path.vertical[j] - ode.value_at(path.slow_times[j])));
  }
  return sup;
}

AveragedModel build_model(const ExperimentSpec& spec, const FoliationChart& chart, DriftMode mode,
                          unsigned threads) {
  switch (mode) {
    case DriftMode::gauss_bonnet_raw: return AveragedModel::gauss_bonnet_raw(chart);
    case DriftMode::gauss_bonnet_normalized:
      return AveragedModel::gauss_bonnet_normalized(chart, spec.area_samples);
    case DriftMode::monte_carlo_table:
      return AveragedModel::monte_carlo_table(
          chart, build_drift_table(chart, spec.leaf_average.time, spec.leaf_average_dt(), spec.leaf_average.replicas,
                                   spec.seed, threads));
  }
  throw ConfigError("unknown model mode");
}

double bootstrap_moment_error(const std::vector<double>& deviations, double q, std::size_t resamples,
                              std::uint64_t seed) {
  const std::size_t n = deviations.size();
  if (n < 2 || resamples < 2) return kNaN;
  std::mt19937_64 engine(splitmix64(seed));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> stats(resamples);
  std::vector<double> draw(n);
  for (auto& stat : stats) {
    for (auto& d : draw) d = deviations[pick(engine)];
    stat = moment_root(draw, q);
  }
  const double m = mean_of(stats);
  double ss = 0.0;
  for (double s : stats) ss += (s - m) * (s - m);
  return std::sqrt(ss / static_cast<double>(resamples - 1));
}

double fit_log_overlay(const std::vector<ConvergenceRow>& rows, double beta, double q) {
  double num = 0.0, den = 0.0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.m_q)) continue;
    const double f = std::pow(std::abs(std::log(r.epsilon)), -beta / q);
    num += r.m_q * f;
    den += f * f;
  }
  if (den == 0.0) return kNaN;
  return std::max(0.0, num / den);
}

ConvergenceReport run_convergence(const ExperimentSpec& spec, const FoliationChart& chart,
                                  const AveragedModel& model, unsigned threads, std::vector<PathDump>* dump) {
  ConvergenceReport report;
  report.chart = chart.kind();
  report.mode = model.mode();
  report.q = spec.q;
  report.beta = spec.beta;

  for (double eps : spec.epsilon_grid) validate_sim_config(sim_config(spec, eps, spec.horizon, spec.dt), chart);

  const ODESolution ode = solve_averaged_ode(model, spec.horizon, ode_step(spec, spec.horizon));
  const double t_eval = std::min(spec.horizon, ode.boundary_time);

  for (double eps : spec.epsilon_grid) {
    ConvergenceRow row;
    row.epsilon = eps;
    row.n_paths = spec.n_paths;
    row.eval_time = t_eval;
    try {
      const auto paths = simulate_ensemble(chart, sim_config(spec, eps, spec.horizon, spec.dt), spec.n_paths,
                                           epsilon_subsequence(eps), threads);
      std::vector<double> dev(paths.size());
      std::size_t exits = 0;
      for (std::size_t i = 0; i < paths.size(); ++i) {
        dev[i] = sup_deviation(paths[i], ode, t_eval);
        if (paths[i].exited) ++exits;
      }
      row.m_q = moment_root(dev, spec.q);
      row.std_error = bootstrap_moment_error(dev, spec.q, spec.bootstrap, spec.seed ^ epsilon_subsequence(eps));
      row.exit_fraction = static_cast<double>(exits) / static_cast<double>(paths.size());
      if (dump) dump->push_back({eps, paths});
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
    report.rows.push_back(std::move(row));
  }

  report.overlay_c = fit_log_overlay(report.rows, spec.beta, spec.q);
  for (auto& r : report.rows) {
    r.overlay = report.overlay_c * std::pow(std::abs(std::log(r.epsilon)), -spec.beta / spec.q);
  }
  return report;
}

ConvergenceReport run_convergence(const ExperimentSpec& spec, unsigned threads, std::vector<PathDump>* dump) {
  const FoliationChart chart = build_chart(spec, spec.chart);
  const AveragedModel model = build_model(spec, chart, spec.model, threads);
  return run_convergence(spec, chart, model, threads, dump);
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

namespace {

// Non-negative least squares for y ~ c1 x1 + c2 x2 by enumerating the active
// sets of the two-column problem.
std::pair<double, double> nnls2(const std::vector<double>& x1, const std::vector<double>& x2,
                                const std::vector<double>& y) {
  auto sse = [&](double c1, double c2) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::pow(y[i] - c1 * x1[i] - c2 * x2[i], 2);
    return s;
  };
  auto single = [&](const std::vector<double>& x) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      num += x[i] * y[i];
      den += x[i] * x[i];
    }
    return den > 0.0 ? std::max(0.0, num / den) : 0.0;
  };

  std::vector<std::pair<double, double>> candidates{{0.0, 0.0}, {single(x1), 0.0}, {0.0, single(x2)}};
  Eigen::MatrixXd a(y.size(), 2);
  Eigen::VectorXd b(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    a(i, 0) = x1[i];
    a(i, 1) = x2[i];
    b(i) = y[i];
  }
  if (y.size() >= 2) {
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
    if (c.allFinite() && c(0) >= 0.0 && c(1) >= 0.0) candidates.emplace_back(c(0), c(1));
  }
  auto best = candidates.front();
  for (const auto& c : candidates) {
    if (sse(c.first, c.second) < sse(best.first, best.second)) best = c;
  }
  return best;
}

}  // namespace

ExitTimeReport run_exit_time(const ExperimentSpec& spec, const FoliationChart& chart, const AveragedModel& model,
                             unsigned threads) {
  const double a = chart.half_width();
  if (!(spec.gamma < a)) {
    throw ConfigError("run.gamma: gamma must be below the chart half-width " + std::to_string(a));
  }
  ExitTimeReport report;
  report.chart = chart.kind();
  report.mode = model.mode();
  report.gamma = spec.gamma;

  const ODESolution ode = solve_averaged_ode(model, kExitSearchHorizon, spec.ode_dt);
  report.t_gamma = ode.first_time_at_level(a - spec.gamma);
  report.sentinel = !std::isfinite(report.t_gamma);

  if (report.sentinel) {
    for (double eps : spec.epsilon_grid) {
      ExitTimeRow row;
      row.epsilon = eps;
      row.probability = 0.0;
      row.wilson_low = 0.0;
      row.wilson_high = 0.0;
      row.bound_overlay = 0.0;
      row.status = "sentinel";
      report.rows.push_back(row);
    }
    report.c1 = report.c2 = 0.0;
    return report;
  }

  for (double eps : spec.epsilon_grid) validate_sim_config(sim_config(spec, eps, report.t_gamma, spec.dt), chart);

  for (double eps : spec.epsilon_grid) {
    ExitTimeRow row;
    row.epsilon = eps;
    try {
      SimConfig cfg = sim_config(spec, eps, report.t_gamma, spec.dt);
      cfg.record_grid = 2;
      const auto paths = simulate_ensemble(chart, cfg, spec.n_paths, epsilon_subsequence(eps), threads);
      for (const auto& p : paths) {
        if (p.exited && p.exit_slow_time < report.t_gamma) ++row.n_early;
      }
      row.n_paths = paths.size();
      row.probability = static_cast<double>(row.n_early) / static_cast<double>(row.n_paths);
      const auto ci = wilson_interval(row.n_early, row.n_paths);
      row.wilson_low = ci.low;
      row.wilson_high = ci.high;
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
    report.rows.push_back(std::move(row));
  }

  // P <= gamma^-q [C1 eps^alpha + C2 / sqrt(T |ln eps|^(2 beta/q))]^q, fitted
  // as gamma P^(1/q) against the two shape functions.
  std::vector<double> x1, x2, y;
  for (const auto& r : report.rows) {
    if (!std::isfinite(r.probability)) continue;
    x1.push_back(std::pow(r.epsilon, spec.alpha));
    x2.push_back(1.0 / std::sqrt(report.t_gamma * std::pow(std::abs(std::log(r.epsilon)), 2.0 * spec.beta / spec.q)));
    y.push_back(spec.gamma * std::pow(r.probability, 1.0 / spec.q));
  }
  std::tie(report.c1, report.c2) = nnls2(x1, x2, y);
  for (auto& r : report.rows) {
    const double inner = averaging_error_bound(report.c1, report.c2, spec.alpha, spec.beta, spec.q, report.t_gamma,
                                               r.epsilon);
    r.bound_overlay = std::pow(inner / spec.gamma, spec.q);
  }
  return report;
}

ExitTimeReport run_exit_time(const ExperimentSpec& spec, unsigned threads) {
  const FoliationChart chart = build_chart(spec, spec.chart);
  const AveragedModel model = build_model(spec, chart, spec.model, threads);
  return run_exit_time(spec, chart, model, threads);
}

double path_slope(const PathSample& path) {
  std::vector<double> s, p;
  const double end = path.exited ? path.exit_slow_time : path.slow_times.back();
  for (std::size_t j = 0; j < path.slow_times.size() && path.slow_times[j] < end; ++j) {
    s.push_back(path.slow_times[j]);
    p.push_back(path.vertical[j]);
  }
  // Value at the end of the observation window; for an exit this is the
  // frozen record.
  s.push_back(end);
  p.push_back(path.vertical.back());
  if (s.size() < 2 || !(end > 0.0)) return kNaN;
  const double ms = mean_of(s), mp = mean_of(p);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxy += (s[i] - ms) * (p[i] - mp);
    sxx += (s[i] - ms) * (s[i] - ms);
  }
  return sxy / sxx;
}

TopologyRow run_topology_chart(const ExperimentSpec& spec, ChartKind kind, unsigned threads) {
  const FoliationChart chart = build_chart(spec, kind);
  const TopologyRun& run = spec.charts.topology[static_cast<std::size_t>(kind)];

  TopologyRow row;
  row.chart = kind;
  row.euler_characteristic = chart.euler_characteristic();
  row.n_paths = spec.n_paths;
  row.epsilon = run.epsilon;
  row.horizon = run.horizon;

  const Estimate gb = leaf_curvature_integral(chart, 0.0, spec.leaf_average.samples, spec.seed);
  row.gauss_bonnet = gb.value;
  row.gauss_bonnet_std_error = gb.std_error;

  SimConfig cfg = sim_config(spec, run.epsilon, run.horizon, run.dt);
  const auto paths = simulate_ensemble(chart, cfg, spec.n_paths, epsilon_subsequence(run.epsilon), threads);
  std::vector<double> slopes;
  for (const auto& p : paths) {
    const double k = path_slope(p);
    if (std::isfinite(k)) slopes.push_back(k);
  }
  if (slopes.size() < 2) throw NoConvergence("topology suite: fewer than two paths produced a slope");
  row.n_paths = slopes.size();
  row.mean_slope = mean_of(slopes);
  double ss = 0.0;
  for (double k : slopes) ss += (k - row.mean_slope) * (k - row.mean_slope);
  const double n = static_cast<double>(slopes.size());
  row.slope_std_error = std::sqrt(ss / (n - 1.0) / n);
  row.ci_low = row.mean_slope - kSlopeZ * row.slope_std_error;
  row.ci_high = row.mean_slope + kSlopeZ * row.slope_std_error;
  row.verdict = row.ci_low > 0.0 ? '+' : (row.ci_high < 0.0 ? '-' : '0');
  return row;
}

std::vector<TopologyRow> run_topology_suite(const ExperimentSpec& spec, unsigned threads) {
  std::vector<TopologyRow> rows;
  for (ChartKind kind : {ChartKind::sphere_radial, ChartKind::torus_offset, ChartKind::genus2_offset}) {
    rows.push_back(run_topology_chart(spec, kind, threads));
  }
  return rows;
}

LeafAverageReport run_leaf_average(const ExperimentSpec& spec, const FoliationChart& chart, unsigned threads) {
  LeafAverageReport report;
  report.chart = chart.kind();
  const AveragedModel normalized = AveragedModel::gauss_bonnet_normalized(chart, spec.area_samples);
  const double a = chart.half_width();
  const double gb = 2.0 * pi * chart.euler_characteristic();

  std::uint64_t leaf_index = 0;
  for (double v : {-0.5 * a, 0.0, 0.5 * a}) {
    LeafAverageRow row;
    row.v = v;
    row.area = leaf_area(chart, v, spec.leaf_average.samples, spec.seed);
    row.curvature_integral = leaf_curvature_integral(chart, v, spec.leaf_average.samples, spec.seed);
    row.two_pi_chi = gb;
    row.q_raw = gb;
    row.q_normalized = normalized.drift(v);
    row.q_normalized_std_error = std::abs(row.q_normalized) * row.area.std_error / row.area.value;
    const auto erg = ergodic_drift(chart, v, spec.leaf_average.time, spec.leaf_average_dt(),
                                   spec.leaf_average.replicas, splitmix64(spec.seed + ++leaf_index), threads);
    row.q_ergodic = erg.mean;
    row.q_ergodic_std_error = erg.std_error;
    // Floor at rounding level: on the sphere both estimates are exact.
    const double se = std::max(std::hypot(row.q_ergodic_std_error, row.q_normalized_std_error),
                               1e-12 * std::max(1.0, std::abs(row.q_normalized)));
    row.z_score = (row.q_ergodic - row.q_normalized) / se;
    report.rows.push_back(row);
  }
  return report;
}

LeafAverageReport run_leaf_average(const ExperimentSpec& spec, unsigned threads) {
  return run_leaf_average(spec, build_chart(spec, spec.chart), threads);
}

}  // namespace folavg
