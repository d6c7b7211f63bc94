#pragma once

#include "folavg/averaging.hpp"
#include "folavg/experiment_spec.hpp"
#include "folavg/sde.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace folavg {

/// Stream subsequence used for all paths at a given epsilon. Keyed on the
/// value, so the same epsilon draws the same paths in any grid.
std::uint64_t epsilon_subsequence(double epsilon);

/// n_paths rescaled trajectories started area-uniformly on the base leaf.
/// Path i uses RngStream(cfg.master_seed, i, subsequence).
std::vector<PathSample> simulate_ensemble(const FoliationChart& chart, const SimConfig& cfg,
                                          std::size_t n_paths, std::uint64_t subsequence, unsigned threads);

/// sup over recorded s_j <= t_eval of |p_j - v(s_j)|.
double sup_deviation(const PathSample& path, const ODESolution& ode, double t_eval);

/// Builds the drift model named by `mode` using the configured sampling settings.
AveragedModel build_model(const ExperimentSpec& spec, const FoliationChart& chart, DriftMode mode,
                          unsigned threads);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ConvergenceRow {
  double epsilon = 0.0;
  double m_q = kNaN;        // (mean sup-deviation^q)^(1/q)
  double std_error = kNaN;  // bootstrap
  double exit_fraction = kNaN;
  std::size_t n_paths = 0;
  double eval_time = kNaN;  // min(horizon, T0)
  double overlay = kNaN;    // C |ln eps|^(-beta/q)
  std::string status = "ok";
};

struct ConvergenceReport {
  ChartKind chart = ChartKind::sphere_radial;
  DriftMode mode = DriftMode::gauss_bonnet_normalized;
  double q = 2.0;
  double beta = 0.25;
  double overlay_c = kNaN;
  std::vector<ConvergenceRow> rows;  // epsilon descending
};

struct PathDump {
  double epsilon = 0.0;
  std::vector<PathSample> paths;
};

ConvergenceReport run_convergence(const ExperimentSpec& spec, const FoliationChart& chart,
                                  const AveragedModel& model, unsigned threads,
                                  std::vector<PathDump>* dump = nullptr);
ConvergenceReport run_convergence(const ExperimentSpec& spec, unsigned threads,
                                  std::vector<PathDump>* dump = nullptr);

/// Bootstrap standard error of (mean x^q)^(1/q).
double bootstrap_moment_error(const std::vector<double>& deviations, double q, std::size_t resamples,
                              std::uint64_t seed);

/// Least-squares C >= 0 of M_q ~ C |ln eps|^(-beta/q) over the rows with a value.
double fit_log_overlay(const std::vector<ConvergenceRow>& rows, double beta, double q);

struct ExitTimeRow {
  double epsilon = 0.0;
  double probability = kNaN;  // P(eps tau < T_gamma)
  double wilson_low = kNaN;
  double wilson_high = kNaN;
  std::size_t n_early = 0;
  std::size_t n_paths = 0;
  double bound_overlay = kNaN;
  std::string status = "ok";
};

struct ExitTimeReport {
  ChartKind chart = ChartKind::sphere_radial;
  DriftMode mode = DriftMode::gauss_bonnet_normalized;
  double gamma = 0.0;
  /// First time the averaged solution comes within gamma of the boundary;
  /// +inf when it never does.
  double t_gamma = std::numeric_limits<double>::infinity();
  bool sentinel = false;
  double c1 = kNaN;
  double c2 = kNaN;
  std::vector<ExitTimeRow> rows;
};

struct WilsonInterval {
  double low;
  double high;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Slow-time span over which the averaged ODE is integrated when searching
/// for T_gamma.
inline constexpr double kExitSearchHorizon = 1000.0;

ExitTimeReport run_exit_time(const ExperimentSpec& spec, const FoliationChart& chart, const AveragedModel& model,
                             unsigned threads);
ExitTimeReport run_exit_time(const ExperimentSpec& spec, unsigned threads);

struct TopologyRow {
  ChartKind chart = ChartKind::sphere_radial;
  int euler_characteristic = 0;
  double gauss_bonnet = kNaN;
  double gauss_bonnet_std_error = kNaN;
  double mean_slope = kNaN;
  double slope_std_error = kNaN;
  double ci_low = kNaN;
  double ci_high = kNaN;
  char verdict = '0';  // '+', '0' or '-'
  std::size_t n_paths = 0;
  double epsilon = kNaN;
  double horizon = kNaN;
};

/// Two-sided 99% normal quantile used for the slope interval.
inline constexpr double kSlopeZ = 2.5758293035489004;

/// Least-squares slope of the recorded p(s) up to exit.
double path_slope(const PathSample& path);

TopologyRow run_topology_chart(const ExperimentSpec& spec, ChartKind kind, unsigned threads);
std::vector<TopologyRow> run_topology_suite(const ExperimentSpec& spec, unsigned threads);

struct LeafAverageRow {
  double v = 0.0;
  Estimate area;
  Estimate curvature_integral;
  double two_pi_chi = 0.0;
  double q_raw = 0.0;
  double q_normalized = 0.0;
  double q_normalized_std_error = 0.0;
  double q_ergodic = kNaN;
  double q_ergodic_std_error = kNaN;
  double z_score = kNaN;
};

struct LeafAverageReport {
  ChartKind chart = ChartKind::sphere_radial;
  std::vector<LeafAverageRow> rows;  // v = -a/2, 0, a/2
};

LeafAverageReport run_leaf_average(const ExperimentSpec& spec, const FoliationChart& chart, unsigned threads);
LeafAverageReport run_leaf_average(const ExperimentSpec& spec, unsigned threads);

}  // namespace folavg
