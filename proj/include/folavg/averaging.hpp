#pragma once

#include "folavg/foliation_chart.hpp"
#include "folavg/leaf_quadrature.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace folavg {

enum class DriftMode { gauss_bonnet_raw, gauss_bonnet_normalized, monte_carlo_table };

/// "gauss-bonnet-raw", "gauss-bonnet-normalized", "monte-carlo-table".
std::string_view drift_mode_name(DriftMode mode);
DriftMode parse_drift_mode(std::string_view name);

struct DriftTableRow {
  double v = 0.0;
  double q = 0.0;
  double std_error = 0.0;
};

/// Averaged transversal drift Q(v) of the perturbing field over leaf v.
///
///   gauss-bonnet-raw         Q(v) = 2 pi chi
///   gauss-bonnet-normalized  Q(v) = 2 pi chi / area(v)
///   monte-carlo-table        linear interpolation of ergodic estimates,
///                            constant beyond the outermost rows
class AveragedModel {
 public:
  static AveragedModel gauss_bonnet_raw(const FoliationChart& chart);
  /// area_samples only matters for genus-2, whose leaf areas come from the
  /// Monte Carlo base-leaf moments.
  static AveragedModel gauss_bonnet_normalized(const FoliationChart& chart,
                                               std::size_t area_samples = 1'000'000,
                                               std::uint64_t seed = kDefaultQuadratureSeed);
  static AveragedModel monte_carlo_table(const FoliationChart& chart, std::vector<DriftTableRow> rows);

  DriftMode mode() const { return mode_; }
  const FoliationChart& chart() const { return chart_; }
  const std::vector<DriftTableRow>& table() const { return table_; }
  const LeafMoments& moments() const { return moments_; }

  /// Q(v); throws OutOfChart unless |v| < a.
  double drift(double v) const;
  /// Q(v) without the chart check, for Runge-Kutta stages that overshoot.
  double drift_extended(double v) const;

 private:
  AveragedModel(DriftMode mode, FoliationChart chart) : mode_(mode), chart_(std::move(chart)) {}

  DriftMode mode_;
  FoliationChart chart_;
  LeafMoments moments_;
  std::vector<DriftTableRow> table_;
};

double averaged_drift(const AveragedModel& model, double v);

/// Ergodic estimate of Q(v): mean over independent replicas of the
/// unperturbed time average of kappa, each started area-uniformly on leaf v.
struct ErgodicEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> replicas;
};

ErgodicEstimate ergodic_drift(const FoliationChart& chart, double v, double t_fast, double dt,
                              std::size_t replicas, std::uint64_t seed, unsigned threads);

/// Nine equally spaced leaves v_i = -0.8a, -0.6a, ..., 0.8a.
std::vector<double> drift_table_leaves(const FoliationChart& chart);

std::vector<DriftTableRow> build_drift_table(const FoliationChart& chart, double t_fast, double dt,
                                             std::size_t replicas, std::uint64_t seed, unsigned threads);

struct ODESolution {
  DriftMode mode = DriftMode::gauss_bonnet_normalized;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> slopes;  // Q(v) at each grid point
  bool hit_boundary = false;
  /// T0: first time |v| reaches a; +inf if not reached within the horizon.
  double boundary_time = std::numeric_limits<double>::infinity();

  /// Cubic Hermite interpolation between grid points; s in [0, grid.back()].
  double value_at(double s) const;
  /// First s with |v(s)| >= level, or +inf if not reached on the grid.
  double first_time_at_level(double level) const;
};

/// Classical RK4 from v(0) = 0. Truncated at the first step leaving (-a, a);
/// that step is kept in the grid so interpolation covers [0, T0].
ODESolution solve_averaged_ode(const AveragedModel& model, double horizon_slow, double dt_ode);

struct RateFit {
  std::vector<double> times;
  std::vector<double> errors;  // L2 error of the time average against Q_normalized(v)
  double reference = 0.0;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double constant = std::numeric_limits<double>::quiet_NaN();
  double residual_rms = std::numeric_limits<double>::quiet_NaN();
  /// Errors at the integrator noise floor (constant integrand): no exponent.
  bool degenerate = false;
};

/// Least-squares fit of log error against log T. Requires an increasing grid
/// of at least 4 times and at least 50 replicas.
RateFit ergodic_rate_fit(const FoliationChart& chart, double v, const std::vector<double>& t_grid,
                         std::size_t replicas, double dt, std::uint64_t seed, unsigned threads);

/// C1 eps^alpha + C2 c_eta / sqrt(t |ln eps|^(2 beta / q)). Returns +inf where
/// the ergodic term diverges (|ln eps| -> 0). Throws std::domain_error outside
/// eps in (0,1), alpha in (0,1), beta in (0,1/2), q >= 2, t > 0.
double averaging_error_bound(double c1, double c2, double alpha, double beta, double q, double t, double epsilon,
                      double c_eta = 1.0);

}  // namespace folavg
