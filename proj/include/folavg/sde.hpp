#pragma once

#include "folavg/foliation_chart.hpp"
#include "folavg/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace folavg {

struct SimConfig {
  double dt = 1e-3;            // fast-time step
  double epsilon = 0.05;       // perturbation strength
  double horizon_slow = 1.0;   // slow-time endpoint t
  std::size_t record_grid = 101;
  std::uint64_t master_seed = 1;
  double leaf_tolerance = kProjectionTolerance;
};

/// Throws ConfigError unless: 0 < dt <= 1e-2, epsilon > 0, horizon > 0,
/// record_grid >= 2, one drift step moves at most a/10
/// (epsilon dt kappa_max <= a/10), and one diffusion step resolves the leaf
/// curvature (sqrt(dt) kappa_max <= 1/4).
void validate_sim_config(const SimConfig& cfg, const FoliationChart& chart);

/// One rescaled trajectory: p(x^eps_{s/eps}) on the slow grid, frozen at exit.
struct PathSample {
  std::vector<double> slow_times;
  std::vector<double> vertical;
  bool exited = false;
  double exit_slow_time = std::numeric_limits<double>::quiet_NaN();  // eps * tau^eps
};

/// Sequential integrator state for one path. Caches the leaf frame of the
/// current point and warm-starts closest-point solves from the previous foot.
class LeafIntegrator {
 public:
  LeafIntegrator(const FoliationChart& chart, const Point3& x0);

  const Point3& position() const { return x_; }
  const LeafFrame& frame() const { return frame_; }
  /// Vertical coordinate of the most recently evaluated frame, including
  /// intermediate stages of a step that failed.
  double last_vertical() const { return last_v_; }

  /// Stratonovich-Heun step of dx = sum_i P(x) e_i o dB^i, then re-projection
  /// onto the leaf of the starting point.
  void step_foliated(const Vec3& dW);

  /// Strang splitting: half normal drift eps*kappa*n, foliated step on the
  /// current leaf, half drift.
  void step_perturbed(const Vec3& dW, double epsilon, double dt);

 private:
  static constexpr int kMaxSplitDepth = 4;

  LeafFrame evaluate(const Point3& x);
  void foliated_substep(const Vec3& dW, int depth);
  void heun_step(const Vec3& dW);

  const FoliationChart* chart_;
  Point3 x_;
  LeafFrame frame_;
  FootHint hint_;
  double leaf_ = 0.0;  // target leaf of the diffusion steps
  double last_v_ = 0.0;
};

Point3 step_foliated(const FoliationChart& chart, const Point3& x, const Vec3& dW);
Point3 step_perturbed(const FoliationChart& chart, const Point3& x, const Vec3& dW, double epsilon,
                      double dt);

/// Integrates the perturbed system to fast time horizon_slow/epsilon with
/// ceil(horizon_slow/(epsilon dt)) steps, recording p at the last step not
/// exceeding each s_j/epsilon. Exit is declared at |p| >= a - 2 leaf_tolerance.
PathSample simulate_rescaled_path(const FoliationChart& chart, const Point3& x0, const SimConfig& cfg,
                                  RngStream& rng);

/// (1/T) sum_k kappa(x_k) dt along an unperturbed leaf path started at x0.
double unperturbed_time_average(const FoliationChart& chart, const Point3& x0, double t_fast, double dt,
                                RngStream& rng);

/// Step count for a given fast-time span, tolerant of representation error.
std::size_t step_count(double span, double dt);

}  // namespace folavg
