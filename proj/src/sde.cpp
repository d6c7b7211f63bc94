#include "folavg/sde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace folavg {

std::size_t step_count(double span, double dt) {
  const double n = span / dt;
  return static_cast<std::size_t>(std::ceil(n - 1e-9 * std::max(1.0, n)));
}

namespace {

std::size_t steps_not_exceeding(double span, double dt) {
  const double n = span / dt;
  return static_cast<std::size_t>(std::floor(n + 1e-9 * std::max(1.0, n)));
}

}  // namespace

void validate_sim_config(const SimConfig& cfg, const FoliationChart& chart) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(cfg.dt > 0.0 && cfg.dt <= 1e-2)) fail("dt must lie in (0, 1e-2]");
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) fail("epsilon must be positive");
  if (!(cfg.horizon_slow > 0.0) || !std::isfinite(cfg.horizon_slow)) fail("horizon must be positive");
  if (cfg.record_grid < 2) fail("record_grid must be at least 2");
  if (!(cfg.leaf_tolerance > 0.0)) fail("leaf_tolerance must be positive");
  const double a = chart.half_width();
  const double kmax = chart.curvature_bound();
  if (cfg.epsilon * cfg.dt * kmax > 0.1 * a) {
    std::ostringstream os;
    os << "epsilon*dt*kappa_max = " << cfg.epsilon * cfg.dt * kmax
       << " exceeds a/10 = " << 0.1 * a << "; reduce dt or epsilon";
    fail(os.str());
  }
  if (std::sqrt(cfg.dt) * kmax > 0.25) {
    std::ostringstream os;
    os << "sqrt(dt)*kappa_max = " << std::sqrt(cfg.dt) * kmax
       << " exceeds 0.25; dt must be at most " << 0.0625 / (kmax * kmax) << " for this chart";
    fail(os.str());
  }
}

LeafIntegrator::LeafIntegrator(const FoliationChart& chart, const Point3& x0) : chart_(&chart), x_(x0) {
  frame_ = chart.checked_frame(x0, &hint_);
  leaf_ = last_v_ = frame_.v;
}

LeafFrame LeafIntegrator::evaluate(const Point3& x) {
  LeafFrame f = chart_->frame(x, &hint_);
  last_v_ = f.v;
  return f;
}

void LeafIntegrator::step_foliated(const Vec3& dW) { foliated_substep(dW, 0); }

void LeafIntegrator::foliated_substep(const Vec3& dW, int depth) {
  try {
    heun_step(dW);
  } catch (const GeometryError&) {
    // A Gaussian tail increment can push the predictor past the reach of the
    // normal-offset structure. Retry as two half increments; the total
    // increment, and so the random stream, is unchanged.
    if (depth >= kMaxSplitDepth) throw;
    foliated_substep(0.5 * dW, depth + 1);
    foliated_substep(0.5 * dW, depth + 1);
  }
}

void LeafIntegrator::heun_step(const Vec3& dW) {
  const Vec3 drift0 = tangent_part(frame_.normal, dW);
  const Point3 predictor = x_ + drift0;
  const LeafFrame fp = evaluate(predictor);
  const Point3 corrector = x_ + 0.5 * (drift0 + tangent_part(fp.normal, dW));
  LeafPoint projected = project_to_leaf(*chart_, corrector, leaf_, &hint_);
  last_v_ = projected.frame.v;
  x_ = projected.x;
  frame_ = projected.frame;
}

void LeafIntegrator::step_perturbed(const Vec3& dW, double epsilon, double dt) {
  if (epsilon == 0.0) {
    step_foliated(dW);
    return;
  }
  const double half = 0.5 * epsilon * dt;
  x_ += (half * frame_.gauss()) * frame_.normal;
  frame_ = evaluate(x_);
  if (!(std::abs(frame_.v) < chart_->half_width())) throw OutOfChart("path left the chart");
  leaf_ = frame_.v;
  step_foliated(dW);
  x_ += (half * frame_.gauss()) * frame_.normal;
  frame_ = evaluate(x_);
  leaf_ = frame_.v;
}

Point3 step_foliated(const FoliationChart& chart, const Point3& x, const Vec3& dW) {
  LeafIntegrator integ(chart, x);
  integ.step_foliated(dW);
  return integ.position();
}

Point3 step_perturbed(const FoliationChart& chart, const Point3& x, const Vec3& dW, double epsilon,
                      double dt) {
  LeafIntegrator integ(chart, x);
  integ.step_perturbed(dW, epsilon, dt);
  return integ.position();
}

PathSample simulate_rescaled_path(const FoliationChart& chart, const Point3& x0, const SimConfig& cfg,
                                  RngStream& rng) {
  validate_sim_config(cfg, chart);
  const double a = chart.half_width();
  const double exit_level = a - 2.0 * cfg.leaf_tolerance;
  const double fast_per_slow = 1.0 / cfg.epsilon;

  PathSample out;
  const std::size_t m = cfg.record_grid;
  out.slow_times.resize(m);
  out.vertical.resize(m);
  std::vector<std::size_t> record_step(m);
  for (std::size_t j = 0; j < m; ++j) {
    out.slow_times[j] = j + 1 == m ? cfg.horizon_slow
                                   : cfg.horizon_slow * static_cast<double>(j) / static_cast<double>(m - 1);
    record_step[j] = steps_not_exceeding(out.slow_times[j] * fast_per_slow, cfg.dt);
  }
  const std::size_t n_steps = step_count(cfg.horizon_slow * fast_per_slow, cfg.dt);
  for (auto& k : record_step) k = std::min(k, n_steps);

  LeafIntegrator integ(chart, x0);
  std::size_t next = 0;
  auto record_until = [&](std::size_t k, double value) {
    while (next < m && record_step[next] <= k) out.vertical[next++] = value;
  };
  auto freeze = [&](std::size_t k, double value) {
    out.exited = true;
    out.exit_slow_time = cfg.epsilon * static_cast<double>(k) * cfg.dt;
    while (next < m) out.vertical[next++] = value;
  };

  if (std::abs(integ.frame().v) >= exit_level) {
    freeze(0, integ.frame().v);
    return out;
  }
  record_until(0, integ.frame().v);

  for (std::size_t k = 1; k <= n_steps; ++k) {
    const Vec3 dW = brownian_increment(rng, cfg.dt);
    try {
      integ.step_perturbed(dW, cfg.epsilon, cfg.dt);
    } catch (const OutOfChart&) {
      const double v = integ.last_vertical();
      freeze(k, std::clamp(v, -a, a));
      return out;
    }
    const double v = integ.frame().v;
    if (std::abs(v) >= exit_level) {
      freeze(k, v);
      return out;
    }
    record_until(k, v);
  }
  record_until(n_steps, integ.frame().v);
  return out;
}

double unperturbed_time_average(const FoliationChart& chart, const Point3& x0, double t_fast, double dt,
                                RngStream& rng) {
  if (!(t_fast > 0.0) || !(dt > 0.0)) throw std::invalid_argument("unperturbed_time_average: T and dt must be positive");
  const std::size_t n = step_count(t_fast, dt);
  LeafIntegrator integ(chart, x0);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum += integ.frame().gauss();
    integ.step_foliated(brownian_increment(rng, dt));
  }
  return sum / static_cast<double>(n);
}

}  // namespace folavg
