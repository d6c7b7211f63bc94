#include "folavg/leaf_quadrature.hpp"

#include "folavg/genus2_surface.hpp"

#include <cmath>
#include <numbers>

namespace folavg {

namespace {

using std::numbers::pi;

void require_leaf(const FoliationChart& chart, double v) {
  if (!(std::abs(v) < chart.half_width())) {
    throw OutOfChart("leaf v = " + std::to_string(v) + " is outside the chart");
  }
}

Vec3 isotropic_direction(RngStream& rng) {
  for (;;) {
    const Vec3 g(rng.normal(), rng.normal(), rng.normal());
    const double n = g.norm();
    if (n > 1e-12) return g / n;
  }
}

// One uniform draw from the slab box around the genus-2 surface, accepted if
// it falls in the shell {|s| < delta}.
struct ShellDraw {
  bool hit = false;
  Point3 foot;
  Vec3 normal;
  PrincipalCurvatures base;
};

struct ShellBox {
  Point3 lo, hi;
  double volume;
  double delta;
};

ShellBox shell_box(const FoliationChart& chart) {
  const Genus2Surface& s = *chart.genus2_surface();
  const double delta = chart.half_width();
  const Vec3 pad = Vec3::Constant(delta + 0.02);
  ShellBox box{s.box_min() - pad, s.box_max() + pad, 0.0, delta};
  box.volume = (box.hi - box.lo).prod();
  return box;
}

ShellDraw shell_draw(const FoliationChart& chart, const ShellBox& box, RngStream& rng) {
  const Genus2Surface& s = *chart.genus2_surface();
  Point3 x;
  for (int i = 0; i < 3; ++i) x(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * rng.uniform();

  ShellDraw d;
  const auto idx = s.nearest_cloud_index(x);
  if (!idx) return d;
  Genus2Surface::Foot foot;
  try {
    foot = s.closest_point(x, 1.0 / chart.curvature_bound(), &s.cloud()[*idx]);
  } catch (const GeometryError&) {
    return d;
  }
  if (!(std::abs(foot.signed_distance) < box.delta)) return d;
  const Vec3 grad = s.gradient(foot.point);
  d.hit = true;
  d.foot = foot.point;
  d.normal = grad.normalized();
  d.base = implicit_principal_curvatures(grad, s.hessian(foot.point));
  return d;
}

// Marginal density of the base point of a uniform shell sample, relative to
// area: int_{-d}^{d} (1 + k1 s)(1 + k2 s) ds / (2d) = 1 + K d^2 / 3.
double shell_marginal(const PrincipalCurvatures& k, double delta) {
  return 1.0 + k.gauss() * delta * delta / 3.0;
}

double normal_jacobian(const PrincipalCurvatures& k, double v) {
  return (1.0 + k.k1 * v) * (1.0 + k.k2 * v);
}

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double z) {
    sum += z;
    sum_sq += z * z;
  }
  Estimate finish(std::size_t n) const {
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(n))};
  }
};

}  // namespace

Point3 sample_leaf_point(const FoliationChart& chart, double v, RngStream& rng) {
  require_leaf(chart, v);
  switch (chart.kind()) {
    case ChartKind::sphere_radial:
      return (chart.sphere_radius() + v) * isotropic_direction(rng);

    case ChartKind::torus_offset: {
      const double big = chart.torus_major_radius();
      const double tube = chart.torus_minor_radius() + v;
      double theta = 0.0;
      for (;;) {
        theta = 2.0 * pi * rng.uniform();
        // Area element is proportional to big + tube cos(theta).
        if (rng.uniform() * (big + tube) <= big + tube * std::cos(theta)) break;
      }
      const double phi = 2.0 * pi * rng.uniform();
      const double ring = big + tube * std::cos(theta);
      return Point3(ring * std::cos(phi), ring * std::sin(phi), tube * std::sin(theta));
    }

    case ChartKind::genus2_offset: {
      const ShellBox box = shell_box(chart);
      // The cloud estimate of kappa_max can sit slightly below the true
      // maximum; pad it so the acceptance ratio stays below 1.
      const double kmax = 1.1 * chart.curvature_bound();
      const double w_max = (1.0 + kmax * std::abs(v)) * (1.0 + kmax * std::abs(v)) /
                           (1.0 - kmax * kmax * box.delta * box.delta / 3.0);
      for (;;) {
        const ShellDraw d = shell_draw(chart, box, rng);
        if (!d.hit) continue;
        const double w = normal_jacobian(d.base, v) / shell_marginal(d.base, box.delta);
        if (rng.uniform() * w_max < w) return d.foot + v * d.normal;
      }
    }
  }
  throw OutOfChart("unknown chart kind");
}

Estimate leaf_area(const FoliationChart& chart, double v, std::size_t n_samples, std::uint64_t seed) {
  require_leaf(chart, v);
  switch (chart.kind()) {
    case ChartKind::sphere_radial: {
      const double r = chart.sphere_radius() + v;
      return {4.0 * pi * r * r, 0.0};
    }
    case ChartKind::torus_offset:
      return {4.0 * pi * pi * chart.torus_major_radius() * (chart.torus_minor_radius() + v), 0.0};
    case ChartKind::genus2_offset: {
      if (n_samples == 0) throw std::invalid_argument("leaf_area: n_samples must be positive");
      const ShellBox box = shell_box(chart);
      const double scale = box.volume / (2.0 * box.delta);
      RngStream rng(seed, 0, 1);
      Accumulator acc;
      for (std::size_t i = 0; i < n_samples; ++i) {
        const ShellDraw d = shell_draw(chart, box, rng);
        acc.add(d.hit ? scale * normal_jacobian(d.base, v) / shell_marginal(d.base, box.delta) : 0.0);
      }
      return acc.finish(n_samples);
    }
  }
  return {};
}

Estimate leaf_curvature_integral(const FoliationChart& chart, double v, std::size_t n_samples,
                                 std::uint64_t seed) {
  require_leaf(chart, v);
  if (n_samples == 0) throw std::invalid_argument("leaf_curvature_integral: n_samples must be positive");

  if (chart.kind() == ChartKind::genus2_offset) {
    const ShellBox box = shell_box(chart);
    const double scale = box.volume / (2.0 * box.delta);
    RngStream rng(seed, 0, 2);
    Accumulator acc;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const ShellDraw d = shell_draw(chart, box, rng);
      if (!d.hit) {
        acc.add(0.0);
        continue;
      }
      // Curvature of leaf v at the offset point, times the leaf area element.
      const double k_leaf = offset_curvatures(d.base, v).gauss();
      acc.add(scale * k_leaf * normal_jacobian(d.base, v) / shell_marginal(d.base, box.delta));
    }
    return acc.finish(n_samples);
  }

  // Area-uniform samples on the leaf: integral = area * E[kappa].
  const double area = leaf_area(chart, v, 1).value;
  RngStream rng(seed, 0, 3);
  Accumulator acc;
  for (std::size_t i = 0; i < n_samples; ++i) {
    acc.add(area * chart.frame(sample_leaf_point(chart, v, rng)).gauss());
  }
  return acc.finish(n_samples);
}

LeafMoments base_leaf_moments(const FoliationChart& chart, std::size_t n_samples, std::uint64_t seed) {
  switch (chart.kind()) {
    case ChartKind::sphere_radial: {
      const double r = chart.sphere_radius();
      return {{4.0 * pi * r * r, 0.0}, {4.0 * pi * r, 0.0}, {4.0 * pi, 0.0}};
    }
    case ChartKind::torus_offset: {
      const double big = chart.torus_major_radius();
      const double tube = chart.torus_minor_radius();
      return {{4.0 * pi * pi * big * tube, 0.0}, {2.0 * pi * pi * big, 0.0}, {0.0, 0.0}};
    }
    case ChartKind::genus2_offset: {
      if (n_samples == 0) throw std::invalid_argument("base_leaf_moments: n_samples must be positive");
      const ShellBox box = shell_box(chart);
      const double scale = box.volume / (2.0 * box.delta);
      RngStream rng(seed, 0, 4);
      Accumulator area, mean, gauss;
      for (std::size_t i = 0; i < n_samples; ++i) {
        const ShellDraw d = shell_draw(chart, box, rng);
        const double w = d.hit ? scale / shell_marginal(d.base, box.delta) : 0.0;
        area.add(w);
        mean.add(d.hit ? w * d.base.mean() : 0.0);
        gauss.add(d.hit ? w * d.base.gauss() : 0.0);
      }
      return {area.finish(n_samples), mean.finish(n_samples), gauss.finish(n_samples)};
    }
  }
  return {};
}

}  // namespace folavg
