#include "folavg/foliation_chart.hpp"

#include "folavg/genus2_surface.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

namespace folavg {

namespace {

constexpr std::uint64_t kCloudSeed = 0x6a09e667f3bcc909ULL;

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

std::string_view chart_kind_name(ChartKind kind) {
  switch (kind) {
    case ChartKind::sphere_radial: return "sphere";
    case ChartKind::torus_offset: return "torus";
    case ChartKind::genus2_offset: return "genus2";
  }
  return "unknown";
}

ChartKind parse_chart_kind(std::string_view name) {
  if (name == "sphere" || name == "sphere-radial") return ChartKind::sphere_radial;
  if (name == "torus" || name == "torus-offset") return ChartKind::torus_offset;
  if (name == "genus2" || name == "genus2-offset" || name == "genus-2") return ChartKind::genus2_offset;
  throw ConfigError("unknown chart kind '" + std::string(name) + "' (expected sphere, torus or genus2)");
}

FoliationChart FoliationChart::sphere(double radius, double half_width) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("sphere.radius must be positive");
  if (!(half_width > 0.0 && half_width < radius)) {
    throw ConfigError("sphere.half_width must lie in (0, radius) = (0, " + format_number(radius) + ")");
  }
  FoliationChart chart;
  chart.kind_ = ChartKind::sphere_radial;
  chart.r0_ = radius;
  chart.half_width_ = half_width;
  chart.kappa_max_ = 1.0 / radius;
  chart.reach_ = radius;
  return chart;
}

FoliationChart FoliationChart::torus(double major_radius, double minor_radius, double half_width) {
  if (!(minor_radius > 0.0 && major_radius > minor_radius) || !std::isfinite(major_radius)) {
    throw ConfigError("torus radii must satisfy major_radius > minor_radius > 0");
  }
  const double kappa_max = std::max(1.0 / minor_radius, 1.0 / (major_radius - minor_radius));
  if (!(half_width > 0.0 && half_width < 1.0 / kappa_max)) {
    throw ConfigError("torus.half_width must lie in (0, 1/kappa_max) = (0, " +
                      format_number(1.0 / kappa_max) + ")");
  }
  FoliationChart chart;
  chart.kind_ = ChartKind::torus_offset;
  chart.major_ = major_radius;
  chart.minor_ = minor_radius;
  chart.half_width_ = half_width;
  chart.kappa_max_ = kappa_max;
  chart.reach_ = 1.0 / kappa_max;
  return chart;
}

FoliationChart FoliationChart::genus2(const Genus2Options& options) {
  std::vector<Point3> cloud;
  if (!options.cloud_cache.empty() && std::filesystem::exists(options.cloud_cache)) {
    cloud = Genus2Surface::load_cloud(options.cloud_cache);
  } else {
    if (options.cloud_size < 1000) throw ConfigError("genus2.cloud_size must be at least 1000");
    cloud = Genus2Surface::generate_cloud(options.level, options.cloud_size, kCloudSeed);
    if (!options.cloud_cache.empty()) Genus2Surface::save_cloud(options.cloud_cache, cloud);
  }
  auto surface = std::make_shared<const Genus2Surface>(options.level, std::move(cloud));

  const double kappa_max = surface->max_principal_curvature();
  const double a = options.half_width.value_or(0.5 / kappa_max);
  if (!(a > 0.0 && a < 1.0 / kappa_max)) {
    throw ConfigError("genus2.half_width must lie in (0, 1/kappa_max) = (0, " +
                      format_number(1.0 / kappa_max) + ")");
  }
  FoliationChart chart;
  chart.kind_ = ChartKind::genus2_offset;
  chart.half_width_ = a;
  chart.kappa_max_ = kappa_max;
  chart.reach_ = 0.5 * (a + 1.0 / kappa_max);
  chart.surface_ = std::move(surface);
  return chart;
}

int FoliationChart::euler_characteristic() const {
  switch (kind_) {
    case ChartKind::sphere_radial: return 2;
    case ChartKind::torus_offset: return 0;
    case ChartKind::genus2_offset: return -2;
  }
  return 0;
}

LeafFrame FoliationChart::frame(const Point3& x, FootHint* hint) const {
  if (!x.allFinite()) throw OutOfChart("non-finite point");
  LeafFrame f;
  switch (kind_) {
    case ChartKind::sphere_radial: {
      const double rho = x.norm();
      if (rho < 1e-12) throw OutOfChart("sphere chart is undefined at the centre");
      f.v = rho - r0_;
      f.normal = x / rho;
      f.foot = r0_ * f.normal;
      f.leaf = {1.0 / rho, 1.0 / rho};
      return f;
    }
    case ChartKind::torus_offset: {
      const double rho = std::hypot(x.x(), x.y());
      if (rho < 1e-12) throw OutOfChart("torus chart is undefined on the symmetry axis");
      const double q = rho - major_;
      const double d = std::hypot(q, x.z());
      if (d < 1e-12) throw OutOfChart("torus chart is undefined on the core circle");
      f.v = d - minor_;
      const Vec3 radial(x.x() / rho, x.y() / rho, 0.0);
      f.normal = (q * radial + Vec3(0.0, 0.0, x.z())) / d;
      f.foot = major_ * radial + minor_ * f.normal;
      const double k_meridian = 1.0 / d;
      const double k_parallel = q / (d * rho);
      f.leaf = k_meridian <= k_parallel ? PrincipalCurvatures{k_meridian, k_parallel}
                                        : PrincipalCurvatures{k_parallel, k_meridian};
      return f;
    }
    case ChartKind::genus2_offset: {
      const Point3* init = hint && hint->valid ? &hint->foot : nullptr;
      const auto foot = surface_->closest_point(x, reach_, init);
      if (hint) {
        hint->foot = foot.point;
        hint->valid = true;
      }
      const Vec3 grad = surface_->gradient(foot.point);
      f.v = foot.signed_distance;
      f.normal = grad.normalized();
      f.foot = foot.point;
      f.leaf = offset_curvatures(implicit_principal_curvatures(grad, surface_->hessian(foot.point)), f.v);
      return f;
    }
  }
  throw OutOfChart("unknown chart kind");
}

LeafFrame FoliationChart::checked_frame(const Point3& x, FootHint* hint) const {
  LeafFrame f = frame(x, hint);
  if (!(std::abs(f.v) < half_width_)) {
    throw OutOfChart("point at vertical coordinate " + format_number(f.v) +
                     " is outside the chart (half-width " + format_number(half_width_) + ")");
  }
  return f;
}

bool FoliationChart::contains(const Point3& x) const {
  try {
    (void)checked_frame(x);
    return true;
  } catch (const GeometryError&) {
    return false;
  }
}

double vertical_projection(const FoliationChart& chart, const Point3& x) {
  return chart.checked_frame(x).v;
}

Vec3 unit_normal(const FoliationChart& chart, const Point3& x) {
  return chart.checked_frame(x).normal;
}

Vec3 tangent_project(const FoliationChart& chart, const Point3& x, const Vec3& e) {
  return tangent_part(chart.checked_frame(x).normal, e);
}

double gaussian_curvature(const FoliationChart& chart, const Point3& x) {
  return chart.checked_frame(x).gauss();
}

LeafPoint project_to_leaf(const FoliationChart& chart, const Point3& x, double v_target,
                          FootHint* hint) {
  if (!(std::abs(v_target) < chart.half_width())) {
    throw OutOfChart("target leaf " + format_number(v_target) + " is outside the chart");
  }
  Point3 y = x;
  for (int it = 0; it <= kProjectionMaxIterations; ++it) {
    const LeafFrame f = chart.frame(y, hint);
    const double r = v_target - f.v;
    if (std::abs(r) <= kProjectionTolerance) return {y, f};
    if (it == kProjectionMaxIterations) break;
    y += r * f.normal;
  }
  throw NoConvergence("leaf projection did not converge in 20 iterations");
}

Point3 project_to_leaf(const FoliationChart& chart, const Point3& x, double v_target) {
  chart.checked_frame(x);
  return project_to_leaf(chart, x, v_target, nullptr).x;
}

}  // namespace folavg
