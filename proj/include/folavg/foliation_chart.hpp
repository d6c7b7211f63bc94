#pragma once

#include "folavg/shape_operator.hpp"
#include "folavg/types.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace folavg {

class Genus2Surface;

enum class ChartKind { sphere_radial, torus_offset, genus2_offset };

/// Short names used in config files and output file names:
/// "sphere", "torus", "genus2".
std::string_view chart_kind_name(ChartKind kind);
ChartKind parse_chart_kind(std::string_view name);

/// Local geometry of the offset foliation at a point x.
struct LeafFrame {
  double v = 0.0;            // signed normal distance to the base leaf, positive outward
  Vec3 normal;               // unit normal of the leaf through x, equal to grad v
  Point3 foot;               // closest point on the base leaf
  PrincipalCurvatures leaf;  // principal curvatures of the leaf through x, at x

  double gauss() const { return leaf.gauss(); }
};

/// Warm start for the closest-point solve. One per sequential path; never shared.
struct FootHint {
  Point3 foot = Point3::Zero();
  bool valid = false;
};

struct Genus2Options {
  double level = 0.01;
  std::optional<double> half_width;  // default 0.5 / kappa_max
  std::size_t cloud_size = 20000;
  std::string cloud_cache;  // optional flat binary cache of the base-leaf point cloud
};

/// A foliated tubular neighbourhood U = M x (-a, a) of a compact surface M in
/// R^3, foliated by the parallel surfaces of M. Immutable after construction;
/// safe for concurrent use.
class FoliationChart {
 public:
  static FoliationChart sphere(double radius, double half_width);
  static FoliationChart torus(double major_radius, double minor_radius, double half_width);
  static FoliationChart genus2(const Genus2Options& options = {});

  ChartKind kind() const { return kind_; }
  double half_width() const { return half_width_; }
  int euler_characteristic() const;
  /// Max absolute principal curvature of the base leaf. The chart requires
  /// half_width < 1 / curvature_bound.
  double curvature_bound() const { return kappa_max_; }

  double sphere_radius() const { return r0_; }
  double torus_major_radius() const { return major_; }
  double torus_minor_radius() const { return minor_; }
  const Genus2Surface* genus2_surface() const { return surface_.get(); }

  /// Foliation geometry at x without the |v| < a membership check. Throws
  /// OutOfChart only where the normal-offset structure itself is undefined
  /// (sphere centre, torus core circle, beyond the genus-2 reach).
  LeafFrame frame(const Point3& x, FootHint* hint = nullptr) const;

  /// frame() plus the membership check; throws OutOfChart if |v| >= a.
  LeafFrame checked_frame(const Point3& x, FootHint* hint = nullptr) const;

  bool contains(const Point3& x) const;

 private:
  FoliationChart() = default;

  ChartKind kind_ = ChartKind::sphere_radial;
  double half_width_ = 0.0;
  double kappa_max_ = 0.0;
  double r0_ = 0.0;
  double major_ = 0.0;
  double minor_ = 0.0;
  double reach_ = 0.0;
  std::shared_ptr<const Genus2Surface> surface_;
};

/// e - <e, n> n for a unit normal n.
inline Vec3 tangent_part(const Vec3& n, const Vec3& e) { return e - e.dot(n) * n; }

double vertical_projection(const FoliationChart& chart, const Point3& x);
Vec3 unit_normal(const FoliationChart& chart, const Point3& x);
Vec3 tangent_project(const FoliationChart& chart, const Point3& x, const Vec3& e);
double gaussian_curvature(const FoliationChart& chart, const Point3& x);

struct LeafPoint {
  Point3 x;
  LeafFrame frame;
};

/// Newton along the normal until |p(x') - v_target| <= 1e-10 (max 20 steps).
Point3 project_to_leaf(const FoliationChart& chart, const Point3& x, double v_target);
LeafPoint project_to_leaf(const FoliationChart& chart, const Point3& x, double v_target,
                          FootHint* hint);

inline constexpr double kProjectionTolerance = 1e-10;
inline constexpr int kProjectionMaxIterations = 20;

}  // namespace folavg
