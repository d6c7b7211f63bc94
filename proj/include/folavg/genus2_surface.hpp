#pragma once

#include "folavg/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace folavg {

/// The implicit surface F(x, y, z) = (x^2 (1 - x^2) - y^2)^2 + z^2 = c0: a thin
/// tube around the planar figure-eight y^2 = x^2 (1 - x^2). Genus 2 for small c0.
///
/// Holds a point cloud on the surface with a uniform-grid index, used to seed
/// closest-point solves.
class Genus2Surface {
 public:
  /// Builds (or loads, if cloud is non-empty) the base-leaf point cloud.
  Genus2Surface(double level, std::vector<Point3> cloud);

  double level() const { return level_; }

  double value(const Point3& p) const;
  Vec3 gradient(const Point3& p) const;
  Mat3 hessian(const Point3& p) const;

  struct Foot {
    Point3 point;            // closest point on F = c0
    double signed_distance;  // along grad F / |grad F|
    int iterations;
  };

  /// Damped Newton on {x = y + s n(y), F(y) = c0}. Residual tolerance 1e-10,
  /// at most 50 iterations. Seeds from init when given, else from the nearest
  /// cloud point. Throws OutOfChart if no seed is found or |s| > max_distance,
  /// NoConvergence if the iteration stalls.
  Foot closest_point(const Point3& x, double max_distance, const Point3* init = nullptr) const;

  std::optional<std::size_t> nearest_cloud_index(const Point3& x) const;

  std::span<const Point3> cloud() const { return cloud_; }
  double max_principal_curvature() const { return kappa_max_; }
  const Point3& box_min() const { return box_min_; }
  const Point3& box_max() const { return box_max_; }

  /// Deterministic cloud: fixed-seed box samples pushed onto F = c0 by
  /// gradient Newton.
  static std::vector<Point3> generate_cloud(double level, std::size_t count, std::uint64_t seed);

  /// Flat little-endian binary: uint64 count, then count x 3 float64.
  static void save_cloud(const std::string& path, std::span<const Point3> cloud);
  static std::vector<Point3> load_cloud(const std::string& path);

 private:
  std::size_t cell_of(int ix, int iy, int iz) const;

  double level_;
  std::vector<Point3> cloud_;
  double kappa_max_ = 0.0;
  Point3 box_min_, box_max_;

  double cell_ = 0.05;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  Point3 grid_origin_;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> cell_items_;
};

}  // namespace folavg
