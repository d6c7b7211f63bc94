#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace folavg {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base class for failures of the foliation geometry.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The query point is outside the tubular neighbourhood (|v| >= a), or the
/// closest-point structure of the base leaf is not defined there.
class OutOfChart : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Degenerate implicit gradient or an offset leaf hitting a focal point.
class SingularGeometry : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// An iterative solve (closest point, leaf projection) did not converge.
class NoConvergence : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Invalid user configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace folavg
