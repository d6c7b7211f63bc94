#pragma once

#include "folavg/types.hpp"

namespace folavg {

struct PrincipalCurvatures {
  double k1 = 0.0;  // k1 <= k2
  double k2 = 0.0;

  double gauss() const { return k1 * k2; }
  double mean() const { return 0.5 * (k1 + k2); }
};

/// Principal curvatures of the level set of an implicit function F through a
/// point, from the gradient and Hessian of F at that point.
///
/// The shape operator is the restriction of Hess(F)/|grad F| to the tangent
/// plane. With the normal grad F/|grad F| this convention makes a round sphere
/// (F = |x|^2) have positive curvatures 1/r.
///
/// Throws SingularGeometry if |grad F| < 1e-8.
PrincipalCurvatures implicit_principal_curvatures(const Vec3& grad, const Mat3& hess);

/// Principal curvatures of the parallel surface at signed distance v along
/// the normal: k / (1 + v k). Throws SingularGeometry when 1 + v k < 1e-6.
PrincipalCurvatures offset_curvatures(const PrincipalCurvatures& base, double v);

/// Orthonormal tangent pair (t1, t2) with t1 x t2 = n for a unit vector n.
void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2);

}  // namespace folavg
