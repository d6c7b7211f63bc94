#include "folavg/shape_operator.hpp"

#include <cmath>

namespace folavg {

void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
  // Canonical axis least aligned with n.
  Eigen::Index axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  const Vec3 seed = Vec3::Unit(axis);
  t1 = (seed - seed.dot(n) * n).normalized();
  t2 = n.cross(t1);
}

PrincipalCurvatures implicit_principal_curvatures(const Vec3& grad, const Mat3& hess) {
  const double gnorm = grad.norm();
  if (!(gnorm >= 1e-8)) {
    throw SingularGeometry("implicit gradient norm below 1e-8");
  }
  const Vec3 n = grad / gnorm;
  Vec3 t1, t2;
  tangent_frame(n, t1, t2);

  const double a = t1.dot(hess * t1) / gnorm;
  const double b = t1.dot(hess * t2) / gnorm;
  const double d = t2.dot(hess * t2) / gnorm;

  // Eigenvalues of the symmetric 2x2 [[a, b], [b, d]].
  const double mid = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  return {mid - rad, mid + rad};
}

PrincipalCurvatures offset_curvatures(const PrincipalCurvatures& base, double v) {
  const double s1 = 1.0 + v * base.k1;
  const double s2 = 1.0 + v * base.k2;
  if (s1 < 1e-6 || s2 < 1e-6) {
    throw SingularGeometry("offset leaf reaches a focal point");
  }
  const double k1 = base.k1 / s1;
  const double k2 = base.k2 / s2;
  return k1 <= k2 ? PrincipalCurvatures{k1, k2} : PrincipalCurvatures{k2, k1};
}

}  // namespace folavg
