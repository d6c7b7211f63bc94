#pragma once

#include "folavg/foliation_chart.hpp"
#include "folavg/rng.hpp"

#include <cstddef>
#include <cstdint>

namespace folavg {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for closed-form values
};

inline constexpr std::uint64_t kDefaultQuadratureSeed = 20150101;

/// A point on the leaf {p = v}, uniform with respect to its area measure.
///
/// Sphere: isotropic direction. Torus: meridian angle by rejection on the
/// area element, longitude uniform. Genus-2: rejection from the uniform
/// measure on the shell {|p| < a}, reweighted by the normal Jacobian so the
/// result is exactly area-uniform on leaf v.
Point3 sample_leaf_point(const FoliationChart& chart, double v, RngStream& rng);

/// Area of leaf v. Closed form for sphere and torus; Monte Carlo shell
/// quadrature with n_samples box draws for genus-2.
Estimate leaf_area(const FoliationChart& chart, double v, std::size_t n_samples,
                   std::uint64_t seed = kDefaultQuadratureSeed);

/// Unnormalized integral of Gaussian curvature over leaf v. Sphere/torus use
/// n_samples exact area-uniform points; genus-2 uses n_samples shell draws.
Estimate leaf_curvature_integral(const FoliationChart& chart, double v, std::size_t n_samples,
                                 std::uint64_t seed = kDefaultQuadratureSeed);

/// Integrals over the base leaf of 1, mean curvature H and Gaussian curvature
/// K. By the parallel-surface formula dA_v = (1 + 2Hv + Kv^2) dA_0, these
/// give every leaf area as a quadratic in v.
struct LeafMoments {
  Estimate area;
  Estimate mean_curvature;
  Estimate gauss_curvature;

  double area_at(double v) const {
    return area.value + 2.0 * v * mean_curvature.value + v * v * gauss_curvature.value;
  }
};

LeafMoments base_leaf_moments(const FoliationChart& chart, std::size_t n_samples,
                              std::uint64_t seed = kDefaultQuadratureSeed);

}  // namespace folavg
