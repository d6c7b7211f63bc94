#pragma once

#include "folavg/foliation_chart.hpp"
#include "folavg/leaf_quadrature.hpp"
#include "folavg/rng.hpp"

#include <vector>

namespace folavg::testing {

inline const FoliationChart& unit_sphere() {
  static const FoliationChart chart = FoliationChart::sphere(1.0, 0.9);
  return chart;
}

inline const FoliationChart& default_torus() {
  static const FoliationChart chart = FoliationChart::torus(2.0, 0.5, 0.3);
  return chart;
}

inline const FoliationChart& default_genus2() {
  static const FoliationChart chart = FoliationChart::genus2();
  return chart;
}

inline std::vector<const FoliationChart*> all_charts() {
  return {&unit_sphere(), &default_torus(), &default_genus2()};
}

/// Uniform random point of the chart: area-uniform on a leaf drawn uniformly
/// from (-0.9a, 0.9a).
inline Point3 random_chart_point(const FoliationChart& chart, RngStream& rng) {
  const double v = chart.half_width() * 0.9 * (2.0 * rng.uniform() - 1.0);
  return sample_leaf_point(chart, v, rng);
}

}  // namespace folavg::testing
