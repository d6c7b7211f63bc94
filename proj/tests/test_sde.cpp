#include "folavg/experiments.hpp"
#include "folavg/leaf_quadrature.hpp"
#include "folavg/sde.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace folavg;
using folavg::testing::all_charts;
using folavg::testing::default_genus2;
using folavg::testing::default_torus;
using folavg::testing::unit_sphere;

namespace {

double sphere_radial_law(double s) { return std::cbrt(1.0 + 3.0 * s) - 1.0; }

double sup_error_to_radial_law(const PathSample& p) {
  double sup = 0.0;
  for (std::size_t j = 0; j < p.slow_times.size(); ++j) {
    sup = std::max(sup, std::abs(p.vertical[j] - sphere_radial_law(p.slow_times[j])));
  }
  return sup;
}

SimConfig sphere_config(double epsilon, double dt = 1e-3) {
  SimConfig cfg;
  cfg.epsilon = epsilon;
  cfg.dt = dt;
  cfg.horizon_slow = 1.0;
  return cfg;
}

}  // namespace

TEST_SUITE("sde core") {

TEST_CASE("brownian increments") {
  RngStream rng(1, 0);
  CHECK(brownian_increment(rng, 0.0) == Vec3::Zero());
  CHECK_THROWS(brownian_increment(rng, -1.0));

  const std::size_t n = 1'000'000;
  const double dt = 0.01;
  Vec3 sum = Vec3::Zero(), sum_sq = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = brownian_increment(rng, dt);
    sum += d;
    sum_sq += d.cwiseProduct(d);
  }
  for (int c = 0; c < 3; ++c) {
    const double mean = sum(c) / n;
    CHECK(std::abs(mean) <= 3e-4);
    CHECK(std::abs(sum_sq(c) / n - mean * mean - dt) <= 1.5e-4);
  }
}

TEST_CASE("streams are keyed by seed, path and subsequence") {
  RngStream a(5, 3), b(5, 3), c(5, 4), d(5, 3, 1), e(6, 3);
  const double x = a.normal();
  CHECK(x == b.normal());
  CHECK(x != c.normal());
  CHECK(x != d.normal());
  CHECK(x != e.normal());
}

TEST_CASE("foliated step") {
  const auto& sphere = unit_sphere();
  const Point3 x(1, 0, 0);
  CHECK(step_foliated(sphere, x, Vec3::Zero()) == x);

  RngStream rng(2, 0);
  for (const FoliationChart* chart : all_charts()) {
    const double dt = chart->kind() == ChartKind::genus2_offset ? 2e-5 : 1e-3;
    for (int i = 0; i < 200; ++i) {
      const Point3 p = sample_leaf_point(*chart, 0.4 * chart->half_width(), rng);
      const double v0 = vertical_projection(*chart, p);
      const Point3 q = step_foliated(*chart, p, brownian_increment(rng, dt));
      CHECK(std::abs(vertical_projection(*chart, q) - v0) <= 1e-10);
    }
  }

  SUBCASE("tangent displacement is isotropic on the sphere") {
    const std::size_t n = 10000;
    double sum_y = 0, sum_z = 0, sq_y = 0, sq_z = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 d = step_foliated(sphere, x, brownian_increment(rng, 1e-3)) - x;
      sum_y += d.y();
      sum_z += d.z();
      sq_y += d.y() * d.y();
      sq_z += d.z() * d.z();
    }
    const double my = sum_y / n, mz = sum_z / n;
    CHECK(std::abs(my) <= 3.0 * std::sqrt(sq_y / n - my * my) / std::sqrt(double(n)));
    CHECK(std::abs(mz) <= 3.0 * std::sqrt(sq_z / n - mz * mz) / std::sqrt(double(n)));
  }
}

TEST_CASE("perturbed step") {
  const auto& sphere = unit_sphere();
  RngStream rng(3, 0);
  const Point3 x = sample_leaf_point(sphere, 0.0, rng);
  const Vec3 dW = brownian_increment(rng, 1e-3);
  CHECK(step_perturbed(sphere, x, dW, 0.0, 1e-3) == step_foliated(sphere, x, dW));

  const Point3 y = step_perturbed(sphere, x, Vec3::Zero(), 0.1, 0.01);
  CHECK(std::abs(vertical_projection(sphere, y) - 1e-3) <= 1e-6);

  SUBCASE("fast-time radial closed form r^3 = 1 + 3 eps T") {
    const double eps = 0.1, dt = 1e-3, t_fast = 10.0;
    LeafIntegrator integ(sphere, Point3(0, 0, 1));
    for (std::size_t k = 0; k < step_count(t_fast, dt); ++k) integ.step_perturbed(brownian_increment(rng, dt), eps, dt);
    CHECK(std::abs(integ.frame().v - (std::cbrt(1.0 + 3.0 * eps * t_fast) - 1.0)) <= 1e-3);
  }
}

TEST_CASE("rescaled paths") {
  const auto& sphere = unit_sphere();
  SUBCASE("sphere p(1) follows the radial law for every seed") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      RngStream rng(seed, 0);
      const auto path = simulate_rescaled_path(sphere, sample_leaf_point(sphere, 0.0, rng), sphere_config(0.05), rng);
      REQUIRE(path.slow_times.size() == 101);
      CHECK(path.slow_times.front() == 0.0);
      CHECK(path.slow_times.back() == 1.0);
      CHECK(std::abs(path.vertical.back() - sphere_radial_law(1.0)) <= 2e-3);
      CHECK(sup_error_to_radial_law(path) <= 5e-3);
      CHECK_FALSE(path.exited);
    }
  }
  SUBCASE("torus has no mean transversal drift") {
    SimConfig cfg = sphere_config(0.05);
    cfg.master_seed = 21;
    const auto paths = simulate_ensemble(default_torus(), cfg, 200, 0, 1);
    double sum = 0, sq = 0;
    for (const auto& p : paths) {
      sum += p.vertical.back();
      sq += p.vertical.back() * p.vertical.back();
    }
    const double mean = sum / 200.0;
    const double se = std::sqrt((sq / 200.0 - mean * mean) / 199.0);
    CHECK(std::abs(mean) <= 3.0 * se);
  }
  SUBCASE("forced exit freezes the record") {
    const auto narrow = FoliationChart::sphere(1.0, 0.3);
    RngStream rng(4, 0);
    const auto path = simulate_rescaled_path(narrow, sample_leaf_point(narrow, 0.0, rng), sphere_config(0.05), rng);
    REQUIRE(path.exited);
    // The radial law reaches 0.3 at s = (1.3^3 - 1) / 3.
    CHECK(path.exit_slow_time == doctest::Approx((1.3 * 1.3 * 1.3 - 1.0) / 3.0).epsilon(1e-3));
    const double frozen = path.vertical.back();
    CHECK(std::abs(frozen) >= 0.3 - 2e-10);
    for (std::size_t j = 0; j < path.slow_times.size(); ++j) {
      if (path.slow_times[j] < path.exit_slow_time - 1e-3) {
        CHECK(std::abs(path.vertical[j]) < 0.3);
      } else if (path.slow_times[j] > path.exit_slow_time) {
        CHECK(path.vertical[j] == frozen);
      }
    }
  }
}

TEST_CASE("configuration validation") {
  const auto& sphere = unit_sphere();
  CHECK_THROWS_AS(validate_sim_config(sphere_config(0.05, 0.02), sphere), ConfigError);
  CHECK_THROWS_AS(validate_sim_config(sphere_config(0.0), sphere), ConfigError);
  CHECK_THROWS_AS(validate_sim_config(sphere_config(1000.0, 1e-2), sphere), ConfigError);
  SimConfig grid = sphere_config(0.05);
  grid.record_grid = 1;
  CHECK_THROWS_AS(validate_sim_config(grid, sphere), ConfigError);
  CHECK_THROWS_AS(validate_sim_config(sphere_config(0.05, 1e-3), default_genus2()), ConfigError);
  CHECK_NOTHROW(validate_sim_config(sphere_config(0.05, 2e-5), default_genus2()));
}

TEST_CASE("leaf preservation over a million unperturbed steps") {
  for (const FoliationChart* chart : all_charts()) {
    CAPTURE(chart_kind_name(chart->kind()));
    const double dt = chart->kind() == ChartKind::genus2_offset ? 2e-5 : 1e-3;
    RngStream rng(7, static_cast<std::uint64_t>(chart->kind()));
    LeafIntegrator integ(*chart, sample_leaf_point(*chart, 0.3 * chart->half_width(), rng));
    const double v0 = integ.frame().v;
    double worst = 0.0;
    for (int k = 0; k < 1'000'000; ++k) {
      integ.step_foliated(brownian_increment(rng, dt));
      worst = std::max(worst, std::abs(integ.frame().v - v0));
    }
    CHECK(worst <= 10.0 * kProjectionTolerance);
    CHECK(std::abs(vertical_projection(*chart, integ.position()) - v0) <= 10.0 * kProjectionTolerance);
  }
}

TEST_CASE("sphere path error is at least first order in dt") {
  const auto& sphere = unit_sphere();
  auto error_at = [&](double dt) {
    SimConfig cfg = sphere_config(0.05, dt);
    RngStream rng(8, 0);
    return sup_error_to_radial_law(simulate_rescaled_path(sphere, Point3(0, 0, 1), cfg, rng));
  };
  const double e1 = error_at(2e-3), e2 = error_at(1e-3), e3 = error_at(5e-4);
  MESSAGE("sup errors " << e1 << " " << e2 << " " << e3);
  CHECK(std::log2(e1 / e2) >= 0.9);
  CHECK(std::log2(e2 / e3) >= 0.9);
}

TEST_CASE("paths are bit-reproducible across worker counts") {
  for (const FoliationChart* chart : all_charts()) {
    SimConfig cfg = sphere_config(0.1, chart->kind() == ChartKind::genus2_offset ? 2e-5 : 1e-3);
    cfg.horizon_slow = chart->kind() == ChartKind::genus2_offset ? 1e-3 : 0.2;
    cfg.master_seed = 99;
    const auto one = simulate_ensemble(*chart, cfg, 12, 5, 1);
    const auto many = simulate_ensemble(*chart, cfg, 12, 5, 4);
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(one[i].vertical == many[i].vertical);
      CHECK(one[i].exited == many[i].exited);
    }
    RngStream rng(99, 3, 5);
    const auto again = simulate_rescaled_path(*chart, sample_leaf_point(*chart, 0.0, rng), cfg, rng);
    CHECK(again.vertical == one[3].vertical);
  }
}

TEST_CASE("unperturbed sphere process mixes to the uniform law") {
  const auto& sphere = unit_sphere();
  const std::size_t n = 500;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(10, i);
    LeafIntegrator integ(sphere, Point3(0, 0, 1));
    for (std::size_t k = 0; k < step_count(50.0, 1e-3); ++k) integ.step_foliated(brownian_increment(rng, 1e-3));
    z[i] = integ.position().z();
  }
  std::sort(z.begin(), z.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = 0.5 * (z[i] + 1.0);
    d = std::max({d, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
  }
  // Asymptotic 1% critical value of the one-sample statistic.
  CHECK(d <= 1.6276 / std::sqrt(double(n)));
}

TEST_CASE("unperturbed time averages") {
  SUBCASE("sphere: constant curvature") {
    RngStream rng(11, 0);
    CHECK(unperturbed_time_average(unit_sphere(), Point3(1, 0, 0), 20.0, 1e-3, rng) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("torus: zero within the ergodic error at T = 200") {
    const auto est = ergodic_drift(default_torus(), 0.0, 200.0, 1e-3, 20, 12, 1);
    double ss = 0.0;
    for (double r : est.replicas) ss += r * r;
    const double c = std::sqrt(ss / est.replicas.size()) * std::sqrt(200.0);
    MESSAGE("torus ergodic constant c = " << c);
    CHECK(std::abs(est.replicas.front()) <= 3.0 * c / std::sqrt(200.0));
    CHECK(std::abs(est.mean) <= 3.0 * est.std_error);
  }
  SUBCASE("genus-2: matches -4 pi / area at T = 200") {
    const auto& chart = default_genus2();
    const auto est = ergodic_drift(chart, 0.0, 200.0, 5e-5, 4, 13, 1);
    const auto area = leaf_area(chart, 0.0, 1'000'000);
    const auto gb = leaf_curvature_integral(chart, 0.0, 1'000'000);
    const double ratio = gb.value / area.value;
    const double ratio_se = std::abs(ratio) * std::hypot(gb.std_error / gb.value, area.std_error / area.value);
    const double target = -4.0 * M_PI / area.value;
    const double target_se = std::abs(target) * area.std_error / area.value;
    MESSAGE("time average " << est.mean << " +- " << est.std_error << ", -4pi/area " << target);
    CHECK(std::abs(est.mean - target) <= 3.0 * std::hypot(est.std_error, target_se));
    CHECK(std::abs(ratio - target) <= 3.0 * std::hypot(ratio_se, target_se));
  }
}

}
