#include "folavg/experiments.hpp"
#include "folavg/report_csv.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

using namespace folavg;

namespace {

std::string csv_text(const CsvTable& t) {
  std::ostringstream os;
  write_csv(t, os);
  return os.str();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string config_error(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("experiment config") {

TEST_CASE("defaults") {
  const auto spec = parse_spec("chart = sphere\n");
  CHECK(spec.chart == ChartKind::sphere_radial);
  CHECK(spec.dt == 1e-3);
  CHECK(spec.horizon == 1.0);
  CHECK(spec.n_paths == 200);
  CHECK(spec.epsilon_grid == std::vector<double>{0.2, 0.1, 0.05, 0.02});
  CHECK(spec.q == 2.0);
  CHECK(spec.beta == 0.25);
  CHECK(spec.record_grid == 101);
  CHECK(spec.model == DriftMode::gauss_bonnet_normalized);
  CHECK(spec.charts.sphere_half_width == 0.9);
  CHECK(parse_spec("chart = genus2\n").dt == 2e-5);
  CHECK(parse_spec("").chart == ChartKind::sphere_radial);
}

TEST_CASE("full config") {
  const auto spec = parse_spec(
      "; comment\n"
      "chart = torus\n"
      "[torus]\nmajor_radius = 3\nminor_radius = 1\nhalf_width = 0.5\ntopology_epsilon = 0.1\n"
      "[run]\nepsilon = 0.3, 0.1\nq = 4\nbeta = 0.4\nn_paths = 10\ndt = 0.002\nhorizon = 0.5\n"
      "record_grid = 11\nseed = 0x10\nmodel = monte-carlo-table\ngamma = 0.1\n"
      "[leaf_average]\nsamples = 5000\ntime = 5\nreplicas = 4\n");
  CHECK(spec.chart == ChartKind::torus_offset);
  CHECK(spec.charts.torus_major_radius == 3.0);
  CHECK(spec.charts.topology[1].epsilon == 0.1);
  CHECK(spec.epsilon_grid == std::vector<double>{0.3, 0.1});
  CHECK(spec.q == 4.0);
  CHECK(spec.seed == 16);
  CHECK(spec.model == DriftMode::monte_carlo_table);
  CHECK(spec.leaf_average.replicas == 4);
  CHECK(spec.leaf_average_dt() == 0.002);
  CHECK(build_chart(spec, spec.chart).half_width() == 0.5);
}

TEST_CASE("validation errors carry key paths") {
  CHECK(config_error("[run]\nq = 1\n").find("run.q: q must be ≥ 2") != std::string::npos);
  CHECK(config_error("[run]\nbeta = 0.5\n").find("run.beta") != std::string::npos);
  CHECK(config_error("[run]\nbeta = 0\n").find("run.beta") != std::string::npos);
  CHECK(config_error("[run]\nfoo = 1\n").find("run.foo: unknown key") != std::string::npos);
  CHECK(config_error("[runs]\nq = 2\n").find("runs: unknown section") != std::string::npos);
  CHECK(config_error("colour = red\n").find("colour: unknown key") != std::string::npos);
  CHECK(config_error("[run]\nepsilon = 0.1, 0.2\n").find("run.epsilon") != std::string::npos);
  CHECK(config_error("[run]\nepsilon = 1.5\n").find("run.epsilon") != std::string::npos);
  CHECK(config_error("[run]\nn_paths = ten\n").find("run.n_paths") != std::string::npos);
  CHECK(config_error("[run]\nn_paths = -3\n").find("run.n_paths") != std::string::npos);
  CHECK(config_error("[run]\ndt = 0.1\n").find("run.dt") != std::string::npos);
  CHECK(config_error("chart = klein\n").find("chart") != std::string::npos);
  CHECK(config_error("[run]\nmodel = magic\n").find("run.model") != std::string::npos);
  CHECK_FALSE(config_error("[run\nq = 2\n").empty());
  CHECK_THROWS_AS(load_spec("/nonexistent/folavg.ini"), ConfigError);
  CHECK_THROWS_AS(build_chart(parse_spec("[sphere]\nhalf_width = 1.5\n"), ChartKind::sphere_radial), ConfigError);
}

}

TEST_SUITE("experiments") {

TEST_CASE("sphere convergence study is at integrator level") {
  auto spec = parse_spec("chart = sphere\n");
  const auto report = run_convergence(spec, 1);
  REQUIRE(report.rows.size() == 4);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    CHECK(r.status == "ok");
    CHECK(r.m_q >= 0.0);
    CHECK(r.m_q <= 1e-2);
    CHECK(r.exit_fraction == 0.0);
    if (i > 0) {
      CHECK(r.epsilon < report.rows[i - 1].epsilon);
      const auto& prev = report.rows[i - 1];
      CHECK(r.m_q <= prev.m_q + 2.0 * std::hypot(r.std_error, prev.std_error));
    }
  }
  CHECK(report.overlay_c >= 0.0);
}

TEST_CASE("torus M_2 is stable under reseeding") {
  auto spec = parse_spec("chart = torus\n[run]\nepsilon = 0.1\nn_paths = 400\n");
  const auto first = run_convergence(spec, 1);
  spec.seed = 987654321;
  const auto second = run_convergence(spec, 1);
  const auto& a = first.rows.at(0);
  const auto& b = second.rows.at(0);
  MESSAGE("M_2 " << a.m_q << " +- " << a.std_error << " vs " << b.m_q << " +- " << b.std_error);
  CHECK(a.m_q != b.m_q);
  CHECK(std::abs(a.m_q - b.m_q) <= 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("genus-2: the raw drift deviates more than the normalized drift") {
  const auto spec = parse_spec("chart = genus2\n[run]\nn_paths = 100\nhorizon = 8e-4\n");
  const auto chart = build_chart(spec, spec.chart);
  const auto raw = run_convergence(spec, chart, build_model(spec, chart, DriftMode::gauss_bonnet_raw, 1), 1);
  const auto norm = run_convergence(spec, chart, build_model(spec, chart, DriftMode::gauss_bonnet_normalized, 1), 1);
  REQUIRE(raw.rows.size() == norm.rows.size());
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    CAPTURE(raw.rows[i].epsilon);
    CHECK(raw.rows[i].m_q > norm.rows[i].m_q);
  }
}

TEST_CASE("exited paths are frozen, never extrapolated") {
  const auto spec = parse_spec("chart = sphere\n[sphere]\nhalf_width = 0.3\n[run]\nepsilon = 0.1\nn_paths = 20\n");
  std::vector<PathDump> dump;
  const auto report = run_convergence(spec, 1, &dump);
  CHECK(report.rows[0].exit_fraction == 1.0);
  CHECK(report.rows[0].eval_time == doctest::Approx((1.3 * 1.3 * 1.3 - 1.0) / 3.0).epsilon(1e-9));
  REQUIRE(dump.size() == 1);
  for (const auto& p : dump[0].paths) {
    REQUIRE(p.exited);
    for (std::size_t j = 0; j < p.slow_times.size(); ++j) {
      if (p.slow_times[j] > p.exit_slow_time) CHECK(p.vertical[j] == p.vertical.back());
    }
  }
}

TEST_CASE("bootstrap error") {
  std::vector<double> xs;
  for (int i = 0; i < 400; ++i) xs.push_back(0.01 * (i % 17));
  const double a = bootstrap_moment_error(xs, 2.0, 200, 5);
  CHECK(a > 0.0);
  CHECK(a == bootstrap_moment_error(xs, 2.0, 200, 5));
  CHECK(bootstrap_moment_error(std::vector<double>(50, 0.3), 2.0, 200, 5) == doctest::Approx(0.0));
}

TEST_CASE("exit-time study") {
  SUBCASE("zero drift gives the infinite sentinel") {
    const auto spec = parse_spec("chart = torus\n[torus]\nhalf_width = 0.3\n[run]\nepsilon = 0.05\ngamma = 0.05\n");
    const auto report = run_exit_time(spec, 1);
    CHECK(report.sentinel);
    CHECK(std::isinf(report.t_gamma));
    CHECK(report.rows.at(0).probability == 0.0);
    CHECK(report.rows.at(0).status == "sentinel");
  }
  SUBCASE("sphere T_gamma matches the inverse of the radial law") {
    const auto spec = parse_spec(
        "chart = sphere\n[sphere]\nhalf_width = 0.3\n[run]\nepsilon = 0.05, 0.02\ngamma = 0.05\nn_paths = 100\n");
    const auto report = run_exit_time(spec, 1);
    CHECK_FALSE(report.sentinel);
    CHECK(report.t_gamma == doctest::Approx((1.25 * 1.25 * 1.25 - 1.0) / 3.0).epsilon(1e-9));
    for (const auto& r : report.rows) {
      CHECK(r.n_paths == 100);
      CHECK(r.probability == 0.0);
      CHECK(r.wilson_low == 0.0);
      CHECK(r.wilson_high > 0.0);
      CHECK(r.wilson_high < 0.05);
    }
  }
  CHECK_THROWS_AS(run_exit_time(parse_spec("[sphere]\nhalf_width = 0.3\n[run]\ngamma = 0.3\n"), 1), ConfigError);
}

TEST_CASE("Wilson interval") {
  const auto ci = wilson_interval(5, 100);
  CHECK(ci.low == doctest::Approx(0.021544).epsilon(1e-4));
  CHECK(ci.high == doctest::Approx(0.111750).epsilon(1e-4));
  CHECK(wilson_interval(0, 10).low == 0.0);
  CHECK(wilson_interval(10, 10).high == 1.0);
}

TEST_CASE("path slope") {
  PathSample p;
  for (int j = 0; j <= 10; ++j) {
    p.slow_times.push_back(0.1 * j);
    p.vertical.push_back(0.3 * 0.1 * j);
  }
  CHECK(path_slope(p) == doctest::Approx(0.3));
  p.exited = true;
  p.exit_slow_time = 0.55;
  for (int j = 6; j <= 10; ++j) p.vertical[j] = 0.3 * 0.55;
  CHECK(path_slope(p) == doctest::Approx(0.3));
}

TEST_CASE("topology rows for sphere and torus") {
  const auto spec = parse_spec("[run]\nn_paths = 100\n[leaf_average]\nsamples = 100000\n");
  const auto sphere = run_topology_chart(spec, ChartKind::sphere_radial, 1);
  CHECK(sphere.verdict == '+');
  CHECK(sphere.mean_slope > 0.0);
  CHECK(sphere.euler_characteristic == 2);
  CHECK(sphere.gauss_bonnet == doctest::Approx(4.0 * M_PI));
  const auto torus = run_topology_chart(spec, ChartKind::torus_offset, 1);
  CHECK(torus.verdict == '0');
  CHECK(torus.ci_low <= 0.0);
  CHECK(torus.ci_high >= 0.0);
}

TEST_CASE("leaf-average rows") {
  const auto spec = parse_spec("[leaf_average]\nsamples = 10000\ntime = 2\nreplicas = 4\n");
  const auto report = run_leaf_average(spec, 1);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].v == doctest::Approx(-0.45));
  for (const auto& r : report.rows) {
    CHECK(r.area.value == doctest::Approx(4.0 * M_PI * (1 + r.v) * (1 + r.v)));
    CHECK(r.curvature_integral.value == doctest::Approx(4.0 * M_PI));
    CHECK(r.q_raw == doctest::Approx(4.0 * M_PI));
    CHECK(r.q_normalized == doctest::Approx(1.0 / ((1 + r.v) * (1 + r.v))));
    CHECK(r.q_ergodic == doctest::Approx(r.q_normalized).epsilon(1e-9));
  }
}

TEST_CASE("identical configs give byte-identical CSV for any worker count") {
  const auto spec = parse_spec("chart = torus\n[run]\nepsilon = 0.2, 0.1\nn_paths = 24\n");
  const std::string one = csv_text(to_table(run_convergence(spec, 1)));
  const std::string many = csv_text(to_table(run_convergence(spec, 4)));
  CHECK(one == many);
  const auto g2 = parse_spec("chart = genus2\n[run]\nepsilon = 0.1\nn_paths = 8\nhorizon = 5e-4\n");
  CHECK(csv_text(to_table(run_convergence(g2, 1))) == csv_text(to_table(run_convergence(g2, 3))));
}

}

TEST_SUITE("csv reports") {

TEST_CASE("number formatting") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(2.0) == "2");
  CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_real(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_real(std::nan("")) == "nan");
  CHECK(std::isinf(parse_real("inf")));
  CHECK_THROWS(parse_real("1.0x"));
  std::mt19937_64 engine(3);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::bit_cast<double>(engine());
    if (!std::isfinite(x)) continue;
    CHECK(same_bits(parse_real(format_real(x)), x));
  }
  CHECK(same_bits(parse_real(format_real(5e-324)), 5e-324));
  CHECK(same_bits(parse_real(format_real(-0.0)), -0.0));
}

TEST_CASE("empty report writes only the header") {
  const std::string text = csv_text(to_table(ConvergenceReport{}));
  CHECK(text == "epsilon,M_q,stderr,exit_fraction,n_paths,eval_time,overlay,overlay_C,q,beta,chart,model,status\n");
  CHECK(csv_text(to_table(std::vector<TopologyRow>{})).find('\n') == csv_text(to_table(std::vector<TopologyRow>{})).size() - 1);
}

TEST_CASE("convergence report round trip") {
  ConvergenceReport report;
  report.chart = ChartKind::torus_offset;
  report.q = 3.0;
  report.beta = 0.125;
  report.overlay_c = 0.1234567890123456789;
  for (double eps : {0.2, 0.1, 0.05, 0.02}) {
    ConvergenceRow r;
    r.epsilon = eps;
    r.m_q = std::sqrt(eps) / 3.0;
    r.std_error = eps * 1e-3 / 7.0;
    r.exit_fraction = eps / 11.0;
    r.n_paths = 400;
    r.eval_time = 1.0;
    r.overlay = std::log(1 / eps);
    report.rows.push_back(r);
  }
  report.rows[2].status = "failed: projection, \"did not converge\"";
  report.rows[2].m_q = std::nan("");

  const CsvTable table = to_table(report);
  CHECK(table.rows.size() == 4);
  CHECK(std::vector<std::string>(table.header.begin(), table.header.begin() + 4) ==
        std::vector<std::string>{"epsilon", "M_q", "stderr", "exit_fraction"});

  std::istringstream in(csv_text(table));
  const auto back = convergence_from_table(read_csv(in));
  CHECK(back.chart == report.chart);
  CHECK(same_bits(back.overlay_c, report.overlay_c));
  CHECK(back.q == report.q);
  REQUIRE(back.rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(same_bits(back.rows[i].epsilon, report.rows[i].epsilon));
    CHECK(same_bits(back.rows[i].std_error, report.rows[i].std_error));
    CHECK(same_bits(back.rows[i].exit_fraction, report.rows[i].exit_fraction));
    CHECK(same_bits(back.rows[i].overlay, report.rows[i].overlay));
    CHECK(back.rows[i].status == report.rows[i].status);
    if (i != 2) CHECK(same_bits(back.rows[i].m_q, report.rows[i].m_q));
  }
  CHECK(std::isnan(back.rows[2].m_q));
}

TEST_CASE("other report round trips") {
  ExitTimeReport exit;
  exit.gamma = 0.05;
  exit.c1 = 0.1;
  exit.c2 = 0.0;
  exit.rows.push_back({0.05, 0.0, 0.0, 0.0, 0, 0, 0.0, "sentinel"});
  exit.sentinel = true;
  std::istringstream e_in(csv_text(to_table(exit)));
  const auto e_back = exit_time_from_table(read_csv(e_in));
  CHECK(std::isinf(e_back.t_gamma));
  CHECK(e_back.sentinel);
  CHECK(csv_text(to_table(e_back)) == csv_text(to_table(exit)));

  TopologyRow row;
  row.chart = ChartKind::genus2_offset;
  row.euler_characteristic = -2;
  row.mean_slope = -3.3;
  row.verdict = '-';
  std::istringstream t_in(csv_text(to_table({row})));
  const auto t_back = topology_from_table(read_csv(t_in));
  CHECK(t_back.at(0).verdict == '-');
  CHECK(t_back.at(0).euler_characteristic == -2);
  CHECK(csv_text(to_table(t_back)) == csv_text(to_table({row})));

  LeafAverageReport leaf;
  leaf.chart = ChartKind::torus_offset;
  leaf.rows.push_back({});
  leaf.rows[0].v = 0.15;
  std::istringstream l_in(csv_text(to_table(leaf)));
  CHECK(csv_text(to_table(leaf_average_from_table(read_csv(l_in)))) == csv_text(to_table(leaf)));
}

TEST_CASE("file output") {
  const auto dir = std::filesystem::temp_directory_path() / "folavg_csv_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / report_file_name("converge", ChartKind::sphere_radial)).string();
  CHECK(path.ends_with("converge_sphere.csv"));
  emit_csv(to_table(ConvergenceReport{}), path);
  CHECK(std::filesystem::file_size(path) > 0);
  std::filesystem::remove_all(dir);

  try {
    emit_csv(to_table(ConvergenceReport{}), "/nonexistent-dir/x.csv");
    FAIL("expected an I/O error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/nonexistent-dir/x.csv") != std::string::npos);
  }
}

}
