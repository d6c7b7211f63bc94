// folavg: convergence, exit-time, topology and leaf-average studies of
// transversally perturbed foliated Brownian motion.

#include "folavg/experiments.hpp"
#include "folavg/parallel.hpp"
#include "folavg/report_csv.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = folavg::default_thread_count();
  bool dump_paths = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "INI configuration file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "output directory; CSV goes to stdout when omitted");
  cmd->add_option("--seed", opts.seed, "master seed, overrides run.seed");
  cmd->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
}

folavg::ExperimentSpec load(const CommonOptions& opts) {
  folavg::ExperimentSpec spec = opts.config.empty() ? folavg::parse_spec("") : folavg::load_spec(opts.config);
  if (opts.seed) spec.seed = *opts.seed;
  return spec;
}

void emit(const folavg::CsvTable& table, const CommonOptions& opts, const std::string& file) {
  if (opts.out.empty()) {
    folavg::write_csv(table, std::cout);
    std::cout.flush();
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(opts.out, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + opts.out + "': " + ec.message());
  const std::string path = (std::filesystem::path(opts.out) / file).string();
  folavg::emit_csv(table, path);
  std::cerr << "wrote " << path << "\n";
}

int run_converge(const CommonOptions& opts) {
  const auto spec = load(opts);
  std::vector<folavg::PathDump> dump;
  const auto report = folavg::run_convergence(spec, opts.threads, opts.dump_paths ? &dump : nullptr);
  emit(folavg::to_table(report), opts, folavg::report_file_name("converge", spec.chart));
  if (opts.dump_paths) {
    if (opts.out.empty()) {
      std::cerr << "--dump-paths needs --out; path records not written\n";
    } else {
      emit(folavg::to_table(dump), opts,
           "converge_" + std::string(folavg::chart_kind_name(spec.chart)) + "_paths.csv");
    }
  }
  std::size_t failed = 0;
  for (const auto& r : report.rows) {
    if (r.status != "ok") {
      ++failed;
      std::cerr << "epsilon " << r.epsilon << ": " << r.status << "\n";
    }
  }
  std::cerr << "overlay C = " << report.overlay_c << "\n";
  return failed == report.rows.size() && failed > 0 ? kExitRuntime : 0;
}

int run_exit(const CommonOptions& opts) {
  const auto spec = load(opts);
  const auto report = folavg::run_exit_time(spec, opts.threads);
  emit(folavg::to_table(report), opts, folavg::report_file_name("exit-time", spec.chart));
  std::cerr << "T_gamma = " << folavg::format_real(report.t_gamma) << (report.sentinel ? " (never reached)" : "")
            << "\n";
  return 0;
}

int run_topology(const CommonOptions& opts) {
  const auto spec = load(opts);
  std::vector<folavg::TopologyRow> rows;
  for (auto kind : {folavg::ChartKind::sphere_radial, folavg::ChartKind::torus_offset,
                    folavg::ChartKind::genus2_offset}) {
    const auto row = folavg::run_topology_chart(spec, kind, opts.threads);
    std::cerr << folavg::chart_kind_name(kind) << ": slope " << row.mean_slope << " +- " << row.slope_std_error
              << " verdict " << row.verdict << "\n";
    if (!opts.out.empty()) emit(folavg::to_table({row}), opts, folavg::report_file_name("topology", kind));
    rows.push_back(row);
  }
  if (opts.out.empty()) emit(folavg::to_table(rows), opts, "");
  return 0;
}

int run_leaf_average(const CommonOptions& opts) {
  const auto spec = load(opts);
  const auto report = folavg::run_leaf_average(spec, opts.threads);
  emit(folavg::to_table(report), opts, folavg::report_file_name("leaf-average", spec.chart));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaging studies for transversally perturbed foliated Brownian motion"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* converge = app.add_subcommand("converge", "sup-deviation moments against the averaged ODE");
  auto* exit_time = app.add_subcommand("exit-time", "early-exit probability before T_gamma");
  auto* topology = app.add_subcommand("topology", "transversal slope sign on sphere, torus and genus-2");
  auto* leaf_average = app.add_subcommand("leaf-average", "leaf areas, curvature integrals and ergodic drift");
  for (auto* cmd : {converge, exit_time, topology, leaf_average}) add_common(cmd, opts);
  converge->add_flag("--dump-paths", opts.dump_paths, "also write every recorded path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*converge) return run_converge(opts);
    if (*exit_time) return run_exit(opts);
    if (*topology) return run_topology(opts);
    if (*leaf_average) return run_leaf_average(opts);
  } catch (const folavg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
