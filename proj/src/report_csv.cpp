#include "folavg/report_csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace folavg {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return x;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("no CSV column '" + std::string(name) + "'");
}

namespace {

void write_field(std::ostream& out, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out << f;
    return;
  }
  out << '"';
  for (char c : f) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    write_field(out, row[i]);
  }
  out << '\n';
}

// Splits one record; quoted fields may span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  for (int ch = in.get(); ch != std::char_traits<char>::eof(); ch = in.get()) {
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::string count_field(std::size_t n) { return std::to_string(n); }

std::size_t parse_count(const std::string& s) {
  std::size_t n = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("not a count: '" + s + "'");
  return n;
}

// Row accessor by column name.
struct RowView {
  const CsvTable& table;
  const std::vector<std::string>& row;
  const std::string& at(std::string_view name) const {
    const std::size_t i = table.column(name);
    if (i >= row.size()) throw std::invalid_argument("short CSV row");
    return row[i];
  }
  double real(std::string_view name) const { return parse_real(at(name)); }
  std::size_t count(std::string_view name) const { return parse_count(at(name)); }
};

}  // namespace

void write_csv(const CsvTable& table, std::ostream& out) {
  write_row(out, table.header);
  for (const auto& r : table.rows) write_row(out, r);
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  if (!read_record(in, t.header)) throw std::invalid_argument("empty CSV input: missing header");
  std::vector<std::string> fields;
  while (read_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != t.header.size()) throw std::invalid_argument("CSV row width differs from header");
    t.rows.push_back(fields);
  }
  return t;
}

CsvTable to_table(const ConvergenceReport& report) {
  CsvTable t;
  t.header = {"epsilon", "M_q", "stderr", "exit_fraction", "n_paths", "eval_time", "overlay",
              "overlay_C", "q", "beta", "chart", "model", "status"};
  for (const auto& r : report.rows) {
    t.rows.push_back({format_real(r.epsilon), format_real(r.m_q), format_real(r.std_error),
                      format_real(r.exit_fraction), count_field(r.n_paths), format_real(r.eval_time),
                      format_real(r.overlay), format_real(report.overlay_c), format_real(report.q),
                      format_real(report.beta), std::string(chart_kind_name(report.chart)),
                      std::string(drift_mode_name(report.mode)), r.status});
  }
  return t;
}

ConvergenceReport convergence_from_table(const CsvTable& table) {
  ConvergenceReport report;
  for (const auto& raw : table.rows) {
    const RowView r{table, raw};
    ConvergenceRow row;
    row.epsilon = r.real("epsilon");
    row.m_q = r.real("M_q");
    row.std_error = r.real("stderr");
    row.exit_fraction = r.real("exit_fraction");
    row.n_paths = r.count("n_paths");
    row.eval_time = r.real("eval_time");
    row.overlay = r.real("overlay");
    row.status = r.at("status");
    report.overlay_c = r.real("overlay_C");
    report.q = r.real("q");
    report.beta = r.real("beta");
    report.chart = parse_chart_kind(r.at("chart"));
    report.mode = parse_drift_mode(r.at("model"));
    report.rows.push_back(std::move(row));
  }
  return report;
}

CsvTable to_table(const ExitTimeReport& report) {
  CsvTable t;
  t.header = {"epsilon", "probability", "wilson_low", "wilson_high", "n_early", "n_paths", "T_gamma", "sentinel",
              "gamma", "bound_overlay", "C1", "C2", "chart", "model", "status"};
  for (const auto& r : report.rows) {
    t.rows.push_back({format_real(r.epsilon), format_real(r.probability), format_real(r.wilson_low),
                      format_real(r.wilson_high), count_field(r.n_early), count_field(r.n_paths),
                      format_real(report.t_gamma), report.sentinel ? "1" : "0", format_real(report.gamma),
                      format_real(r.bound_overlay), format_real(report.c1), format_real(report.c2),
                      std::string(chart_kind_name(report.chart)), std::string(drift_mode_name(report.mode)),
                      r.status});
  }
  return t;
}

ExitTimeReport exit_time_from_table(const CsvTable& table) {
  ExitTimeReport report;
  for (const auto& raw : table.rows) {
    const RowView r{table, raw};
    ExitTimeRow row;
    row.epsilon = r.real("epsilon");
    row.probability = r.real("probability");
    row.wilson_low = r.real("wilson_low");
    row.wilson_high = r.real("wilson_high");
    row.n_early = r.count("n_early");
    row.n_paths = r.count("n_paths");
    row.bound_overlay = r.real("bound_overlay");
    row.status = r.at("status");
    report.t_gamma = r.real("T_gamma");
    report.sentinel = r.at("sentinel") == "1";
    report.gamma = r.real("gamma");
    report.c1 = r.real("C1");
    report.c2 = r.real("C2");
    report.chart = parse_chart_kind(r.at("chart"));
    report.mode = parse_drift_mode(r.at("model"));
    report.rows.push_back(std::move(row));
  }
  return report;
}

CsvTable to_table(const std::vector<TopologyRow>& rows) {
  CsvTable t;
  t.header = {"chart", "chi", "gauss_bonnet", "gauss_bonnet_stderr", "mean_slope", "slope_stderr",
              "ci_low", "ci_high", "verdict", "n_paths", "epsilon", "horizon"};
  for (const auto& r : rows) {
    t.rows.push_back({std::string(chart_kind_name(r.chart)), std::to_string(r.euler_characteristic),
                      format_real(r.gauss_bonnet), format_real(r.gauss_bonnet_std_error), format_real(r.mean_slope),
                      format_real(r.slope_std_error), format_real(r.ci_low), format_real(r.ci_high),
                      std::string(1, r.verdict), count_field(r.n_paths), format_real(r.epsilon),
                      format_real(r.horizon)});
  }
  return t;
}

std::vector<TopologyRow> topology_from_table(const CsvTable& table) {
  std::vector<TopologyRow> rows;
  for (const auto& raw : table.rows) {
    const RowView r{table, raw};
    TopologyRow row;
    row.chart = parse_chart_kind(r.at("chart"));
    row.euler_characteristic = std::stoi(r.at("chi"));
    row.gauss_bonnet = r.real("gauss_bonnet");
    row.gauss_bonnet_std_error = r.real("gauss_bonnet_stderr");
    row.mean_slope = r.real("mean_slope");
    row.slope_std_error = r.real("slope_stderr");
    row.ci_low = r.real("ci_low");
    row.ci_high = r.real("ci_high");
    const std::string& verdict = r.at("verdict");
    if (verdict.size() != 1) throw std::invalid_argument("bad verdict '" + verdict + "'");
    row.verdict = verdict[0];
    row.n_paths = r.count("n_paths");
    row.epsilon = r.real("epsilon");
    row.horizon = r.real("horizon");
    rows.push_back(row);
  }
  return rows;
}

CsvTable to_table(const LeafAverageReport& report) {
  CsvTable t;
  t.header = {"chart", "v", "area", "area_stderr", "curvature_integral", "curvature_stderr", "two_pi_chi",
              "q_raw", "q_normalized", "q_normalized_stderr", "q_ergodic", "q_ergodic_stderr", "z"};
  for (const auto& r : report.rows) {
    t.rows.push_back({std::string(chart_kind_name(report.chart)), format_real(r.v), format_real(r.area.value),
                      format_real(r.area.std_error), format_real(r.curvature_integral.value),
                      format_real(r.curvature_integral.std_error), format_real(r.two_pi_chi), format_real(r.q_raw),
                      format_real(r.q_normalized), format_real(r.q_normalized_std_error), format_real(r.q_ergodic),
                      format_real(r.q_ergodic_std_error), format_real(r.z_score)});
  }
  return t;
}

LeafAverageReport leaf_average_from_table(const CsvTable& table) {
  LeafAverageReport report;
  for (const auto& raw : table.rows) {
    const RowView r{table, raw};
    LeafAverageRow row;
    report.chart = parse_chart_kind(r.at("chart"));
    row.v = r.real("v");
    row.area = {r.real("area"), r.real("area_stderr")};
    row.curvature_integral = {r.real("curvature_integral"), r.real("curvature_stderr")};
    row.two_pi_chi = r.real("two_pi_chi");
    row.q_raw = r.real("q_raw");
    row.q_normalized = r.real("q_normalized");
    row.q_normalized_std_error = r.real("q_normalized_stderr");
    row.q_ergodic = r.real("q_ergodic");
    row.q_ergodic_std_error = r.real("q_ergodic_stderr");
    row.z_score = r.real("z");
    report.rows.push_back(row);
  }
  return report;
}

CsvTable to_table(const std::vector<PathDump>& dump) {
  CsvTable t;
  t.header = {"epsilon", "path_index", "s", "p", "exited"};
  for (const auto& d : dump) {
    for (std::size_t i = 0; i < d.paths.size(); ++i) {
      const auto& path = d.paths[i];
      for (std::size_t j = 0; j < path.slow_times.size(); ++j) {
        t.rows.push_back({format_real(d.epsilon), count_field(i), format_real(path.slow_times[j]),
                          format_real(path.vertical[j]), path.exited ? "1" : "0"});
      }
    }
  }
  return t;
}

void emit_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(table, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string report_file_name(std::string_view subcommand, ChartKind chart) {
  return std::string(subcommand) + "_" + std::string(chart_kind_name(chart)) + ".csv";
}

}  // namespace folavg
