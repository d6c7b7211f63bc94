#pragma once

#include "folavg/experiments.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace folavg {

/// 17 significant digits, '.' decimal separator; "inf", "-inf", "nan" for
/// non-finite values. parse_real inverts it bit-exactly.
std::string format_real(double x);
double parse_real(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
};

void write_csv(const CsvTable& table, std::ostream& out);
CsvTable read_csv(std::istream& in);

CsvTable to_table(const ConvergenceReport& report);
CsvTable to_table(const ExitTimeReport& report);
CsvTable to_table(const std::vector<TopologyRow>& rows);
CsvTable to_table(const LeafAverageReport& report);
/// One row per (epsilon, path, recorded slow time).
CsvTable to_table(const std::vector<PathDump>& dump);

ConvergenceReport convergence_from_table(const CsvTable& table);
ExitTimeReport exit_time_from_table(const CsvTable& table);
std::vector<TopologyRow> topology_from_table(const CsvTable& table);
LeafAverageReport leaf_average_from_table(const CsvTable& table);

/// Writes the table to `path`. I/O failures throw std::runtime_error naming
/// the path.
void emit_csv(const CsvTable& table, const std::string& path);

/// "<subcommand>_<chartkind>.csv"
std::string report_file_name(std::string_view subcommand, ChartKind chart);

}  // namespace folavg
