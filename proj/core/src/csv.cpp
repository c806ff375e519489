#include "plwk/harness/csv.hpp"

#include "plwk/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace plwk::harness {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ptr);
}

std::string run_csv_string(const RunRecord& record) {
  std::ostringstream out;
  out << "cycle,error_ref,residual_sum,residual_max,skipped_steps,"
         "cum_pde_solves\n";
  for (const CycleRow& row : record.cycles) {
    out << row.cycle << ',' << format_double(row.error_ref) << ','
        << format_double(row.residual_sum) << ','
        << format_double(row.residual_max) << ',' << row.skipped_steps << ','
        << row.cum_pde_solves << '\n';
  }
  return out.str();
}

void write_run_csv(const std::filesystem::path& path,
                   const RunRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    raise(ErrorCode::invalid_config, "cannot open " + path.string());
  }
  out << run_csv_string(record);
}

}  // namespace plwk::harness
