#pragma once

#include "plwk/records.hpp"

#include <filesystem>
#include <string>

namespace plwk::harness {

// Shortest exactly round-tripping decimal representation, so re-running the
// same configuration reproduces byte-identical files.
std::string format_double(double v);

// Schema: cycle,error_ref,residual_sum,residual_max,skipped_steps,cum_pde_solves
// One row per completed cycle plus the cycle-0 row. skipped_steps in row c
// counts the omega == 0 steps of the cycle that ended at x_{cN}.
std::string run_csv_string(const RunRecord& record);

void write_run_csv(const std::filesystem::path& path, const RunRecord& record);

}  // namespace plwk::harness
