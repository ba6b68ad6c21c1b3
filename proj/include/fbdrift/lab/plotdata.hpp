#pragma once

#include "fbdrift/lab/records.hpp"

#include <string>
#include <vector>

namespace fbd::lab {

const std::vector<std::string>& plot_views();
std::vector<std::string> view_columns(const std::string& view);

/// Per-figure tables from an experiment directory (or its records.jsonl).
/// Views split by moment exponent yield one table per r, named
/// "<view>_r<r>". Missing or empty source data gives a single header-only
/// table. Throws InvalidArgument for an unknown view.
std::vector<Table> emit_plotdata(const std::string& records_path, const std::string& view);

}  // namespace fbd::lab
