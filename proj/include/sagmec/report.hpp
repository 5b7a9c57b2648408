#pragma once

#include <iosfwd>
#include <string>

namespace sagmec {

/// Aggregates every summary.kv under run_root: median/IQR per policy, plus
/// plot-ready energy-vs-users and latency-vs-users series. Writes table.txt
/// and the CSV series into out_dir and prints the table to `table_out`.
void report(const std::string& run_root, const std::string& out_dir, std::ostream& table_out);

}  // namespace sagmec
