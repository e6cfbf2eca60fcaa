#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vamh/acf.hpp"
#include "vamh/chain.hpp"
#include "vamh/regen.hpp"

namespace vamh {

/// "# config=<config> seed=<seed>" followed by a newline. Newlines inside
/// config are replaced by spaces so the header stays on one line.
void write_comment_header(std::ostream& os, std::string_view config,
                          std::uint64_t seed);

/// step,g,accepted_any,acc_1..acc_d
void write_trace_csv(std::ostream& os, const ChainRun& run);
/// step,g,delta,all_accepted
void write_split_csv(std::ostream& os, const SplitTrace& trace);
/// tour,N,S
void write_tour_csv(std::ostream& os, std::span<const Tour> tours);
/// lag,acf
void write_acf_csv(std::ostream& os, std::span<const double> acf);
/// step,g
void write_window_csv(std::ostream& os, std::span<const TracePoint> window);

/// Reads one named column from a CSV with a header row, skipping lines
/// that start with '#'. Throws ConfigError if the column is missing or a
/// value fails to parse.
std::vector<double> read_csv_column(std::istream& is, std::string_view column);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace vamh
