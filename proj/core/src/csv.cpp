#include "vamh/csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "vamh/errors.hpp"

namespace vamh {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_comment_header(std::ostream& os, std::string_view config,
                          std::uint64_t seed) {
  std::string flat(config);
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::replace(flat.begin(), flat.end(), '\r', ' ');
  os << "# config=" << flat << " seed=" << seed << '\n';
}

void write_trace_csv(std::ostream& os, const ChainRun& run) {
  os << "step,g,accepted_any";
  for (std::size_t i = 0; i < run.components; ++i) os << ",acc_" << i + 1;
  os << '\n';
  for (std::size_t k = 0; k < run.steps(); ++k) {
    bool any = false;
    for (std::size_t i = 0; i < run.components; ++i) any |= run.accepted_at(k, i);
    os << k + 1 << ',' << format_double(run.g[k]) << ',' << (any ? 1 : 0);
    for (std::size_t i = 0; i < run.components; ++i) {
      os << ',' << (run.accepted_at(k, i) ? 1 : 0);
    }
    os << '\n';
  }
}

void write_split_csv(std::ostream& os, const SplitTrace& trace) {
  os << "step,g,delta,all_accepted\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    os << k + 1 << ',' << format_double(trace.g[k]) << ','
       << int{trace.delta[k]} << ',' << int{trace.all_accepted[k]} << '\n';
  }
}

void write_tour_csv(std::ostream& os, std::span<const Tour> tours) {
  os << "tour,N,S\n";
  for (std::size_t r = 0; r < tours.size(); ++r) {
    os << r + 1 << ',' << tours[r].N << ',' << format_double(tours[r].S) << '\n';
  }
}

void write_acf_csv(std::ostream& os, std::span<const double> acf) {
  os << "lag,acf\n";
  for (std::size_t k = 0; k < acf.size(); ++k) {
    os << k << ',' << format_double(acf[k]) << '\n';
  }
}

void write_window_csv(std::ostream& os, std::span<const TracePoint> window) {
  os << "step,g\n";
  for (const auto& p : window) os << p.step << ',' << format_double(p.g) << '\n';
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::vector<double> read_csv_column(std::istream& is, std::string_view column) {
  std::string line;
  std::size_t index = 0;
  bool have_header = false;
  std::vector<double> out;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      const auto it = std::find_if(fields.begin(), fields.end(),
                                   [&](std::string_view f) { return trim(f) == column; });
      if (it == fields.end()) {
        throw ConfigError("column '" + std::string(column) + "' not found");
      }
      index = static_cast<std::size_t>(it - fields.begin());
      have_header = true;
      continue;
    }
    if (index >= fields.size()) {
      throw ConfigError("line " + std::to_string(line_no) + " is missing column '" +
                        std::string(column) + "'");
    }
    const auto f = trim(fields[index]);
    double v = 0.0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": cannot parse '" +
                        std::string(f) + "'");
    }
    out.push_back(v);
  }
  if (!have_header) throw ConfigError("CSV has no header row");
  return out;
}

}  // namespace vamh
