#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vamh {

/// Sample autocorrelation rho(k) = gamma(k) / gamma(0) for k = 0..max_lag,
/// with gamma(k) = n^-1 sum_t (g_t - gbar)(g_{t+k} - gbar), via FFT.
/// Throws DomainError for a constant trace or max_lag >= n.
std::vector<double> autocorrelation(std::span<const double> g, std::size_t max_lag);

/// Integrated autocorrelation time 1 + 2 sum_k rho(k), truncated by Geyer's
/// initial monotone sequence rule.
double integrated_autocorr_time(std::span<const double> g);

struct TracePoint {
  std::size_t step = 0;  // 1-based
  double g = 0.0;
};

/// Rows first..last (1-based, inclusive) clipped to the trace.
std::vector<TracePoint> trace_window(std::span<const double> g, std::size_t first = 1001,
                                     std::size_t last = 2000);

}  // namespace vamh
