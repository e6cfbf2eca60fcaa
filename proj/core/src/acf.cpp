#include "vamh/acf.hpp"

#include <algorithm>
#include <complex>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "vamh/errors.hpp"

namespace vamh {

namespace {

// Autocovariances gamma(0..max_lag).
std::vector<double> autocovariance(std::span<const double> g, std::size_t max_lag) {
  const std::size_t n = g.size();
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;

  std::vector<double> padded(len, 0.0);
  for (std::size_t t = 0; t < n; ++t) padded[t] = g[t] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& z : freq) z = std::norm(z);
  std::vector<double> back;
  fft.inv(back, freq);

  std::vector<double> gamma(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) gamma[k] = back[k] / static_cast<double>(n);
  return gamma;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> g, std::size_t max_lag) {
  if (g.size() < 2 || max_lag >= g.size()) {
    throw DomainError("trace must be longer than max_lag");
  }
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  if (*lo == *hi) throw DomainError("autocorrelation of a constant trace is undefined");
  auto gamma = autocovariance(g, max_lag);
  const double g0 = gamma[0];
  for (auto& v : gamma) v /= g0;
  gamma[0] = 1.0;
  return gamma;
}

double integrated_autocorr_time(std::span<const double> g) {
  const auto rho = autocorrelation(g, g.size() - 1);
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < rho.size(); ++k) {
    double pair = rho[2 * k] + rho[2 * k + 1];
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  return tau;
}

std::vector<TracePoint> trace_window(std::span<const double> g, std::size_t first,
                                     std::size_t last) {
  if (first == 0 || first > last) throw ConfigError("window must satisfy 1 <= first <= last");
  std::vector<TracePoint> out;
  for (std::size_t s = first; s <= std::min(last, g.size()); ++s) {
    out.push_back({s, g[s - 1]});
  }
  return out;
}

}  // namespace vamh
