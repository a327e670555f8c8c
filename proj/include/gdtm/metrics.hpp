#pragma once

#include "gdtm/common.hpp"

#include <span>
#include <string>

namespace gdtm {

struct MetricReport {
  double nmse = 0.0;
  double r_squared = 1.0;
  double peak_error_pct = 0.0;
  std::size_t sample_count = 0;
};

// Zero-denominator rule: when the truth is identically zero, NMSE and peak
// error are 0 if the prediction is also zero and +infinity otherwise.

/// sum (t - p)^2 / sum t^2
double nmse(std::span<const double> truth, std::span<const double> prediction);

/// 1 - sum (t - p)^2 / sum (t - mean(p))^2. Note the denominator centres the
/// truth on the mean of the *predictions*; r_squared_conventional uses mean(t).
double r_squared(std::span<const double> truth, std::span<const double> prediction);

/// 1 - SSE / sum (t - mean(t))^2.
double r_squared_conventional(std::span<const double> truth, std::span<const double> prediction);

/// max |t - p| / max |t| * 100.
double peak_error(std::span<const double> truth, std::span<const double> prediction);

/// Modal assurance criterion (phi_i . phi_j)^2 / (|phi_i|^2 |phi_j|^2).
double mac(std::span<const double> phi_i, std::span<const double> phi_j);

MetricReport compute_metrics(std::span<const double> truth, std::span<const double> prediction);

/// CSV header `nmse,r2,pe_pct,n`.
std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& report);

}  // namespace gdtm
