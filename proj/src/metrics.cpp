#include "gdtm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace gdtm {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min_len) {
  require(a.size() == b.size(), ErrorCode::shape, "metric series differ in length");
  require(a.size() >= min_len, ErrorCode::invalid_size, "metric series too short");
}

double squared_error(std::span<const double> t, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += (t[i] - p[i]) * (t[i] - p[i]);
  return s;
}

bool all_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

double zero_denominator(std::span<const double> prediction) {
  return all_zero(prediction) ? 0.0 : std::numeric_limits<double>::infinity();
}

double mean(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size()); }

double r_squared_about(std::span<const double> t, std::span<const double> p, double centre) {
  const double sse = squared_error(t, p);
  double den = 0.0;
  for (double v : t) den += (v - centre) * (v - centre);
  if (den == 0.0) {
    return sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }
  return 1.0 - sse / den;
}

}  // namespace

double nmse(std::span<const double> truth, std::span<const double> prediction) {
  check_lengths(truth, prediction, 1);
  double den = 0.0;
  for (double v : truth) den += v * v;
  if (den == 0.0) return zero_denominator(prediction);
  return squared_error(truth, prediction) / den;
}

double r_squared(std::span<const double> truth, std::span<const double> prediction) {
  check_lengths(truth, prediction, 2);
  return r_squared_about(truth, prediction, mean(prediction));
}

double r_squared_conventional(std::span<const double> truth, std::span<const double> prediction) {
  check_lengths(truth, prediction, 2);
  return r_squared_about(truth, prediction, mean(truth));
}

double peak_error(std::span<const double> truth, std::span<const double> prediction) {
  check_lengths(truth, prediction, 1);
  double peak = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    peak = std::max(peak, std::abs(truth[i]));
    err = std::max(err, std::abs(truth[i] - prediction[i]));
  }
  if (peak == 0.0) return zero_denominator(prediction);
  return err / peak * 100.0;
}

double mac(std::span<const double> phi_i, std::span<const double> phi_j) {
  check_lengths(phi_i, phi_j, 1);
  double ij = 0.0;
  double ii = 0.0;
  double jj = 0.0;
  for (std::size_t k = 0; k < phi_i.size(); ++k) {
    ij += phi_i[k] * phi_j[k];
    ii += phi_i[k] * phi_i[k];
    jj += phi_j[k] * phi_j[k];
  }
  require(ii > 0.0 && jj > 0.0, ErrorCode::invalid_parameter, "MAC needs nonzero mode shapes");
  return std::clamp(ij * ij / (ii * jj), 0.0, 1.0);
}

MetricReport compute_metrics(std::span<const double> truth, std::span<const double> prediction) {
  MetricReport r;
  r.nmse = nmse(truth, prediction);
  r.r_squared = truth.size() >= 2 ? r_squared(truth, prediction) : (squared_error(truth, prediction) == 0.0 ? 1.0 : 0.0);
  r.peak_error_pct = peak_error(truth, prediction);
  r.sample_count = truth.size();
  return r;
}

std::string metric_csv_header() { return "nmse,r2,pe_pct,n"; }

std::string metric_csv_row(const MetricReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu", report.nmse, report.r_squared, report.peak_error_pct,
                report.sample_count);
  return buf;
}

}  // namespace gdtm
