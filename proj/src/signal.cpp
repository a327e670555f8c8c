#include "gdtm/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

namespace gdtm {

namespace {

/// Real-to-complex FFT of a fixed length, reusing one plan.
class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n), fftw_free),
        out_(fftw_alloc_complex(n / 2 + 1), fftw_free) {
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    require(plan_ != nullptr, ErrorCode::numerical, "FFT plan creation failed");
  }
  ~RealFft() { fftw_destroy_plan(plan_); }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t bins() const { return n_ / 2 + 1; }
  double* input() { return in_.get(); }
  void execute() { fftw_execute(plan_); }
  std::complex<double> bin(std::size_t k) const { return {out_.get()[k][0], out_.get()[k][1]}; }

 private:
  std::size_t n_;
  std::unique_ptr<double, decltype(&fftw_free)> in_;
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n));
  }
  return w;
}

PowerSpectrum psd(std::span<const double> series, double fs, std::size_t segment_length, double overlap_fraction) {
  require(fs > 0.0, ErrorCode::invalid_parameter, "sampling frequency must be positive");
  require(segment_length >= 2, ErrorCode::invalid_parameter, "segment length must be at least 2");
  require(overlap_fraction >= 0.0 && overlap_fraction < 1.0, ErrorCode::invalid_parameter,
          "overlap fraction must lie in [0, 1)");
  require(series.size() >= segment_length, ErrorCode::invalid_size, "series shorter than one PSD segment");
  const auto overlap = static_cast<std::size_t>(std::floor(overlap_fraction * double(segment_length)));
  const std::size_t step = segment_length - overlap;
  const auto window = hann_window(segment_length);
  double window_power = 0.0;
  for (double w : window) window_power += w * w;

  RealFft fft(segment_length);
  PowerSpectrum out;
  out.power.assign(fft.bins(), 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + segment_length <= series.size(); start += step, ++segments) {
    double mean = 0.0;
    for (std::size_t i = 0; i < segment_length; ++i) mean += series[start + i];
    mean /= double(segment_length);
    for (std::size_t i = 0; i < segment_length; ++i) fft.input()[i] = (series[start + i] - mean) * window[i];
    fft.execute();
    for (std::size_t k = 0; k < fft.bins(); ++k) out.power[k] += std::norm(fft.bin(k));
  }
  const double scale = 1.0 / (fs * window_power * double(segments));
  for (std::size_t k = 0; k < fft.bins(); ++k) {
    const bool edge = k == 0 || (segment_length % 2 == 0 && k == fft.bins() - 1);
    out.power[k] *= edge ? scale : 2.0 * scale;
    out.frequencies.push_back(double(k) * fs / double(segment_length));
  }
  return out;
}

Spectrogram stft(std::span<const double> series, double fs, std::size_t window_length, std::size_t hop) {
  require(fs > 0.0, ErrorCode::invalid_parameter, "sampling frequency must be positive");
  require(window_length >= 2, ErrorCode::invalid_parameter, "STFT window must be at least 2 samples");
  require(hop >= 1, ErrorCode::invalid_parameter, "STFT hop must be positive");
  require(window_length <= series.size(), ErrorCode::invalid_size, "STFT window longer than the series");
  const std::size_t frames = (series.size() - window_length) / hop + 1;
  const auto window = hann_window(window_length);
  RealFft fft(window_length);

  Spectrogram s;
  s.window = {"hann", window_length, hop};
  s.magnitudes.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(fft.bins()));
  for (std::size_t k = 0; k < fft.bins(); ++k) s.frequencies.push_back(double(k) * fs / double(window_length));
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < window_length; ++i) fft.input()[i] = series[start + i] * window[i];
    fft.execute();
    for (std::size_t k = 0; k < fft.bins(); ++k) {
      s.magnitudes(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = std::abs(fft.bin(k));
    }
    s.frame_times.push_back((double(start) + 0.5 * double(window_length)) / fs);
  }
  return s;
}

AttentionHistory extract_attention_history(const std::vector<Matrix>& captures, const Graph& graph,
                                           const EdgeSelector& selector) {
  graph.validate();
  for (const auto& c : captures) {
    require(c.rows() == static_cast<Eigen::Index>(graph.vertex_count) && c.cols() == c.rows(), ErrorCode::shape,
            "attention capture does not match the graph");
  }
  AttentionHistory h;
  auto add = [&](std::size_t from, std::size_t to, int type, const std::string& direction) {
    AttentionSeries s;
    s.from = from;
    s.to = to;
    s.type = type;
    s.direction = direction;
    s.label = direction == "self" ? "self:" + std::to_string(from)
                                  : "t" + std::to_string(type) + ":" + std::to_string(from) + "->" + std::to_string(to);
    for (const auto& c : captures) {
      s.values.push_back(c(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)));
    }
    h.series.push_back(std::move(s));
  };
  auto touches = [&](std::size_t a, std::size_t b) {
    return !selector.vertex || *selector.vertex == a || *selector.vertex == b;
  };
  for (const auto& e : graph.edges) {
    if (selector.type && *selector.type != e.type) continue;
    if (!touches(e.i, e.j)) continue;
    add(e.i, e.j, e.type, "forward");
    add(e.j, e.i, e.type, "backward");
  }
  if (selector.include_self) {
    for (std::size_t v = 0; v < graph.vertex_count; ++v) {
      if (touches(v, v)) add(v, v, -1, "self");
    }
  }
  require(!h.series.empty(), ErrorCode::invalid_parameter, "edge selector matched no attention series");
  return h;
}

double attention_normalization_error(const std::vector<Matrix>& captures) {
  double worst = 0.0;
  for (const auto& c : captures) {
    if (c.size() == 0) continue;
    if (c.minCoeff() < 0.0) worst = std::max(worst, -c.minCoeff());
    worst = std::max(worst, (c.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  return worst;
}

}  // namespace gdtm
