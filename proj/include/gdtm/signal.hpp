#pragma once

#include "gdtm/common.hpp"
#include "gdtm/graph.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gdtm {

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

struct PowerSpectrum {
  std::vector<double> frequencies;  // Hz, 0 .. fs/2
  std::vector<double> power;        // one-sided density, units^2 / Hz
};

/// Welch estimate: Hann segments, per-segment mean removal, density scaling,
/// one-sided. Throws invalid_size when the series is shorter than a segment.
PowerSpectrum psd(std::span<const double> series, double fs, std::size_t segment_length = 256,
                  double overlap_fraction = 0.5);

struct WindowDescriptor {
  std::string name = "hann";
  std::size_t length = 0;
  std::size_t hop = 0;
};

struct Spectrogram {
  std::vector<double> frame_times;  // s, centre of each frame
  std::vector<double> frequencies;  // Hz
  Matrix magnitudes;                // frames x bins
  WindowDescriptor window;
};

/// Hann-windowed sliding FFT magnitudes; floor((len - window) / hop) + 1 frames.
Spectrogram stft(std::span<const double> series, double fs, std::size_t window_length, std::size_t hop);

/// One directed attention series: alpha of `from` attending to `to`.
struct AttentionSeries {
  std::string label;
  std::size_t from = 0;
  std::size_t to = 0;
  int type = 0;             // edge type; -1 for the self entry
  std::string direction;    // "forward" (listed i->j), "backward" (j->i) or "self"
  std::vector<double> values;
};

struct AttentionHistory {
  std::vector<AttentionSeries> series;
};

/// Chooses which directed edges to extract. Unset fields match everything.
struct EdgeSelector {
  std::optional<int> type;
  std::optional<std::size_t> vertex;  // either endpoint
  bool include_self = false;
};

/// Per-step alpha for selected edges of `graph` from rollout captures (one V x V
/// matrix per step). Throws invalid_parameter when nothing matches.
AttentionHistory extract_attention_history(const std::vector<Matrix>& captures, const Graph& graph,
                                           const EdgeSelector& selector = {});

/// Largest |row sum - 1| over all captures, plus a negative-entry check.
double attention_normalization_error(const std::vector<Matrix>& captures);

}  // namespace gdtm
