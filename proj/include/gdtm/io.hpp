#pragma once

#include "gdtm/common.hpp"
#include "gdtm/mdof.hpp"
#include "gdtm/metrics.hpp"
#include "gdtm/signal.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gdtm {

struct EpochLoss;

/// Shortest text that parses back to the same double.
std::string format_number(double x);

// Long-format episode CSV, one row per (step, vertex), ordered by step then vertex:
//   step,time_s,vertex,excitation_N,acc_mps2,vel_mps,disp_m
void write_episode_csv(std::ostream& out, const EpisodeRecord& record);
/// Readers reject any header that differs from the schema. dt is recovered
/// from time_s (the fallback is used for single-step files).
EpisodeRecord read_episode_csv(std::istream& in, double fallback_dt = 0.01);

// Excitation-only CSV: step,time_s,vertex,excitation_N
void write_excitation_csv(std::ostream& out, const Matrix& excitation, double dt);
struct ExcitationSeries {
  Matrix excitation;
  double dt = 0.01;
};
/// Also accepts an episode CSV and keeps its excitation column.
ExcitationSeries read_excitation_csv(std::istream& in, double fallback_dt = 0.01);

/// frequency_hz,power
void write_psd_csv(std::ostream& out, const PowerSpectrum& spectrum);
/// frame_time_s,frequency_hz,magnitude
void write_spectrogram_csv(std::ostream& out, const Spectrogram& spectrogram);
/// epoch,train_loss,test_loss
void write_loss_csv(std::ostream& out, const std::vector<EpochLoss>& history);
/// step,time_s,series,from,to,type,direction,alpha
void write_attention_csv(std::ostream& out, const AttentionHistory& history, double dt);
/// nmse,r2,pe_pct,n
void write_metrics_csv(std::ostream& out, const MetricReport& report);

/// File helpers; io error when a file cannot be opened.
void save_episode(const std::filesystem::path& path, const EpisodeRecord& record);
EpisodeRecord load_episode(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace gdtm
