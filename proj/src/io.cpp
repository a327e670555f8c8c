#include "gdtm/io.hpp"

#include "gdtm/surrogate.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

namespace gdtm {

namespace {

const char* const kEpisodeHeader = "step,time_s,vertex,excitation_N,acc_mps2,vel_mps,disp_m";
const char* const kExcitationHeader = "step,time_s,vertex,excitation_N";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    fail(ErrorCode::io, "line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& text, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (text.empty() || pos != text.size() || text[0] == '-') {
    fail(ErrorCode::io, "line " + std::to_string(line) + ": bad index '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, "empty CSV, expected header '" + header + "'");
  strip_cr(line);
  if (line != header) fail(ErrorCode::io, "CSV header '" + line + "' does not match '" + header + "'");
}

/// Rows of a long-format table keyed by (step, vertex) in step-major order.
struct LongTable {
  std::size_t steps = 0;
  std::size_t vertices = 0;
  std::vector<std::vector<double>> values;  // per row, the columns after `vertex`
  double dt = 0.0;
};

LongTable read_long_table(std::istream& in, const std::string& header, std::size_t value_columns,
                          double fallback_dt) {
  expect_header(in, header);
  LongTable t;
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  std::vector<double> times;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 3 + value_columns) {
      fail(ErrorCode::io, "line " + std::to_string(line_no) + ": expected " + std::to_string(3 + value_columns) +
                              " fields");
    }
    keys.emplace_back(parse_index(f[0], line_no), parse_index(f[2], line_no));
    times.push_back(parse_double(f[1], line_no));
    std::vector<double> row;
    for (std::size_t c = 0; c < value_columns; ++c) row.push_back(parse_double(f[3 + c], line_no));
    t.values.push_back(std::move(row));
  }
  require(!keys.empty(), ErrorCode::io, "CSV has no data rows");
  std::size_t v = 0;
  while (v < keys.size() && keys[v].first == 0) ++v;
  require(v > 0 && keys.size() % v == 0, ErrorCode::io, "CSV rows do not form a complete step x vertex grid");
  t.vertices = v;
  t.steps = keys.size() / v;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    if (keys[r].first != r / v || keys[r].second != r % v) {
      fail(ErrorCode::io, "CSV rows must be ordered by step then vertex (row " + std::to_string(r + 2) + ")");
    }
  }
  t.dt = t.steps > 1 ? times[v] - times[0] : fallback_dt;
  require(t.dt > 0.0, ErrorCode::io, "CSV time column must increase");
  return t;
}

}  // namespace

std::string format_number(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_episode_csv(std::ostream& out, const EpisodeRecord& record) {
  record.validate();
  out << kEpisodeHeader << '\n';
  for (Eigen::Index n = 0; n < record.acceleration.rows(); ++n) {
    const std::string time = format_number(double(n) * record.dt);
    for (Eigen::Index i = 0; i < record.acceleration.cols(); ++i) {
      out << n << ',' << time << ',' << i << ',' << format_number(record.excitation(n, i)) << ','
          << format_number(record.acceleration(n, i)) << ',' << format_number(record.velocity(n, i)) << ','
          << format_number(record.displacement(n, i)) << '\n';
    }
  }
}

EpisodeRecord read_episode_csv(std::istream& in, double fallback_dt) {
  const auto t = read_long_table(in, kEpisodeHeader, 4, fallback_dt);
  EpisodeRecord rec;
  rec.dt = t.dt;
  const auto rows = static_cast<Eigen::Index>(t.steps);
  const auto cols = static_cast<Eigen::Index>(t.vertices);
  rec.excitation.resize(rows, cols);
  rec.acceleration.resize(rows, cols);
  rec.velocity.resize(rows, cols);
  rec.displacement.resize(rows, cols);
  for (std::size_t r = 0; r < t.values.size(); ++r) {
    const auto n = static_cast<Eigen::Index>(r / t.vertices);
    const auto i = static_cast<Eigen::Index>(r % t.vertices);
    rec.excitation(n, i) = t.values[r][0];
    rec.acceleration(n, i) = t.values[r][1];
    rec.velocity(n, i) = t.values[r][2];
    rec.displacement(n, i) = t.values[r][3];
  }
  rec.validate();
  return rec;
}

void write_excitation_csv(std::ostream& out, const Matrix& excitation, double dt) {
  out << kExcitationHeader << '\n';
  for (Eigen::Index n = 0; n < excitation.rows(); ++n) {
    const std::string time = format_number(double(n) * dt);
    for (Eigen::Index i = 0; i < excitation.cols(); ++i) {
      out << n << ',' << time << ',' << i << ',' << format_number(excitation(n, i)) << '\n';
    }
  }
}

namespace {

ExcitationSeries read_excitation_table(std::istream& in, double fallback_dt) {
  const auto t = read_long_table(in, kExcitationHeader, 1, fallback_dt);
  ExcitationSeries s;
  s.dt = t.dt;
  s.excitation.resize(static_cast<Eigen::Index>(t.steps), static_cast<Eigen::Index>(t.vertices));
  for (std::size_t r = 0; r < t.values.size(); ++r) {
    s.excitation(static_cast<Eigen::Index>(r / t.vertices), static_cast<Eigen::Index>(r % t.vertices)) = t.values[r][0];
  }
  require(all_finite(s.excitation), ErrorCode::io, "excitation CSV holds non-finite values");
  return s;
}

}  // namespace

ExcitationSeries read_excitation_csv(std::istream& in, double fallback_dt) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::istringstream body(text);
  if (text.rfind(std::string(kEpisodeHeader) + "\n", 0) == 0) {
    const auto e = read_episode_csv(body, fallback_dt);
    return {e.excitation, e.dt};
  }
  return read_excitation_table(body, fallback_dt);
}

void write_psd_csv(std::ostream& out, const PowerSpectrum& spectrum) {
  out << "frequency_hz,power\n";
  for (std::size_t k = 0; k < spectrum.frequencies.size(); ++k) {
    out << format_number(spectrum.frequencies[k]) << ',' << format_number(spectrum.power[k]) << '\n';
  }
}

void write_spectrogram_csv(std::ostream& out, const Spectrogram& spectrogram) {
  out << "frame_time_s,frequency_hz,magnitude\n";
  for (std::size_t f = 0; f < spectrogram.frame_times.size(); ++f) {
    const std::string time = format_number(spectrogram.frame_times[f]);
    for (std::size_t k = 0; k < spectrogram.frequencies.size(); ++k) {
      out << time << ',' << format_number(spectrogram.frequencies[k]) << ','
          << format_number(spectrogram.magnitudes(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)))
          << '\n';
    }
  }
}

void write_loss_csv(std::ostream& out, const std::vector<EpochLoss>& history) {
  out << "epoch,train_loss,test_loss\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << format_number(h.train_loss) << ',' << format_number(h.test_loss) << '\n';
  }
}

void write_attention_csv(std::ostream& out, const AttentionHistory& history, double dt) {
  out << "step,time_s,series,from,to,type,direction,alpha\n";
  const std::size_t steps = history.series.empty() ? 0 : history.series.front().values.size();
  for (std::size_t n = 0; n < steps; ++n) {
    const std::string time = format_number(double(n) * dt);
    for (const auto& s : history.series) {
      out << n << ',' << time << ',' << s.label << ',' << s.from << ',' << s.to << ',' << s.type << ','
          << s.direction << ',' << format_number(s.values[n]) << '\n';
    }
  }
}

void write_metrics_csv(std::ostream& out, const MetricReport& report) {
  out << metric_csv_header() << '\n' << metric_csv_row(report) << '\n';
}

void save_episode(const std::filesystem::path& path, const EpisodeRecord& record) {
  std::ostringstream out;
  write_episode_csv(out, record);
  write_text_file(path, out.str());
}

EpisodeRecord load_episode(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  try {
    return read_episode_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace gdtm
