#include "gdtm/config.hpp"

#include "gdtm/io.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace gdtm {

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || !std::isfinite(v)) fail(ErrorCode::config, key + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text[0] == '-') {
    fail(ErrorCode::config, key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) fail(ErrorCode::config, key + ": expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(ErrorCode::config, key + ": expected true/false, got '" + text + "'");
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_number(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

struct Field {
  std::function<void(const std::string& key, const std::string& value)> parse;
  std::function<std::string()> format;
};

using Section = std::vector<std::pair<std::string, Field>>;

Field number(double& x) {
  return {[&x](const std::string& k, const std::string& v) { x = to_double(k, v); }, [&x] { return format_number(x); }};
}
template <class U>
Field unsigned_int(U& x) {
  return {[&x](const std::string& k, const std::string& v) { x = static_cast<U>(to_uint(k, v)); },
          [&x] { return std::to_string(x); }};
}
Field boolean(bool& x) {
  return {[&x](const std::string& k, const std::string& v) { x = to_bool(k, v); },
          [&x] { return std::string(x ? "true" : "false"); }};
}
Field number_list(std::vector<double>& x) {
  return {[&x](const std::string& k, const std::string& v) {
            x.clear();
            for (const auto& s : split_list(v)) x.push_back(to_double(k, s));
          },
          [&x] { return join(x); }};
}
Field int_list(std::vector<int>& x) {
  return {[&x](const std::string& k, const std::string& v) {
            x.clear();
            for (const auto& s : split_list(v)) x.push_back(to_int(k, s));
          },
          [&x] { return join(x); }};
}
Field size_list(std::vector<std::size_t>& x) {
  return {[&x](const std::string& k, const std::string& v) {
            x.clear();
            for (const auto& s : split_list(v)) x.push_back(static_cast<std::size_t>(to_uint(k, s)));
          },
          [&x] { return join(x); }};
}

std::vector<std::pair<std::string, Section>> schema(ExperimentConfig& c) {
  auto& s = c.system;
  auto& e = c.excitation;
  auto& v = c.solver;
  auto& t = c.training;
  auto& m = c.model;
  auto& x = c.transfer;
  Field target{[&e](const std::string& k, const std::string& val) {
                 if (val.empty() || val == "random") {
                   e.target_vertex.reset();
                 } else {
                   e.target_vertex = static_cast<std::size_t>(to_uint(k, val));
                 }
               },
               [&e] { return e.target_vertex ? std::to_string(*e.target_vertex) : std::string("random"); }};
  Field kind{[&m](const std::string&, const std::string& val) { m.kind = parse_model_kind(val); },
             [&m] { return to_string(m.kind); }};
  Field alignment{[&m](const std::string&, const std::string& val) { m.alignment = parse_alignment(val); },
                  [&m] { return to_string(m.alignment); }};
  return {
      {"system",
       {{"dof", unsigned_int(s.dof)},
        {"mass", number(s.mass)},
        {"stiffness", number(s.stiffness)},
        {"damping", number(s.damping)},
        {"grounded", boolean(s.grounded)},
        {"type_pattern", int_list(s.type_pattern)},
        {"type_stiffness", number_list(s.type_stiffness)},
        {"type_damping", number_list(s.type_damping)}}},
      {"excitation",
       {{"impulse_count", unsigned_int(e.impulse_count)},
        {"harmonic_count", unsigned_int(e.harmonic_count)},
        {"random_count", unsigned_int(e.random_count)},
        {"impulse_amplitude", number(e.impulse_amplitude)},
        {"impulse_duration", unsigned_int(e.impulse_duration)},
        {"harmonic_amplitude", number(e.harmonic_amplitude)},
        {"harmonic_min_hz", number(e.harmonic_min_hz)},
        {"harmonic_max_hz", number(e.harmonic_max_hz)},
        {"random_std", number(e.random_std)},
        {"seed", unsigned_int(e.seed)},
        {"target_vertex", target}}},
      {"solver", {{"fs", number(v.fs)}, {"duration", number(v.duration)}, {"beta", number(v.beta)}, {"gamma", number(v.gamma)}}},
      {"training",
       {{"epochs", unsigned_int(t.epochs)},
        {"batch_size", unsigned_int(t.batch_size)},
        {"seed", unsigned_int(t.seed)},
        {"train_fraction", number(t.train_fraction)},
        {"noise_std", number(t.noise_std)},
        {"patience", unsigned_int(t.patience)},
        {"learning_rate", number(t.adam.learning_rate)},
        {"block_samples", unsigned_int(t.block_samples)},
        {"parallel", boolean(t.parallel)}}},
      {"model", {{"kind", kind}, {"alignment", alignment}, {"hidden", size_list(m.hidden)}, {"gat_width", unsigned_int(m.gat_width)}}},
      {"transfer",
       {{"targets", size_list(x.targets)},
        {"cases", int_list(x.cases)},
        {"episodes_per_kind", unsigned_int(x.episodes_per_kind)},
        {"seed", unsigned_int(x.seed)}}},
  };
}

}  // namespace

SolverConfig SolverSection::solver() const {
  SolverConfig c;
  c.dt = 1.0 / fs;
  c.steps = static_cast<std::size_t>(std::llround(duration * fs));
  c.beta = beta;
  c.gamma = gamma;
  return c;
}

void ExperimentConfig::validate() const {
  require(system.dof >= 1, ErrorCode::config, "system.dof must be at least 1");
  require(system.mass > 0.0, ErrorCode::config, "system.mass must be positive");
  require(system.stiffness >= 0.0 && system.damping >= 0.0, ErrorCode::config,
          "system stiffness and damping must be non-negative");
  for (int t : system.type_pattern) require(t >= 0, ErrorCode::config, "system.type_pattern entries must be >= 0");
  for (double k : system.type_stiffness) require(k >= 0.0, ErrorCode::config, "system.type_stiffness must be >= 0");
  for (double c : system.type_damping) require(c >= 0.0, ErrorCode::config, "system.type_damping must be >= 0");
  require(solver.fs > 0.0, ErrorCode::config, "solver.fs must be positive");
  require(solver.duration > 0.0, ErrorCode::config, "solver.duration must be positive");
  require(solver.solver().steps >= 1, ErrorCode::config, "solver.duration * fs must give at least one step");
  try {
    solver.solver().validate();
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  require(excitation.harmonic_min_hz > 0.0 && excitation.harmonic_max_hz >= excitation.harmonic_min_hz,
          ErrorCode::config, "harmonic frequency range must be positive and ordered");
  require(excitation.impulse_duration >= 1, ErrorCode::config, "excitation.impulse_duration must be >= 1");
  require(!excitation.target_vertex || *excitation.target_vertex < system.dof, ErrorCode::config,
          "excitation.target_vertex out of range");
  require(excitation.impulse_count + excitation.harmonic_count + excitation.random_count >= 1, ErrorCode::config,
          "at least one episode must be generated");
  training.validate();
  require(!model.hidden.empty(), ErrorCode::config, "model.hidden needs at least one layer");
  for (auto h : model.hidden) require(h >= 1, ErrorCode::config, "model.hidden widths must be positive");
  require(model.gat_width >= 1, ErrorCode::config, "model.gat_width must be positive");
  for (auto t : transfer.targets) require(t >= 1, ErrorCode::config, "transfer targets must be positive");
  for (int c : transfer.cases) require(c >= 0 && c <= 3, ErrorCode::config, "unknown CASE " + std::to_string(c));
  require(transfer.episodes_per_kind >= 1, ErrorCode::config, "transfer.episodes_per_kind must be >= 1");
}

void ExperimentConfig::apply_seed(std::uint64_t seed) {
  excitation.seed = seed;
  training.seed = seed;
  transfer.seed = seed;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::config, std::string("config parse error: ") + e.what());
  }
  ExperimentConfig c;
  auto sections = schema(c);
  for (const auto& [name, body] : tree) {
    auto sec = std::find_if(sections.begin(), sections.end(), [&](const auto& s) { return s.first == name; });
    require(sec != sections.end(), ErrorCode::config, "unknown config section [" + name + "]");
    for (const auto& [key, value] : body) {
      auto field = std::find_if(sec->second.begin(), sec->second.end(), [&](const auto& f) { return f.first == key; });
      require(field != sec->second.end(), ErrorCode::config, "unknown key '" + key + "' in [" + name + "]");
      std::string v = value.data();
      boost::algorithm::trim(v);
      field->second.parse(name + "." + key, v);
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  return parse_config(text);
}

std::string format_config(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  std::string out;
  for (const auto& [name, body] : schema(copy)) {
    out += "[" + name + "]\n";
    for (const auto& [key, field] : body) out += key + " = " + field.format() + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace gdtm
