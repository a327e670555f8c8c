#include "gdtm/experiment.hpp"

#include "gdtm/io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <sstream>

namespace gdtm {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

/// Runs body(i) for i in [0, n) in parallel; rethrows the first failure.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double type_value(const std::vector<double>& per_type, int type, double fallback) {
  return static_cast<std::size_t>(type) < per_type.size() ? per_type[static_cast<std::size_t>(type)] : fallback;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorCode::io, "cannot create output directory " + dir.string());
}

std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

SolverConfig solver_of(const SurrogateModel& model, std::size_t steps) {
  SolverConfig s;
  s.dt = model.dt;
  s.beta = model.beta;
  s.gamma = model.gamma;
  s.steps = steps;
  return s;
}

}  // namespace

Graph system_graph(const SystemSection& system, std::size_t dof) {
  return chain_graph(dof, system.grounded, system.type_pattern);
}

MdofSystem system_model(const SystemSection& system, std::size_t dof) {
  const Graph graph = system_graph(system, dof);
  MdofSystem m;
  m.grounded = system.grounded;
  m.masses.assign(dof, system.mass);
  auto add = [&](int type) {
    m.spring_stiffnesses.push_back(type_value(system.type_stiffness, type, system.stiffness));
    m.damper_coefficients.push_back(type_value(system.type_damping, type, system.damping));
  };
  for (std::size_t g = 0; g < graph.grounded.size(); ++g) add(0);
  for (const auto& e : graph.edges) add(e.type);
  m.validate();
  return m;
}

std::size_t attention_type_count(const Graph& graph) {
  const auto types = graph.edge_types();
  return types.empty() ? 1 : static_cast<std::size_t>(types.back()) + 1;
}

std::vector<PlannedEpisode> plan_excitations(const ExcitationSection& section, std::size_t dof, std::uint64_t seed,
                                             const std::array<std::size_t, 3>& counts) {
  require(dof >= 1, ErrorCode::invalid_size, "excitation plan needs at least one vertex");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> vertex(0, dof - 1);
  std::uniform_real_distribution<double> freq(section.harmonic_min_hz, section.harmonic_max_hz);
  std::vector<PlannedEpisode> plan;
  for (int kind = 0; kind < 3; ++kind) {
    for (std::size_t r = 0; r < counts[static_cast<std::size_t>(kind)]; ++r) {
      PlannedEpisode p;
      p.tag = kind;
      p.spec.kind = static_cast<ExcitationKind>(kind);
      const std::size_t drawn = vertex(rng);
      p.spec.target_vertex = section.target_vertex && *section.target_vertex < dof ? *section.target_vertex : drawn;
      switch (p.spec.kind) {
        case ExcitationKind::impulse:
          p.spec.amplitude = section.impulse_amplitude;
          p.spec.duration_steps = section.impulse_duration;
          break;
        case ExcitationKind::harmonic:
          p.spec.amplitude = section.harmonic_amplitude;
          p.spec.frequency_hz = freq(rng);
          break;
        case ExcitationKind::random:
          p.spec.amplitude = section.random_std;
          p.spec.seed = rng();
          break;
      }
      plan.push_back(p);
    }
  }
  return plan;
}

std::vector<EpisodeRecord> simulate_episodes(const MdofSystem& system, const std::vector<PlannedEpisode>& plan,
                                             const SolverConfig& solver) {
  std::vector<EpisodeRecord> out(plan.size());
  parallel_for(plan.size(), [&](std::size_t i) {
    out[i] = newmark_solve(system, generate_excitation(plan[i].spec, solver, system.dof()), solver);
  });
  return out;
}

std::string write_manifest(const Manifest& manifest) {
  Json j;
  j["schema_version"] = 1;
  j["dof"] = manifest.dof;
  j["dt"] = manifest.dt;
  j["steps"] = manifest.steps;
  j["seed"] = manifest.seed;
  Json eps = Json::array();
  for (const auto& e : manifest.episodes) {
    const auto& s = e.episode.spec;
    eps.push_back({{"file", e.file},
                   {"kind", to_string(s.kind)},
                   {"tag", e.episode.tag},
                   {"target_vertex", s.target_vertex},
                   {"amplitude", s.amplitude},
                   {"frequency_hz", s.frequency_hz},
                   {"duration_steps", s.duration_steps},
                   {"seed", s.seed}});
  }
  j["episodes"] = eps;
  return j.dump(2) + "\n";
}

Manifest read_manifest(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    require(j.at("schema_version").get<int>() == 1, ErrorCode::config, "unsupported manifest schema_version");
    Manifest m;
    m.dof = j.at("dof").get<std::size_t>();
    m.dt = j.at("dt").get<double>();
    m.steps = j.at("steps").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("episodes")) {
      ManifestEntry entry;
      entry.file = e.at("file").get<std::string>();
      entry.episode.tag = e.at("tag").get<int>();
      auto& s = entry.episode.spec;
      s.kind = parse_excitation_kind(e.at("kind").get<std::string>());
      s.target_vertex = e.at("target_vertex").get<std::size_t>();
      s.amplitude = e.at("amplitude").get<double>();
      s.frequency_hz = e.at("frequency_hz").get<double>();
      s.duration_steps = e.at("duration_steps").get<std::size_t>();
      s.seed = e.at("seed").get<std::uint64_t>();
      m.episodes.push_back(entry);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("malformed manifest: ") + e.what());
  }
}

MetricReport pooled_metrics(const std::vector<EpisodeRecord>& predicted, const std::vector<EpisodeRecord>& truth) {
  require(predicted.size() == truth.size() && !truth.empty(), ErrorCode::shape, "pooled metrics need matching records");
  std::vector<double> t, p;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    require(predicted[k].acceleration.rows() == truth[k].acceleration.rows() &&
                predicted[k].acceleration.cols() == truth[k].acceleration.cols(),
            ErrorCode::shape, "predicted and true records differ in shape");
    t.insert(t.end(), truth[k].acceleration.data(), truth[k].acceleration.data() + truth[k].acceleration.size());
    p.insert(p.end(), predicted[k].acceleration.data(),
             predicted[k].acceleration.data() + predicted[k].acceleration.size());
  }
  return compute_metrics(t, p);
}

MetricReport evaluate_on_graph(const SurrogateModel& model, const Graph& graph, const std::vector<EpisodeRecord>& truth) {
  std::vector<EpisodeRecord> predicted(truth.size());
  parallel_for(truth.size(), [&](std::size_t k) { predicted[k] = rollout(model, graph, truth[k].excitation).record; });
  return pooled_metrics(predicted, truth);
}

TrainingRun train_surrogate(const ExperimentConfig& config, const Graph& graph, const std::vector<EpisodeRecord>& episodes,
                            const std::vector<int>& tags) {
  config.validate();
  require(!episodes.empty(), ErrorCode::invalid_size, "training needs episodes");
  require(tags.size() == episodes.size(), ErrorCode::shape, "one tag per episode required");
  const auto& tc = config.training;
  const auto split = split_episodes(tags, tc.train_fraction, tc.seed);
  std::vector<EpisodeRecord> train_eps;
  for (auto i : split.train) train_eps.push_back(episodes[i]);
  const auto scalers = fit_scalers(train_eps);

  const auto& mc = config.model;
  SurrogateModel model;
  Dataset data;
  switch (mc.kind) {
    case ModelKind::homogeneous: {
      const auto adj = build_homogeneous_adjacency(graph);
      model = SurrogateModel::create(ModelKind::homogeneous, 1, mc.hidden, tc.seed);
      data = build_dataset(episodes, adj, scalers, mc.alignment, tags);
      break;
    }
    case ModelKind::heterogeneous: {
      const auto adj = build_heterogeneous_adjacency(graph);
      model = SurrogateModel::create(ModelKind::heterogeneous, adj.count(), mc.hidden, tc.seed);
      data = build_dataset(episodes, adj, scalers, mc.alignment, tags);
      break;
    }
    case ModelKind::gat:
      model = SurrogateModel::create(ModelKind::gat, 1, mc.hidden, tc.seed, mc.gat_width, attention_type_count(graph));
      data = build_dataset(episodes, scalers, mc.alignment, tags);
      break;
  }
  model.alignment = mc.alignment;
  model.scalers = scalers;
  model.dt = episodes.front().dt;
  model.beta = config.solver.beta;
  model.gamma = config.solver.gamma;

  TrainingRun run;
  run.result = train(model, data, tc, &graph);
  run.checkpoint.model = run.result.model;
  run.checkpoint.training_seed = tc.seed;
  run.test_episodes = run.result.split.test;
  return run;
}

std::string transfer_csv(const std::vector<TransferRow>& rows) {
  std::string out = "label,dof,nmse,r2,pe_pct,n\n";
  for (const auto& r : rows) out += r.label + "," + std::to_string(r.dof) + "," + metric_csv_row(r.report) + "\n";
  return out;
}

CaseSetup case_setup(const ExperimentConfig& config, const SurrogateModel& model, int case_id) {
  require(model.kind != ModelKind::gat, ErrorCode::compat, "parameter-transfer CASEs need an adjacency-driven model");
  const std::size_t dof = config.system.dof;
  const Graph graph = system_graph(config.system, dof);
  CaseSetup c{system_model(config.system, dof), adjacency_for(model, graph)};
  switch (case_id) {
    case 0:
      break;
    case 1:
      for (auto& k : c.system.spring_stiffnesses) k *= 0.8;
      for (auto& m : c.system.masses) m *= 1.6;
      c.adjacency = scale_edges(c.adjacency, 0.8 / 1.6);
      break;
    case 2:
      for (auto& k : c.system.spring_stiffnesses) k *= 0.1;
      for (auto& d : c.system.damper_coefficients) d *= 0.1;
      c.adjacency = scale_edges(c.adjacency, 0.1);
      break;
    case 3: {
      std::mt19937_64 rng(config.transfer.seed + 3);
      std::uniform_real_distribution<double> factor(0.5, 1.5);
      std::vector<double> springs(graph.spring_count()), masses(dof);
      for (auto& r : springs) r = factor(rng);
      for (auto& q : masses) q = factor(rng);
      for (std::size_t s = 0; s < springs.size(); ++s) {
        c.system.spring_stiffnesses[s] *= springs[s];
        c.system.damper_coefficients[s] *= springs[s];
      }
      for (std::size_t i = 0; i < dof; ++i) c.system.masses[i] *= masses[i];
      c.adjacency = scale_edges(c.adjacency, spring_factor_matrix(graph, springs, masses));
      break;
    }
    default:
      fail(ErrorCode::config, "unknown CASE " + std::to_string(case_id));
  }
  return c;
}

std::vector<TransferRow> run_transfer(const ExperimentConfig& config, const SurrogateModel& model) {
  config.validate();
  const auto& tr = config.transfer;
  const std::array<std::size_t, 3> counts{tr.episodes_per_kind, tr.episodes_per_kind, tr.episodes_per_kind};
  const auto solver = solver_of(model, config.solver.solver().steps);
  std::vector<TransferRow> rows(tr.targets.size());
  parallel_for(tr.targets.size(), [&](std::size_t k) {
    const std::size_t dof = tr.targets[k];
    const auto graph = system_graph(config.system, dof);
    const auto plan = plan_excitations(config.excitation, dof, tr.seed + dof, counts);
    const auto truth = simulate_episodes(system_model(config.system, dof), plan, solver);
    rows[k] = {"dof_" + std::to_string(dof), dof, evaluate_on_graph(model, graph, truth)};
  });
  if (model.kind == ModelKind::gat) return rows;
  const std::size_t dof = config.system.dof;
  const auto plan = plan_excitations(config.excitation, dof, tr.seed, counts);
  std::vector<TransferRow> cases(tr.cases.size());
  parallel_for(tr.cases.size(), [&](std::size_t k) {
    const auto setup = case_setup(config, model, tr.cases[k]);
    const auto truth = simulate_episodes(setup.system, plan, solver);
    std::vector<EpisodeRecord> predicted;
    for (const auto& t : truth) predicted.push_back(rollout(model, setup.adjacency, t.excitation).record);
    cases[k] = {"case_" + std::to_string(tr.cases[k]), dof, pooled_metrics(predicted, truth)};
  });
  rows.insert(rows.end(), cases.begin(), cases.end());
  return rows;
}

Manifest cmd_generate(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  ensure_directory(out / "episodes");
  const auto& ex = config.excitation;
  const auto solver = config.solver.solver();
  const auto plan = plan_excitations(ex, config.system.dof, ex.seed, {ex.impulse_count, ex.harmonic_count, ex.random_count});
  const auto records = simulate_episodes(system_model(config.system, config.system.dof), plan, solver);
  Manifest m;
  m.dof = config.system.dof;
  m.dt = solver.dt;
  m.steps = solver.steps;
  m.seed = ex.seed;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "episodes/episode_%03zu_%s.csv", k, to_string(plan[k].spec.kind).c_str());
    m.episodes.push_back({name, plan[k]});
  }
  parallel_for(records.size(), [&](std::size_t k) { save_episode(out / m.episodes[k].file, records[k]); });
  write_text_file(out / "manifest.json", write_manifest(m));
  write_text_file(out / "config.ini", format_config(config));
  return m;
}

TrainSummary cmd_train(const ExperimentConfig& config, const fs::path& manifest_path, const fs::path& out) {
  config.validate();
  std::string text;
  try {
    text = read_text_file(manifest_path);
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  const Manifest m = read_manifest(text);
  require(m.dof == config.system.dof, ErrorCode::config,
          "manifest has " + std::to_string(m.dof) + " DOF but the config says " + std::to_string(config.system.dof));
  require(!m.episodes.empty(), ErrorCode::config, "manifest lists no episodes");
  const fs::path base = manifest_path.parent_path();
  std::vector<EpisodeRecord> episodes(m.episodes.size());
  std::vector<int> tags;
  for (const auto& e : m.episodes) tags.push_back(e.episode.tag);
  parallel_for(m.episodes.size(), [&](std::size_t k) { episodes[k] = load_episode(base / m.episodes[k].file); });

  const Graph graph = system_graph(config.system, config.system.dof);
  const auto run = train_surrogate(config, graph, episodes, tags);
  ensure_directory(out);
  TrainSummary s;
  s.checkpoint = out / "checkpoint.json";
  s.loss_csv = out / "loss.csv";
  save_checkpoint(s.checkpoint, run.checkpoint);
  std::ostringstream loss;
  write_loss_csv(loss, run.result.history);
  write_text_file(s.loss_csv, loss.str());
  s.parameter_count = run.checkpoint.model.parameter_count();
  s.best_epoch = run.result.best_epoch;

  std::vector<TransferRow> rows;
  std::vector<EpisodeRecord> truth, predicted(run.test_episodes.size());
  for (auto k : run.test_episodes) truth.push_back(episodes[k]);
  parallel_for(truth.size(), [&](std::size_t k) {
    predicted[k] = rollout(run.checkpoint.model, graph, truth[k].excitation).record;
  });
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const auto& file = m.episodes[run.test_episodes[k]].file;
    rows.push_back({fs::path(file).stem().string(), m.dof, evaluate_rollout(predicted[k], truth[k])});
  }
  if (!truth.empty()) {
    s.heldout = pooled_metrics(predicted, truth);
    rows.push_back({"all", m.dof, s.heldout});
  }
  write_text_file(out / "heldout.csv", transfer_csv(rows));
  return s;
}

RolloutSummary cmd_rollout(const fs::path& checkpoint, const fs::path& graph_path, const fs::path& excitation,
                           const fs::path& out, bool capture_attention) {
  const auto ck = load_checkpoint(checkpoint);
  const auto graph = load_graph(graph_path.string());
  std::istringstream in(read_text_file(excitation));
  const auto ex = read_excitation_csv(in, ck.model.dt);
  require(static_cast<std::size_t>(ex.excitation.cols()) == graph.vertex_count, ErrorCode::shape,
          "excitation has " + std::to_string(ex.excitation.cols()) + " vertices, graph has " +
              std::to_string(graph.vertex_count));
  require(ex.excitation.rows() < 2 || std::abs(ex.dt - ck.model.dt) <= 1e-9 * ck.model.dt, ErrorCode::compat,
          "excitation sampling interval differs from the checkpoint's dt");
  require(!capture_attention || ck.model.kind == ModelKind::gat, ErrorCode::compat,
          "attention capture needs an attention (gat) checkpoint");
  RolloutOptions opts;
  opts.capture_attention = capture_attention;
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = rollout(ck.model, graph, ex.excitation, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ensure_directory(out);
  RolloutSummary s;
  s.predicted = out / "predicted.csv";
  save_episode(s.predicted, result.record);
  if (capture_attention) {
    EdgeSelector all;
    all.include_self = true;
    std::ostringstream a;
    write_attention_csv(a, extract_attention_history(result.attention, graph, all), ck.model.dt);
    write_text_file(out / "attention.csv", a.str());
  }
  s.steps = result.record.steps();
  s.seconds = secs;
  s.steps_per_second = secs > 0.0 ? double(s.steps) / secs : std::numeric_limits<double>::infinity();
  return s;
}

MetricReport cmd_eval(const fs::path& predicted_path, const fs::path& truth_path, const fs::path& out, bool psd_files) {
  const auto predicted = load_episode(predicted_path);
  const auto truth = load_episode(truth_path);
  const auto report = evaluate_rollout(predicted, truth);
  ensure_directory(out);
  std::ostringstream m;
  write_metrics_csv(m, report);
  write_text_file(out / "metrics.csv", m.str());
  if (psd_files) {
    require(truth.steps() >= 2, ErrorCode::invalid_size, "PSD needs at least two samples");
    const double fs_hz = 1.0 / truth.dt;
    const std::size_t segment = std::min<std::size_t>(256, truth.steps());
    for (Eigen::Index i = 0; i < truth.acceleration.cols(); ++i) {
      for (const auto& [tag, rec] : {std::pair{"true", &truth}, std::pair{"pred", &predicted}}) {
        const Vector col = rec->acceleration.col(i);
        std::ostringstream p;
        write_psd_csv(p, psd(std::span(col.data(), static_cast<std::size_t>(col.size())), fs_hz, segment, 0.5));
        write_text_file(out / ("psd_" + std::string(tag) + "_v" + std::to_string(i) + ".csv"), p.str());
      }
    }
  }
  return report;
}

std::vector<TransferRow> cmd_transfer(const ExperimentConfig& config, const fs::path& checkpoint, const fs::path& out) {
  const auto ck = load_checkpoint(checkpoint);
  const auto rows = run_transfer(config, ck.model);
  ensure_directory(out);
  write_text_file(out / "transfer.csv", transfer_csv(rows));
  return rows;
}

AttentionHistory cmd_attention(const fs::path& checkpoint, const fs::path& graph_path, const fs::path& excitation,
                               const fs::path& out) {
  const auto ck = load_checkpoint(checkpoint);
  require(ck.model.kind == ModelKind::gat, ErrorCode::compat, "attention analysis needs an attention (gat) checkpoint");
  const auto graph = load_graph(graph_path.string());
  std::istringstream in(read_text_file(excitation));
  const auto ex = read_excitation_csv(in, ck.model.dt);
  require(static_cast<std::size_t>(ex.excitation.cols()) == graph.vertex_count, ErrorCode::shape,
          "excitation width does not match the graph");
  RolloutOptions opts;
  opts.capture_attention = true;
  const auto result = rollout(ck.model, graph, ex.excitation, opts);
  EdgeSelector all;
  all.include_self = true;
  const auto history = extract_attention_history(result.attention, graph, all);
  ensure_directory(out);
  std::ostringstream a;
  write_attention_csv(a, history, ck.model.dt);
  write_text_file(out / "attention.csv", a.str());
  const std::size_t steps = result.record.steps();
  if (steps >= 2) {
    const std::size_t window = std::min<std::size_t>(256, steps);
    const std::size_t hop = std::max<std::size_t>(1, window / 8);
    for (std::size_t k = 0; k < history.series.size(); ++k) {
      const auto& s = history.series[k];
      std::ostringstream o;
      write_spectrogram_csv(o, stft(s.values, 1.0 / ck.model.dt, window, hop));
      char prefix[32];
      std::snprintf(prefix, sizeof prefix, "attention_stft_%03zu_", k);
      write_text_file(out / (prefix + sanitize(s.label) + ".csv"), o.str());
    }
  }
  return history;
}

}  // namespace gdtm
