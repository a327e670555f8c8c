#include "gdtm/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "gdtm_out";
};

gdtm::ExperimentConfig resolve_config(const GlobalOptions& g) {
  gdtm::ExperimentConfig c;
  if (!g.config.empty()) {
    c = gdtm::load_config(g.config);
  } else if (fs::exists(fs::path(g.out) / "config.ini")) {
    c = gdtm::load_config(fs::path(g.out) / "config.ini");
  }
  if (g.seed) c.apply_seed(*g.seed);
  c.validate();
  return c;
}

void print_report(const std::string& label, const gdtm::MetricReport& r) {
  std::printf("%s nmse=%.6g r2=%.6g pe_pct=%.6g n=%zu\n", label.c_str(), r.nmse, r.r_squared, r.peak_error_pct,
              r.sample_count);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based digital twin for spring-mass-damper chains"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config (INI)");
  app.add_option("--seed", g.seed, "Override every seed in the config");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Simulate the training episodes");

  std::string manifest;
  auto* train = app.add_subcommand("train", "Train a surrogate from a manifest");
  train->add_option("manifest", manifest, "Episode manifest (default <out>/manifest.json)");

  std::string checkpoint, graph, excitation;
  bool capture = false;
  auto* rollout = app.add_subcommand("rollout", "Roll a checkpoint out on a graph");
  rollout->add_option("checkpoint", checkpoint)->required();
  rollout->add_option("graph", graph)->required();
  rollout->add_option("excitation", excitation)->required();
  rollout->add_flag("--capture-attention", capture, "Write per-step attention (gat checkpoints)");

  std::string predicted, truth;
  bool psd = false;
  auto* eval = app.add_subcommand("eval", "Compare a predicted episode with the truth");
  eval->add_option("predicted", predicted)->required();
  eval->add_option("truth", truth)->required();
  eval->add_flag("--psd", psd, "Also write per-vertex PSD files");

  auto* transfer = app.add_subcommand("transfer", "Topology and parameter transfer study");
  transfer->add_option("checkpoint", checkpoint, "Checkpoint (default <out>/checkpoint.json)");

  auto* attention = app.add_subcommand("attention", "Attention histories and spectrograms");
  attention->add_option("checkpoint", checkpoint)->required();
  attention->add_option("graph", graph)->required();
  attention->add_option("excitation", excitation)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const fs::path out = g.out;
    if (*generate) {
      const auto m = gdtm::cmd_generate(resolve_config(g), out);
      std::printf("generated %zu episodes (%zu steps x %zu vertices) -> %s\n", m.episodes.size(), m.steps, m.dof,
                  (out / "manifest.json").c_str());
    } else if (*train) {
      const fs::path man = manifest.empty() ? out / "manifest.json" : fs::path(manifest);
      const auto s = gdtm::cmd_train(resolve_config(g), man, out);
      std::printf("checkpoint %s (%zu parameters, best epoch %zu)\nloss history %s\n", s.checkpoint.c_str(),
                  s.parameter_count, s.best_epoch, s.loss_csv.c_str());
      print_report("held-out", s.heldout);
    } else if (*rollout) {
      const auto s = gdtm::cmd_rollout(checkpoint, graph, excitation, out, capture);
      std::printf("predicted %s\nthroughput %.1f steps/s (%zu steps in %.3f s)\n", s.predicted.c_str(),
                  s.steps_per_second, s.steps, s.seconds);
    } else if (*eval) {
      const auto r = gdtm::cmd_eval(predicted, truth, out, psd);
      std::cout << gdtm::metric_csv_header() << '\n' << gdtm::metric_csv_row(r) << '\n';
    } else if (*transfer) {
      const fs::path ck = checkpoint.empty() ? out / "checkpoint.json" : fs::path(checkpoint);
      std::cout << gdtm::transfer_csv(gdtm::cmd_transfer(resolve_config(g), ck, out));
    } else if (*attention) {
      const auto h = gdtm::cmd_attention(checkpoint, graph, excitation, out);
      std::printf("%zu attention series -> %s\n", h.series.size(), (out / "attention.csv").c_str());
    }
  } catch (const gdtm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return gdtm::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
