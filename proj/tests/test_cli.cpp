#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gdtm/checkpoint.hpp"
#include "gdtm/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(GDTM_BINARY) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const fs::path& root() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "gdtm_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string tiny_config(const std::string& extra_system = "", const std::string& model = "homogeneous",
                        const std::string& training = "") {
  return "[system]\ndof = 4\n" + extra_system +
         "[excitation]\nimpulse_count = 2\nharmonic_count = 2\nrandom_count = 2\n"
         "[solver]\nduration = 2\n"
         "[training]\nepochs = 4\n" + training +
         "[model]\nkind = " + model + "\n"
         "[transfer]\ntargets = 5\ncases = 0,2\n";
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = root() / name;
  gdtm::write_text_file(p, text);
  return p;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("generate and train are deterministic") {
  const auto cfg = write_config("tiny.ini", tiny_config());
  for (const char* d : {"a", "b"}) {
    const auto out = root() / d;
    const auto g = run("--config " + q(cfg) + " --seed 3 --out " + q(out) + " generate");
    CHECK(g.code == 0);
    CHECK(g.out.find("generated 6 episodes (200 steps x 4 vertices)") != std::string::npos);
    const auto t = run("--seed 3 --out " + q(out) + " train");
    CHECK(t.code == 0);
    CHECK(t.out.find("held-out nmse=") != std::string::npos);
  }
  CHECK(gdtm::read_text_file(root() / "a/checkpoint.json") == gdtm::read_text_file(root() / "b/checkpoint.json"));
  CHECK(gdtm::read_text_file(root() / "a/loss.csv") == gdtm::read_text_file(root() / "b/loss.csv"));
  CHECK(gdtm::read_text_file(root() / "a/episodes/episode_000_impulse.csv") ==
        gdtm::read_text_file(root() / "b/episodes/episode_000_impulse.csv"));
  const auto loss = gdtm::read_text_file(root() / "a/loss.csv");
  CHECK(loss.rfind("epoch,train_loss,test_loss\n", 0) == 0);
  CHECK(fs::exists(root() / "a/heldout.csv"));

  const auto other = root() / "c";
  CHECK(run("--config " + q(cfg) + " --seed 4 --out " + q(other) + " generate").code == 0);
  CHECK(gdtm::read_text_file(root() / "a/episodes/episode_000_impulse.csv") !=
        gdtm::read_text_file(other / "episodes/episode_000_impulse.csv"));
}

TEST_CASE("two-step episodes") {
  const auto cfg = write_config("short.ini", "[system]\ndof = 3\n[solver]\nduration = 0.02\n");
  const auto g = run("--config " + q(cfg) + " --out " + q(root() / "short") + " generate");
  CHECK(g.code == 0);
  CHECK(gdtm::load_episode(root() / "short/episodes/episode_029_random.csv").steps() == 2);
}

TEST_CASE("heterogeneous checkpoint input width") {
  const auto cfg = write_config("het.ini", tiny_config("type_pattern = 0,1\n", "heterogeneous"));
  const auto out = root() / "het";
  REQUIRE(run("--config " + q(cfg) + " --out " + q(out) + " generate").code == 0);
  REQUIRE(run("--out " + q(out) + " train").code == 0);
  const auto ck = nlohmann::json::parse(gdtm::read_text_file(out / "checkpoint.json"));
  CHECK(ck["layer_dims"][0] == 7);
  CHECK(ck["adjacency"]["matrix_count"] == 3);
}

TEST_CASE("rollout, eval and transfer") {
  const auto a = root() / "a";
  REQUIRE(fs::exists(a / "checkpoint.json"));
  gdtm::write_text_file(root() / "six.graph",
                        "vertex_count=6\ngrounded=0\nedge=0,1,0,1\nedge=1,2,0,1\nedge=2,3,0,1\nedge=3,4,0,1\n"
                        "edge=4,5,0,1\n");
  gdtm::Matrix e = gdtm::Matrix::Zero(50, 6);
  e(0, 5) = 1000.0;
  std::ostringstream ex;
  gdtm::write_excitation_csv(ex, e, 0.01);
  gdtm::write_text_file(root() / "six_exc.csv", ex.str());

  const auto r = run("--out " + q(root() / "roll") + " rollout " + q(a / "checkpoint.json") + " " +
                     q(root() / "six.graph") + " " + q(root() / "six_exc.csv"));
  CHECK(r.code == 0);
  CHECK(r.out.find("throughput ") != std::string::npos);
  CHECK(r.out.find(" steps/s") != std::string::npos);
  const auto pred = gdtm::load_episode(root() / "roll/predicted.csv");
  CHECK(pred.steps() == 50);
  CHECK(pred.vertex_count() == 6);

  const auto truth = a / "episodes/episode_000_impulse.csv";
  const auto ev = run("--out " + q(root() / "ev") + " eval " + q(truth) + " " + q(truth) + " --psd");
  CHECK(ev.code == 0);
  CHECK(ev.out == "nmse,r2,pe_pct,n\n0,1,0,800\n");
  CHECK(gdtm::read_text_file(root() / "ev/metrics.csv") == "nmse,r2,pe_pct,n\n0,1,0,800\n");
  for (int v = 0; v < 4; ++v) {
    CHECK(fs::exists(root() / ("ev/psd_true_v" + std::to_string(v) + ".csv")));
    CHECK(fs::exists(root() / ("ev/psd_pred_v" + std::to_string(v) + ".csv")));
  }

  const auto missing = run("--out " + q(root() / "roll4") + " rollout " + q(a / "checkpoint.json") + " " +
                           q(root() / "four.graph") + " " + q(truth));
  CHECK(missing.code == 2);
  // An episode CSV is accepted as the rollout excitation.
  gdtm::write_text_file(root() / "four.graph",
                        "vertex_count=4\ngrounded=0\nedge=0,1,0,1\nedge=1,2,0,1\nedge=2,3,0,1\n");
  CHECK(run("--out " + q(root() / "roll4") + " rollout " + q(a / "checkpoint.json") + " " + q(root() / "four.graph") +
            " " + q(truth))
            .code == 0);

  const auto ev4 = run("--out " + q(root() / "ev4") + " eval " + q(root() / "roll4/predicted.csv") + " " + q(truth));
  CHECK(ev4.code == 0);
  const auto lib = gdtm::evaluate_rollout(gdtm::load_episode(root() / "roll4/predicted.csv"), gdtm::load_episode(truth));
  CHECK(ev4.out == gdtm::metric_csv_header() + "\n" + gdtm::metric_csv_row(lib) + "\n");

  const auto tr = run("--out " + q(a) + " transfer");
  CHECK(tr.code == 0);
  CHECK(tr.out.rfind("label,dof,nmse,r2,pe_pct,n\ndof_5,5,", 0) == 0);
  CHECK(tr.out.find("\ncase_0,4,") != std::string::npos);
  CHECK(tr.out.find("\ncase_2,4,") != std::string::npos);
  CHECK(fs::exists(a / "transfer.csv"));
}

TEST_CASE("exit codes") {
  const auto a = root() / "a";
  CHECK(run("frobnicate").code == 2);
  CHECK(run("--bogus generate").code == 2);
  CHECK(run("--config " + q(write_config("bad.ini", "[system]\ncolour = red\n")) + " --out " + q(root() / "x") +
            " generate")
            .code == 2);
  CHECK(run("--config " + q(root() / "missing.ini") + " generate").code == 2);

  const auto wild = write_config("wild.ini", tiny_config("", "homogeneous", "learning_rate = 1e300\n"));
  const auto w = root() / "wild";
  REQUIRE(run("--config " + q(wild) + " --out " + q(w) + " generate").code == 0);
  CHECK(run("--out " + q(w) + " train").code == 3);

  CHECK(run("--out " + q(root() / "y") + " rollout " + q(a / "checkpoint.json") + " " + q(root() / "six.graph") + " " +
            q(a / "episodes/episode_000_impulse.csv"))
            .code == 4);
  CHECK(run("--out " + q(root() / "y") + " rollout --capture-attention " + q(a / "checkpoint.json") + " " +
            q(root() / "six.graph") + " " + q(root() / "six_exc.csv"))
            .code == 4);
  gdtm::Matrix e = gdtm::Matrix::Zero(10, 6);
  std::ostringstream ex;
  gdtm::write_excitation_csv(ex, e, 0.02);
  gdtm::write_text_file(root() / "slow.csv", ex.str());
  CHECK(run("--out " + q(root() / "y") + " rollout " + q(a / "checkpoint.json") + " " + q(root() / "six.graph") + " " +
            q(root() / "slow.csv"))
            .code == 4);
  CHECK(run("--out " + q(root() / "y") + " attention " + q(a / "checkpoint.json") + " " + q(root() / "six.graph") +
            " " + q(root() / "six_exc.csv"))
            .code == 4);
}

TEST_CASE("attention command") {
  const auto cfg = write_config("gat.ini", tiny_config("type_pattern = 0,1\n", "gat"));
  const auto out = root() / "gat";
  REQUIRE(run("--config " + q(cfg) + " --out " + q(out) + " generate").code == 0);
  REQUIRE(run("--out " + q(out) + " train").code == 0);
  gdtm::write_text_file(root() / "two_type.graph",
                        "vertex_count=4\ngrounded=0\nedge=0,1,0,1\nedge=1,2,1,1\nedge=2,3,0,1\n");
  const auto truth = out / "episodes/episode_003_harmonic.csv";
  const auto r = run("--out " + q(root() / "att") + " attention " + q(out / "checkpoint.json") + " " +
                     q(root() / "two_type.graph") + " " + q(truth));
  CHECK(r.code == 0);
  const auto csv = gdtm::read_text_file(root() / "att/attention.csv");
  CHECK(csv.rfind("step,time_s,series,from,to,type,direction,alpha\n", 0) == 0);
  CHECK(csv.find(",t1:1->2,1,2,1,forward,") != std::string::npos);
  CHECK(csv.find(",t1:2->1,2,1,1,backward,") != std::string::npos);
  std::size_t stft_files = 0;
  for (const auto& f : fs::directory_iterator(root() / "att")) {
    if (f.path().filename().string().rfind("attention_stft_", 0) == 0) ++stft_files;
  }
  CHECK(stft_files >= 6);

  const auto cap = run("--out " + q(root() / "cap") + " rollout --capture-attention " + q(out / "checkpoint.json") +
                       " " + q(root() / "two_type.graph") + " " + q(truth));
  CHECK(cap.code == 0);
  CHECK(fs::exists(root() / "cap/attention.csv"));
}
