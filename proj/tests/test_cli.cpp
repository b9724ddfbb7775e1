#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ssdpt/checkpoint.hpp"
#include "ssdpt/config.hpp"
#include "ssdpt/io.hpp"
#include "ssdpt/pipeline.hpp"
#include "ssdpt/wav.hpp"

using namespace ssdpt;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SSDPT_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) {
    result.output += buf;
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Small-everything config so CLI round-trips stay fast.
fs::path write_tiny_config(const fs::path& dir) {
  RunConfig cfg = default_config();
  cfg.features.window = 256;
  cfg.features.hop = 128;
  cfg.features.n_mels = 32;
  cfg.segmentation.frame_length = 16;
  cfg.segmentation.hop_train = 4;
  cfg.segmentation.hop_test = 2;
  cfg.mask.kind = MaskKind::kPatch;
  cfg.mask.count = 2;
  cfg.mask.patch_size = 3;
  cfg.model.ffn_width = 8;
  cfg.training.epochs = 2;
  cfg.training.batch_size = 16;
  cfg.training.learning_rate = 1e-3;
  cfg.training.seed = 11;
  const fs::path path = dir / "tiny.json";
  save_config(path.string(), cfg);
  return path;
}

void make_tiny_corpus(const fs::path& dir) {
  SynthSpec spec;
  spec.machine_types = 1;
  spec.sections = 2;
  spec.clips_per_section = 6;
  spec.seed = 77;
  spec.duration_s = 0.3;
  synth_corpus(dir.string(), spec);
}

}  // namespace

TEST_CASE("synth command: success, missing flag and unwritable path") {
  const fs::path dir = fresh_dir("ssdpt_cli_synth");
  const auto ok = run_cli("synth --out " + (dir / "corpus").string() +
                          " --machines 1 --sections 2 --clips 2 --seed 7 "
                          "--duration 0.3");
  CHECK(ok.exit_code == 0);
  CHECK(fs::exists(dir / "corpus" / "machine00" / "train"));

  const auto missing = run_cli("synth --sections 3");
  CHECK(missing.exit_code == 2);

  const auto unwritable = run_cli("synth --out /proc/nope/corpus --clips 1");
  CHECK(unwritable.exit_code == 1);
}

TEST_CASE("synth is byte-idempotent for a fixed seed") {
  const fs::path dir = fresh_dir("ssdpt_cli_idem");
  const std::string flags = " --machines 1 --sections 1 --clips 2 --seed 5 --duration 0.3";
  REQUIRE(run_cli("synth --out " + (dir / "a").string() + flags).exit_code == 0);
  REQUIRE(run_cli("synth --out " + (dir / "b").string() + flags).exit_code == 0);
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (entry.is_regular_file()) {
      const fs::path rel = fs::relative(entry.path(), dir / "a");
      CHECK(file_bytes(entry.path()) == file_bytes(dir / "b" / rel));
    }
  }
}

TEST_CASE("features command writes lmel and manifest files") {
  const fs::path dir = fresh_dir("ssdpt_cli_features");
  make_tiny_corpus(dir / "corpus");
  const fs::path cfg = write_tiny_config(dir);
  const auto r = run_cli("features --data " + (dir / "corpus").string() +
                         " --out " + (dir / "feat").string() + " --config " +
                         cfg.string());
  CHECK(r.exit_code == 0);
  const fs::path lmel = dir / "feat" / "machine00" / "train" /
                        "section_00_source_train_normal_0000.lmel";
  REQUIRE(fs::exists(lmel));
  const LogMelFeature feat = load_feature(lmel.string());
  CHECK(feat.band_count() == 32);
  CHECK(fs::exists(lmel.parent_path() / "section_00_source_train_normal_0000.json"));
}

TEST_CASE("train command: missing config is a usage error") {
  const auto r = run_cli("train --data /tmp --out /tmp --config missing.json");
  CHECK(r.exit_code == 2);
}

TEST_CASE("train, score and eval round-trip on a tiny corpus") {
  const fs::path dir = fresh_dir("ssdpt_cli_train");
  make_tiny_corpus(dir / "corpus");
  const fs::path cfg = write_tiny_config(dir);

  const auto train = run_cli("train --data " + (dir / "corpus").string() +
                             " --out " + (dir / "ckpt").string() +
                             " --config " + cfg.string() + " --threads 2");
  CHECK(train.exit_code == 0);
  REQUIRE(fs::exists(dir / "ckpt" / "machine00.ckpt"));
  // One log line per epoch.
  std::ifstream log(dir / "ckpt" / "machine00_train_log.jsonl");
  int lines = 0;
  std::string line;
  while (std::getline(log, line)) {
    ++lines;
  }
  CHECK(lines == 2);

  const auto score = run_cli("score --data " + (dir / "corpus").string() +
                             " --ckpt " + (dir / "ckpt").string() + " --out " +
                             (dir / "scores.csv").string() + " --config " +
                             cfg.string());
  CHECK(score.exit_code == 0);
  const auto records = load_scores_csv((dir / "scores.csv").string());
  CHECK(records.size() == 12);  // 2 sections x 6 test clips

  // beta 0 collapses A to A_c.
  const auto score0 = run_cli("score --data " + (dir / "corpus").string() +
                              " --ckpt " + (dir / "ckpt").string() + " --out " +
                              (dir / "scores0.csv").string() + " --config " +
                              cfg.string() + " --beta 0");
  CHECK(score0.exit_code == 0);
  for (const auto& r : load_scores_csv((dir / "scores0.csv").string())) {
    CHECK(r.score_total == r.score_cls);
  }

  // Gamma threshold fitting over the train split prints a tau.
  const auto gamma = run_cli("score --data " + (dir / "corpus").string() +
                             " --ckpt " + (dir / "ckpt").string() + " --out " +
                             (dir / "scores_train.csv").string() + " --config " +
                             cfg.string() + " --split train --fit-gamma-fpr 0.1");
  CHECK(gamma.exit_code == 0);
  CHECK(gamma.output.find("\"tau\":") != std::string::npos);
}

TEST_CASE("train --epochs 0 writes the untouched initialization") {
  const fs::path dir = fresh_dir("ssdpt_cli_epoch0");
  make_tiny_corpus(dir / "corpus");
  const fs::path cfg_path = write_tiny_config(dir);

  const std::string base = "train --data " + (dir / "corpus").string() +
                           " --config " + cfg_path.string() + " --epochs 0";
  REQUIRE(run_cli(base + " --out " + (dir / "a").string()).exit_code == 0);
  REQUIRE(run_cli(base + " --out " + (dir / "b").string()).exit_code == 0);
  CHECK(file_bytes(dir / "a" / "machine00.ckpt") ==
        file_bytes(dir / "b" / "machine00.ckpt"));

  // And it matches an init dump built through the library.
  const RunConfig cfg = load_config(cfg_path.string());
  DptConfig mc = cfg.model;
  mc.frame_length = cfg.segmentation.frame_length;
  mc.bands = cfg.features.n_mels;
  mc.num_ids = 2;
  const DptModel init = DptModel::init(
      mc, derive_seed(machine_seed(cfg.training.seed, "machine00"), 0));
  const DptModel loaded = load_checkpoint((dir / "a" / "machine00.ckpt").string());
  const auto a = init.parameters();
  const auto b = loaded.parameters();
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(*a[i].value == *b[i].value);
  }
}

TEST_CASE("score flags clips shorter than the frame length") {
  const fs::path dir = fresh_dir("ssdpt_cli_short");
  make_tiny_corpus(dir / "corpus");
  const fs::path cfg = write_tiny_config(dir);
  REQUIRE(run_cli("train --data " + (dir / "corpus").string() + " --out " +
                  (dir / "ckpt").string() + " --config " + cfg.string() +
                  " --epochs 0")
              .exit_code == 0);

  // Replace one test clip with 0.05 s of audio (fewer than 16 frames).
  Waveform tiny;
  tiny.samples.assign(800, 0.01);
  const fs::path victim = dir / "corpus" / "machine00" / "source_test" /
                          "section_00_source_test_normal_0000.wav";
  REQUIRE(fs::exists(victim));
  write_wav(victim.string(), tiny);

  const auto r = run_cli("score --data " + (dir / "corpus").string() +
                         " --ckpt " + (dir / "ckpt").string() + " --out " +
                         (dir / "scores.csv").string() + " --config " +
                         cfg.string());
  CHECK(r.exit_code == 0);  // degraded, not fatal
  int error_rows = 0;
  for (const auto& rec : load_scores_csv((dir / "scores.csv").string())) {
    if (!rec.valid) {
      ++error_rows;
      CHECK(rec.clip_id.find("section_00_source_test_normal_0000") !=
            std::string::npos);
    }
  }
  CHECK(error_rows == 1);
}

TEST_CASE("eval fixtures: perfect separation and harmonic mean") {
  const fs::path dir = fresh_dir("ssdpt_cli_eval");
  {
    std::ofstream csv(dir / "perfect.csv");
    csv << "clip_id,machine_type,section,domain,label,A_c,A_r,A\n"
        << "a1,fan,00,source,anomaly,0,0,5\n"
        << "a2,fan,00,source,anomaly,0,0,6\n"
        << "n1,fan,00,source,normal,0,0,1\n"
        << "n2,fan,00,source,normal,0,0,2\n";
  }
  const auto perfect = run_cli("eval --scores " + (dir / "perfect.csv").string() +
                               " --out-json " + (dir / "perfect.json").string() +
                               " --out-csv " + (dir / "perfect_report.csv").string() +
                               " --p 0.5");
  CHECK(perfect.exit_code == 0);
  auto j = nlohmann::json::parse(std::ifstream(dir / "perfect.json"));
  CHECK(j["overall"]["h_auc"].get<double>() == 1.0);

  {
    std::ofstream csv(dir / "mixed.csv");
    csv << "clip_id,machine_type,section,domain,label,A_c,A_r,A\n"
        << "a1,fan,00,source,anomaly,0,0,5\n"
        << "n1,fan,00,source,normal,0,0,1\n"
        << "a2,fan,01,source,anomaly,0,0,3\n"
        << "n2,fan,01,source,normal,0,0,3\n";
  }
  const auto mixed = run_cli("eval --scores " + (dir / "mixed.csv").string() +
                             " --out-json " + (dir / "mixed.json").string() +
                             " --p 1.0");
  CHECK(mixed.exit_code == 0);
  auto jm = nlohmann::json::parse(std::ifstream(dir / "mixed.json"));
  CHECK(jm["machines"][0]["h_auc"].get<double>() ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));

  // p = 1 makes pAUC equal AUC cell by cell.
  for (const auto& cell : jm["cells"]) {
    CHECK(cell["auc"].get<double>() == cell["pauc"].get<double>());
  }

  const auto missing = run_cli("eval --scores " + (dir / "nope.csv").string());
  CHECK(missing.exit_code == 1);
}

TEST_CASE("eval writes ROC points when asked") {
  const fs::path dir = fresh_dir("ssdpt_cli_roc");
  {
    std::ofstream csv(dir / "scores.csv");
    csv << "clip_id,machine_type,section,domain,label,A_c,A_r,A\n"
        << "a1,fan,00,source,anomaly,0,0,5\n"
        << "a2,fan,00,source,anomaly,0,0,2\n"
        << "n1,fan,00,source,normal,0,0,1\n"
        << "n2,fan,00,source,normal,0,0,3\n";
  }
  const auto r = run_cli("eval --scores " + (dir / "scores.csv").string() +
                         " --roc " + (dir / "roc.csv").string() + " --p 0.5");
  CHECK(r.exit_code == 0);
  std::ifstream roc(dir / "roc.csv");
  std::string header;
  std::getline(roc, header);
  CHECK(header == "machine_type,section,domain,fpr,tpr");
  int points = 0;
  std::string line;
  while (std::getline(roc, line)) {
    ++points;
  }
  CHECK(points >= 3);
}
