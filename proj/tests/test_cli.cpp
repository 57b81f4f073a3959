#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mmner/metrics.hpp"
#include "mmner/runconfig.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string command = std::string(MMNER_CLI_PATH) + " " + args + " 2>&1";
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer;
  while (size_t n = fread(buffer.data(), 1, buffer.size(), pipe)) {
    result.output.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string tmp_dir() {
  static const std::string dir = [] {
    auto path = fs::temp_directory_path() / "mmner_cli_test";
    fs::create_directories(path);
    return path.string();
  }();
  return dir;
}

std::string common_data_args() {
  return " --sidecar " + testutil::data_path("synth_sidecar.tsv") +
         " --glove " + testutil::data_path("glove.synth.200d.txt") +
         " --fasttext " + testutil::data_path("fasttext.synth.300d.txt") +
         " --corpus " + testutil::data_path("synth_train.tmn");
}

}  // namespace

TEST_CASE("run defaults follow the experimental setup") {
  const mmner::RunConfig defaults;
  CHECK(defaults.epochs == 10);
  CHECK(defaults.learning_rate == 8e-5);
  CHECK(defaults.batch_size == 8);
  CHECK(defaults.adam_beta1 == 0.9);
  CHECK(defaults.adam_beta2 == 0.999);
  CHECK(defaults.adam_eps == 1e-8);
  CHECK(defaults.seed == 0);
  CHECK(defaults.model == "cwi");
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("").exit_code == 1);
  CHECK(run_cli("bogus-subcommand").exit_code == 1);
}

TEST_CASE("MMNER_DATA_ROOT resolves relative data paths") {
  const std::string ckpt = tmp_dir() + "/envroot.ckpt";
  const std::string command =
      "MMNER_DATA_ROOT=" + std::string(MMNER_DATA_DIR) +
      " " + std::string(MMNER_CLI_PATH) +
      " train --model cwi --epochs 0 --checkpoint " + ckpt +
      " --corpus synth_train.tmn --sidecar synth_sidecar.tsv"
      " --glove glove.synth.200d.txt --fasttext fasttext.synth.300d.txt 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  std::array<char, 4096> buffer;
  while (size_t n = fread(buffer.data(), 1, buffer.size(), pipe)) {
    output.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  CAPTURE(output);
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(ckpt));
}

TEST_CASE("embedding-size sweep and regularizer ablation flags") {
  // small synthetic embedding files with non-default dimensions
  const std::string glove8 = tmp_dir() + "/glove8.txt";
  const std::string fast8 = tmp_dir() + "/fast8.txt";
  {
    std::ofstream g(glove8), f(fast8);
    for (const char* word : {"Alice", "visited", "Paris"}) {
      g << word;
      f << word;
      for (int d = 0; d < 8; ++d) {
        g << " 0.1";
        f << " -0.2";
      }
      g << "\n";
      f << "\n";
    }
  }
  const RunResult sweep = run_cli(
      "train --model cwi --epochs 0 --glove-dim 8 --fasttext-dim 8 --no-regularizers "
      "--checkpoint " + tmp_dir() + "/sweep.ckpt --corpus " +
      testutil::data_path("synth_train.tmn") + " --sidecar " +
      testutil::data_path("synth_sidecar.tsv") + " --glove " + glove8 + " --fasttext " + fast8);
  CAPTURE(sweep.output);
  CHECK(sweep.exit_code == 0);

  // dimension mismatch against the 200d file is a data error naming the line
  const RunResult mismatch = run_cli(
      "train --model cwi --epochs 0 --glove-dim 8 --checkpoint " + tmp_dir() +
      "/bad.ckpt" + common_data_args());
  CHECK(mismatch.exit_code == 2);
  CHECK(mismatch.output.find("line 1") != std::string::npos);
}

TEST_CASE("missing data file exits with code 2 naming the path") {
  const RunResult r = run_cli("train --model cwi --corpus /does/not/exist.tmn --checkpoint " +
                              tmp_dir() + "/x.ckpt --glove g --fasttext f");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("/does/not/exist.tmn") != std::string::npos);
}

TEST_CASE("epochs=0 writes an initialization checkpoint usable by eval and tag") {
  const std::string ckpt = tmp_dir() + "/init_cwi.ckpt";
  const RunResult train =
      run_cli("train --model cwi --epochs 0 --seed 3 --checkpoint " + ckpt + common_data_args());
  CAPTURE(train.output);
  REQUIRE(train.exit_code == 0);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ckpt + ".json"));
  CHECK(train.output.find("config_hash=") != std::string::npos);

  const RunResult eval = run_cli("eval --checkpoint " + ckpt + common_data_args());
  CAPTURE(eval.output);
  REQUIRE(eval.exit_code == 0);
  CHECK(eval.output.find("Prec.") != std::string::npos);
  CHECK(eval.output.find("overall_f1=") != std::string::npos);
  // parseable numbers
  const auto cells = mmner::parse_report_row(eval.output);
  CHECK(cells.size() == 7);

  // tag: token TAB tag lines, blank line between sentences
  const std::string input = tmp_dir() + "/sentences.txt";
  {
    std::ofstream f(input);
    f << "Alice visited Paris\n";
    f << "see https://t.co/xyz Bob\n";
  }
  const RunResult tag = run_cli("tag --checkpoint " + ckpt + " --input " + input +
                                " --glove " + testutil::data_path("glove.synth.200d.txt") +
                                " --fasttext " + testutil::data_path("fasttext.synth.300d.txt"));
  CAPTURE(tag.output);
  REQUIRE(tag.exit_code == 0);
  size_t token_lines = 0, blank_lines = 0;
  std::istringstream lines(tag.output);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) {
      ++blank_lines;
      continue;
    }
    ++token_lines;
    const size_t tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    CHECK(mmner::TagScheme::index_of(line.substr(tab + 1)) >= 0);
    CHECK(line.substr(0, 4) != "http");  // URL removal applied
  }
  CHECK(token_lines == 5);  // 3 + 2 (URL dropped)
  CHECK(blank_lines == 1);
}

TEST_CASE("empty tag input produces empty output") {
  const std::string ckpt = tmp_dir() + "/init_cwi.ckpt";
  if (!fs::exists(ckpt)) {
    REQUIRE(run_cli("train --model cwi --epochs 0 --seed 3 --checkpoint " + ckpt +
                    common_data_args())
                .exit_code == 0);
  }
  const std::string input = tmp_dir() + "/empty.txt";
  std::ofstream(input).close();
  const RunResult tag = run_cli("tag --checkpoint " + ckpt + " --input " + input + " --glove " +
                                testutil::data_path("glove.synth.200d.txt") + " --fasttext " +
                                testutil::data_path("fasttext.synth.300d.txt"));
  REQUIRE(tag.exit_code == 0);
  CHECK(tag.output.empty());
}

TEST_CASE("train determinism: same seed and config give identical logs") {
  const std::string args = "train --model msb-tiny --epochs 2 --seed 9 --learning-rate 1e-3 "
                           "--vocab " + testutil::data_path("vocab_1k.txt") +
                           " --sidecar " + testutil::data_path("synth_sidecar.tsv") +
                           " --corpus " + testutil::data_path("synth_train.tmn");
  const RunResult a = run_cli(args + " --checkpoint " + tmp_dir() + "/det_a.ckpt");
  const RunResult b = run_cli(args + " --checkpoint " + tmp_dir() + "/det_b.ckpt");
  CAPTURE(a.output);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  // outputs differ only in the checkpoint path line
  auto strip_last_line = [](const std::string& s) {
    const size_t pos = s.rfind("checkpoint=");
    return s.substr(0, pos);
  };
  CHECK(strip_last_line(a.output) == strip_last_line(b.output));

  // checkpoints bit-identical too
  std::ifstream fa(tmp_dir() + "/det_a.ckpt", std::ios::binary);
  std::ifstream fb(tmp_dir() + "/det_b.ckpt", std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ba == bb);
}

TEST_CASE("eval refuses a mismatched config hash unless forced") {
  const std::string ckpt = tmp_dir() + "/mismatch.ckpt";
  REQUIRE(run_cli("train --model cwi --epochs 0 --seed 1 --checkpoint " + ckpt +
                  common_data_args())
              .exit_code == 0);
  // tamper with the sidecar config: different fusion width
  {
    std::ifstream in(ckpt + ".json");
    std::string json((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string needle = "\"fusion_lstm\": 100";
    const size_t pos = json.find(needle);
    REQUIRE(pos != std::string::npos);
    json.replace(pos, needle.size(), "\"fusion_lstm\": 101");
    std::ofstream out(ckpt + ".json");
    out << json;
  }
  const RunResult bad = run_cli("eval --checkpoint " + ckpt + common_data_args());
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("hash") != std::string::npos);
}

TEST_CASE("config file supplies defaults") {
  const std::string cfg = tmp_dir() + "/run.cfg";
  {
    std::ofstream f(cfg);
    f << "model=cwi\n";
    f << "epochs=0\n";
    f << "corpus=" << testutil::data_path("synth_train.tmn") << "\n";
    f << "sidecar=" << testutil::data_path("synth_sidecar.tsv") << "\n";
    f << "glove=" << testutil::data_path("glove.synth.200d.txt") << "\n";
    f << "fasttext=" << testutil::data_path("fasttext.synth.300d.txt") << "\n";
  }
  const RunResult r =
      run_cli("train --config " + cfg + " --checkpoint " + tmp_dir() + "/from_cfg.ckpt");
  CAPTURE(r.output);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(tmp_dir() + "/from_cfg.ckpt"));
}

TEST_CASE("overfit via the CLI, then eval the checkpoint near 1.0") {
  const std::string ckpt = tmp_dir() + "/overfit_msb.ckpt";
  const RunResult train = run_cli(
      "train --model msb-tiny --epochs 50 --learning-rate 1e-3 --stop-at-f1 0.95 --seed 0 "
      "--vocab " + testutil::data_path("vocab_1k.txt") +
      " --sidecar " + testutil::data_path("synth_sidecar.tsv") +
      " --corpus " + testutil::data_path("synth_train.tmn") + " --checkpoint " + ckpt);
  CAPTURE(train.output);
  REQUIRE(train.exit_code == 0);

  const std::string eval_args = "eval --checkpoint " + ckpt +
                                " --vocab " + testutil::data_path("vocab_1k.txt") +
                                " --sidecar " + testutil::data_path("synth_sidecar.tsv") +
                                " --corpus " + testutil::data_path("synth_train.tmn");
  const RunResult eval1 = run_cli(eval_args);
  CAPTURE(eval1.output);
  REQUIRE(eval1.exit_code == 0);
  const auto cells = mmner::parse_report_row(eval1.output);
  CHECK(cells[6] >= 95.0);  // overall F1 as a percentage

  // golden-file stability: identical report on a second run
  const RunResult eval2 = run_cli(eval_args);
  CHECK(eval1.output == eval2.output);
}

TEST_CASE("verify passes on a fresh build and fails under the corruption hook") {
  const auto start = std::chrono::steady_clock::now();
  const RunResult ok = run_cli("verify");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CAPTURE(ok.output);
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("all checks passed") != std::string::npos);
  CHECK(ok.output.find("FAIL") == std::string::npos);
  CHECK(elapsed < 300.0);  // stays inside the five-minute budget

  const RunResult bad = run_cli("verify --corrupt-gradient");
  CHECK(bad.exit_code == 3);
  CHECK(bad.output.find("FAIL") != std::string::npos);
}
