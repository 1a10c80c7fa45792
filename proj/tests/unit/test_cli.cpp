/* Copyright 2026 The featlock Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "featlock/checkpoint.hpp"
#include "featlock/data.hpp"
#include "featlock/errors.hpp"
#include "featlock/experiment.hpp"
#include "featlock/image_io.hpp"
#include "featlock/reports.hpp"
#include "featlock/voc.hpp"
#include "test_support.hpp"

namespace featlock {
namespace {

namespace fs = std::filesystem;
using testing::slurp;
using testing::TempDir;

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Small synthetic experiment that trains in seconds.
ExperimentConfig small_experiment(const std::string& name, std::vector<int> sites) {
  ExperimentConfig cfg = default_experiment();
  cfg.name = name;
  cfg.dataset.train.num_images = 200;
  cfg.dataset.test.num_images = 60;
  cfg.detector.encrypted_sites = std::move(sites);
  cfg.train.schedule = {{200, 1e-2}};
  cfg.attack.n_wrong_keys = 2;
  return cfg;
}

fs::path write_config(const fs::path& dir, const ExperimentConfig& cfg) {
  const fs::path p = dir / (cfg.name + ".json");
  write_text_file(p, serialize_experiment(cfg));
  return p;
}

double parse_map(const std::string& stdout_text) {
  const auto pos = stdout_text.find("mAP ");
  if (pos == std::string::npos) return -1.0;
  return std::stod(stdout_text.substr(pos + 4));
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

TEST(Keygen, WritesRequestedLength) {
  TempDir tmp("cli_keygen");
  const auto r = invoke({"keygen", "--out", (tmp.path() / "k.bin").string(), "--length", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(fs::file_size(tmp.path() / "k.bin"), 16u);
  const SecretKey key = cli::read_key_file(tmp.path() / "k.bin");
  EXPECT_NE(r.out.find("fingerprint " + key.fingerprint()), std::string::npos);
}

TEST(Keygen, TwoInvocationsDiffer) {
  TempDir tmp("cli_keygen2");
  ASSERT_EQ(invoke({"keygen", "--out", (tmp.path() / "a.bin").string()}).code, 0);
  ASSERT_EQ(invoke({"keygen", "--out", (tmp.path() / "b.bin").string()}).code, 0);
  EXPECT_NE(cli::read_key_file(tmp.path() / "a.bin").fingerprint(),
            cli::read_key_file(tmp.path() / "b.bin").fingerprint());
}

TEST(Keygen, PermutationStableAcrossReads) {
  TempDir tmp("cli_keygen3");
  const fs::path p = tmp.path() / "k.bin";
  ASSERT_EQ(invoke({"keygen", "--out", p.string()}).code, 0);
  EXPECT_EQ(derive_permutation(cli::read_key_file(p), 8), derive_permutation(cli::read_key_file(p), 8));
}

TEST(Keygen, RejectsZeroLength) {
  TempDir tmp("cli_keygen4");
  EXPECT_EQ(invoke({"keygen", "--out", (tmp.path() / "k.bin").string(), "--length", "0"}).code, cli::kExitUsage);
}

TEST(KeyFile, EmptyFileRejected) {
  TempDir tmp("cli_keyfile");
  write_text_file(tmp.path() / "empty.bin", "");
  EXPECT_THROW(cli::read_key_file(tmp.path() / "empty.bin"), ConfigError);
  EXPECT_THROW(cli::read_key_file(tmp.path() / "missing.bin"), IoError);
}

TEST(Usage, NoSubcommandIsUsageError) {
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
}

TEST(Usage, HelpExitsCleanly) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sweep"), std::string::npos);
}

TEST(Usage, ConfigPrintsDefaultExperiment) {
  const auto r = invoke({"config"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(parse_experiment(r.out), default_experiment());
}

TEST(Usage, SweepNeedsExactlyOneAxis) {
  TempDir tmp("cli_sweep_usage");
  const fs::path cfg = write_config(tmp.path(), small_experiment("s", {}));
  const fs::path key = tmp.path() / "k.bin";
  ASSERT_EQ(invoke({"keygen", "--out", key.string()}).code, 0);
  EXPECT_EQ(invoke({"sweep", "--config", cfg.string(), "--key", key.string()}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"sweep", "--config", cfg.string(), "--key", key.string(), "--sites", "2", "--shf-blocks", "4"})
                .code,
            cli::kExitUsage);
}

TEST(Usage, BadConfigSurfacesModuleError) {
  TempDir tmp("cli_badcfg");
  write_text_file(tmp.path() / "bad.json", R"({"version": 1, "secret_key": "00"})");
  const auto r = invoke({"train", "--config", (tmp.path() / "bad.json").string(), "--out", tmp.path().string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Usage, EncryptedTrainingNeedsKey) {
  TempDir tmp("cli_trainkey");
  const fs::path cfg = write_config(tmp.path(), small_experiment("k", {2}));
  EXPECT_EQ(invoke({"train", "--config", cfg.string(), "--out", tmp.path().string()}).code, cli::kExitUsage);
}

TEST(Usage, CorruptCheckpointFails) {
  TempDir tmp("cli_corrupt");
  write_text_file(tmp.path() / "ckpt", "not a checkpoint");
  const auto r = invoke({"eval", "--checkpoint", (tmp.path() / "ckpt").string(), "--mode", "plain"});
  EXPECT_EQ(r.code, cli::kExitFailure);
}

TEST(Generate, ExportsLoadableDataset) {
  TempDir tmp("cli_generate");
  ExperimentConfig cfg = small_experiment("g", {});
  cfg.dataset.train.num_images = 4;
  cfg.dataset.test.num_images = 3;
  const fs::path cfg_path = write_config(tmp.path(), cfg);
  const fs::path dest = tmp.path() / "data";
  const auto r = invoke({"generate", "--config", cfg_path.string(), "--dest", dest.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset test_set = load_dataset(dest, "test", 0);
  ASSERT_EQ(test_set.samples.size(), 3u);
  EXPECT_EQ(test_set.class_names, cfg.dataset.train.classes);
}

// One trained site-2 model shared by the end-to-end tests.
class EndToEnd : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli_e2e");
    key_ = dir_->path() / "key.bin";
    cfg_ = write_config(dir_->path(), small_experiment("smoke", {2}));
    const auto k = invoke({"keygen", "--out", key_.string()});
    ASSERT_EQ(k.code, 0) << k.err;
    const auto t = invoke({"train", "--config", cfg_.string(), "--key", key_.string(), "--out", runs().string()});
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path runs() { return dir_->path() / "runs"; }
  static fs::path run_dir() { return runs() / "smoke"; }
  static fs::path ckpt() { return run_dir() / "checkpoint"; }

  static TempDir* dir_;
  static fs::path key_;
  static fs::path cfg_;
};

TempDir* EndToEnd::dir_ = nullptr;
fs::path EndToEnd::key_;
fs::path EndToEnd::cfg_;

TEST_F(EndToEnd, LayoutAndLog) {
  EXPECT_TRUE(fs::is_regular_file(ckpt()));
  EXPECT_TRUE(fs::is_directory(run_dir() / "reports"));
  EXPECT_TRUE(fs::is_directory(run_dir() / "plots"));
  const std::string log = slurp(run_dir() / "logs" / "train.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 201);
  EXPECT_EQ(load_checkpoint(ckpt()).iterations, 200u);
}

TEST_F(EndToEnd, CorrectMapIsAProbability) {
  const auto r = invoke({"eval", "--checkpoint", ckpt().string(), "--mode", "correct", "--key", key_.string(), "--out",
                         runs().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const double m = parse_map(r.out);
  EXPECT_GE(m, 0.0);
  EXPECT_LE(m, 1.0);
  const std::string csv = slurp(run_dir() / "reports" / "eval_correct.csv");
  EXPECT_EQ(csv.rfind("protocol,class,ap\n", 0), 0u);
  EXPECT_NE(csv.find("correct,mAP,"), std::string::npos);
}

TEST_F(EndToEnd, PlainWithKeyIsUsageError) {
  const auto r = invoke({"eval", "--checkpoint", ckpt().string(), "--mode", "plain", "--key", key_.string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("plain"), std::string::npos);
}

TEST_F(EndToEnd, KeyedModesNeedKey) {
  EXPECT_EQ(invoke({"eval", "--checkpoint", ckpt().string(), "--mode", "correct"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"eval", "--checkpoint", ckpt().string(), "--mode", "incorrect"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"eval", "--checkpoint", ckpt().string(), "--mode", "baseline"}).code, cli::kExitUsage);
}

TEST_F(EndToEnd, PlainEvalWithoutKey) {
  const auto r = invoke({"eval", "--checkpoint", ckpt().string(), "--mode", "plain", "--out", runs().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::is_regular_file(run_dir() / "reports" / "eval_plain.csv"));
}

TEST_F(EndToEnd, AttackWritesTableAndPlot) {
  const auto r = invoke({"attack", "--checkpoint", ckpt().string(), "--key", key_.string(), "--n-keys", "2", "--seed",
                         "7", "--out", runs().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(run_dir() / "reports" / "attack.csv");
  EXPECT_EQ(csv.rfind("site,correct,plain,incorrect_mean,incorrect_std\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(slurp(run_dir() / "plots" / "attack.svg").rfind("<svg", 0), 0u);
}

TEST_F(EndToEnd, RenderDrawsImage) {
  const Dataset test_set = load_test_split(small_experiment("smoke", {2}));
  const fs::path png = dir_->path() / "input.png";
  write_png(png, test_set.samples.front().image);
  const auto r = invoke({"render", "--checkpoint", ckpt().string(), "--image", png.string(), "--mode", "correct",
                         "--key", key_.string(), "--min-score", "0.1", "--out", runs().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Image drawn = read_png(run_dir() / "plots" / "render_input_correct.png");
  EXPECT_EQ(drawn.height(), test_set.samples.front().image.height());
}

TEST_F(EndToEnd, NoKeyBytesInOutputs) {
  ASSERT_EQ(invoke({"eval", "--checkpoint", ckpt().string(), "--mode", "correct", "--key", key_.string(), "--out",
                    runs().string()})
                .code,
            0);
  const SecretKey key = cli::read_key_file(key_);
  const std::string raw(key.bytes().begin(), key.bytes().end());
  std::string hex;
  for (auto b : key.bytes()) {
    static constexpr char kDigits[] = "0123456789abcdef";
    hex += kDigits[b >> 4];
    hex += kDigits[b & 15];
  }
  bool fingerprint_seen = false;
  for (const auto& f : files_under(run_dir())) {
    const std::string body = slurp(f);
    EXPECT_EQ(body.find(raw), std::string::npos) << f;
    EXPECT_EQ(body.find(hex), std::string::npos) << f;
    fingerprint_seen |= body.find(key.fingerprint()) != std::string::npos;
  }
  EXPECT_TRUE(fingerprint_seen);
}

TEST_F(EndToEnd, RepeatedRunIsByteIdentical) {
  const fs::path other = dir_->path() / "rerun";
  const auto t = invoke({"train", "--config", cfg_.string(), "--key", key_.string(), "--out", other.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  for (const char* mode : {"correct", "incorrect"}) {
    for (const fs::path& root : {runs(), other}) {
      ASSERT_EQ(invoke({"eval", "--checkpoint", (root / "smoke" / "checkpoint").string(), "--mode", mode, "--key",
                        key_.string(), "--out", root.string()})
                    .code,
                0);
    }
  }
  EXPECT_EQ(slurp(ckpt()), slurp(other / "smoke" / "checkpoint"));
  EXPECT_EQ(slurp(run_dir() / "logs" / "train.csv"), slurp(other / "smoke" / "logs" / "train.csv"));
  for (const char* name : {"eval_correct.csv", "eval_incorrect.csv"}) {
    EXPECT_EQ(slurp(run_dir() / "reports" / name), slurp(other / "smoke" / "reports" / name)) << name;
  }
}

TEST(Sweep, SitesGiveOneRowPerSitePlusBaseline) {
  TempDir tmp("cli_sweep");
  ExperimentConfig cfg = small_experiment("sweep", {});
  cfg.dataset.train.num_images = 40;
  cfg.dataset.test.num_images = 20;
  cfg.train.schedule = {{5, 1e-2}};
  cfg.train.batch_size = 8;
  const fs::path cfg_path = write_config(tmp.path(), cfg);
  const fs::path key = tmp.path() / "k.bin";
  ASSERT_EQ(invoke({"keygen", "--out", key.string()}).code, 0);
  const auto r = invoke({"sweep", "--config", cfg_path.string(), "--key", key.string(), "--sites", "2,4,6", "--n-keys",
                         "1", "--out", tmp.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(tmp.path() / "sweep" / "reports" / "sweep_sites.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // header + baseline + 3 sites
  EXPECT_TRUE(fs::is_regular_file(tmp.path() / "sweep" / "plots" / "sweep_sites.svg"));
  EXPECT_TRUE(fs::is_regular_file(tmp.path() / "sweep" / "checkpoints" / "site4"));
}

TEST(Sweep, ShfBlocksIncludeProposedRow) {
  TempDir tmp("cli_sweep_shf");
  ExperimentConfig cfg = small_experiment("shf", {});
  cfg.dataset.train.num_images = 40;
  cfg.dataset.test.num_images = 20;
  cfg.train.schedule = {{5, 1e-2}};
  cfg.train.batch_size = 8;
  const fs::path cfg_path = write_config(tmp.path(), cfg);
  const fs::path key = tmp.path() / "k.bin";
  ASSERT_EQ(invoke({"keygen", "--out", key.string()}).code, 0);
  const auto bad = invoke({"sweep", "--config", cfg_path.string(), "--key", key.string(), "--shf-blocks", "5",
                           "--out", tmp.path().string()});
  EXPECT_EQ(bad.code, cli::kExitFailure);
  const auto r = invoke({"sweep", "--config", cfg_path.string(), "--key", key.string(), "--shf-blocks", "1,48",
                         "--n-keys", "1", "--out", tmp.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(tmp.path() / "shf" / "reports" / "sweep_shf.csv");
  EXPECT_EQ(csv.rfind("method,block_size,correct,plain,incorrect_mean\n", 0), 0u);
  EXPECT_NE(csv.find("proposed,"), std::string::npos);
  EXPECT_NE(csv.find("shf,48,"), std::string::npos);
}

}  // namespace
}  // namespace featlock
