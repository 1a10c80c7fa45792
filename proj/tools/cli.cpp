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

#include "cli.hpp"

#include <openssl/rand.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include "featlock/attacks.hpp"
#include "featlock/checkpoint.hpp"
#include "featlock/errors.hpp"
#include "featlock/evaluation.hpp"
#include "featlock/experiment.hpp"
#include "featlock/image_io.hpp"
#include "featlock/reports.hpp"
#include "featlock/training.hpp"
#include "featlock/voc.hpp"

namespace featlock::cli {
namespace fs = std::filesystem;

SecretKey read_key_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open key file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw ConfigError("key file " + path.string() + " is empty");
  return SecretKey(std::move(bytes));
}

SecretKey generate_key_file(const fs::path& path, std::size_t length) {
  if (length == 0) throw ConfigError("key length must be positive");
  std::vector<std::uint8_t> bytes(length);
  if (RAND_bytes(bytes.data(), static_cast<int>(bytes.size())) != 1) throw IoError("system random generator failed");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write key file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on key file " + path.string());
  return SecretKey(std::move(bytes));
}

namespace {

struct Options {
  std::string config;
  std::string key;
  std::string out;
  std::string checkpoint;
  std::string mode = "correct";
  std::string image;
  std::string dest;
  std::size_t n_keys = 0;
  std::optional<std::uint64_t> seed;
  std::size_t length = 16;
  std::size_t iterations = 0;
  std::vector<int> sites;
  std::vector<std::size_t> shf_blocks;
  int proposed_site = 2;
  double min_score = 0.3;
};

std::optional<fs::path> out_root(const Options& o) {
  if (o.out.empty()) return std::nullopt;
  return fs::path(o.out);
}

bool model_is_keyed(const DetectorConfig& dc) { return !dc.encrypted_sites.empty() || dc.input_block_size > 0; }

std::optional<SecretKey> optional_key(const Options& o) {
  if (o.key.empty()) return std::nullopt;
  return read_key_file(o.key);
}

SecretKey required_key(const Options& o, const char* why) {
  if (o.key.empty()) throw UsageError(std::string("--key is required ") + why);
  return read_key_file(o.key);
}

// Experiment for a checkpoint: --config when given, else the echo stored at training time.
ExperimentConfig checkpoint_experiment(const Options& o, const Checkpoint& ckpt) {
  if (!o.config.empty()) return load_experiment(o.config);
  if (ckpt.experiment.empty()) throw UsageError("checkpoint has no embedded experiment; pass --config");
  return parse_experiment(ckpt.experiment);
}

KeyMode key_mode(const Options& o, const DetectorConfig& dc) {
  const Protocol p = protocol_from_name(o.mode);
  switch (p) {
    case Protocol::kPlain:
      if (!o.key.empty()) throw UsageError("--mode plain takes no key; remove --key");
      return KeyMode::plain();
    case Protocol::kIncorrect:
      return KeyMode::incorrect(required_key(o, "for --mode incorrect"));
    case Protocol::kCorrect:
      if (!model_is_keyed(dc)) {
        if (!o.key.empty()) throw UsageError("model is not encrypted; run --mode correct without --key");
        return KeyMode::baseline();
      }
      return KeyMode::correct(required_key(o, "for --mode correct on an encrypted model"));
    case Protocol::kBaseline:
      if (model_is_keyed(dc)) throw UsageError("--mode baseline only applies to unencrypted models");
      if (!o.key.empty()) throw UsageError("--mode baseline takes no key");
      return KeyMode::baseline();
  }
  throw UsageError("unknown mode " + o.mode);
}

WrongKeyOptions wrong_key_options(const Options& o, const ExperimentConfig& cfg) {
  WrongKeyOptions wk;
  wk.n = o.n_keys ? o.n_keys : cfg.attack.n_wrong_keys;
  wk.seed = o.seed.value_or(cfg.attack.seed);
  return wk;
}

int cmd_keygen(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("keygen needs --out <key file>");
  const SecretKey key = generate_key_file(o.out, o.length);
  out << "wrote " << key.size() << "-byte key to " << o.out << "\nfingerprint " << key.fingerprint() << "\n";
  return kExitOk;
}

int cmd_config(const Options& o, std::ostream& out) {
  const std::string text = serialize_experiment(default_experiment());
  if (o.out.empty()) {
    out << text;
  } else {
    write_text_file(o.out, text);
    out << "wrote " << o.out << "\n";
  }
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  ExperimentConfig cfg = load_experiment(o.config);
  if (cfg.dataset.kind != DatasetSource::Kind::kSynthetic) throw UsageError("generate needs a synthetic dataset config");
  if (o.dest.empty()) throw UsageError("generate needs --dest <directory>");
  const Dataset train_set = load_train_split(cfg);
  const Dataset test_set = load_test_split(cfg);
  write_dataset(o.dest, {{cfg.dataset.train_split, &train_set}, {cfg.dataset.test_split, &test_set}});
  out << "wrote " << train_set.samples.size() << " + " << test_set.samples.size() << " images to " << o.dest << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_experiment(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.iterations) {
    std::size_t remaining = o.iterations;
    std::vector<LrPhase> phases;
    for (const auto& ph : cfg.train.schedule) {
      if (remaining == 0) break;
      phases.push_back({std::min(ph.iterations, remaining), ph.lr});
      remaining -= phases.back().iterations;
    }
    if (remaining) phases.back().iterations += remaining;
    cfg.train.schedule = phases;
  }
  const std::optional<SecretKey> key = optional_key(o);
  if (model_is_keyed(cfg.detector) && !key) throw UsageError("--key is required to train an encrypted model");
  if (!model_is_keyed(cfg.detector) && key) throw UsageError("config has no encrypted site; drop --key");

  const fs::path run_dir = run_directory(cfg, out_root(o));
  create_run_layout(run_dir);
  const Dataset train_set = load_train_split(cfg);
  Model model(cfg.detector, cfg.seed);
  const std::size_t total = cfg.train.total_iterations();
  auto progress = [&](const TrainLogRow& row) {
    if (row.iteration % 100 == 0 || row.iteration == total) {
      err << "iter " << row.iteration << "/" << total << " loss " << row.loss.total << "\n";
    }
  };
  TrainResult result = train(model, train_set, key, cfg.train, cfg.seed, progress);
  result.checkpoint.experiment = serialize_experiment(cfg);
  save_checkpoint(run_dir / "checkpoint", result.checkpoint);
  write_text_file(run_dir / "logs" / "train.csv", format_train_log(result.log));
  out << "checkpoint " << (run_dir / "checkpoint").string() << "\n";
  if (key) out << "key fingerprint " << key->fingerprint() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const ExperimentConfig cfg = checkpoint_experiment(o, ckpt);
  const KeyMode mode = key_mode(o, ckpt.config);
  const Model model = model_from_checkpoint(ckpt);
  const EvalReport report = evaluate(model, load_test_split(cfg), mode);
  const fs::path run_dir = run_directory(cfg, out_root(o));
  create_run_layout(run_dir);
  const fs::path csv = run_dir / "reports" / ("eval_" + protocol_name(report.protocol) + ".csv");
  write_text_file(csv, format_eval_report(report));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", report.map_value);
  out << protocol_name(report.protocol) << " mAP " << buf << "\nreport " << csv.string() << "\n";
  return kExitOk;
}

int cmd_attack(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const ExperimentConfig cfg = checkpoint_experiment(o, ckpt);
  if (!model_is_keyed(ckpt.config)) throw UsageError("attack needs an encrypted model");
  const SecretKey key = required_key(o, "to measure the Correct protocol");
  AttackSuiteResult row = attack_suite(ckpt, key, load_test_split(cfg), wrong_key_options(o, cfg));
  const fs::path run_dir = run_directory(cfg, out_root(o));
  create_run_layout(run_dir);
  const std::vector<AttackSuiteResult> rows{row};
  const std::string csv = row.method == "shf" ? format_shf_table(rows) : format_site_table(rows);
  write_text_file(run_dir / "reports" / "attack.csv", csv);
  write_text_file(run_dir / "plots" / "attack.svg", attack_table_svg(rows, cfg.name + " attack"));
  out << csv << "report " << (run_dir / "reports" / "attack.csv").string() << "\n";
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.sites.empty() == o.shf_blocks.empty()) throw UsageError("sweep needs exactly one of --sites or --shf-blocks");
  ExperimentConfig cfg = load_experiment(o.config);
  const SecretKey key = required_key(o, "for sweep");
  const fs::path run_dir = run_directory(cfg, out_root(o));
  create_run_layout(run_dir);
  fs::create_directories(run_dir / "checkpoints");

  SweepSettings s;
  s.detector = cfg.detector;
  s.train = cfg.train;
  s.model_seed = cfg.seed;
  s.key = key;
  s.wrong_keys = wrong_key_options(o, cfg);
  if (o.proposed_site > 0) s.proposed_site = o.proposed_site;
  s.log = [&](const std::string& msg) { err << msg << "\n"; };
  s.on_checkpoint = [&](const std::string& label, const Checkpoint& ckpt) {
    Checkpoint copy = ckpt;
    copy.experiment = serialize_experiment(cfg);
    save_checkpoint(run_dir / "checkpoints" / label, copy);
  };

  const Dataset train_set = load_train_split(cfg);
  const Dataset test_set = load_test_split(cfg);
  std::string csv, stem;
  std::vector<AttackSuiteResult> rows;
  if (!o.sites.empty()) {
    rows = site_sweep(train_set, test_set, o.sites, s);
    csv = format_site_table(rows);
    stem = "sweep_sites";
  } else {
    rows = shf_sweep(train_set, test_set, o.shf_blocks, s);
    csv = format_shf_table(rows);
    stem = "sweep_shf";
  }
  write_text_file(run_dir / "reports" / (stem + ".csv"), csv);
  write_text_file(run_dir / "plots" / (stem + ".svg"), attack_table_svg(rows, cfg.name + " " + stem));
  out << csv << "report " << (run_dir / "reports" / (stem + ".csv")).string() << "\n";
  return kExitOk;
}

int cmd_render(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const ExperimentConfig cfg = checkpoint_experiment(o, ckpt);
  const KeyMode mode = key_mode(o, ckpt.config);
  const Model model = model_from_checkpoint(ckpt);
  const DetectorConfig& dc = model.config();

  const Image original = read_png(o.image);
  const Image resized = resize_area(original, dc.input_size, dc.input_size);
  const Image input = transform_input(resized, dc, mode.key());
  const SiteTransform transform = mode.key() ? make_site_transform(dc, *mode.key()) : SiteTransform{};
  const auto raw = model.forward(make_batch({&input}), transform);
  NmsOptions nms;
  nms.score_threshold = o.min_score;
  const auto detections = decode_and_nms(raw.front(), generate_priors(dc), nms);

  const fs::path run_dir = run_directory(cfg, out_root(o));
  create_run_layout(run_dir);
  const fs::path png =
      run_dir / "plots" / ("render_" + fs::path(o.image).stem().string() + "_" + protocol_name(mode.protocol()) + ".png");
  write_png(png, draw_detections(original, detections));
  const auto& classes = cfg.detector.num_classes == cfg.dataset.train.classes.size()
                            ? cfg.dataset.train.classes
                            : std::vector<std::string>{};
  for (const auto& d : detections) {
    const std::string name =
        static_cast<std::size_t>(d.label) < classes.size() ? classes[static_cast<std::size_t>(d.label)]
                                                           : "class" + std::to_string(d.label);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.3f %.3f %.3f %.3f %.3f\n", name.c_str(), d.score, d.box.xmin, d.box.ymin,
                  d.box.xmax, d.box.ymax);
    out << buf;
  }
  out << "image " << png.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keyed feature-map permutation for detector access control", "featlock"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> modes = {"correct", "plain", "incorrect", "baseline"};

  auto* keygen = app.add_subcommand("keygen", "Write a random secret key file and print its fingerprint");
  keygen->add_option("--out", o.out, "Key file to write")->required();
  keygen->add_option("--length", o.length, "Key length in bytes")->check(CLI::PositiveNumber);

  auto* config = app.add_subcommand("config", "Print (or write with --out) the default experiment config");
  config->add_option("--out", o.out, "Destination file");

  auto* generate = app.add_subcommand("generate", "Export the synthetic dataset of a config as PNG + VOC XML");
  generate->add_option("--config", o.config, "Experiment config")->required()->check(CLI::ExistingFile);
  generate->add_option("--dest", o.dest, "Dataset directory to create")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a detector and write runs/<name>/checkpoint");
  train_cmd->add_option("--config", o.config, "Experiment config")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--key", o.key, "Secret key file")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", o.seed, "Override model and training seeds");
  train_cmd->add_option("--iterations", o.iterations, "Truncate or extend the schedule to this many iterations");
  train_cmd->add_option("--out", o.out, "Output root (default $FEATLOCK_RUNS_DIR or ./runs)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint under one key protocol");
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--config", o.config, "Experiment config (default: copy stored in the checkpoint)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--mode", o.mode, "Key protocol")->check(CLI::IsMember(modes));
  eval_cmd->add_option("--key", o.key, "Key file (correct or incorrect modes)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", o.out, "Output root");

  auto* attack = app.add_subcommand("attack", "Correct, Plain and Incorrect-key protocols for one checkpoint");
  attack->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  attack->add_option("--config", o.config, "Experiment config")->check(CLI::ExistingFile);
  attack->add_option("--key", o.key, "True key file")->check(CLI::ExistingFile);
  attack->add_option("--n-keys", o.n_keys, "Number of random wrong keys")->check(CLI::PositiveNumber);
  attack->add_option("--seed", o.seed, "Wrong-key sampler seed");
  attack->add_option("--out", o.out, "Output root");

  auto* sweep = app.add_subcommand("sweep", "Train and attack one model per encrypted site or SHF block size");
  sweep->add_option("--config", o.config, "Experiment config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--key", o.key, "Secret key file")->check(CLI::ExistingFile);
  auto* sites_opt = sweep->add_option("--sites", o.sites, "Encrypted sites, e.g. 2,4,6")->delimiter(',');
  auto* shf_opt = sweep->add_option("--shf-blocks", o.shf_blocks, "SHF block sizes, e.g. 1,4,12,48")->delimiter(',');
  sites_opt->excludes(shf_opt);
  sweep->add_option("--proposed-site", o.proposed_site, "Feature-map site trained alongside --shf-blocks (0: none)");
  sweep->add_option("--n-keys", o.n_keys, "Number of random wrong keys")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", o.seed, "Wrong-key sampler seed");
  sweep->add_option("--out", o.out, "Output root");

  auto* render = app.add_subcommand("render", "Draw detections for one PNG image under a key protocol");
  render->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  render->add_option("--image", o.image, "Input PNG")->required()->check(CLI::ExistingFile);
  render->add_option("--config", o.config, "Experiment config")->check(CLI::ExistingFile);
  render->add_option("--mode", o.mode, "Key protocol")->check(CLI::IsMember(modes));
  render->add_option("--key", o.key, "Key file")->check(CLI::ExistingFile);
  render->add_option("--min-score", o.min_score, "Score threshold for drawn boxes")->check(CLI::Range(0.0, 1.0));
  render->add_option("--out", o.out, "Output root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'featlock --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (keygen->parsed()) return cmd_keygen(o, out);
    if (config->parsed()) return cmd_config(o, out);
    if (generate->parsed()) return cmd_generate(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out, err);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    if (attack->parsed()) return cmd_attack(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (render->parsed()) return cmd_render(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("featlock");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace featlock::cli
