// wildfire: one executable exposing the pipeline as subcommands.
//
//   synth    generate a synthetic fire archive from a params JSON
//   stack    build a fire archive from raw files via a fire manifest
//   sample   draw POI samples from an archive into a zip store
//   train    train the reference CNN over one or more stores
//   eval     confusion matrix + metrics for a checkpoint on a store split
//   predict  dense next-24h probability mask for one stack
//   rollout  multi-step autoregressive masks
//
// All randomness flows from one --seed; --threads 1 is the bit-reproducible
// mode (results are thread-count independent by construction, the flag only
// pins it). Exit codes: 0 success, 1 config/validation error, 2 runtime
// error. Every run writes a JSON run manifest with input checksums.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wildfire/archive_io.hpp"
#include "wildfire/checkpoint.hpp"
#include "wildfire/manifest.hpp"
#include "wildfire/rollout.hpp"
#include "wildfire/sampling.hpp"
#include "wildfire/store.hpp"
#include "wildfire/synthfire.hpp"
#include "wildfire/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const json& need(const json& j, const std::string& path, const char* field) {
  if (!j.contains(field)) throw ConfigError("missing config field " + path + "/" + field);
  return j.at(field);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

std::string crc_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "unreadable";
  uint32_t crc = 0;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    crc = wildfire::crc32(reinterpret_cast<const uint8_t*>(buf.data()),
                          static_cast<size_t>(in.gcount()), crc);
  }
  char hex[16];
  std::snprintf(hex, sizeof(hex), "%08x", crc);
  return hex;
}

struct RunManifest {
  std::string subcommand;
  std::string config_path;
  uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  // Written atomically (tmp + rename) next to the primary output.
  void write(const std::string& path) const {
    json doc;
    doc["tool_version"] = kToolVersion;
    doc["subcommand"] = subcommand;
    doc["config"] = config_path;
    doc["seed"] = seed;
    json checks = json::object();
    for (const auto& in : inputs) checks[in] = crc_of_file(in);
    doc["input_checksums"] = checks;
    doc["outputs"] = outputs;
    doc["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw std::runtime_error("cannot write run manifest '" + path + "'");
      out << doc.dump(2) << "\n";
    }
    fs::rename(tmp, path);
  }
};

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              bool seed_set, uint64_t seed, std::string manifest_path) {
  json cfg = load_json(config_path);
  wildfire::SynthParams params;
  try {
    params = wildfire::synth_params_from_json(cfg);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config '") + config_path + "': " + e.what());
  }
  if (seed_set) params.seed = seed;
  RunManifest manifest;
  manifest.subcommand = "synth";
  manifest.config_path = config_path;
  manifest.seed = params.seed;
  manifest.inputs = {config_path};

  wildfire::FireEventArchive archive = wildfire::generate_archive(params);
  wildfire::save_archive(archive, out_dir);
  manifest.outputs = {out_dir};
  if (manifest_path.empty()) manifest_path = (fs::path(out_dir) / "run.json").string();
  manifest.write(manifest_path);
  std::printf("synth: %zu stacks -> %s\n", archive.stacks.size(), out_dir.c_str());
  return 0;
}

int cmd_stack(const std::string& manifest_file, const std::string& out_dir,
              std::string manifest_path) {
  RunManifest manifest;
  manifest.subcommand = "stack";
  manifest.config_path = manifest_file;
  manifest.inputs = {manifest_file};

  wildfire::FireEventArchive archive =
      wildfire::build_archive_from_manifest(manifest_file);
  wildfire::save_archive(archive, out_dir);
  manifest.outputs = {out_dir};
  if (manifest_path.empty()) manifest_path = (fs::path(out_dir) / "run.json").string();
  manifest.write(manifest_path);
  std::printf("stack: %zu stacks -> %s\n", archive.stacks.size(), out_dir.c_str());
  return 0;
}

int cmd_sample(const std::string& archive_dir, const std::string& out_path,
               size_t count, uint64_t seed, int patch, std::vector<double> splits,
               bool augment, bool mask_scheme, std::string manifest_path) {
  if (splits.size() != 3) throw ConfigError("--splits takes exactly 3 fractions");
  wildfire::SplitFractions fractions{splits[0], splits[1], splits[2]};
  fractions.validate();

  RunManifest manifest;
  manifest.subcommand = "sample";
  manifest.config_path = archive_dir;
  manifest.seed = seed;
  manifest.inputs = {(fs::path(archive_dir) / "archive.json").string()};

  wildfire::FireEventArchive archive = wildfire::load_archive(archive_dir);
  wildfire::Rng root(seed);
  if (mask_scheme) {
    std::vector<wildfire::MaskSample> all;
    for (size_t i = 0; i + 1 < archive.stacks.size(); ++i) {
      uint64_t pair_seed = root.stream(i).next_u64();
      auto samples = wildfire::sample_mask_scheme(archive.stacks[i], archive.stacks[i + 1],
                                                  count, patch, pair_seed, archive.fire_id);
      all.insert(all.end(), samples.begin(), samples.end());
    }
    wildfire::write_store(all, out_path, seed, fractions, archive.stacks[0].schema);
    std::printf("sample: %zu mask samples -> %s\n", all.size(), out_path.c_str());
  } else {
    std::vector<wildfire::Sample> all;
    for (size_t i = 0; i + 1 < archive.stacks.size(); ++i) {
      uint64_t pair_seed = root.stream(i).next_u64();
      auto samples = wildfire::sample_pois(archive.stacks[i], archive.stacks[i + 1], count,
                                           pair_seed, patch, archive.fire_id);
      all.insert(all.end(), samples.begin(), samples.end());
    }
    if (augment) all = wildfire::augment_dihedral(all, archive.stacks[0].schema);
    wildfire::write_store(all, out_path, seed, fractions, archive.stacks[0].schema);
    std::printf("sample: %zu samples -> %s\n", all.size(), out_path.c_str());
  }
  manifest.outputs = {out_path};
  if (manifest_path.empty()) manifest_path = out_path + ".run.json";
  manifest.write(manifest_path);
  return 0;
}

wildfire::TrainConfig train_config_from_json(const json& cfg) {
  wildfire::TrainConfig config;
  const json& stores = need(cfg, "", "stores");
  if (!stores.is_array() || stores.empty())
    throw ConfigError("config field /stores must be a non-empty array");
  for (size_t i = 0; i < stores.size(); ++i) {
    if (!stores[i].is_string())
      throw ConfigError("config field /stores[" + std::to_string(i) + "] must be a string");
    config.stores.push_back(stores[i].get<std::string>());
  }
  if (cfg.contains("val_stores"))
    for (const auto& s : cfg.at("val_stores"))
      config.val_stores.push_back(s.get<std::string>());
  config.train_split = cfg.value("train_split", config.train_split);
  config.val_split = cfg.value("val_split", config.val_split);
  config.epochs = cfg.value("epochs", config.epochs);
  config.batch_size = cfg.value("batch_size", config.batch_size);
  config.lr = cfg.value("lr", config.lr);
  config.seed = cfg.value("seed", config.seed);
  config.checkpoint_cadence = cfg.value("checkpoint_cadence", 0);
  config.early_stop_patience = cfg.value("early_stop_patience", 0);
  config.checkpoint_path = need(cfg, "", "checkpoint").get<std::string>();
  config.history_path = need(cfg, "", "history").get<std::string>();
  config.resume_checkpoint = cfg.value("resume", "");
  return config;
}

template <typename T>
int run_train(const wildfire::TrainConfig& config) {
  auto t0 = std::chrono::steady_clock::now();
  auto result = wildfire::train<T>(config, [&](const wildfire::EpochRecord& r) {
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("epoch %d: train_loss %.6g train_acc %.4f val_loss %.6g val_acc %.4f"
                " (%.1fs)\n",
                r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc, elapsed);
    std::fflush(stdout);
  });
  wildfire::export_history(result.history, config.history_path);
  std::printf("train: best epoch %d; checkpoint %s\n", result.best_epoch,
              config.checkpoint_path.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, bool seed_set, uint64_t seed,
              int threads, std::string precision_flag, std::string manifest_path) {
  json cfg = load_json(config_path);
  wildfire::TrainConfig config = train_config_from_json(cfg);
  if (seed_set) config.seed = seed;
  std::string precision =
      precision_flag.empty() ? cfg.value("precision", "float32") : precision_flag;
  if (precision != "float32" && precision != "float64")
    throw ConfigError("config field /precision must be float32 or float64");
  int cfg_threads = cfg.value("threads", 1);
  wildfire::set_thread_count(threads > 0 ? threads : cfg_threads);
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config '") + config_path + "': " + e.what());
  }

  RunManifest manifest;
  manifest.subcommand = "train";
  manifest.config_path = config_path;
  manifest.seed = config.seed;
  manifest.inputs = {config_path};
  for (const auto& s : config.stores) manifest.inputs.push_back(s);
  for (const auto& s : config.val_stores) manifest.inputs.push_back(s);

  int rc = precision == "float64" ? run_train<double>(config) : run_train<float>(config);

  manifest.outputs = {config.checkpoint_path, config.checkpoint_path + ".best",
                      config.history_path};
  if (manifest_path.empty()) manifest_path = config.checkpoint_path + ".run.json";
  manifest.write(manifest_path);
  return rc;
}

int cmd_eval(const std::string& checkpoint, const std::string& store_path,
             const std::string& split, double threshold, const std::string& out_path,
             std::string manifest_path) {
  RunManifest manifest;
  manifest.subcommand = "eval";
  manifest.config_path = checkpoint;
  manifest.inputs = {checkpoint, store_path};

  auto loaded = wildfire::load_checkpoint<float>(checkpoint);
  wildfire::SampleStore store(store_path);
  wildfire::ConfusionMatrix cm =
      wildfire::evaluate(loaded.model, store, split, threshold);
  wildfire::Metrics m = wildfire::metrics(cm);
  auto cells = cm.normalized();

  json doc;
  doc["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn},
                      {"total", cm.total()}};
  doc["normalized"] = {{"tp", cells[0]}, {"fp", cells[1]}, {"tn", cells[2]},
                       {"fn", cells[3]}};
  doc["metrics"] = {{"accuracy", m.accuracy},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1},
                    {"precision_degenerate", m.precision_degenerate},
                    {"recall_degenerate", m.recall_degenerate},
                    {"f1_degenerate", m.f1_degenerate}};
  doc["threshold"] = threshold;
  doc["split"] = split;
  std::printf("%s\n", doc.dump(2).c_str());

  // Normalized table, cells divided by the total sample count.
  std::printf("\n                 predicted fire   predicted not-fire\n");
  std::printf("actual fire          %8.5f         %8.5f\n", cells[0], cells[3]);
  std::printf("actual not-fire      %8.5f         %8.5f\n", cells[1], cells[2]);
  std::printf("accuracy %.5f  precision %.5f  recall %.5f  f1 %.5f\n", m.accuracy,
              m.precision, m.recall, m.f1);

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << doc.dump(2) << "\n";
    manifest.outputs.push_back(out_path);
  }
  if (manifest_path.empty())
    manifest_path = (out_path.empty() ? store_path + ".eval" : out_path) + ".run.json";
  manifest.write(manifest_path);
  return 0;
}

const wildfire::LayerStack& pick_stack(const wildfire::FireEventArchive& archive,
                                       const std::string& timestamp) {
  if (timestamp.empty()) return archive.stacks.back();
  wildfire::UtcTime t = wildfire::parse_iso8601(timestamp);
  for (const auto& s : archive.stacks)
    if (s.timestamp == t) return s;
  throw ConfigError("no stack at timestamp " + timestamp);
}

int cmd_predict(const std::string& checkpoint, const std::string& archive_dir,
                const std::string& timestamp, const std::string& out_path,
                const std::string& format, std::string manifest_path) {
  RunManifest manifest;
  manifest.subcommand = "predict";
  manifest.config_path = checkpoint;
  manifest.inputs = {checkpoint, (fs::path(archive_dir) / "archive.json").string()};

  auto loaded = wildfire::load_checkpoint<float>(checkpoint);
  wildfire::FireEventArchive archive = wildfire::load_archive(archive_dir);
  const wildfire::LayerStack& stack = pick_stack(archive, timestamp);
  wildfire::PredictionMask mask = wildfire::predict_dense(loaded.model, stack);

  wildfire::MaskSidecar side;
  side.model_checksum = crc_of_file(checkpoint);
  side.step = 1;
  wildfire::export_mask(mask, out_path,
                        format == "pgm" ? wildfire::MaskFormat::pgm
                                        : wildfire::MaskFormat::ascii_grid,
                        side);
  manifest.outputs = {out_path};
  if (manifest_path.empty()) manifest_path = out_path + ".run.json";
  manifest.write(manifest_path);
  std::printf("predict: %s at %s -> %s\n", archive.fire_id.c_str(),
              wildfire::format_iso8601(stack.timestamp).c_str(), out_path.c_str());
  return 0;
}

int cmd_rollout(const std::string& checkpoint, const std::string& archive_dir,
                int steps, double threshold, bool union_prev,
                const std::string& timestamp, const std::string& out_dir,
                const std::string& format, std::string manifest_path) {
  RunManifest manifest;
  manifest.subcommand = "rollout";
  manifest.config_path = checkpoint;
  manifest.inputs = {checkpoint, (fs::path(archive_dir) / "archive.json").string()};

  auto loaded = wildfire::load_checkpoint<float>(checkpoint);
  wildfire::FireEventArchive archive = wildfire::load_archive(archive_dir);
  const wildfire::LayerStack& stack = pick_stack(archive, timestamp);
  auto result = wildfire::rollout(loaded.model, stack, steps, threshold, union_prev);

  fs::create_directories(out_dir);
  std::string checksum = crc_of_file(checkpoint);
  for (size_t i = 0; i < result.size(); ++i) {
    wildfire::MaskSidecar side;
    side.model_checksum = checksum;
    side.step = static_cast<int>(i + 1);
    side.threshold = threshold;
    std::string ext = format == "pgm" ? ".pgm" : ".asc";
    std::string prob_path =
        (fs::path(out_dir) / ("step" + std::to_string(i + 1) + ext)).string();
    wildfire::export_mask(result[i].probabilities, prob_path,
                          format == "pgm" ? wildfire::MaskFormat::pgm
                                          : wildfire::MaskFormat::ascii_grid,
                          side);
    manifest.outputs.push_back(prob_path);

    wildfire::PredictionMask binary;
    binary.spec = result[i].binary_mask.spec;
    binary.probabilities = result[i].binary_mask.values;
    binary.source_timestamp = stack.timestamp + (i + 1) * wildfire::kSecondsPerDay;
    binary.horizon_steps = static_cast<int>(i + 1);
    std::string mask_path =
        (fs::path(out_dir) / ("step" + std::to_string(i + 1) + "_mask.pgm")).string();
    wildfire::export_mask(binary, mask_path, wildfire::MaskFormat::pgm, side);
    manifest.outputs.push_back(mask_path);
  }
  if (manifest_path.empty()) manifest_path = (fs::path(out_dir) / "run.json").string();
  manifest.write(manifest_path);
  std::printf("rollout: %d steps -> %s\n", steps, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wildfire spread prediction pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  auto seed_opt = app.add_option("--seed", seed, "override every configured seed");
  app.add_option("--threads", threads, "worker threads (1 = bit-reproducible mode)");

  std::string config_path, out_path, out_dir, archive_dir, checkpoint, store_path;
  std::string split = "val", timestamp, format = "ascii", manifest_path, precision;
  double threshold = 0.5;
  size_t count = 20000;
  int patch = 31, steps = 1;
  std::vector<double> splits = {0.8, 0.1, 0.1};
  bool augment = false, mask_scheme = false, union_prev = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic fire archive");
  synth->add_option("--config", config_path, "SynthParams JSON")->required();
  synth->add_option("--out", out_dir, "archive output directory")->required();
  synth->add_option("--run-manifest", manifest_path);

  auto* stack = app.add_subcommand("stack", "build an archive from a fire manifest");
  stack->add_option("--manifest", config_path, "fire manifest JSON")->required();
  stack->add_option("--out", out_dir, "archive output directory")->required();
  stack->add_option("--run-manifest", manifest_path);

  auto* sample = app.add_subcommand("sample", "draw POI samples into a zip store");
  sample->add_option("--archive", archive_dir, "archive directory")->required();
  sample->add_option("--out", out_path, "store zip path")->required();
  sample->add_option("--count", count, "POIs per stack pair (default 20000)");
  sample->add_option("--patch", patch, "patch size n (odd, default 31)");
  sample->add_option("--splits", splits, "train/val/test fractions")->expected(3);
  sample->add_flag("--augment", augment, "8-fold dihedral augmentation (default off)");
  sample->add_flag("--mask-scheme", mask_scheme, "store n x n mask labels");
  sample->add_option("--run-manifest", manifest_path);

  auto* train = app.add_subcommand("train", "train the reference model");
  train->add_option("--config", config_path, "TrainConfig JSON")->required();
  train->add_option("--precision", precision, "float32|float64 (overrides config)");
  train->add_option("--run-manifest", manifest_path);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a store split");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--store", store_path)->required();
  eval->add_option("--split", split, "train|val|test|all (default val)");
  eval->add_option("--threshold", threshold);
  eval->add_option("--out", out_path, "also write metrics JSON here");
  eval->add_option("--run-manifest", manifest_path);

  auto* predict = app.add_subcommand("predict", "dense probability mask for one stack");
  predict->add_option("--checkpoint", checkpoint)->required();
  predict->add_option("--archive", archive_dir)->required();
  predict->add_option("--timestamp", timestamp, "stack timestamp (default: latest)");
  predict->add_option("--out", out_path)->required();
  predict->add_option("--format", format, "ascii|pgm");
  predict->add_option("--run-manifest", manifest_path);

  auto* roll = app.add_subcommand("rollout", "autoregressive multi-step masks");
  roll->add_option("--checkpoint", checkpoint)->required();
  roll->add_option("--archive", archive_dir)->required();
  roll->add_option("--steps", steps)->required();
  roll->add_option("--threshold", threshold);
  roll->add_flag("--union", union_prev, "never unburn: union with previous mask");
  roll->add_option("--timestamp", timestamp, "starting stack (default: latest)");
  roll->add_option("--out-dir", out_dir)->required();
  roll->add_option("--format", format, "ascii|pgm");
  roll->add_option("--run-manifest", manifest_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  seed_set = seed_opt->count() > 0;
  if (threads > 0) wildfire::set_thread_count(threads);

  try {
    if (synth->parsed())
      return cmd_synth(config_path, out_dir, seed_set, seed, manifest_path);
    if (stack->parsed()) return cmd_stack(config_path, out_dir, manifest_path);
    if (sample->parsed())
      return cmd_sample(archive_dir, out_path, count, seed_set ? seed : 0, patch, splits,
                        augment, mask_scheme, manifest_path);
    if (train->parsed())
      return cmd_train(config_path, seed_set, seed, threads, precision, manifest_path);
    if (eval->parsed())
      return cmd_eval(checkpoint, store_path, split, threshold, out_path, manifest_path);
    if (predict->parsed())
      return cmd_predict(checkpoint, archive_dir, timestamp, out_path, format,
                         manifest_path);
    if (roll->parsed())
      return cmd_rollout(checkpoint, archive_dir, steps, threshold, union_prev, timestamp,
                         out_dir, format, manifest_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const wildfire::StoreError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
