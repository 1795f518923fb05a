#pragma once

// Training loop over one or many sample stores (per-fire or pooled), with
// per-epoch full-pass metrics, best-validation checkpointing, and the
// evaluation surface. Every epoch: a seeded global shuffle of the union of
// training splits, minibatch Adam steps, then separate full passes for
// train and validation metrics at threshold 0.5 (predictions use >= at the
// boundary). Fixed config means a bit-reproducible run.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wildfire/checkpoint.hpp"
#include "wildfire/metrics.hpp"
#include "wildfire/nn.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/store.hpp"

namespace wildfire {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::vector<std::string> stores;      // training stores (pooled when > 1)
  std::string train_split = "train";
  std::vector<std::string> val_stores;  // empty = same as stores
  std::string val_split = "val";
  int epochs = 100;
  size_t batch_size = 32;
  double lr = 1e-4;
  uint64_t seed = 0;
  int checkpoint_cadence = 0;    // epochs between mid-run checkpoints; 0 = off
  int early_stop_patience = 0;   // epochs without val-loss improvement; 0 = off
  std::string checkpoint_path;   // final model; ".best" suffix for best-val
  std::string history_path;      // per-epoch CSV
  std::string resume_checkpoint;

  void validate() const {
    if (epochs < 1) throw TrainError("epochs must be >= 1");
    if (batch_size < 1) throw TrainError("batch_size must be >= 1");
    if (stores.empty()) throw TrainError("at least one store is required");
    if (!(lr > 0)) throw TrainError("learning rate must be positive");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
};

template <typename T>
struct TrainResult {
  ModelParams<T> model;       // after the last epoch
  ModelParams<T> best_model;  // lowest validation loss
  AdamState<T> adam;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

namespace train_detail {

struct PooledEntry {
  size_t store = 0;
  SampleStore::EntryRef ref;
};

// Union of one split across stores, in store order then canonical entry
// order. The training shuffle interleaves stores globally.
inline std::vector<PooledEntry> pooled_entries(
    std::vector<std::unique_ptr<SampleStore>>& stores, const std::string& split) {
  std::vector<PooledEntry> out;
  for (size_t si = 0; si < stores.size(); ++si)
    for (const auto& ref : stores[si]->split_entries(split))
      out.push_back({si, ref});
  return out;
}

template <typename T>
void load_batch(std::vector<std::unique_ptr<SampleStore>>& stores,
                const std::vector<PooledEntry>& entries, const uint32_t* order,
                size_t begin, size_t end, std::vector<T>& input,
                std::vector<float>& labels) {
  size_t count = end - begin;
  const auto& first = stores[entries[0].store];
  size_t patch_floats =
      static_cast<size_t>(first->patch_size()) * first->patch_size() * first->channels();
  input.resize(count * patch_floats);
  labels.resize(count);
  for (size_t i = 0; i < count; ++i) {
    const PooledEntry& pe = entries[order ? order[begin + i] : begin + i];
    Tensor3<float> patch = stores[pe.store]->read_patch(pe.ref);
    if (patch.size() != patch_floats)
      throw TrainError("store '" + stores[pe.store]->path() + "' has mismatched patches");
    for (size_t j = 0; j < patch_floats; ++j)
      input[i * patch_floats + j] = static_cast<T>(patch.data[j]);
    labels[i] = static_cast<float>(pe.ref.label);
  }
}

// Full forward pass over a split: mean BCE and accuracy at threshold 0.5
// (>= at the boundary).
template <typename T>
std::pair<double, double> split_metrics(const ModelParams<T>& model,
                                        std::vector<std::unique_ptr<SampleStore>>& stores,
                                        const std::vector<PooledEntry>& entries,
                                        size_t batch_size, Workspace<T>& ws) {
  double loss_sum = 0;
  uint64_t correct = 0;
  std::vector<T> input;
  std::vector<float> labels;
  for (size_t begin = 0; begin < entries.size(); begin += batch_size) {
    size_t end = std::min(entries.size(), begin + batch_size);
    load_batch(stores, entries, nullptr, begin, end, input, labels);
    auto probs =
        forward_batch(model, input.data(), static_cast<int>(end - begin),
                      static_cast<ForwardCache<T>*>(nullptr), ws);
    for (size_t i = 0; i < probs.size(); ++i) {
      double p = static_cast<double>(probs[i]);
      loss_sum += bce_loss(p, labels[i] != 0.0f ? 1 : 0);
      bool predicted = p >= 0.5;
      if (predicted == (labels[i] != 0.0f)) ++correct;
    }
  }
  size_t n = entries.size();
  return {loss_sum / static_cast<double>(n),
          static_cast<double>(correct) / static_cast<double>(n)};
}

}  // namespace train_detail

template <typename T = float>
TrainResult<T> train(const TrainConfig& config,
                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  config.validate();

  std::vector<std::unique_ptr<SampleStore>> stores;
  for (const auto& path : config.stores)
    stores.push_back(std::make_unique<SampleStore>(path));
  const LayerSchema& schema = stores.front()->schema();
  int n = stores.front()->patch_size();
  int channels = stores.front()->channels();
  for (const auto& s : stores) {
    if (!(s->schema() == schema) || s->patch_size() != n || s->channels() != channels)
      throw TrainError("store '" + s->path() + "' schema or patch size mismatch");
  }
  if (n != 31)
    throw TrainError("reference architecture takes 31x31 patches; store has n=" +
                     std::to_string(n));

  std::vector<std::unique_ptr<SampleStore>> val_stores;
  auto& val_source = config.val_stores.empty() ? config.stores : config.val_stores;
  for (const auto& path : val_source) {
    auto vs = std::make_unique<SampleStore>(path);
    if (!(vs->schema() == schema) || vs->patch_size() != n)
      throw TrainError("validation store '" + path + "' schema mismatch");
    val_stores.push_back(std::move(vs));
  }

  auto train_entries = train_detail::pooled_entries(stores, config.train_split);
  if (train_entries.empty()) throw TrainError("training split is empty");
  auto val_entries = train_detail::pooled_entries(val_stores, config.val_split);
  if (val_entries.empty())
    throw TrainError("validation split '" + config.val_split + "' is empty");

  TrainResult<T> result;
  if (!config.resume_checkpoint.empty()) {
    auto loaded = load_checkpoint_for_training<T>(config.resume_checkpoint);
    result.model = std::move(loaded.model);
    result.adam = std::move(*loaded.adam);
    if (result.model.input_c != channels)
      throw TrainError("resume checkpoint channel count mismatch");
  } else {
    result.model = build_reference_model<T>(channels, config.seed);
    result.adam.lr = config.lr;
    result.adam.init(result.model);
  }

  double best_val_loss = std::numeric_limits<double>::infinity();
  Workspace<T> ws;
  Rng seed_root(config.seed);

  std::vector<uint32_t> order(train_entries.size());
  std::vector<T> input;
  std::vector<float> labels;
  Gradients<T> grads;
  ForwardCache<T> cache;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Seeded global shuffle of the pooled training split.
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng epoch_rng = seed_root.stream(static_cast<uint64_t>(epoch));
    shuffle(order, epoch_rng);

    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      size_t end = std::min(order.size(), begin + config.batch_size);
      train_detail::load_batch(stores, train_entries, order.data(), begin, end, input,
                               labels);
      forward_batch(result.model, input.data(), static_cast<int>(end - begin), &cache, ws);
      backward_batch(result.model, cache, labels.data(), grads, ws);
      adam_step(result.model, grads, result.adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    auto [tl, ta] = train_detail::split_metrics(result.model, stores, train_entries,
                                                std::max<size_t>(config.batch_size, 64), ws);
    auto [vl, va] = train_detail::split_metrics(result.model, val_stores, val_entries,
                                                std::max<size_t>(config.batch_size, 64), ws);
    rec.train_loss = tl;
    rec.train_acc = ta;
    rec.val_loss = vl;
    rec.val_acc = va;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (vl < best_val_loss) {
      best_val_loss = vl;
      result.best_model = result.model;
      result.best_epoch = epoch;
    }
    if (config.checkpoint_cadence > 0 && !config.checkpoint_path.empty() &&
        epoch % config.checkpoint_cadence == 0)
      save_checkpoint(result.model, &result.adam,
                      config.checkpoint_path + ".epoch" + std::to_string(epoch));
    if (config.early_stop_patience > 0 &&
        epoch - result.best_epoch >= config.early_stop_patience)
      break;
  }

  if (result.best_epoch == 0) result.best_model = result.model;
  if (!config.checkpoint_path.empty()) {
    save_checkpoint(result.model, &result.adam, config.checkpoint_path);
    save_checkpoint(result.best_model, static_cast<const AdamState<T>*>(nullptr),
                    config.checkpoint_path + ".best");
  }
  return result;
}

// Tally the model over every sample of a split exactly once; prediction is
// probability >= threshold.
template <typename T>
ConfusionMatrix evaluate(const ModelParams<T>& model, SampleStore& store,
                         const std::string& split, double threshold = 0.5,
                         size_t batch_size = 128) {
  auto entries = store.split_entries(split);
  if (entries.empty()) throw TrainError("split '" + split + "' is empty");
  ConfusionMatrix cm;
  Workspace<T> ws;
  std::vector<T> input;
  size_t patch_floats =
      static_cast<size_t>(store.patch_size()) * store.patch_size() * store.channels();
  for (size_t begin = 0; begin < entries.size(); begin += batch_size) {
    size_t end = std::min(entries.size(), begin + batch_size);
    size_t count = end - begin;
    input.resize(count * patch_floats);
    std::vector<int> truth(count);
    for (size_t i = 0; i < count; ++i) {
      Tensor3<float> patch = store.read_patch(entries[begin + i]);
      for (size_t j = 0; j < patch_floats; ++j)
        input[i * patch_floats + j] = static_cast<T>(patch.data[j]);
      truth[i] = entries[begin + i].label;
    }
    auto probs = forward_batch(model, input.data(), static_cast<int>(count),
                               static_cast<ForwardCache<T>*>(nullptr), ws);
    for (size_t i = 0; i < count; ++i)
      cm.add(static_cast<double>(probs[i]) >= threshold, truth[i] == 1);
  }
  return cm;
}

// Persistence baseline on the same pixels: predict that the POI's fire
// state does not change, read from the patch's center fire-mask cell.
inline ConfusionMatrix evaluate_persistence(SampleStore& store, const std::string& split) {
  auto entries = store.split_entries(split);
  if (entries.empty()) throw TrainError("split '" + split + "' is empty");
  int mask_c = store.schema().fire_mask_index();
  int center = store.patch_size() / 2;
  ConfusionMatrix cm;
  for (const auto& ref : entries) {
    Tensor3<float> patch = store.read_patch(ref);
    bool predicted = patch.at(center, center, mask_c) >= 0.5f;
    cm.add(predicted, ref.label == 1);
  }
  return cm;
}

// History CSV: epoch,train_loss,train_acc,val_loss,val_acc with 6
// significant digits; byte-stable for identical inputs.
inline void export_history(const std::vector<EpochRecord>& records, std::ostream& out) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g,%.6g\n", r.epoch, r.train_loss,
                  r.train_acc, r.val_loss, r.val_acc);
    out << buf;
  }
}

inline void export_history(const std::vector<EpochRecord>& records,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TrainError("cannot open '" + path + "' for writing");
  export_history(records, out);
}

}  // namespace wildfire
