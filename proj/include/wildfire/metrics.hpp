#pragma once

// Confusion-matrix bookkeeping and the derived metrics. Degenerate
// denominators (no predicted positives, no actual positives) yield 0 with
// a flag rather than throwing, so callers can report them.

#include <array>
#include <cstdint>
#include <stdexcept>

namespace wildfire {

struct ConfusionMatrix {
  uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  uint64_t total() const { return tp + fp + tn + fn; }

  void add(bool predicted, bool actual) {
    if (predicted && actual) ++tp;
    else if (predicted && !actual) ++fp;
    else if (!predicted && actual) ++fn;
    else ++tn;
  }

  // Fig.-5 style view: each cell divided by the total sample count, so the
  // four cells sum to 1. Order: tp, fp, tn, fn.
  std::array<double, 4> normalized() const {
    double t = static_cast<double>(total());
    if (t == 0) throw std::runtime_error("empty confusion matrix");
    return {tp / t, fp / t, tn / t, fn / t};
  }
};

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
};

inline Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::runtime_error("metrics of an empty confusion matrix");
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp == 0) {
    m.precision_degenerate = true;
  } else {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn == 0) {
    m.recall_degenerate = true;
  } else {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  }
  if (m.precision + m.recall == 0) {
    m.f1_degenerate = true;
  } else {
    m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

}  // namespace wildfire
