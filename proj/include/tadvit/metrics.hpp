// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Frame-level detection metrics. Frames are pooled across clips; a frame is
// predicted anomalous when its score is >= the threshold. MCC values in
// reports are percentages.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tadvit/config_text.hpp"
#include "tadvit/inference.hpp"

namespace tadvit {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// In [-1, 1]; 0 when any factor of the denominator is zero.
double mcc(const ConfusionCounts& c);

/// Predicting the opposite class for every frame: TP<->FN, FP<->TN.
ConfusionCounts flip_predictions(const ConfusionCounts& c);
/// Swapping which class counts as positive: TP<->TN, FP<->FN.
ConfusionCounts swap_classes(const ConfusionCounts& c);

/// {0.00, 0.01, ..., 1.00}
std::vector<double> default_threshold_grid();

/// Pooled counts at one threshold. Throws ConfigError on unlabeled frames.
ConfusionCounts confusion_at(std::span<const FrameScoreSeries> series, double threshold);

/// Pooled counts at every grid threshold; the grid must be strictly
/// increasing within [0, 1].
std::vector<ConfusionCounts> sweep_counts(std::span<const FrameScoreSeries> series,
                                          std::span<const double> grid);

struct CurvePoint {
  double threshold = 0.0;
  double mcc = 0.0;  // [-1, 1]
  bool operator==(const CurvePoint&) const = default;
};

std::vector<CurvePoint> mcc_curve(std::span<const FrameScoreSeries> series,
                                  std::span<const double> grid);
std::vector<CurvePoint> mcc_curve(std::span<const FrameScoreSeries> series);

/// Trapezoidal area under the curve over its threshold range, x100.
double auc_mcc(std::span<const CurvePoint> curve);

/// Mann-Whitney AUC with midranks for ties, x100. Throws ConfigError unless
/// both classes are present.
double auc_roc(std::span<const FrameScoreSeries> series);

struct MetricReport {
  std::string train_domain;
  std::string test_domain;
  double mcc_at_05 = 0.0;  // percent
  double auc_mcc = 0.0;    // percent
  double auc_roc = 0.0;    // percent
  ConfusionCounts counts;  // at threshold 0.5
  std::int64_t clips = 0;
  std::vector<CurvePoint> curve;  // mcc in percent

  KeyValueText to_text() const;
  static MetricReport from_text(const KeyValueText& text);
  bool operator==(const MetricReport&) const = default;
};

MetricReport evaluate(std::span<const FrameScoreSeries> series, std::string train_domain,
                      std::string test_domain);

/// Scores of one test split under a model trained on train_domain.
struct EvalSet {
  std::string train_domain;
  std::string test_domain;
  std::vector<FrameScoreSeries> series;
};

/// One report per distinct (train, test) pair, in order of first
/// appearance; sets sharing a pair are pooled.
std::vector<MetricReport> assemble_report(std::span<const EvalSet> sets);

/// "threshold,mcc" with mcc in percent.
void write_curve(const std::string& path, std::span<const CurvePoint> curve);

}  // namespace tadvit
