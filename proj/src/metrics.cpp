// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tadvit {
namespace {

struct Scored {
  double score;
  int label;
};

std::vector<Scored> pool(std::span<const FrameScoreSeries> series) {
  std::vector<Scored> out;
  for (const auto& s : series)
    for (const auto& r : s.records) {
      if (r.label != 0 && r.label != 1)
        throw ConfigError("clip '" + s.clip_id + "' frame " + std::to_string(r.frame) +
                          " has no ground-truth label");
      out.push_back({r.score, r.label});
    }
  return out;
}

}  // namespace

double mcc(const ConfusionCounts& c) {
  const long double tp = c.tp, tn = c.tn, fp = c.fp, fn = c.fn;
  const long double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0) return 0.0;
  return static_cast<double>((tp * tn - fp * fn) / std::sqrt(den));
}

ConfusionCounts flip_predictions(const ConfusionCounts& c) { return {c.fn, c.fp, c.tn, c.tp}; }

ConfusionCounts swap_classes(const ConfusionCounts& c) { return {c.tn, c.tp, c.fn, c.fp}; }

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[static_cast<std::size_t>(i)] = i / 100.0;
  return grid;
}

ConfusionCounts confusion_at(std::span<const FrameScoreSeries> series, double threshold) {
  const double grid[1] = {threshold};
  return sweep_counts(series, grid).front();
}

std::vector<ConfusionCounts> sweep_counts(std::span<const FrameScoreSeries> series,
                                          std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ConfigError("threshold outside [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("threshold grid must be strictly increasing");
  }
  auto frames = pool(series);
  std::sort(frames.begin(), frames.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  // Suffix sums give the positives/negatives predicted anomalous at each cut.
  std::int64_t pos_total = 0;
  for (const auto& f : frames) pos_total += f.label;
  const auto neg_total = static_cast<std::int64_t>(frames.size()) - pos_total;

  std::vector<ConfusionCounts> out;
  out.reserve(grid.size());
  std::size_t cut = 0;
  std::int64_t pos_below = 0;
  for (double t : grid) {
    while (cut < frames.size() && frames[cut].score < t) pos_below += frames[cut++].label;
    const auto neg_below = static_cast<std::int64_t>(cut) - pos_below;
    out.push_back({pos_total - pos_below, neg_below, neg_total - neg_below, pos_below});
  }
  return out;
}

std::vector<CurvePoint> mcc_curve(std::span<const FrameScoreSeries> series, std::span<const double> grid) {
  const auto counts = sweep_counts(series, grid);
  std::vector<CurvePoint> curve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) curve[i] = {grid[i], mcc(counts[i])};
  return curve;
}

std::vector<CurvePoint> mcc_curve(std::span<const FrameScoreSeries> series) {
  const auto grid = default_threshold_grid();
  return mcc_curve(series, grid);
}

double auc_mcc(std::span<const CurvePoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].threshold - curve[i - 1].threshold) * (curve[i].mcc + curve[i - 1].mcc) * 0.5;
  return area * 100.0;
}

double auc_roc(std::span<const FrameScoreSeries> series) {
  auto frames = pool(series);
  std::sort(frames.begin(), frames.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  double pos_rank_sum = 0.0;
  std::int64_t positives = 0;
  for (std::size_t i = 0; i < frames.size();) {
    std::size_t j = i;
    while (j < frames.size() && frames[j].score == frames[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (frames[k].label == 1) {
        pos_rank_sum += midrank;
        ++positives;
      }
    i = j;
  }
  const auto negatives = static_cast<std::int64_t>(frames.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw ConfigError("ROC AUC is undefined: scored frames contain only one class");
  const double p = static_cast<double>(positives);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return 100.0 * u / (p * static_cast<double>(negatives));
}

KeyValueText MetricReport::to_text() const {
  KeyValueText t;
  t.set("train_domain", train_domain);
  t.set("test_domain", test_domain);
  t.set("mcc_at_0.5", mcc_at_05);
  t.set("auc_mcc", auc_mcc);
  t.set("auc_roc", auc_roc);
  t.set("tp", counts.tp);
  t.set("tn", counts.tn);
  t.set("fp", counts.fp);
  t.set("fn", counts.fn);
  t.set("clips", clips);
  t.set("curve_points", static_cast<std::int64_t>(curve.size()));
  for (std::size_t i = 0; i < curve.size(); ++i)
    t.set("curve." + std::to_string(i), format_double(curve[i].threshold) + " " + format_double(curve[i].mcc));
  return t;
}

MetricReport MetricReport::from_text(const KeyValueText& text) {
  MetricReport r;
  r.train_domain = text.at("train_domain");
  r.test_domain = text.at("test_domain");
  r.mcc_at_05 = text.get_double("mcc_at_0.5");
  r.auc_mcc = text.get_double("auc_mcc");
  r.auc_roc = text.get_double("auc_roc");
  r.counts = {text.get_int("tp"), text.get_int("tn"), text.get_int("fp"), text.get_int("fn")};
  r.clips = text.get_int("clips");
  const auto n = text.get_int("curve_points");
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string key = "curve." + std::to_string(i);
    std::istringstream in(text.at(key));
    std::string a, b;
    if (!(in >> a >> b)) throw FormatError("report key '" + key + "' needs 'threshold mcc'");
    r.curve.push_back({std::stod(a), std::stod(b)});
  }
  return r;
}

MetricReport evaluate(std::span<const FrameScoreSeries> series, std::string train_domain,
                      std::string test_domain) {
  MetricReport r;
  r.train_domain = std::move(train_domain);
  r.test_domain = std::move(test_domain);
  r.clips = static_cast<std::int64_t>(series.size());
  const auto curve = mcc_curve(series);
  r.auc_mcc = auc_mcc(curve);
  r.auc_roc = auc_roc(series);
  for (const auto& p : curve) {
    if (p.threshold == 0.5) {
      r.mcc_at_05 = p.mcc * 100.0;
    }
    r.curve.push_back({p.threshold, p.mcc * 100.0});
  }
  r.counts = confusion_at(series, 0.5);
  return r;
}

std::vector<MetricReport> assemble_report(std::span<const EvalSet> sets) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<std::vector<FrameScoreSeries>> pooled;
  for (const auto& s : sets) {
    const auto key = std::make_pair(s.train_domain, s.test_domain);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      pooled.emplace_back();
      it = keys.end() - 1;
    }
    auto& dst = pooled[static_cast<std::size_t>(it - keys.begin())];
    dst.insert(dst.end(), s.series.begin(), s.series.end());
  }
  std::vector<MetricReport> out;
  for (std::size_t i = 0; i < keys.size(); ++i) out.push_back(evaluate(pooled[i], keys[i].first, keys[i].second));
  return out;
}

void write_curve(const std::string& path, std::span<const CurvePoint> curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "threshold,mcc\n";
  for (const auto& p : curve) out << format_double(p.threshold) << ',' << format_double(p.mcc) << '\n';
  if (!out) throw Error("write failed for " + path);
}

}  // namespace tadvit
