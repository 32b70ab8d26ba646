#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hedgeval/ids.hpp"

namespace hedgeval {

struct RankedDetection {
  double confidence = 0.0;
  bool is_tp = false;
};

struct PrPoint {
  double confidence = 0.0;
  bool is_tp = false;
  std::size_t tp = 0;  // cumulative
  std::size_t fp = 0;  // cumulative
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;
  std::size_t n_gt = 0;
  CategoryId category;
  double iou_thr = 0.5;
};

// Ranks detections dataset-wide by descending confidence. `dets` must be in
// ingestion order; equal confidences keep that order.
inline PrCurve build_pr_curve(std::span<const RankedDetection> dets, std::size_t n_gt,
                              CategoryId category = CategoryId{}, double iou_thr = 0.5) {
  std::vector<RankedDetection> ranked(dets.begin(), dets.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedDetection& a, const RankedDetection& b) {
                     return a.confidence > b.confidence;
                   });
  PrCurve curve;
  curve.n_gt = n_gt;
  curve.category = category;
  curve.iou_thr = iou_thr;
  curve.points.reserve(ranked.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& d : ranked) {
    (d.is_tp ? tp : fp) += 1;
    PrPoint p;
    p.confidence = d.confidence;
    p.is_tp = d.is_tp;
    p.tp = tp;
    p.fp = fp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = n_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gt);
    curve.points.push_back(p);
  }
  return curve;
}

enum class ApInterpolation {
  kCoco101,   // precision envelope sampled at recall 0.00, 0.01, ..., 1.00
  kAllPoint,  // exact area under the precision envelope
};

namespace detail {

// Precision made monotone non-increasing from the right.
inline std::vector<double> precision_envelope(const PrCurve& curve) {
  std::vector<double> q(curve.points.size());
  double running = 0.0;
  for (std::size_t k = curve.points.size(); k-- > 0;) {
    running = std::max(running, curve.points[k].precision);
    q[k] = running;
  }
  return q;
}

}  // namespace detail

// nullopt when the category has no ground truth.
inline std::optional<double> average_precision(const PrCurve& curve,
                                               ApInterpolation mode = ApInterpolation::kCoco101) {
  if (curve.n_gt == 0) return std::nullopt;
  const auto q = detail::precision_envelope(curve);
  const auto& pts = curve.points;
  if (mode == ApInterpolation::kAllPoint) {
    double area = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (pts[k].is_tp) {
        area += (pts[k].recall - prev_recall) * q[k];
        prev_recall = pts[k].recall;
      }
    }
    return area;
  }
  // Recall thresholds compared as integers: tp / n_gt >= i / 100.
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i <= 100; ++i) {
    while (k < pts.size() && pts[k].tp * 100 < i * curve.n_gt) ++k;
    if (k == pts.size()) break;
    sum += q[k];
  }
  return sum / 101.0;
}

inline std::optional<double> mean_ap(std::span<const std::optional<double>> aps) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ap : aps) {
    if (ap) {
      sum += *ap;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

struct F1Result {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline F1Result f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Result r{tp, fp, fn, 0.0, 0.0, 0.0};
  if (tp == 0) return r;
  r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

// Cumulative FP/TP at the first rank reaching each recall bin; nullopt where
// the bin is never reached or no TP exists yet.
inline std::vector<std::optional<double>> fp_tp_ratio_curve(const PrCurve& curve,
                                                            std::span<const double> recall_bins) {
  std::vector<std::optional<double>> out;
  out.reserve(recall_bins.size());
  for (double bin : recall_bins) {
    std::optional<double> value;
    const double needed = bin * static_cast<double>(curve.n_gt) - 1e-9;
    for (const auto& p : curve.points) {
      if (static_cast<double>(p.tp) >= needed) {
        if (p.tp > 0) value = static_cast<double>(p.fp) / static_cast<double>(p.tp);
        break;
      }
    }
    out.push_back(value);
  }
  return out;
}

}  // namespace hedgeval
