#pragma once

// Localisation-Recall-Precision error and its optimal-threshold variant.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace hedgeval {

struct LrpResult {
  std::optional<double> lrp;
  std::optional<double> loc;
  std::optional<double> fp_rate;
  std::optional<double> fn_rate;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// `tp_ious` holds the match IoU of every true positive at threshold t.
inline LrpResult lrp_from_matches(std::span<const double> tp_ious, std::size_t fp, std::size_t fn,
                                  double t = 0.5) {
  LrpResult r;
  r.tp = tp_ious.size();
  r.fp = fp;
  r.fn = fn;
  double loc_sum = 0.0;
  for (double iou : tp_ious) loc_sum += (1.0 - iou) / (1.0 - t);
  const auto tp = static_cast<double>(r.tp);
  const auto fpd = static_cast<double>(fp);
  const auto fnd = static_cast<double>(fn);
  if (r.tp + fp + fn > 0) r.lrp = (loc_sum + fpd + fnd) / (tp + fpd + fnd);
  if (r.tp > 0) r.loc = loc_sum / tp;
  if (r.tp + fp > 0) r.fp_rate = fpd / (tp + fpd);
  if (r.tp + fn > 0) r.fn_rate = fnd / (tp + fnd);
  return r;
}

struct LrpSample {
  double score = 0.0;
  bool is_tp = false;
  double iou = 0.0;  // match IoU when is_tp
};

// LRP keeping only samples with score >= cutoff. Samples must come from
// greedy matching in confidence order, so any score cutoff keeps a prefix
// of every image's decisions and the flags stay valid.
inline LrpResult lrp_at_cutoff(std::span<const LrpSample> samples, std::size_t n_gt, double cutoff,
                               double t = 0.5) {
  std::vector<double> ious;
  std::size_t fp = 0;
  for (const auto& s : samples) {
    if (s.score < cutoff) continue;
    if (s.is_tp) {
      ious.push_back(s.iou);
    } else {
      ++fp;
    }
  }
  return lrp_from_matches(ious, fp, n_gt - ious.size(), t);
}

struct OlrpResult {
  LrpResult best;
  std::optional<double> cutoff;  // score threshold attaining the minimum
};

// Minimum LRP over cutoffs at the distinct detection scores.
inline OlrpResult olrp(std::span<const LrpSample> samples, std::size_t n_gt, double t = 0.5) {
  std::vector<LrpSample> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const LrpSample& a, const LrpSample& b) { return a.score > b.score; });
  OlrpResult out;
  out.best = lrp_from_matches({}, 0, n_gt, t);
  if (sorted.empty()) return out;

  std::size_t tp = 0;
  std::size_t fp = 0;
  double loc_sum = 0.0;
  bool have = false;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (sorted[k].is_tp) {
      ++tp;
      loc_sum += (1.0 - sorted[k].iou) / (1.0 - t);
    } else {
      ++fp;
    }
    const bool group_end = k + 1 == sorted.size() || sorted[k + 1].score != sorted[k].score;
    if (!group_end) continue;
    const std::size_t fn = n_gt - tp;
    const double value = (loc_sum + static_cast<double>(fp + fn)) / static_cast<double>(tp + fp + fn);
    if (!have || value < *out.best.lrp) {
      // Rebuild the full component breakdown only for a new minimum.
      out.best = lrp_at_cutoff(sorted, n_gt, sorted[k].score, t);
      out.cutoff = sorted[k].score;
      have = true;
    }
  }
  return out;
}

}  // namespace hedgeval
