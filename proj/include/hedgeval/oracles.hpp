#pragma once

// Brute-force reference implementations. They share no code path with the
// production algorithms they check: pixel loops instead of packed words,
// explicit path enumeration instead of spanning structures, and per-threshold
// scans instead of precision envelopes.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hedgeval/hedging.hpp"
#include "hedgeval/mask.hpp"
#include "hedgeval/matching.hpp"

namespace hedgeval::oracle {

inline double naive_iou(const BinaryMask& a, const BinaryMask& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      const bool x = a.get(r, c);
      const bool y = b.get(r, c);
      inter += (x && y) ? 1 : 0;
      uni += (x || y) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace detail {

inline void walk_paths(const DetectionGraph& g, std::size_t at, std::size_t target, double bottleneck,
                       std::vector<bool>& on_path, double& best) {
  bottleneck = std::min(bottleneck, g.confidence(at));
  if (at == target) {
    best = std::max(best, bottleneck);
    return;
  }
  on_path[at] = true;
  for (std::size_t next = 0; next < g.size(); ++next) {
    if (!on_path[next] && g.has_edge(at, next)) walk_paths(g, next, target, bottleneck, on_path, best);
  }
  on_path[at] = false;
}

}  // namespace detail

// max over every simple path i -> j of the smallest confidence on it; 0 if none.
inline double connectivity_bruteforce(const DetectionGraph& g, std::size_t i, std::size_t j) {
  std::vector<bool> on_path(g.size(), false);
  double best = 0.0;
  detail::walk_paths(g, i, j, 1e300, on_path, best);
  return best;
}

// Term-by-term expansion over enumerated paths. Feasible for m <= 8.
inline double dc_bruteforce(const DetectionGraph& g) {
  const std::size_t m = g.size();
  if (m == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      total += g.confidence(j) * connectivity_bruteforce(g, i, j) / g.confidence(i);
    }
  }
  return total / static_cast<double>(m);
}

// 101-point interpolated AP from a rank-ordered TP/FP flag sequence: at each
// recall level, the best precision over every rank at or beyond it.
inline std::optional<double> ap_naive(std::span<const bool> flags_by_rank, std::size_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  const std::size_t n = flags_by_rank.size();
  std::vector<std::size_t> tp_at(n);
  std::vector<double> precision_at(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t tp = 0;
    for (std::size_t q = 0; q <= k; ++q) tp += flags_by_rank[q] ? 1 : 0;
    tp_at[k] = tp;
    precision_at[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  double sum = 0.0;
  for (std::size_t level = 0; level <= 100; ++level) {
    double best = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (tp_at[k] * 100 >= level * n_gt) best = std::max(best, precision_at[k]);
    }
    sum += best;
  }
  return sum / 101.0;
}

// Literal greedy matching: detections (already in confidence order) each take
// the unmatched ground truth with the largest IoU >= t, lowest index on ties.
inline MatchResult match_bruteforce(std::span<const BinaryMask* const> sorted_dets,
                                    std::span<const BinaryMask* const> gts, double t) {
  MatchResult res;
  res.det_to_gt.assign(sorted_dets.size(), kNoMatch);
  res.det_iou.assign(sorted_dets.size(), 0.0);
  res.gt_to_det.assign(gts.size(), kNoMatch);
  for (std::size_t d = 0; d < sorted_dets.size(); ++d) {
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (res.gt_to_det[g] != kNoMatch) continue;
      const double v = naive_iou(*sorted_dets[d], *gts[g]);
      if (v >= t) candidates.emplace_back(v, g);
    }
    if (candidates.empty()) continue;
    auto best = candidates.front();
    for (const auto& c : candidates) {
      if (c.first > best.first) best = c;
    }
    res.det_to_gt[d] = static_cast<int>(best.second);
    res.det_iou[d] = best.first;
    res.gt_to_det[best.second] = static_cast<int>(d);
  }
  return res;
}

}  // namespace hedgeval::oracle
